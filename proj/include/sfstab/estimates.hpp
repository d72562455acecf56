#pragma once

#include "sfstab/isometry.hpp"
#include "sfstab/moving_planes.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sfstab {

enum class CheckKind { Identity, ConstantFree, Fitted };

inline std::string_view check_kind_name(CheckKind k) {
  switch (k) {
    case CheckKind::Identity: return "identity";
    case CheckKind::ConstantFree: return "constant_free";
    case CheckKind::Fitted: return "fitted";
  }
  return "unknown";
}

// One instance of lhs <= rhs. Identities store lhs = |a - b| and rhs = 0.
struct InequalityCheck {
  std::string tag;
  CheckKind kind = CheckKind::ConstantFree;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double tol = 0.0;
  std::string witness;

  bool passed() const { return margin >= -tol; }
};

inline double kind_tolerance(CheckKind k) {
  switch (k) {
    case CheckKind::Identity: return 1e-8;
    case CheckKind::ConstantFree: return 1e-6;
    case CheckKind::Fitted: return 0.0;
  }
  return 0.0;
}

inline InequalityCheck make_check(std::string tag, CheckKind kind, double lhs, double rhs, std::string witness) {
  InequalityCheck c;
  c.tag = std::move(tag);
  c.kind = kind;
  c.lhs = lhs;
  c.rhs = rhs;
  c.margin = rhs - lhs;
  c.tol = kind_tolerance(kind);
  c.witness = std::move(witness);
  return c;
}

// A worst-case constant fitted on two disjoint halves of a sample.
struct FittedConstant {
  std::string tag;
  double value = 0.0;  // fitted on the union
  double first = 0.0;
  double second = 0.0;

  double relative_change() const {
    const double d = std::max(std::abs(first), std::abs(second));
    return d > 0 ? std::abs(first - second) / d : 0.0;
  }
  bool stable(double tol = 0.1) const { return relative_change() < tol; }
};

struct LemmaReport {
  std::vector<InequalityCheck> checks;
  std::vector<FittedConstant> constants;
  std::size_t skipped = 0;

  void append(LemmaReport other) {
    for (auto& c : other.checks) checks.push_back(std::move(c));
    for (auto& c : other.constants) constants.push_back(std::move(c));
    skipped += other.skipped;
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& c : checks) n += !c.passed();
    return n;
  }
  double min_margin(CheckKind k) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : checks) {
      if (c.kind == k) m = std::min(m, c.margin);
    }
    return m;
  }
  std::size_t count(CheckKind k) const {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.kind == k;
    return n;
  }
  bool constants_stable(double tol = 0.1) const {
    for (const auto& c : constants) {
      if (!c.stable(tol)) return false;
    }
    return true;
  }
  bool passed() const { return failures() == 0 && constants_stable(); }
};

namespace detail {

template <class Derived>
std::string fmt_vec(const Eigen::MatrixBase<Derived>& v) {
  std::ostringstream os;
  os << std::setprecision(17) << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << ')';
  return os.str();
}

template <int N>
Vec<N> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec<N> v;
  do {
    for (int i = 0; i < N; ++i) v[i] = g(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

inline FittedConstant fit(std::string tag, const std::vector<double>& values, bool take_max) {
  FittedConstant f;
  f.tag = std::move(tag);
  auto pick = [&](std::size_t parity) {
    double m = take_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (parity < 2 && i % 2 != parity) continue;
      m = take_max ? std::max(m, values[i]) : std::min(m, values[i]);
    }
    return m;
  };
  f.first = pick(0);
  f.second = pick(1);
  f.value = pick(2);
  return f;
}

}  // namespace detail

// rho_1 of the local graph lemma, per model.
inline double graph_radius(Model m, double rho) {
  switch (m) {
    case Model::Euclidean: return rho;
    case Model::Hyperbolic: {
      const double a = std::exp(-rho) * std::sinh(rho);
      return (1.0 - a) * a;
    }
    case Model::Spherical: return rho / std::numbers::pi;
  }
  return rho;
}

// Round-metric distance against chart distance for |p|, |q| <= R:
// 2/(1+R^2)|p-q| <= d(p,q) <= pi|p-q|.
template <int N>
std::array<InequalityCheck, 2> round_metric_checks(const Vec<N>& p, const Vec<N>& q, double R) {
  const SpaceForm<N> sp(Model::Spherical, {}, false);
  const double e = (p - q).norm();
  const double d = sp.dist(p, q);
  const std::string w = "R=" + std::to_string(R) + " p=" + detail::fmt_vec(p) + " q=" + detail::fmt_vec(q);
  return {make_check("round_metric.lower", CheckKind::ConstantFree, 2.0 / (1.0 + R * R) * e, d, w),
          make_check("round_metric.upper", CheckKind::ConstantFree, d, std::numbers::pi * e, w)};
}

template <int N>
LemmaReport verify_round_metric(std::uint64_t seed, int count, double R) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto draw = [&] { return Vec<N>(R * std::pow(U(rng), 1.0 / N) * detail::random_unit<N>(rng)); };
  LemmaReport rep;
  for (int k = 0; k < count; ++k) {
    const Vec<N> p = draw(), q = draw();
    for (auto& c : round_metric_checks<N>(p, q, R)) rep.checks.push_back(std::move(c));
  }
  return rep;
}

// Hyperbolic distance against chart distance to e_n on d(q, e_n) < R, with
// fitted constants c, C.
template <int N>
LemmaReport verify_hyperbolic_distance(std::uint64_t seed, int count, double R) {
  const SpaceForm<N> sp(Model::Hyperbolic);
  const Vec<N> e = sp.origin_coords();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Vec<N>> qs;
  std::vector<double> ratio;
  while (static_cast<int>(qs.size()) < count) {
    const double t = R * std::pow(U(rng), 1.0 / N);
    if (!(t > 0.0)) continue;
    const Vec<N> q = sp.exp_raw(e, t * detail::random_unit<N>(rng));
    qs.push_back(q);
    ratio.push_back(sp.dist(q, e) / (q - e).norm());
  }
  LemmaReport rep;
  const auto c = detail::fit("hyperbolic_distance.c", ratio, false);
  const auto C = detail::fit("hyperbolic_distance.C", ratio, true);
  rep.constants = {c, C};
  for (const auto& q : qs) {
    // Compared as d / |q - e| so the check sees the exact fitted quantity.
    const double d = sp.dist(q, e), x = (q - e).norm();
    const std::string w = "R=" + std::to_string(R) + " q=" + detail::fmt_vec(q);
    rep.checks.push_back(make_check("hyperbolic_distance.lower", CheckKind::Fitted, c.value, d / x, w));
    rep.checks.push_back(make_check("hyperbolic_distance.upper", CheckKind::Fitted, d / x, C.value, w));
  }
  return rep;
}

// Shortest paths on the sample grid with metric chord edge lengths (an upper
// bound for the intrinsic distance of S), truncated at `limit`.
template <int N>
std::vector<double> surface_graph_distances(const SpaceForm<N>& sp, const std::vector<SurfaceSample<N>>& samples,
                                            const DirectionGrid<N>& grid, std::size_t src, double limit) {
  std::vector<double> d(samples.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    const auto [di, i] = pq.top();
    pq.pop();
    if (di > d[i]) continue;
    for (int j : grid.neighbors(i)) {
      const double nd = di + sp.dist(samples[i].p, samples[j].p);
      if (nd < d[j] && nd <= limit) {
        d[j] = nd;
        pq.push({nd, static_cast<std::size_t>(j)});
      }
    }
  }
  return d;
}

namespace detail {

inline std::vector<std::size_t> spread_indices(std::size_t n, int count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(n, static_cast<std::size_t>(std::max(count, 0))));
  return idx;
}

// Euclidean graph u of phi_p(S) over {x_n = 0}: solves for the surface
// parameter whose image projects to xbar, continuing from a.
template <int N>
struct GraphChart {
  const RadialSurface<N>& s;
  ChartIsometry<N> phi;
  LocalChart<N> X;

  Vec<N> image(const Vec<N - 1>& a) const { return phi.apply_raw(X(a)); }

  bool solve(const Vec<N - 1>& xbar, Vec<N - 1>& a) const {
    for (int it = 0; it < 60; ++it) {
      const Vec<N> y = image(a);
      const Vec<N - 1> r = y.template head<N - 1>() - xbar;
      if (r.norm() < 1e-14) return true;
      Eigen::Matrix<double, N - 1, N - 1> J;
      const double h = 1e-6;
      for (int k = 0; k < N - 1; ++k) {
        const Vec<N - 1> e = Vec<N - 1>::Unit(k) * h;
        J.col(k) = (image(a + e).template head<N - 1>() - image(a - e).template head<N - 1>()) / (2 * h);
      }
      Vec<N - 1> step = J.fullPivLu().solve(r);
      double lam = 1.0;
      while (lam > 1e-4 && (image(a - lam * step).template head<N - 1>() - xbar).norm() >= r.norm()) lam *= 0.5;
      a -= lam * step;
    }
    return (image(a).template head<N - 1>() - xbar).norm() < 1e-11;
  }

  // Euclidean unit normal of the image surface at parameter a.
  Vec<N> normal(const Vec<N - 1>& a) const {
    std::vector<Vec<N>> T;
    const double h = 1e-5;
    for (int k = 0; k < N - 1; ++k) {
      const Vec<N - 1> e = Vec<N - 1>::Unit(k) * h;
      T.push_back((image(a + e) - image(a - e)) / (2 * h));
    }
    return frame_normal<N>(T);
  }
};

}  // namespace detail

// Local graph bounds at `bases` sample points: for |x| < rho_1,
// |u(x) - u(O)| <= rho_1 - sqrt(rho_1^2 - |x|^2) and
// |grad u(x)| <= |x| / sqrt(rho_1^2 - |x|^2).
template <int N>
LemmaReport verify_graph_bounds(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples, double rho,
                                int bases, std::uint64_t seed, int radial_steps = 9, int angular_steps = 8) {
  static_assert(N == 2 || N == 3);
  const SpaceForm<N>& sp = s.space();
  const double r1 = graph_radius(sp.kind(), rho);
  LemmaReport rep;
  const auto idx = detail::spread_indices(samples.size(), bases, seed);
  std::vector<LemmaReport> parts(idx.size());
  numerics::parallel_for(idx.size(), [&](std::size_t k) {
    const auto& smp = samples[idx[k]];
    const auto Tm = complement_basis<N>(smp.u);
    const detail::LocalChart<N> X{s, smp.u, Tm};
    std::vector<Vec<N>> frame;
    {
      const double h = 1e-5;
      for (int i = 0; i < N - 1; ++i) {
        const Vec<N - 1> e = Vec<N - 1>::Unit(i) * h;
        frame.push_back((X(e) - X(-e)) / (2 * h));
      }
    }
    const detail::GraphChart<N> G{s, origin_chart(sp, ChartPoint<N>(smp.p), frame), X};
    const double u0 = G.image(Vec<N - 1>::Zero())[N - 1];
    const int nang = N == 2 ? 2 : angular_steps;
    for (int j = 0; j < nang; ++j) {
      Vec<N - 1> dir;
      if constexpr (N == 2) {
        dir[0] = j == 0 ? 1.0 : -1.0;
      } else {
        const double t = 2 * std::numbers::pi * j / nang;
        dir = Vec<N - 1>(std::cos(t), std::sin(t));
      }
      Vec<N - 1> a = Vec<N - 1>::Zero();
      for (int i = 1; i <= radial_steps * 4; ++i) {
        const double frac = static_cast<double>(i) / (4 * radial_steps + 4);
        const Vec<N - 1> xbar = frac * r1 * dir;
        if (!G.solve(xbar, a)) {
          ++parts[k].skipped;
          break;
        }
        if (i % 4 != 0) continue;  // intermediate continuation steps
        const Vec<N> y = G.image(a);
        const Vec<N> nu = G.normal(a);
        const double x = xbar.norm();
        const double root = std::sqrt(r1 * r1 - x * x);
        const double grad = nu.template head<N - 1>().norm() / std::abs(nu[N - 1]);
        const std::string w = "p=" + detail::fmt_vec(smp.p) + " x=" + detail::fmt_vec(xbar) + " rho1=" +
                              std::to_string(r1);
        parts[k].checks.push_back(
            make_check("graph.height", CheckKind::ConstantFree, std::abs(y[N - 1] - u0), r1 - root, w));
        parts[k].checks.push_back(make_check("graph.gradient", CheckKind::ConstantFree, grad, x / root, w));
      }
    }
  });
  for (auto& p : parts) rep.append(std::move(p));
  return rep;
}

// Area of intrinsic balls: Area(B_r(p)) >= c r^{n-1} for
// r < min(1, 1/rho_1)/2, with c fitted.
template <int N>
LemmaReport verify_area_growth(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples,
                               const DirectionGrid<N>& grid, double rho, int bases, std::uint64_t seed) {
  const SpaceForm<N>& sp = s.space();
  const double r1 = graph_radius(sp.kind(), rho);
  const double rmax = 0.5 * std::min(1.0, 1.0 / r1) * (1.0 - 1e-9);
  std::vector<double> a(samples.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    a[i] = grid.weight(i) * samples[i].area_element;
    scale = std::max(scale, samples[i].area_element);
  }
  // Smoothed indicator over one grid spacing on S.
  const double width = grid.spacing() * std::pow(scale, 1.0 / (N - 1));
  const auto idx = detail::spread_indices(samples.size(), bases, seed);
  const double fracs[] = {0.5, 0.75, 1.0};
  std::vector<std::array<double, 3>> area(idx.size());
  numerics::parallel_for(idx.size(), [&](std::size_t k) {
    const auto d = surface_graph_distances(sp, samples, grid, idx[k], rmax + width);
    for (int f = 0; f < 3; ++f) {
      const double r = fracs[f] * rmax;
      double A = 0.0;
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (std::isfinite(d[j])) A += a[j] * std::clamp((r - d[j]) / width + 0.5, 0.0, 1.0);
      }
      area[k][f] = A;
    }
  });
  std::vector<double> ratio;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    for (int f = 0; f < 3; ++f) ratio.push_back(area[k][f] / std::pow(fracs[f] * rmax, N - 1));
  }
  LemmaReport rep;
  // Halves split by base point, not by radius.
  std::vector<double> per_base;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    per_base.push_back(std::min({ratio[3 * k], ratio[3 * k + 1], ratio[3 * k + 2]}));
  }
  const auto c = detail::fit("area_growth.c", per_base, false);
  rep.constants.push_back(c);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    for (int f = 0; f < 3; ++f) {
      const double r = fracs[f] * rmax;
      rep.checks.push_back(make_check("area_growth", CheckKind::Fitted, c.value, ratio[3 * k + f],
                                      "p=" + detail::fmt_vec(samples[idx[k]].p) + " r=" + std::to_string(r)));
    }
  }
  return rep;
}

// Normal stability under parallel transport for pairs with d_S <= rho_1 / 2:
// fits C = max |N_p - tau_q^p N_q|_p / d_S and checks
// g_p(N_p, tau_q^p N_q) >= sqrt(1 - C^2 d_S^2) and C <= 10 / rho.
template <int N>
LemmaReport verify_normal_stability(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples,
                                    const DirectionGrid<N>& grid, double rho, int bases, std::uint64_t seed,
                                    double* lipschitz = nullptr) {
  const SpaceForm<N>& sp = s.space();
  const double delta0 = 0.5 * graph_radius(sp.kind(), rho);
  const auto idx = detail::spread_indices(samples.size(), bases, seed);
  struct Pair {
    std::size_t p, q;
    double dS, gap, dot;
  };
  std::vector<std::vector<Pair>> found(idx.size());
  numerics::parallel_for(idx.size(), [&](std::size_t k) {
    const std::size_t i = idx[k];
    const auto d = surface_graph_distances(sp, samples, grid, i, delta0);
    const Vec<N>& p = samples[i].p;
    const double hp = sp.conformal_factor(p);
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (j == i || !std::isfinite(d[j])) continue;
      const Vec<N> t = sp.transport_raw(samples[j].p, p, samples[j].normal);
      found[k].push_back({i, j, d[j], hp * (samples[i].normal - t).norm(), hp * hp * samples[i].normal.dot(t)});
    }
  });
  std::vector<double> per_base(idx.size(), 0.0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    for (const auto& x : found[k]) per_base[k] = std::max(per_base[k], x.gap / x.dS);
  }
  LemmaReport rep;
  const auto C = detail::fit("normal_stability.C", per_base, true);
  rep.constants.push_back(C);
  if (lipschitz) *lipschitz = C.value;
  for (const auto& f : found) {
    for (const auto& x : f) {
      const std::string w = "p=" + detail::fmt_vec(samples[x.p].p) + " q=" + detail::fmt_vec(samples[x.q].p) +
                            " dS=" + std::to_string(x.dS);
      const double cd = C.value * x.dS;
      rep.checks.push_back(make_check("normal_stability.inner", CheckKind::Fitted,
                                      std::sqrt(std::max(0.0, 1.0 - cd * cd)), x.dot, w));
      rep.checks.push_back(make_check("normal_stability.gap", CheckKind::Fitted, x.gap / x.dS, C.value, w));
    }
  }
  rep.checks.push_back(make_check("normal_stability.bound", CheckKind::ConstantFree, C.value, 10.0 / rho,
                                  "rho=" + std::to_string(rho)));
  return rep;
}

// nu . nu' = 1 - (w . nu)^2 with nu' = -(nu x w) x w, on random unit pairs.
inline LemmaReport verify_cross_product_identity(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  LemmaReport rep;
  for (int k = 0; k < count; ++k) {
    const Vec<3> nu = detail::random_unit<3>(rng), w = detail::random_unit<3>(rng);
    const Vec<3> nup = -(nu.cross(w)).cross(w);
    const double lhs = nu.dot(nup), rhs = 1.0 - std::pow(w.dot(nu), 2);
    rep.checks.push_back(make_check("projection.cross_identity", CheckKind::Identity, std::abs(lhs - rhs), 0.0,
                                    "nu=" + detail::fmt_vec(nu) + " w=" + detail::fmt_vec(w)));
  }
  return rep;
}

// Points of S on the hyperplane, one per grid edge crossing it.
template <int N>
std::vector<Vec<N>> cut_points(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples,
                               const DirectionGrid<N>& grid, const GeodesicHyperplane<N>& pl) {
  const SpaceForm<N>& sp = s.space();
  std::vector<double> sd(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sd[i] = pl.signed_distance(sp, samples[i].p);
  std::vector<Vec<N>> out;
  for (const auto& [i, j] : grid.edges()) {
    if ((sd[i] > 0) == (sd[j] > 0)) continue;
    const Vec<N> a = grid.dir(i), b = grid.dir(j);
    auto f = [&](double t) { return pl.signed_distance(sp, s.point(((1 - t) * a + t * b).normalized())); };
    const double t = numerics::bisect(f, 0.0, 1.0, 1e-15);
    out.push_back(((1 - t) * a + t * b).normalized());
  }
  return out;
}

namespace detail {

// Five points of the curve S cap pi through q, spaced by `step` along
// T = nu x w, each solved back onto S and pi.
inline std::optional<std::array<Vec<3>, 5>> cut_curve(const RadialSurface<3>& s, const GeodesicHyperplane<3>& pl,
                                                      const Vec<3>& q, const Vec<3>& nu, const Vec<3>& w, double step) {
  const SpaceForm<3>& sp = s.space();
  const Vec<3> T = nu.cross(w).normalized();
  const Vec<3> e1 = nu, e2 = (w - w.dot(nu) * nu).normalized();
  std::array<Vec<3>, 5> c;
  for (int k = -2; k <= 2; ++k) {
    Eigen::Vector2d ab = Eigen::Vector2d::Zero();
    auto F = [&](const Eigen::Vector2d& x) {
      const Vec<3> y = q + k * step * T + x[0] * e1 + x[1] * e2;
      return Eigen::Vector2d(s.margin(y), pl.signed_distance(sp, y));
    };
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      const Eigen::Vector2d r = F(ab);
      if (r.norm() < 1e-15) {
        ok = true;
        break;
      }
      Eigen::Matrix2d J;
      const double h = 1e-7;
      for (int i = 0; i < 2; ++i) {
        const Eigen::Vector2d e = Eigen::Vector2d::Unit(i) * h;
        J.col(i) = (F(ab + e) - F(ab - e)) / (2 * h);
      }
      const Eigen::Vector2d d = J.fullPivLu().solve(r);
      ab -= d;
      if (d.norm() < 1e-16) {
        ok = true;
        break;
      }
    }
    if (!ok && F(ab).norm() > 1e-12) return std::nullopt;
    c[k + 2] = q + k * step * T + ab[0] * e1 + ab[1] * e2;
  }
  return c;
}

struct CurveJet {
  Vec<3> d1, d2;
};

inline CurveJet jet(const std::array<Vec<3>, 5>& c, double h) {
  return {(c[0] - 8.0 * c[1] + 8.0 * c[3] - c[4]) / (12.0 * h),
          (-c[4] + 16.0 * c[3] - 30.0 * c[2] + 16.0 * c[1] - c[0]) / (12.0 * h * h)};
}

// Geodesic curvature of a chart curve in (R^3, h^2 <,>) along the Euclidean
// unit direction n (normal to the curve).
inline double metric_curvature(const SpaceForm<3>& sp, const Vec<3>& x, const CurveJet& j, const Vec<3>& n) {
  const Vec<3> G = sp.grad_log_conformal(x);
  const Vec<3> A = j.d2 + 2.0 * G.dot(j.d1) * j.d1 - j.d1.squaredNorm() * G;
  const Vec<3> K = (A - (A.dot(j.d1) / j.d1.squaredNorm()) * j.d1) / j.d1.squaredNorm();
  const double h = sp.conformal_factor(x);
  return K.dot(n) / h;
}

}  // namespace detail

// Chart in which a cap is examined: phi sending the tangency point p0 to the
// canonical point with T_{p0} onto {x_n = 0}.
template <int N>
ChartIsometry<N> tangency_chart(const RadialSurface<N>& s, const MovingPlanesResult<N>& r,
                                const std::vector<SurfaceSample<N>>& samples) {
  const auto& smp = samples.at(static_cast<std::size_t>(r.p0_sample));
  const Vec<N> n = r.plane.reflect_tangent_raw(smp.p, smp.nu).normalized();
  const auto B = complement_basis<N>(n);
  std::vector<Vec<N>> frame;
  for (int i = 0; i < N - 1; ++i) frame.push_back(B.col(i));
  return origin_chart(s.space(), ChartPoint<N>(r.p0), frame);
}

// Cut of S by a totally geodesic pi: the projection identity, the curvature
// sandwich for the cut U' = S cap pi inside pi, and the curvature bound of the
// projection U'' of phi(U') onto {x_n = 0}.
inline LemmaReport verify_projection_curvature(const RadialSurface<3>& s, const std::vector<SurfaceSample<3>>& samples,
                                               const DirectionGrid<3>& grid, const GeodesicHyperplane<3>& pl,
                                               const ChartIsometry<3>& phi, int max_points = 400) {
  const SpaceForm<3>& sp = s.space();
  auto us = cut_points(s, samples, grid, pl);
  if (max_points > 0 && static_cast<int>(us.size()) > max_points) {
    std::vector<Vec<3>> keep;
    const double stride = static_cast<double>(us.size()) / max_points;
    for (int k = 0; k < max_points; ++k) keep.push_back(us[static_cast<std::size_t>(k * stride)]);
    us.swap(keep);
  }
  double scale = 0.0;
  for (const auto& x : samples) scale = std::max(scale, s.radius(x.u));
  const double step = 2e-3 * scale;
  std::vector<LemmaReport> parts(us.size());
  numerics::parallel_for(us.size(), [&](std::size_t k) {
    LemmaReport& out = parts[k];
    const SurfaceSample<3> smp = principal_curvatures(s, us[k]);
    const Vec<3>& q = smp.p;
    const double hq = sp.conformal_factor(q);
    const Vec<3> w = pl.unit_normal_at(sp, q) * hq;  // Euclidean unit normal of pi
    const double g = w.dot(smp.nu);                   // g(omega, N)
    if (g * g >= 1.0 - 1e-6) {
      ++out.skipped;
      return;
    }
    const auto c = detail::cut_curve(s, pl, q, smp.nu, w, step);
    if (!c) {
      ++out.skipped;
      return;
    }
    const auto J = detail::jet(*c, step);
    // Unit normal of U' inside pi from the curve tangent, toward N.
    Vec<3> nup = w.cross(J.d1).normalized();
    if (nup.dot(smp.nu) < 0) nup = -nup;
    const std::string wit = "u=" + detail::fmt_vec(us[k]) + " q=" + detail::fmt_vec(q);

    const double s2 = 1.0 - g * g;
    out.checks.push_back(make_check("projection.identity", CheckKind::Identity,
                                    std::abs(std::pow(smp.nu.dot(nup), 2) - s2), 0.0, wit));

    const double kp = detail::metric_curvature(sp, q, J, nup);
    const double root = std::sqrt(s2);
    out.checks.push_back(make_check("projection.sandwich.lower", CheckKind::ConstantFree, smp.kappa[0] / root, kp, wit));
    out.checks.push_back(make_check("projection.sandwich.upper", CheckKind::ConstantFree, kp, smp.kappa[1] / root, wit));

    // Projection bound in the chart phi.
    std::array<Vec<3>, 5> m;
    for (int i = 0; i < 5; ++i) m[i] = phi.apply_raw((*c)[i]);
    const Vec<3>& y = m[2];
    const Vec<3> wy = phi.apply_tangent_raw(q, w).second.normalized();
    const Vec<3> ny = phi.apply_tangent_raw(q, nup).second.normalized();
    if (std::abs(wy[2]) < 1e-6) {
      ++out.skipped;  // pi is vertical here: not a graph over {x_n = 0}
      return;
    }
    const auto Jy = detail::jet(m, step);
    const Eigen::Vector2d b1 = Jy.d1.head<2>(), b2 = Jy.d2.head<2>();
    if (b1.norm() < 1e-9 * Jy.d1.norm()) {
      ++out.skipped;
      return;
    }
    const double kpp = std::abs(b1[0] * b2[1] - b1[1] * b2[0]) / std::pow(b1.norm(), 3);
    const double kpy = detail::metric_curvature(sp, y, Jy, ny);
    const double hy = sp.conformal_factor(y);
    const double gh = sp.grad_conformal(y).norm();
    const double a2 = 1.0 + wy.head<2>().squaredNorm() / (wy[2] * wy[2]);  // 1 + |grad F|^2
    const double bound = hy / std::sqrt(a2) * std::pow(ny[2] * ny[2] + 1.0 / a2, -1.5) *
                         (std::abs(kpy) + 4.0 * gh / (hy * hy));
    const std::string wy_s = wit + " y=" + detail::fmt_vec(y);
    out.checks.push_back(make_check("projection.bound", CheckKind::ConstantFree, kpp, bound, wy_s));
    // The bound above drops the term of e_n along nu', which carries the
    // Euclidean normal curvature of pi itself; it vanishes only for flat pi.
    const double kpi = std::abs(wy.dot(Jy.d2)) / Jy.d1.squaredNorm();
    const double D2 = ny[2] * ny[2] + 1.0 / a2;
    out.checks.push_back(make_check("projection.bound.with_plane_term", CheckKind::ConstantFree, kpp,
                                    bound + std::abs(ny[2]) * kpi * std::pow(D2, -1.5), wy_s));
    if (sp.kind() == Model::Spherical && std::abs(y.dot(wy)) > 1e-9) {
      // pi is a chart sphere of center O, radius R with R^2 = 1 + |O|^2.
      const double lam = -(1.0 + y.squaredNorm()) / (2.0 * y.dot(wy));
      const Vec<3> O = y + lam * wy;
      const double R = std::abs(lam);
      const double t = std::abs((y - O)[2]) / R;
      const double b36 = hy * t * std::pow(ny[2] * ny[2] + t * t, -1.5) * (std::abs(kpy) + 4.0 * y.norm());
      out.checks.push_back(make_check("projection.bound.sphere_plane", CheckKind::ConstantFree, kpp, b36, wy_s));
    }
  });
  LemmaReport rep;
  for (auto& p : parts) rep.append(std::move(p));
  return rep;
}

inline void write_checks_csv(std::ostream& os, const std::vector<InequalityCheck>& checks) {
  os << "tag,kind,lhs,rhs,margin,passed,witness\n";
  os << std::setprecision(12);
  for (const auto& c : checks) {
    os << c.tag << ',' << check_kind_name(c.kind) << ',' << c.lhs << ',' << c.rhs << ',' << c.margin << ','
       << (c.passed() ? 1 : 0) << ",\"" << c.witness << "\"\n";
  }
}

}  // namespace sfstab
