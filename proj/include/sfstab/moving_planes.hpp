#pragma once

#include "sfstab/curvature.hpp"
#include "sfstab/hyperplane.hpp"

#include <deque>
#include <optional>

namespace sfstab {

enum class TangencyKind { Interior, Boundary };

inline std::string_view tangency_name(TangencyKind k) {
  return k == TangencyKind::Interior ? "interior" : "boundary";
}

// One pointwise comparison between a point p of the reflected cap and the
// first point p_hat of S met by the geodesic leaving p along -N_p.
template <int N>
struct PointMatch {
  Vec<N> p;
  Vec<N> p_hat;
  double distance = 0.0;
  double normal_gap = 0.0;  // |N_p - tau_{p_hat}^p N_{p_hat}|_p
};

template <int N>
std::optional<PointMatch<N>> inner_projection(const RadialSurface<N>& s, const Vec<N>& p, const Vec<N>& Np,
                                              double reach, double tol = 1e-10) {
  const SpaceForm<N>& sp = s.space();
  const double hp = sp.conformal_factor(p);
  const Vec<N> dir = -Np / (hp * Np.norm());
  auto margin = [&](double t) { return s.margin(sp.exp_raw(p, t * dir)); };
  PointMatch<N> m;
  m.p = p;
  double t_hit = 0.0;
  const double m0 = margin(0.0);
  if (m0 > tol) {
    const int steps = 256;
    const double dt = reach / steps;
    double prev = 0.0;
    bool found = false;
    for (int k = 1; k <= steps; ++k) {
      const double t = k * dt;
      if (margin(t) <= 0.0) {
        t_hit = numerics::bisect(margin, prev, t, tol);
        found = true;
        break;
      }
      prev = t;
    }
    if (!found) return std::nullopt;
  } else if (m0 < -tol) {
    return std::nullopt;
  }
  m.p_hat = t_hit == 0.0 ? p : sp.exp_raw(p, t_hit * dir);
  m.distance = t_hit;
  const auto [u_hat, d_hat] = s.polar(m.p_hat);
  (void)d_hat;
  const Vec<N> n_hat = surface_normal(s, u_hat).normal;
  const Vec<N> back = sp.transport_raw(m.p_hat, p, n_hat);
  m.normal_gap = hp * (Np - back).norm();
  return m;
}

struct CriticalPosition {
  double m = 0.0;
  double lo = 0.0;  // bracket: the predicate fails at lo and holds at m
  bool monotone = true;
  bool degenerate = false;  // predicate never failed on the bracket
  std::vector<double> probes;
  std::vector<bool> probe_holds;
};

template <int N>
struct MovingPlanesResult {
  Vec<N> v;  // Euclidean-unit chart direction at the chart origin
  CriticalPosition position;
  GeodesicHyperplane<N> plane;
  Vec<N> p0;
  int p0_sample = -1;  // index of the cap sample whose reflection is p0
  TangencyKind kind = TangencyKind::Interior;
  std::vector<int> cap;
  std::vector<int> component;
  std::vector<Vec<N>> reflected;  // reflections of `component`
  std::vector<PointMatch<N>> matches;
  double defect = 0.0;
  double max_match_distance = 0.0;
  double max_normal_gap = 0.0;
  int warnings = 0;
};

struct MovingPlanesOptions {
  double tol_scale = 1.0;
  int probes = 20;
  bool compute_defect = true;
  bool compute_matches = true;
};

// The moving-planes procedure on a sampled surface. Samples must be ordered
// like the grid (as produced by sample_surface).
template <int N>
class MovingPlanes {
 public:
  MovingPlanes(const RadialSurface<N>& s, const DirectionGrid<N>& grid, const std::vector<SurfaceSample<N>>& samples,
               MovingPlanesOptions opt = {})
      : s_(s), grid_(grid), samples_(samples), opt_(opt) {
    if (samples_.size() != grid_.size()) throw std::invalid_argument("moving planes: samples do not match grid");
    if (samples_.empty()) throw std::invalid_argument("moving planes: empty grid");
    scale_ = 0.0;
    for (const auto& x : samples_) scale_ = std::max(scale_, s_.radius(x.u));
    tol_c_ = 1e-8 * scale_ * opt_.tol_scale;
    tol_s_ = 1e-9 * scale_ * opt_.tol_scale;
  }

  double scale() const { return scale_; }
  double containment_tolerance() const { return tol_c_; }
  double bisection_tolerance() const { return tol_s_; }

  TangentVector<N> axis(const Vec<N>& v) const {
    const SpaceForm<N>& sp = s_.space();
    const Vec<N> o = sp.origin_coords();
    const double n = v.norm();
    if (!(n > 0)) throw std::invalid_argument("moving planes: zero direction");
    return TangentVector<N>(o, v / (n * sp.conformal_factor(o)));
  }

  std::vector<double> leaf_coordinates(const Vec<N>& v) const {
    const AxisFrame<N> f = axis_frame(s_.space(), axis(v));
    std::vector<double> sigma(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) sigma[i] = leaf_coordinate_raw(s_.space(), f, samples_[i].p);
    return sigma;
  }

  // Smallest reflected-cap margin at level s.
  double min_reflected_margin(const Vec<N>& v, const std::vector<double>& sigma, double s, int* argmin = nullptr) const {
    const auto plane = make_hyperplane(s_.space(), axis(v), s);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (sigma[i] <= s) continue;
      const double m = s_.margin(plane.reflect_raw(samples_[i].p));
      if (m < best) {
        best = m;
        if (argmin) *argmin = static_cast<int>(i);
      }
    }
    return best;
  }

  // P(s): every reflected cap sample lies in the closure of Omega up to tol_c.
  bool predicate(const Vec<N>& v, const std::vector<double>& sigma, double s, int& hint) const {
    const auto plane = make_hyperplane(s_.space(), axis(v), s);
    if (hint >= 0 && sigma[hint] > s && s_.margin(plane.reflect_raw(samples_[hint].p)) < -tol_c_) return false;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (sigma[i] <= s) continue;
      if (s_.margin(plane.reflect_raw(samples_[i].p)) < -tol_c_) {
        hint = static_cast<int>(i);
        return false;
      }
    }
    return true;
  }

  CriticalPosition critical_position(const Vec<N>& v) const {
    const auto sigma = leaf_coordinates(v);
    return critical_position(v, sigma);
  }

  CriticalPosition critical_position(const Vec<N>& v, const std::vector<double>& sigma) const {
    const auto [mn, mx] = std::minmax_element(sigma.begin(), sigma.end());
    const double pad = 1e-6 * scale_;
    double lo = *mn - pad, hi = *mx + pad;
    if (s_.space().kind() == Model::Spherical) {
      lo = std::max(lo, -std::numbers::pi / 2 + 1e-12);
      hi = std::min(hi, std::numbers::pi / 2 - 1e-12);
    }
    CriticalPosition out;
    int hint = -1;
    const int k = std::max(opt_.probes, 2);
    out.probes.resize(k);
    out.probe_holds.resize(k);
    for (int i = 0; i < k; ++i) {
      out.probes[i] = lo + (hi - lo) * i / (k - 1);
      out.probe_holds[i] = predicate(v, sigma, out.probes[i], hint);
    }
    int fail = -1;
    for (int i = k - 1; i >= 0; --i) {
      if (!out.probe_holds[i]) {
        fail = i;
        break;
      }
    }
    for (int i = 0; i < fail; ++i) out.monotone = out.monotone && !out.probe_holds[i];
    if (fail < 0) {
      out.degenerate = true;
      out.m = out.lo = lo;
      return out;
    }
    if (fail == k - 1) throw ConvergenceError("moving planes: predicate fails with an empty cap");
    const auto [a, b] = numerics::bisect_predicate(
        [&](double s) { return predicate(v, sigma, s, hint); }, out.probes[fail], out.probes[fail + 1], tol_s_);
    out.lo = a;
    out.m = b;
    return out;
  }

  MovingPlanesResult<N> critical_cap(const Vec<N>& v_in) const {
    const Vec<N> v = v_in.normalized();
    const auto sigma = leaf_coordinates(v);
    const CriticalPosition cp = critical_position(v, sigma);
    const SpaceForm<N>& sp = s_.space();
    MovingPlanesResult<N> r{v, cp, make_hyperplane(sp, axis(v), cp.m), Vec<N>::Zero(), 0, TangencyKind::Interior, {}, {}, {}, {}};
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (sigma[i] > cp.m) r.cap.push_back(static_cast<int>(i));
    }
    if (r.cap.empty()) throw DegenerateError("critical_cap: empty cap");

    // Tangency sample: minimal reflected margin, ties broken by smallest leaf coordinate.
    std::vector<double> margins(r.cap.size());
    for (std::size_t k = 0; k < r.cap.size(); ++k) margins[k] = s_.margin(r.plane.reflect_raw(samples_[r.cap[k]].p));
    const double mmin = *std::min_element(margins.begin(), margins.end());
    double best_sigma = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.cap.size(); ++k) {
      if (margins[k] <= mmin + 1e-10 * scale_ && sigma[r.cap[k]] < best_sigma) {
        best_sigma = sigma[r.cap[k]];
        r.p0_sample = r.cap[k];
      }
    }
    r.p0 = r.plane.reflect_raw(samples_[r.p0_sample].p);
    r.kind = (sigma[r.p0_sample] - cp.m) <= grid_.spacing() * scale_ ? TangencyKind::Boundary : TangencyKind::Interior;

    // Connected component of the cap containing the tangency sample.
    std::vector<char> in_cap(samples_.size(), 0), in_comp(samples_.size(), 0);
    for (int i : r.cap) in_cap[i] = 1;
    std::deque<int> queue{r.p0_sample};
    in_comp[r.p0_sample] = 1;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      r.component.push_back(i);
      for (int j : grid_.neighbors(i)) {
        if (in_cap[j] && !in_comp[j]) {
          in_comp[j] = 1;
          queue.push_back(j);
        }
      }
    }
    std::sort(r.component.begin(), r.component.end());
    r.reflected.reserve(r.component.size());
    for (int i : r.component) r.reflected.push_back(r.plane.reflect_raw(samples_[i].p));

    if (opt_.compute_matches) {
      std::vector<std::optional<PointMatch<N>>> found(r.component.size());
      numerics::parallel_for(r.component.size(), [&](std::size_t k) {
        const int i = r.component[k];
        const Vec<N> Nq = r.plane.reflect_tangent_raw(samples_[i].p, samples_[i].normal);
        found[k] = inner_projection(s_, r.reflected[k], Nq, 2.5 * scale_, containment_tolerance());
      });
      for (auto& f : found) {
        if (!f) {
          ++r.warnings;
          continue;
        }
        r.max_match_distance = std::max(r.max_match_distance, f->distance);
        r.max_normal_gap = std::max(r.max_normal_gap, f->normal_gap);
        r.matches.push_back(*f);
      }
    }
    if (opt_.compute_defect) r.defect = defect(r, in_comp);
    return r;
  }

 private:
  // max over samples p of d(p, Sigma u Sigma^pi) with Sigma^pi = X(component)
  // and Sigma its reflection; d(p, Sigma) = d(R p, X(component)).
  double defect(const MovingPlanesResult<N>& r, const std::vector<char>& in_comp) const {
    std::vector<char> near(samples_.size(), 0);
    std::vector<int> rim;
    for (int i : r.component) {
      near[i] = 1;
      bool boundary = false;
      for (int j : grid_.neighbors(i)) {
        near[j] = 1;
        boundary = boundary || !in_comp[j];
      }
      if (boundary) rim.push_back(i);
    }
    const AxisFrame<N> frame = axis_frame(s_.space(), axis(r.v));
    std::vector<double> value(samples_.size(), 0.0);
    numerics::parallel_for(samples_.size(), [&](std::size_t i) {
      if (in_comp[i]) return;
      const Vec<N>& p = samples_[i].p;
      value[i] = std::min(distance_to_patch(p, r, frame, near, rim), distance_to_patch(r.plane.reflect_raw(p), r, frame, near, rim));
    });
    return *std::max_element(value.begin(), value.end());
  }

  double distance_to_patch(const Vec<N>& y, const MovingPlanesResult<N>& r, const AxisFrame<N>& frame,
                           const std::vector<char>& near, const std::vector<int>& rim) const {
    const SpaceForm<N>& sp = s_.space();
    auto rim_distance = [&] {
      double d = std::numeric_limits<double>::infinity();
      for (int j : rim) d = std::min(d, sp.dist(y, samples_[j].p));
      return d;
    };
    const auto [uy, dy] = s_.polar(y);
    (void)dy;
    const int j0 = grid_.nearest(uy);
    if (!near[j0]) return rim_distance();
    const Vec<N> u0 = grid_.dir(j0);
    const auto T = complement_basis<N>(u0);
    auto at = [&](const Eigen::VectorXd& a) {
      Vec<N - 1> aa = a;
      return Vec<N>((u0 + T * aa).normalized());
    };
    auto f = [&](const Eigen::VectorXd& a) {
      const double d = sp.dist(y, s_.point(at(a)));
      return d * d;
    };
    const auto res = numerics::nelder_mead(f, Eigen::VectorXd::Zero(N - 1), 0.5 * grid_.spacing(), 1e-24,
                                           1e-12, 2000);
    const Vec<N> u_star = at(res.x);
    const Vec<N> x_star = s_.point(u_star);
    const bool in_region = leaf_coordinate_raw(sp, frame, x_star) >= r.position.m - tol_s_ &&
                           near[grid_.nearest(u_star)];
    if (!in_region) return rim_distance();
    return std::sqrt(std::max(res.f, 0.0));
  }

  const RadialSurface<N>& s_;
  const DirectionGrid<N>& grid_;
  const std::vector<SurfaceSample<N>>& samples_;
  MovingPlanesOptions opt_;
  double scale_ = 1.0;
  double tol_c_ = 0.0;
  double tol_s_ = 0.0;
};

}  // namespace sfstab
