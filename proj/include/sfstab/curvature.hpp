#pragma once

#include "sfstab/direction_grid.hpp"
#include "sfstab/numerics.hpp"
#include "sfstab/surface.hpp"

#include <iomanip>
#include <optional>
#include <ostream>
#include <random>

namespace sfstab {

template <int N>
struct SurfaceSample {
  Vec<N> u = Vec<N>::Zero();          // direction at the surface base
  Vec<N> p = Vec<N>::Zero();          // chart point
  Vec<N> nu = Vec<N>::Zero();         // Euclidean-unit inward normal
  Vec<N> normal = Vec<N>::Zero();     // metric-unit inward normal, nu / h(p)
  Vec<N - 1> kappa = Vec<N - 1>::Zero();  // principal curvatures, ascending
  double area_element = 0.0;          // dA_g per unit of direction-sphere area
  double value = 0.0;                 // H_S(p) for the operator in use
};

// Orthonormal basis of the complement of unit u (columns).
template <int N>
Eigen::Matrix<double, N, N - 1> complement_basis(const Vec<N>& u) {
  Eigen::Matrix<double, N, 1> a = u;
  Eigen::HouseholderQR<Eigen::Matrix<double, N, 1>> qr(a);
  const Mat<N> q = qr.householderQ() * Mat<N>::Identity();
  return q.template rightCols<N - 1>();
}

namespace detail {

template <int N>
struct LocalChart {
  const RadialSurface<N>& s;
  Vec<N> u;
  Eigen::Matrix<double, N, N - 1> T;

  Vec<N> operator()(const Vec<N - 1>& a) const { return s.point((u + T * a).normalized()); }
};

constexpr double kFdStep = 1e-3;

template <int N>
Vec<N> inward_unit_normal(const SpaceForm<N>& sp, const Vec<N>& p, const Vec<N>& base,
                          const Eigen::Matrix<double, N, N - 1>& Xa) {
  Eigen::HouseholderQR<Eigen::Matrix<double, N, N - 1>> qr(Xa);
  const Mat<N> q = qr.householderQ() * Mat<N>::Identity();
  Vec<N> nu = q.col(N - 1);
  if (nu.dot(sp.log_raw(p, base)) < 0) nu = -nu;
  return nu;
}

template <int N>
Eigen::Matrix<double, N, N - 1> first_derivatives(const LocalChart<N>& X, double h) {
  Eigen::Matrix<double, N, N - 1> Xa;
  for (int i = 0; i < N - 1; ++i) {
    const Vec<N - 1> e = Vec<N - 1>::Unit(i);
    Xa.col(i) = numerics::d1([&](double t) { return Vec<N>(X(t * e)); }, h);
  }
  return Xa;
}

}  // namespace detail

// Point, normals, principal curvatures and area element at direction u.
// Fourth-order central differences on the local parametrization
// a -> point(normalize(u + T a)); the Euclidean shape operator of the chart
// image is corrected to the conformal metric by kappa = (kappa_e - nu.grad log h) / h.
template <int N>
SurfaceSample<N> principal_curvatures(const RadialSurface<N>& s, const Vec<N>& u_in) {
  const SpaceForm<N>& sp = s.space();
  const double un = u_in.norm();
  if (std::abs(un - 1.0) > 1e-6) throw std::invalid_argument("principal_curvatures: u must be unit");
  const Vec<N> u = u_in / un;
  const detail::LocalChart<N> X{s, u, complement_basis<N>(u)};
  const double h = detail::kFdStep;

  const Vec<N> x0 = X(Vec<N - 1>::Zero());
  Eigen::Matrix<double, N, N - 1> Xa;
  std::array<Vec<N>, N - 1> Xii;
  for (int i = 0; i < N - 1; ++i) {
    const Vec<N - 1> e = Vec<N - 1>::Unit(i);
    const Vec<N> fp1 = X(h * e), fm1 = X(-h * e), fp2 = X(2 * h * e), fm2 = X(-2 * h * e);
    Xa.col(i) = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    Xii[i] = (-fp2 + 16.0 * fp1 - 30.0 * x0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
  }
  const Mat<N - 1> I = Xa.transpose() * Xa;
  const double detI = I.determinant();
  if (!(detI > 1e-20 * std::pow(I.trace(), N - 1))) {
    throw DegenerateError("principal_curvatures: degenerate parametrization");
  }
  const Vec<N> nu = detail::inward_unit_normal<N>(sp, x0, s.base(), Xa);

  Mat<N - 1> II;
  for (int i = 0; i < N - 1; ++i) {
    II(i, i) = Xii[i].dot(nu);
    for (int j = i + 1; j < N - 1; ++j) {
      const Vec<N - 1> w = Vec<N - 1>::Unit(i) + Vec<N - 1>::Unit(j);
      const Vec<N> D2w = (-X(2 * h * w) + 16.0 * X(h * w) - 30.0 * x0 + 16.0 * X(-h * w) - X(-2 * h * w)) /
                         (12.0 * h * h);
      II(i, j) = II(j, i) = 0.5 * (D2w - Xii[i] - Xii[j]).dot(nu);
    }
  }
  const Eigen::LLT<Mat<N - 1>> llt(I);
  const Mat<N - 1> Linv = llt.matrixL().solve(Mat<N - 1>::Identity());
  const Mat<N - 1> A = Linv * II * Linv.transpose();
  Eigen::SelfAdjointEigenSolver<Mat<N - 1>> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);

  SurfaceSample<N> out;
  const double hp = sp.conformal_factor(x0);
  const double shift = nu.dot(sp.grad_log_conformal(x0));
  out.u = u;
  out.p = x0;
  out.nu = nu;
  out.normal = nu / hp;
  out.kappa = (es.eigenvalues().array() - shift) / hp;
  out.area_element = std::pow(hp, N - 1) * std::sqrt(detI);
  return out;
}

// Point, Euclidean and metric inward normal only.
template <int N>
SurfaceSample<N> surface_normal(const RadialSurface<N>& s, const Vec<N>& u_in) {
  const Vec<N> u = u_in.normalized();
  const detail::LocalChart<N> X{s, u, complement_basis<N>(u)};
  SurfaceSample<N> out;
  out.u = u;
  out.p = X(Vec<N - 1>::Zero());
  const auto Xa = detail::first_derivatives<N>(X, detail::kFdStep);
  out.nu = detail::inward_unit_normal<N>(s.space(), out.p, s.base(), Xa);
  out.normal = out.nu / s.space().conformal_factor(out.p);
  return out;
}

// H_S = f(kappa_1, ..., kappa_{n-1}).
class CurvatureOperator {
 public:
  enum class Kind { Mean, SymmetricRoot, Custom };
  using Fn = std::function<double(const Eigen::VectorXd&)>;

  static CurvatureOperator mean() { return CurvatureOperator(Kind::Mean, 1, nullptr, "mean"); }

  static CurvatureOperator symmetric_root(int r) {
    if (r < 1) throw std::invalid_argument("symmetric root order must be >= 1");
    return CurvatureOperator(Kind::SymmetricRoot, r, nullptr, "hr:" + std::to_string(r));
  }

  // A symmetric f, positive on the positive cone and concave on its component
  // containing it; see `check_admissibility`.
  static CurvatureOperator custom(Fn f, std::string description) {
    if (!f) throw std::invalid_argument("custom operator needs a function");
    return CurvatureOperator(Kind::Custom, 0, std::move(f), std::move(description));
  }

  // "mean" or "hr:R".
  static CurvatureOperator parse(std::string_view s) {
    if (s == "mean") return mean();
    if (s.substr(0, 3) == "hr:") {
      int r = 0;
      try {
        r = std::stoi(std::string(s.substr(3)));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad operator '" + std::string(s) + "'");
      }
      return symmetric_root(r);
    }
    throw std::invalid_argument("unknown operator '" + std::string(s) + "' (use mean or hr:R)");
  }

  Kind kind() const { return kind_; }
  int order() const { return r_; }
  const std::string& name() const { return name_; }

  double operator()(const Eigen::VectorXd& kappa) const {
    const int n = static_cast<int>(kappa.size());
    switch (kind_) {
      case Kind::Mean: return kappa.sum() / n;
      case Kind::SymmetricRoot: {
        if (r_ > n) throw DomainError("symmetric root order exceeds the number of curvatures");
        if (r_ == 1) return kappa.sum() / n;
        const double hr = normalized_symmetric(kappa, r_);
        if (!(hr > 0.0)) throw DomainError("H_r must be positive under the root");
        return std::pow(hr, 1.0 / r_);
      }
      case Kind::Custom: return f_(kappa);
    }
    return 0.0;
  }

  // e_r(k) / binom(n, r).
  static double normalized_symmetric(const Eigen::VectorXd& k, int r) {
    const int n = static_cast<int>(k.size());
    std::vector<double> e(r + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i) {
      for (int j = std::min(r, i + 1); j >= 1; --j) e[j] += k[i] * e[j - 1];
    }
    double binom = 1.0;
    for (int j = 1; j <= r; ++j) binom = binom * (n - r + j) / j;
    return e[r] / binom;
  }

 private:
  CurvatureOperator(Kind k, int r, Fn f, std::string name)
      : kind_(k), r_(r), f_(std::move(f)), name_(std::move(name)) {}

  Kind kind_;
  int r_;
  Fn f_;
  std::string name_;
};

template <int M>
double curvature_value(const CurvatureOperator& op, const Vec<M>& kappa) {
  for (int i = 1; i < M; ++i) {
    if (kappa[i] < kappa[i - 1]) throw std::invalid_argument("curvature list must be sorted");
  }
  return op(Eigen::VectorXd(kappa));
}

struct AdmissibilityReport {
  int samples = 0;
  int positivity_failures = 0;
  double min_concavity_margin = std::numeric_limits<double>::infinity();
  bool passed(double tol = 1e-9) const { return positivity_failures == 0 && min_concavity_margin >= -tol; }
};

// Sampled necessary conditions for an operator: positivity on random points of
// the positive cone and midpoint concavity on random segments inside it.
inline AdmissibilityReport check_admissibility(const CurvatureOperator& op, int dim, std::uint64_t seed,
                                               int count = 1000) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(1e-3, 10.0);
  AdmissibilityReport rep;
  rep.samples = count;
  auto draw = [&] {
    Eigen::VectorXd k(dim);
    for (int i = 0; i < dim; ++i) k[i] = U(rng);
    std::sort(k.data(), k.data() + dim);
    return k;
  };
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd a = draw();
    if (!(op(a) > 0.0)) ++rep.positivity_failures;
  }
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd a = draw(), b = draw();
    // Symmetric functions: concavity is tested on sorted tuples.
    Eigen::VectorXd m = 0.5 * (a + b);
    std::sort(m.data(), m.data() + dim);
    const double margin = op(m) - 0.5 * (op(a) + op(b));
    rep.min_concavity_margin = std::min(rep.min_concavity_margin, margin);
  }
  return rep;
}

// Samples S on a direction grid (parallel, ordered by grid index).
template <int N>
std::vector<SurfaceSample<N>> sample_surface(const RadialSurface<N>& s, const DirectionGrid<N>& grid,
                                             const CurvatureOperator* op = nullptr) {
  std::vector<SurfaceSample<N>> out(grid.size());
  numerics::parallel_for(grid.size(), [&](std::size_t i) {
    out[i] = principal_curvatures(s, grid.dir(i));
    if (op) out[i].value = curvature_value(*op, out[i].kappa);
  });
  return out;
}

template <int N>
double max_radius(const RadialSurface<N>& s, const DirectionGrid<N>& grid) {
  double m = 0.0;
  for (const auto& u : grid.dirs()) m = std::max(m, s.radius(u));
  return m;
}

struct CurvatureSummary {
  double min = 0.0;
  double max = 0.0;
  double osc = 0.0;
  double area = 0.0;
  double touching_radius = 0.0;
  std::size_t count = 0;
  std::size_t argmin = 0;
  std::size_t argmax = 0;
};

template <int N>
double surface_area(const std::vector<SurfaceSample<N>>& samples, const DirectionGrid<N>& grid) {
  if (samples.empty()) throw std::invalid_argument("surface_area: empty grid");
  double a = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) a += grid.weight(i) * samples[i].area_element;
  return a;
}

// Geodesic length from p along the metric-unit direction n until the ray
// leaves Omega; std::nullopt when no exit is found within `reach`.
template <int N>
std::optional<double> exit_distance(const RadialSurface<N>& s, const Vec<N>& p, const Vec<N>& n,
                                    double reach, int steps = 128) {
  const SpaceForm<N>& sp = s.space();
  auto m = [&](double t) { return s.margin(sp.exp_raw(p, t * n)); };
  const double dt = reach / steps;
  double prev_t = 0.0;
  bool entered = false;
  for (int k = 1; k <= steps; ++k) {
    const double t = k * dt;
    const double mt = m(t);
    if (mt > 0) entered = true;
    if (entered && mt < 0) {
      return numerics::bisect(m, prev_t, t, 1e-12 * (1.0 + reach));
    }
    prev_t = t;
  }
  return std::nullopt;
}

// Reach-limited radius: min(1 / max|kappa|, half the shortest inward-normal
// chord), the chords sampled on every `stride`-th sample.
template <int N>
double touching_ball_radius(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples,
                            std::size_t stride = 0) {
  if (samples.empty()) throw std::invalid_argument("touching_ball_radius: empty grid");
  double kmax = 0.0, scale = 0.0;
  for (const auto& x : samples) {
    kmax = std::max(kmax, x.kappa.cwiseAbs().maxCoeff());
    scale = std::max(scale, s.space().dist(s.base(), x.p));
  }
  if (stride == 0) stride = std::max<std::size_t>(1, samples.size() / 400);
  std::vector<double> chords((samples.size() + stride - 1) / stride, std::numeric_limits<double>::infinity());
  numerics::parallel_for(chords.size(), [&](std::size_t k) {
    const auto& x = samples[k * stride];
    const auto d = exit_distance(s, x.p, x.normal, 2.5 * scale);
    if (d) chords[k] = *d;
  });
  const double chord = *std::min_element(chords.begin(), chords.end());
  const double rho = std::min(kmax > 0 ? 1.0 / kmax : std::numeric_limits<double>::infinity(), 0.5 * chord);
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw DegenerateError("touching_ball_radius: nonpositive estimate (self-intersection?)");
  }
  return rho;
}

template <int N>
CurvatureSummary summarize_curvature(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples,
                                     const DirectionGrid<N>& grid, bool with_touching_radius = true) {
  if (samples.empty()) throw std::invalid_argument("osc_curvature: empty grid");
  CurvatureSummary out;
  out.count = samples.size();
  out.min = out.max = samples[0].value;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].value < out.min) {
      out.min = samples[i].value;
      out.argmin = i;
    }
    if (samples[i].value > out.max) {
      out.max = samples[i].value;
      out.argmax = i;
    }
  }
  out.osc = out.max - out.min;
  out.area = surface_area(samples, grid);
  if (with_touching_radius) out.touching_radius = touching_ball_radius(s, samples);
  return out;
}

template <int N>
CurvatureSummary osc_curvature(const RadialSurface<N>& s, const CurvatureOperator& op,
                               const DirectionGrid<N>& grid, bool with_touching_radius = true) {
  const auto samples = sample_surface(s, grid, &op);
  return summarize_curvature(s, samples, grid, with_touching_radius);
}

template <int N>
void write_samples_csv(std::ostream& os, const std::vector<SurfaceSample<N>>& samples) {
  const char* axes = "xyz";
  auto col = [&](const char* prefix, int n) {
    for (int i = 0; i < n; ++i) os << ',' << prefix << (N <= 3 ? std::string(1, axes[i]) : std::to_string(i));
  };
  os << "index";
  col("u_", N);
  col("p_", N);
  col("nu_", N);
  col("N_", N);
  for (int i = 1; i < N; ++i) os << ",kappa_" << i;
  os << ",H_S\n";
  os << std::setprecision(12);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    os << k;
    for (int i = 0; i < N; ++i) os << ',' << s.u[i];
    for (int i = 0; i < N; ++i) os << ',' << s.p[i];
    for (int i = 0; i < N; ++i) os << ',' << s.nu[i];
    for (int i = 0; i < N; ++i) os << ',' << s.normal[i];
    for (int i = 0; i < N - 1; ++i) os << ',' << s.kappa[i];
    os << ',' << s.value << '\n';
  }
}

}  // namespace sfstab
