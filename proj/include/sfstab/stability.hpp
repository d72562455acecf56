#pragma once

#include "sfstab/moving_planes.hpp"

#include <Eigen/SVD>

#include <limits>
#include <string>
#include <vector>

namespace sfstab {

// Radial x angular tensor quadrature over Omega, centered at the surface base:
// a = exp_base(t rho(u) e(u)), dV = sn(t rho)^{N-1} rho dt du.
template <int N>
class DomainQuadrature {
 public:
  DomainQuadrature(const RadialSurface<N>& s, const DirectionGrid<N>& grid, int radial_nodes = 64) : sp_(s.space()) {
    if (radial_nodes < 1) throw std::invalid_argument("quadrature needs at least one radial node");
    const auto gl = numerics::gauss_legendre(radial_nodes);
    const double hb = sp_.conformal_factor(s.base());
    nodes_.reserve(grid.size() * gl.nodes.size());
    weights_.reserve(grid.size() * gl.nodes.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec<N>& u = grid.dir(i);
      const double rho = s.radius(u);
      const Vec<N> e = s.frame() * u / hb;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double t = gl.nodes[k] * rho;
        nodes_.push_back(sp_.exp_raw(s.base(), t * e));
        weights_.push_back(grid.weight(i) * gl.weights[k] * rho * std::pow(sp_.sn(t), N - 1));
      }
    }
    volume_ = 0.0;
    for (double w : weights_) volume_ += w;
  }

  double volume() const { return volume_; }
  std::size_t size() const { return nodes_.size(); }

  // P(x) = (1 / 2|Omega|) int d(x, a)^2 da
  double potential(const Vec<N>& x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      const double d = sp_.dist(x, nodes_[j]);
      acc += weights_[j] * d * d;
    }
    return 0.5 * acc / volume_;
  }

  // Chart components of grad P at x: -(1/|Omega|) int exp_x^{-1}(a) da, raised
  // with the metric (the chart vector whose metric pairing is dP).
  Vec<N> gradient(const Vec<N>& x) const {
    Vec<N> acc = Vec<N>::Zero();
    for (std::size_t j = 0; j < nodes_.size(); ++j) acc += weights_[j] * sp_.log_raw(x, nodes_[j]);
    return -acc / volume_;
  }

 private:
  SpaceForm<N> sp_;
  std::vector<Vec<N>> nodes_;
  std::vector<double> weights_;
  double volume_ = 0.0;
};

template <int N>
struct CenterOfMass {
  Vec<N> x;
  double residual = 0.0;  // |grad P|_g at x
  int iterations = 0;
  bool converged = false;
};

template <int N>
CenterOfMass<N> center_of_mass(const DomainQuadrature<N>& q, const SpaceForm<N>& sp, const Vec<N>& start,
                               double tol = 1e-8, int max_iter = 200) {
  CenterOfMass<N> out;
  out.x = start;
  Vec<N> g = q.gradient(out.x);
  auto gnorm = [&](const Vec<N>& x, const Vec<N>& v) { return sp.conformal_factor(x) * v.norm(); };
  out.residual = gnorm(out.x, g);
  double P = q.potential(out.x);
  for (int it = 0; it < max_iter && out.residual > tol; ++it) {
    out.iterations = it + 1;
    double step = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half, step *= 0.5) {
      const Vec<N> y = sp.exp_raw(out.x, -step * g);
      if (!sp.in_domain(y)) continue;
      const double Py = q.potential(y);
      if (Py <= P) {
        out.x = y;
        P = Py;
        moved = true;
        break;
      }
    }
    g = q.gradient(out.x);
    out.residual = gnorm(out.x, g);
    if (!moved) break;
  }
  out.converged = out.residual <= tol;
  return out;
}

template <int N>
CenterOfMass<N> center_of_mass(const RadialSurface<N>& s, const DirectionGrid<N>& grid, int radial_nodes = 64,
                               double tol = 1e-8) {
  const DomainQuadrature<N> q(s, grid, radial_nodes);
  auto c = center_of_mass(q, s.space(), s.base(), tol);
  if (!c.converged) {
    throw ConvergenceError("center of mass did not converge (residual " + std::to_string(c.residual) + ")");
  }
  return c;
}

template <int N>
struct ApproximateCenter {
  Vec<N> x;
  double residual = 0.0;  // sqrt(sum_i d(x, pi_i)^2)
  bool exact = true;      // false when a least-squares fallback was needed
};

template <int N>
double plane_residual(const SpaceForm<N>& sp, const std::vector<GeodesicHyperplane<N>>& planes, const Vec<N>& x) {
  double acc = 0.0;
  for (const auto& pl : planes) {
    const double d = pl.signed_distance(sp, x);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Least-squares intersection of hyperplanes (in practice the n critical
// hyperplanes of an orthonormal frame).
template <int N>
ApproximateCenter<N> approximate_center(const SpaceForm<N>& sp, const std::vector<GeodesicHyperplane<N>>& planes) {
  if (planes.size() < static_cast<std::size_t>(N)) throw std::invalid_argument("approximate center needs n hyperplanes");
  ApproximateCenter<N> out;
  const std::size_t m = planes.size();
  if (sp.kind() == Model::Euclidean) {
    Eigen::MatrixXd A(m, N);
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i) {
      A.row(i) = planes[i].normal().transpose();
      b[i] = planes[i].offset();
    }
    out.x = A.colPivHouseholderQr().solve(b);
  } else {
    Eigen::MatrixXd A(m, N + 1);
    for (std::size_t i = 0; i < m; ++i) {
      Vec<N + 1> M = planes[i].ambient_normal();
      if (sp.kind() == Model::Hyperbolic) M[N] = -M[N];
      A.row(i) = M.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    Vec<N + 1> X = svd.matrixV().col(N);
    if (X[N] < 0) X = -X;
    const double q = sp.amb_dot(X, X);
    const bool usable = sp.kind() == Model::Spherical ? X[N] > 0 : q < 0;
    if (usable) {
      out.x = sp.drop(X / std::sqrt(std::abs(q)));
    } else {
      // No point of the model lies on every hyperplane: minimize the squared
      // distances in normal coordinates about the chart origin.
      out.exact = false;
      const Vec<N> o = sp.origin_coords();
      auto pt = [&](const Eigen::VectorXd& w) { return sp.exp_raw(o, Vec<N>(w) / sp.conformal_factor(o)); };
      auto f = [&](const Eigen::VectorXd& w) {
        const Vec<N> y = pt(w);
        if (!sp.in_domain(y)) return std::numeric_limits<double>::infinity();
        const double r = plane_residual(sp, planes, y);
        return r * r;
      };
      const auto nm = numerics::nelder_mead(f, Eigen::VectorXd::Zero(N), 0.1, 1e-24, 1e-13, 20000);
      out.x = pt(nm.x);
    }
  }
  sp.require_domain(out.x, "approximate center");
  out.residual = plane_residual(sp, planes, out.x);
  return out;
}

template <int N>
struct Radii {
  double r = 0.0;
  double R = 0.0;
  Vec<N> p_in;   // surface point realizing r
  Vec<N> p_out;  // surface point realizing R
};

// r = min d(O, S), R = max d(O, S): grid extremes refined by local 2-D
// minimization over the surface parametrization.
template <int N>
Radii<N> radii(const RadialSurface<N>& s, const std::vector<SurfaceSample<N>>& samples, const Vec<N>& O) {
  const SpaceForm<N>& sp = s.space();
  sp.require_domain(O, "radii center");
  if (!(s.margin(O) > 0.0)) throw GeometryError("radii: the center lies outside the enclosed domain");
  if (samples.empty()) throw std::invalid_argument("radii: empty sample set");
  std::size_t imin = 0, imax = 0;
  std::vector<double> d(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    d[i] = sp.dist(O, samples[i].p);
    if (d[i] < d[imin]) imin = i;
    if (d[i] > d[imax]) imax = i;
  }
  auto refine = [&](std::size_t i, double sign) {
    const detail::LocalChart<N> X{s, samples[i].u, complement_basis<N>(samples[i].u)};
    auto f = [&](const Eigen::VectorXd& a) { return sign * sp.dist(O, X(Vec<N - 1>(a))); };
    const auto nm = numerics::nelder_mead(f, Eigen::VectorXd::Zero(N - 1), 0.01, 1e-15, 1e-12);
    const Vec<N> p = X(Vec<N - 1>(nm.x));
    const double v = sp.dist(O, p);
    return sign * v <= sign * d[i] ? std::pair{v, p} : std::pair{d[i], samples[i].p};
  };
  Radii<N> out;
  std::tie(out.r, out.p_in) = refine(imin, 1.0);
  std::tie(out.R, out.p_out) = refine(imax, -1.0);
  return out;
}

struct PlaneDistances {
  std::vector<double> m;         // critical positions
  std::vector<double> distance;  // d(O, pi_v)
  double max = 0.0;
};

template <int N>
PlaneDistances center_plane_distances(const MovingPlanes<N>& mp, const SpaceForm<N>& sp, const Vec<N>& O,
                                      const std::vector<Vec<N>>& dirs) {
  PlaneDistances out;
  out.m.resize(dirs.size());
  out.distance.resize(dirs.size());
  numerics::parallel_for(dirs.size(), [&](std::size_t k) {
    const double m = mp.critical_position(dirs[k]).m;
    out.m[k] = m;
    out.distance[k] = std::abs(make_hyperplane(sp, mp.axis(dirs[k]), m).signed_distance(sp, O));
  });
  for (double d : out.distance) out.max = std::max(out.max, d);
  return out;
}

template <int N>
struct RadialGraph {
  std::vector<double> psi;  // Psi(u) = d(O, S along u) - r, grid ordered
  double sup = 0.0;
  double grad_sup = 0.0;
};

// Writes S as a radial graph over the geodesic sphere of radius r about O.
// Throws GeometryError when a ray from O meets S more than once.
template <int N>
RadialGraph<N> radial_graph(const RadialSurface<N>& s, const DirectionGrid<N>& grid, const Vec<N>& O, double r,
                            double reach, int steps = 256) {
  const SpaceForm<N>& sp = s.space();
  const double hO = sp.conformal_factor(O);
  RadialGraph<N> g;
  g.psi.resize(grid.size());
  numerics::parallel_for(grid.size(), [&](std::size_t i) {
    const Vec<N> e = grid.dir(i) / hO;
    auto m = [&](double t) {
      const Vec<N> y = sp.exp_raw(O, t * e);
      return sp.in_domain(y) ? s.margin(y) : -1.0;
    };
    const double dt = reach / steps;
    double prev = m(0.0);
    double hit = -1.0;
    for (int k = 1; k <= steps; ++k) {
      const double mt = m(k * dt);
      if ((mt > 0) != (prev > 0)) {
        if (hit >= 0.0) throw GeometryError("radial graph: a ray from the center meets the surface twice");
        hit = numerics::bisect(m, (k - 1) * dt, k * dt, 1e-13 * (1.0 + reach));
      }
      prev = mt;
    }
    if (hit < 0.0) throw GeometryError("radial graph: a ray from the center never meets the surface");
    g.psi[i] = hit - r;
  });
  const double arc = sp.sn(r);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    g.sup = std::max(g.sup, std::abs(g.psi[i]));
    for (int j : grid.neighbors(i)) {
      if (static_cast<std::size_t>(j) <= i) continue;
      const double ang = std::acos(std::clamp(grid.dir(i).dot(grid.dir(j)), -1.0, 1.0));
      g.grad_sup = std::max(g.grad_sup, std::abs(g.psi[i] - g.psi[j]) / (ang * arc));
    }
  }
  return g;
}

struct StabilityOptions {
  int grid_resolution = 0;  // 0: DirectionGrid default
  int directions = 50;
  int radial_nodes = 64;
  double tol_scale = 1.0;
  bool frame_defects = true;
};

template <int N>
struct StabilityReport {
  Model model = Model::Euclidean;
  FamilyParams<N> family;
  std::string op;
  int grid_resolution = 0;
  std::size_t grid_size = 0;
  int directions = 0;

  double osc = 0.0;
  double H_min = 0.0;
  double H_max = 0.0;
  double area = 0.0;
  Vec<N> center = Vec<N>::Zero();  // approximate center from the frame planes
  double center_residual = 0.0;
  bool center_exact = true;
  Vec<N> center_of_mass = Vec<N>::Zero();
  double com_residual = 0.0;
  double com_distance = 0.0;  // d(center_of_mass, center)
  double r = 0.0;
  double R = 0.0;
  double ratio = std::numeric_limits<double>::infinity();  // infinite when osc is below kOscFloor
  std::vector<double> frame_m;       // critical positions along e_1..e_n
  std::vector<double> frame_defect;  // reflection defects along e_1..e_n
  double max_center_plane_distance = 0.0;
  std::vector<Vec<N>> plane_dirs;
  std::vector<double> plane_distance;
  double psi_sup = 0.0;
  double psi_grad_sup = 0.0;
  double containment_violation = 0.0;  // max excess of d(O, p) outside [r, R]

  bool valid = true;
  std::string failed_stage;
  std::string error;

  double spread() const { return R - r; }
  bool ratio_defined() const { return std::isfinite(ratio); }
};

// Below this the curvature spread is finite-difference noise and the ratio
// is reported as undefined.
constexpr double kOscFloor = 1e-8;

template <int N>
StabilityReport<N> stability_report(const RadialSurface<N>& s, const CurvatureOperator& op,
                                    const StabilityOptions& opt = {}) {
  StabilityReport<N> rep;
  const SpaceForm<N>& sp = s.space();
  rep.model = sp.kind();
  rep.family = s.params();
  rep.op = op.name();
  rep.directions = opt.directions;
  std::string stage = "grid";
  try {
    const DirectionGrid<N> grid = opt.grid_resolution > 0 ? DirectionGrid<N>(opt.grid_resolution)
                                                         : DirectionGrid<N>::with_default_resolution();
    rep.grid_resolution = grid.resolution();
    rep.grid_size = grid.size();

    stage = "curvature";
    const auto samples = sample_surface(s, grid, &op);
    const auto cs = summarize_curvature(s, samples, grid, false);
    rep.osc = cs.osc;
    rep.H_min = cs.min;
    rep.H_max = cs.max;
    rep.area = cs.area;

    stage = "moving_planes";
    MovingPlanesOptions mo;
    mo.tol_scale = opt.tol_scale;
    mo.compute_matches = false;
    mo.compute_defect = opt.frame_defects;
    const MovingPlanes<N> mp(s, grid, samples, mo);
    std::vector<GeodesicHyperplane<N>> frame;
    for (int i = 0; i < N; ++i) {
      if (opt.frame_defects) {
        const auto c = mp.critical_cap(Vec<N>::Unit(i));
        rep.frame_m.push_back(c.position.m);
        rep.frame_defect.push_back(c.defect);
        frame.push_back(c.plane);
      } else {
        const double m = mp.critical_position(Vec<N>::Unit(i)).m;
        rep.frame_m.push_back(m);
        frame.push_back(make_hyperplane(sp, mp.axis(Vec<N>::Unit(i)), m));
      }
    }

    stage = "approximate_center";
    const auto ac = approximate_center(sp, frame);
    rep.center = ac.x;
    rep.center_residual = ac.residual;
    rep.center_exact = ac.exact;
    if (sp.kind() == Model::Hyperbolic && ac.residual > 1e-6) {
      throw GeometryError("critical hyperplanes do not intersect (residual " + std::to_string(ac.residual) + ")");
    }

    stage = "center_of_mass";
    const auto com = center_of_mass(s, grid, opt.radial_nodes);
    rep.center_of_mass = com.x;
    rep.com_residual = com.residual;
    rep.com_distance = sp.dist(com.x, ac.x);

    stage = "radii";
    const auto rr = radii(s, samples, ac.x);
    rep.r = rr.r;
    rep.R = rr.R;
    rep.ratio = rep.osc > kOscFloor ? (rep.R - rep.r) / rep.osc : std::numeric_limits<double>::infinity();
    for (const auto& x : samples) {
      const double d = sp.dist(ac.x, x.p);
      rep.containment_violation = std::max({rep.containment_violation, rep.r - d, d - rep.R});
    }
    if (rep.containment_violation > 1e-8) throw GeometryError("surface samples escape the annulus [r, R]");

    stage = "plane_distances";
    rep.plane_dirs = fibonacci_directions<N>(opt.directions);
    const auto pd = center_plane_distances(mp, sp, ac.x, rep.plane_dirs);
    rep.plane_distance = pd.distance;
    rep.max_center_plane_distance = pd.max;

    stage = "radial_graph";
    const auto g = radial_graph(s, grid, ac.x, rep.r, 2.5 * mp.scale() + 2.0 * sp.dist(s.base(), ac.x));
    rep.psi_sup = g.sup;
    rep.psi_grad_sup = g.grad_sup;
    if (rep.psi_sup > rep.R - rep.r + 1e-8) throw GeometryError("radial graph exceeds R - r");
  } catch (const std::exception& e) {
    rep.valid = false;
    rep.failed_stage = stage;
    rep.error = e.what();
  }
  return rep;
}

}  // namespace sfstab
