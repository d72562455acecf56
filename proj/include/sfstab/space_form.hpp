#pragma once

#include "sfstab/core.hpp"

#include <algorithm>
#include <limits>

namespace sfstab {

// The three model spaces realized as conformal charts on R^N with metric
// g_x = h(x)^2 <.,.>:
//   Euclidean   h = 1
//   Hyperbolic  h = 1/x_N on the upper half-space x_N > 0
//   Spherical   h = 2/(1+|x|^2), stereographic projection from the south pole;
//               the open unit ball is the image of the upper hemisphere.
//
// Non-Euclidean closed forms are evaluated on the ambient quadric model
// (unit sphere in R^{N+1}, or the upper sheet of the hyperboloid in Minkowski
// space) and pulled back to the chart. Ambient layout: indices 0..N-1 carry the
// chart-like coordinates, index N is the north component (sphere) or the time
// component (hyperboloid).
template <int N>
class SpaceForm {
 public:
  static_assert(N >= 2, "space forms need dimension >= 2");
  using V = Vec<N>;
  using A = Vec<N + 1>;

  explicit SpaceForm(Model kind, Tolerances tol = {}, bool hemisphere = true)
      : kind_(kind), tol_(tol), hemisphere_(hemisphere) {}

  static constexpr int dimension() { return N; }
  Model kind() const { return kind_; }
  const Tolerances& tolerances() const { return tol_; }
  bool hemisphere() const { return hemisphere_; }

  V origin_coords() const {
    return kind_ == Model::Hyperbolic ? V(V::Unit(N - 1)) : V(V::Zero());
  }
  ChartPoint<N> origin() const { return ChartPoint<N>(origin_coords()); }

  double sectional_curvature() const {
    switch (kind_) {
      case Model::Euclidean: return 0.0;
      case Model::Hyperbolic: return -1.0;
      case Model::Spherical: return 1.0;
    }
    return 0.0;
  }

  // Radial Jacobi field: area of geodesic spheres of radius t scales as sn(t)^{N-1}.
  double sn(double t) const {
    switch (kind_) {
      case Model::Euclidean: return t;
      case Model::Hyperbolic: return std::sinh(t);
      case Model::Spherical: return std::sin(t);
    }
    return t;
  }
  double cs(double t) const {
    switch (kind_) {
      case Model::Euclidean: return 1.0;
      case Model::Hyperbolic: return std::cosh(t);
      case Model::Spherical: return std::cos(t);
    }
    return 1.0;
  }

  // Parameter interval of geodesics through the origin used by the moving planes.
  bool in_parameter_interval(double t) const {
    if (!std::isfinite(t)) return false;
    if (kind_ == Model::Spherical) return std::abs(t) < std::numbers::pi / 2;
    return true;
  }

  bool in_domain(const V& x) const {
    if (!x.allFinite()) return false;
    switch (kind_) {
      case Model::Euclidean: return true;
      case Model::Hyperbolic: return x[N - 1] > 0.0;
      case Model::Spherical:
        return !hemisphere_ || x.norm() < 1.0 - tol_.hemisphere_margin;
    }
    return false;
  }

  void require_domain(const V& x, const char* what) const {
    if (!in_domain(x)) {
      throw DomainError(std::string(what) + " lies outside the " +
                        std::string(model_name(kind_)) + " chart domain");
    }
  }

  double conformal_factor(const V& x) const {
    switch (kind_) {
      case Model::Euclidean: return 1.0;
      case Model::Hyperbolic: return 1.0 / x[N - 1];
      case Model::Spherical: return 2.0 / (1.0 + x.squaredNorm());
    }
    return 1.0;
  }

  V grad_conformal(const V& x) const {
    switch (kind_) {
      case Model::Euclidean: return V::Zero();
      case Model::Hyperbolic: {
        V g = V::Zero();
        g[N - 1] = -1.0 / (x[N - 1] * x[N - 1]);
        return g;
      }
      case Model::Spherical: {
        const double d = 1.0 + x.squaredNorm();
        return (-4.0 / (d * d)) * x;
      }
    }
    return V::Zero();
  }

  V grad_log_conformal(const V& x) const {
    switch (kind_) {
      case Model::Euclidean: return V::Zero();
      case Model::Hyperbolic: {
        V g = V::Zero();
        g[N - 1] = -1.0 / x[N - 1];
        return g;
      }
      case Model::Spherical: return (-2.0 / (1.0 + x.squaredNorm())) * x;
    }
    return V::Zero();
  }

  // ---- checked public operations ----

  double metric_at(const ChartPoint<N>& p, const TangentVector<N>& v,
                   const TangentVector<N>& w) const {
    require_same_base(p.x, v.base);
    require_same_base(p.x, w.base);
    require_domain(p.x, "metric base point");
    const double h = conformal_factor(p.x);
    return h * h * v.v.dot(w.v);
  }

  double norm(const TangentVector<N>& v) const {
    return conformal_factor(v.base) * v.v.norm();
  }

  double distance(const ChartPoint<N>& p, const ChartPoint<N>& q) const {
    require_domain(p.x, "distance argument p");
    require_domain(q.x, "distance argument q");
    return dist(p.x, q.x);
  }

  ChartPoint<N> exp_map(const TangentVector<N>& v) const {
    require_domain(v.base, "exp base point");
    if (kind_ == Model::Spherical && norm(v) >= std::numbers::pi - tol_.cut_locus) {
      throw CutLocusError("exp: tangent length reaches the spherical cut locus");
    }
    V q = exp_raw(v.base, v.v);
    require_domain(q, "exp result");
    return ChartPoint<N>(q);
  }

  TangentVector<N> log_map(const ChartPoint<N>& p, const ChartPoint<N>& q) const {
    require_domain(p.x, "log base point");
    require_domain(q.x, "log target point");
    if (kind_ == Model::Spherical && dist(p.x, q.x) >= std::numbers::pi - tol_.cut_locus) {
      throw CutLocusError("log: points are antipodal");
    }
    return TangentVector<N>(p.x, log_raw(p.x, q.x));
  }

  // Unit-speed geodesic with initial velocity v evaluated at parameter t.
  ChartPoint<N> geodesic(const ChartPoint<N>& p, const TangentVector<N>& v, double t) const {
    require_same_base(p.x, v.base);
    if (std::abs(norm(v) - 1.0) > tol_.unit_vector) {
      throw std::invalid_argument("geodesic: initial velocity must have unit metric norm");
    }
    if (!in_parameter_interval(t)) {
      throw DomainError("geodesic: parameter outside the model's interval");
    }
    if (t == 0.0) return p;
    return exp_map(TangentVector<N>(p.x, t * v.v));
  }

  TangentVector<N> parallel_transport(const ChartPoint<N>& p, const ChartPoint<N>& q,
                                      const TangentVector<N>& v) const {
    require_same_base(p.x, v.base);
    require_domain(p.x, "transport source");
    require_domain(q.x, "transport target");
    if (kind_ == Model::Spherical && dist(p.x, q.x) >= std::numbers::pi - tol_.cut_locus) {
      throw CutLocusError("transport: no unique geodesic between antipodal points");
    }
    return TangentVector<N>(q.x, transport_raw(p.x, q.x, v.v));
  }

  // ---- unchecked kernels (callers guarantee the domain) ----

  double dist(const V& p, const V& q) const {
    switch (kind_) {
      case Model::Euclidean: return (p - q).norm();
      case Model::Hyperbolic:
        return 2.0 * std::asinh((p - q).norm() / (2.0 * std::sqrt(p[N - 1] * q[N - 1])));
      case Model::Spherical: {
        const double chord =
            (p - q).norm() / std::sqrt((1.0 + p.squaredNorm()) * (1.0 + q.squaredNorm()));
        return 2.0 * std::asin(std::min(1.0, chord));
      }
    }
    return 0.0;
  }

  V exp_raw(const V& p, const V& v) const {
    if (kind_ == Model::Euclidean) return p + v;
    const A P = lift(p);
    const A W = lift_tangent(p, v);
    const double theta = amb_norm(W);
    if (theta == 0.0) return p;
    A X;
    if (kind_ == Model::Spherical) {
      X = std::cos(theta) * P + (std::sin(theta) / theta) * W;
      X /= X.norm();
    } else {
      X = std::cosh(theta) * P + (std::sinh(theta) / theta) * W;
      X /= std::sqrt(-amb_dot(X, X));
    }
    return drop(X);
  }

  V log_raw(const V& p, const V& q) const {
    if (kind_ == Model::Euclidean) return q - p;
    const A P = lift(p);
    const A Q = lift(q);
    const A U = Q + (-kind_sign()) * amb_dot(P, Q) * P;
    const double un = amb_norm(U);
    if (un == 0.0) return V::Zero();
    const double d = dist(p, q);
    return drop_tangent(P, (d / un) * U);
  }

  V transport_raw(const V& p, const V& q, const V& v) const {
    if (kind_ == Model::Euclidean) return v;
    const A P = lift(p);
    const A Q = lift(q);
    A U = Q + (-kind_sign()) * amb_dot(P, Q) * P;
    const double un = amb_norm(U);
    const A W = lift_tangent(p, v);
    if (un == 0.0) return v;
    U /= un;
    const double d = dist(p, q);
    const double wu = amb_dot(W, U);
    A T;
    if (kind_ == Model::Spherical) {
      T = W + wu * ((std::cos(d) - 1.0) * U - std::sin(d) * P);
    } else {
      T = W + wu * ((std::cosh(d) - 1.0) * U + std::sinh(d) * P);
    }
    return drop_tangent(Q, T);
  }

  // ---- ambient model ----

  // +1 on the sphere, -1 on the hyperboloid: <P,P> = kind_sign() for points.
  double kind_sign() const { return kind_ == Model::Hyperbolic ? -1.0 : 1.0; }

  double amb_dot(const A& a, const A& b) const {
    if (kind_ == Model::Hyperbolic) return a.template head<N>().dot(b.template head<N>()) - a[N] * b[N];
    return a.dot(b);
  }

  double amb_norm(const A& a) const { return std::sqrt(std::max(0.0, amb_dot(a, a))); }

  A lift(const V& y) const {
    A X;
    if (kind_ == Model::Spherical) {
      const double s = y.squaredNorm();
      X.template head<N>() = (2.0 / (1.0 + s)) * y;
      X[N] = (1.0 - s) / (1.0 + s);
    } else if (kind_ == Model::Hyperbolic) {
      const double yn = y[N - 1];
      const double s = y.squaredNorm();
      X.template head<N - 1>() = y.template head<N - 1>() / yn;
      X[N - 1] = (1.0 - s) / (2.0 * yn);
      X[N] = (1.0 + s) / (2.0 * yn);
    } else {
      X.template head<N>() = y;
      X[N] = 0.0;
    }
    return X;
  }

  V drop(const A& X) const {
    if (kind_ == Model::Spherical) return X.template head<N>() / (1.0 + X[N]);
    if (kind_ == Model::Hyperbolic) {
      const double D = X[N] + X[N - 1];
      V y;
      y.template head<N - 1>() = X.template head<N - 1>() / D;
      y[N - 1] = 1.0 / D;
      return y;
    }
    return X.template head<N>();
  }

  A lift_tangent(const V& y, const V& w) const {
    A W;
    if (kind_ == Model::Spherical) {
      const double s = y.squaredNorm();
      const double yw = y.dot(w);
      const double d = 1.0 + s;
      W.template head<N>() = (2.0 / d) * w - (4.0 * yw / (d * d)) * y;
      W[N] = -4.0 * yw / (d * d);
    } else if (kind_ == Model::Hyperbolic) {
      const double yn = y[N - 1];
      const double wn = w[N - 1];
      const double s = y.squaredNorm();
      const double ds = 2.0 * y.dot(w);
      W.template head<N - 1>() = w.template head<N - 1>() / yn - (wn / (yn * yn)) * y.template head<N - 1>();
      W[N - 1] = -ds / (2.0 * yn) - (1.0 - s) * wn / (2.0 * yn * yn);
      W[N] = ds / (2.0 * yn) - (1.0 + s) * wn / (2.0 * yn * yn);
    } else {
      W.template head<N>() = w;
      W[N] = 0.0;
    }
    return W;
  }

  V drop_tangent(const A& X, const A& W) const {
    if (kind_ == Model::Spherical) {
      const double d = 1.0 + X[N];
      return W.template head<N>() / d - (W[N] / (d * d)) * X.template head<N>();
    }
    if (kind_ == Model::Hyperbolic) {
      const double D = X[N] + X[N - 1];
      const double dD = W[N] + W[N - 1];
      V w;
      w.template head<N - 1>() = W.template head<N - 1>() / D - (dD / (D * D)) * X.template head<N - 1>();
      w[N - 1] = -dD / (D * D);
      return w;
    }
    return W.template head<N>();
  }

 private:
  void require_same_base(const V& p, const V& b) const {
    if ((p - b).norm() > 1e-12 * (1.0 + p.norm())) {
      throw std::invalid_argument("tangent vector is not based at the given point");
    }
  }

  Model kind_;
  Tolerances tol_;
  bool hemisphere_;
};

}  // namespace sfstab
