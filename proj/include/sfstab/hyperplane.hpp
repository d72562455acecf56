#pragma once

#include "sfstab/space_form.hpp"

namespace sfstab {

enum class PlaneShape { Affine, Sphere };

// Totally geodesic hypersurface in a chart. Affine shapes are {x : u.x = c}
// (vertical planes in the half-space, planes through the origin in the
// stereographic chart); sphere shapes are {|x - c| = r}. The orientation picks
// the positive side: for affine shapes it is folded into (u, c); for sphere
// shapes +1 means the outside of the chart sphere is positive.
//
// The unit normal in the ambient quadric model is kept alongside the chart
// shape; signed distances are closed forms in it.
template <int N>
class GeodesicHyperplane {
 public:
  using V = Vec<N>;
  using A = Vec<N + 1>;

  static GeodesicHyperplane affine(const SpaceForm<N>& space, const V& u, double c) {
    GeodesicHyperplane pl(space.kind());
    const double un = u.norm();
    if (!(un > 0.0)) throw DegenerateError("hyperplane normal must be nonzero");
    pl.shape_ = PlaneShape::Affine;
    pl.normal_ = u / un;
    pl.offset_ = c / un;
    pl.orientation_ = 1;
    if (space.kind() == Model::Hyperbolic && std::abs(pl.normal_[N - 1]) > 1e-12) {
      throw DomainError("hyperbolic affine hyperplanes must be vertical");
    }
    if (space.kind() == Model::Spherical && std::abs(pl.offset_) > 1e-12) {
      throw DomainError("spherical affine hyperplanes must pass through the chart origin");
    }
    pl.ambient_ = pl.ambient_from_shape();
    return pl;
  }

  static GeodesicHyperplane sphere(const SpaceForm<N>& space, const V& center, double radius,
                                   int orientation = 1) {
    GeodesicHyperplane pl(space.kind());
    if (!(radius > 0.0)) throw DegenerateError("hyperplane sphere radius must be positive");
    pl.shape_ = PlaneShape::Sphere;
    pl.center_ = center;
    pl.radius_ = radius;
    pl.orientation_ = orientation >= 0 ? 1 : -1;
    if (space.kind() == Model::Euclidean) {
      throw DomainError("euclidean hyperplanes are affine");
    }
    if (space.kind() == Model::Hyperbolic && std::abs(center[N - 1]) > 1e-12 * (1.0 + radius)) {
      throw DomainError("hyperbolic hyperplane spheres must be centered on the boundary");
    }
    if (space.kind() == Model::Spherical &&
        std::abs(radius * radius - 1.0 - center.squaredNorm()) > 1e-9 * (1.0 + radius * radius)) {
      throw DomainError("spherical hyperplane spheres need r^2 = 1 + |c|^2");
    }
    pl.ambient_ = pl.ambient_from_shape();
    return pl;
  }

  // Hyperplane {X : <X, M> = 0} of the ambient model (M unit, spacelike for
  // the hyperboloid); the positive side is <X, M> > 0.
  static GeodesicHyperplane from_ambient(const SpaceForm<N>& space, const A& M_in) {
    GeodesicHyperplane pl(space.kind());
    if (space.kind() == Model::Euclidean) {
      throw std::logic_error("euclidean hyperplanes have no ambient normal");
    }
    const double mn = space.amb_norm(M_in);
    if (!(mn > 0.0)) throw DegenerateError("ambient normal must be spacelike and nonzero");
    const A M = M_in / mn;
    pl.ambient_ = M;
    if (space.kind() == Model::Spherical) {
      const V m = M.template head<N>();
      const double last = M[N];
      if (std::abs(last) <= 1e-14 * m.norm()) {
        pl.shape_ = PlaneShape::Affine;
        pl.normal_ = m / m.norm();
        pl.offset_ = 0.0;
        pl.orientation_ = 1;
      } else {
        pl.shape_ = PlaneShape::Sphere;
        pl.center_ = m / last;
        pl.radius_ = std::sqrt(1.0 + pl.center_.squaredNorm());
        pl.orientation_ = last > 0 ? -1 : 1;
      }
    } else {
      const double k = M[N - 1] + M[N];
      const Vec<N - 1> mbar = M.template head<N - 1>();
      if (std::abs(k) <= 1e-14 * (1.0 + mbar.norm() + std::abs(M[N]))) {
        pl.shape_ = PlaneShape::Affine;
        const double mb = mbar.norm();
        pl.normal_ = V::Zero();
        pl.normal_.template head<N - 1>() = mbar / mb;
        pl.offset_ = M[N] / mb;
        pl.orientation_ = 1;
      } else {
        pl.shape_ = PlaneShape::Sphere;
        pl.center_ = V::Zero();
        pl.center_.template head<N - 1>() = mbar / k;
        pl.radius_ = 1.0 / std::abs(k);
        pl.orientation_ = k > 0 ? -1 : 1;
      }
    }
    return pl;
  }

  Model model() const { return model_; }
  PlaneShape shape() const { return shape_; }
  const V& normal() const { return normal_; }
  double offset() const { return offset_; }
  const V& center() const { return center_; }
  double radius() const { return radius_; }
  int orientation() const { return orientation_; }
  const A& ambient_normal() const { return ambient_; }

  // Signed geodesic distance, positive on the oriented side.
  double signed_distance(const SpaceForm<N>& space, const V& x) const {
    switch (model_) {
      case Model::Euclidean: return normal_.dot(x) - offset_;
      case Model::Spherical: {
        const double s = space.amb_dot(space.lift(x), ambient_);
        return std::asin(std::clamp(s, -1.0, 1.0));
      }
      case Model::Hyperbolic: return std::asinh(space.amb_dot(space.lift(x), ambient_));
    }
    return 0.0;
  }

  double distance(const SpaceForm<N>& space, const ChartPoint<N>& p) const {
    space.require_domain(p.x, "hyperplane distance argument");
    return std::abs(signed_distance(space, p.x));
  }

  // Reflection through the hyperplane: Euclidean mirror for affine shapes,
  // inversion in the chart sphere otherwise.
  V reflect_raw(const V& x) const {
    if (shape_ == PlaneShape::Affine) return x - 2.0 * (normal_.dot(x) - offset_) * normal_;
    const V d = x - center_;
    return center_ + (radius_ * radius_ / d.squaredNorm()) * d;
  }

  V reflect_tangent_raw(const V& x, const V& w) const {
    if (shape_ == PlaneShape::Affine) return w - 2.0 * normal_.dot(w) * normal_;
    const V d = x - center_;
    const double d2 = d.squaredNorm();
    return (radius_ * radius_ / d2) * (w - (2.0 * d.dot(w) / d2) * d);
  }

  ChartPoint<N> reflect_point(const SpaceForm<N>& space, const ChartPoint<N>& p) const {
    space.require_domain(p.x, "reflection argument");
    if (shape_ == PlaneShape::Sphere && (p.x - center_).norm() <= 1e-14 * (1.0 + radius_)) {
      throw DegenerateError("reflection: point is the inversion center");
    }
    return ChartPoint<N>(reflect_raw(p.x));
  }

  TangentVector<N> reflect_tangent(const SpaceForm<N>& space, const TangentVector<N>& v) const {
    const ChartPoint<N> q = reflect_point(space, ChartPoint<N>(v.base));
    return TangentVector<N>(q.x, reflect_tangent_raw(v.base, v.v));
  }

  // Metric unit normal at a point of the hyperplane, pointing to the positive side.
  V unit_normal_at(const SpaceForm<N>& space, const V& x) const {
    V n;
    if (shape_ == PlaneShape::Affine) {
      n = normal_;
    } else {
      n = static_cast<double>(orientation_) * (x - center_).normalized();
    }
    return n / space.conformal_factor(x);
  }

 private:
  explicit GeodesicHyperplane(Model m) : model_(m) {}

  A ambient_from_shape() const {
    A M = A::Zero();
    if (model_ == Model::Euclidean) return M;
    if (model_ == Model::Spherical) {
      if (shape_ == PlaneShape::Affine) {
        M.template head<N>() = normal_;
      } else {
        M.template head<N>() = center_;
        M[N] = 1.0;
        M *= -static_cast<double>(orientation_) / std::sqrt(1.0 + center_.squaredNorm());
      }
      return M;
    }
    if (shape_ == PlaneShape::Affine) {
      M.template head<N - 1>() = normal_.template head<N - 1>();
      M[N - 1] = -offset_;
      M[N] = offset_;
      return M;
    }
    const double k = -static_cast<double>(orientation_) / radius_;
    const double c2 = center_.template head<N - 1>().squaredNorm();
    const double diff = k * (radius_ * radius_ - c2);
    M.template head<N - 1>() = k * center_.template head<N - 1>();
    M[N - 1] = 0.5 * (k + diff);
    M[N] = 0.5 * (k - diff);
    return M;
  }

  Model model_;
  PlaneShape shape_ = PlaneShape::Affine;
  V normal_ = V::Zero();
  double offset_ = 0.0;
  V center_ = V::Zero();
  double radius_ = 0.0;
  int orientation_ = 1;
  A ambient_ = A::Zero();
};

// Ambient position and velocity of the unit-speed geodesic gamma_v through the
// origin, evaluated at parameter s.
template <int N>
struct AxisFrame {
  Vec<N + 1> origin;
  Vec<N + 1> direction;
};

template <int N>
AxisFrame<N> axis_frame(const SpaceForm<N>& space, const TangentVector<N>& v) {
  const Vec<N> o = space.origin_coords();
  if ((v.base - o).norm() > 1e-12) {
    throw std::invalid_argument("moving-plane directions are tangent vectors at the origin");
  }
  const double n = space.norm(v);
  if (std::abs(n - 1.0) > space.tolerances().unit_vector) {
    throw std::invalid_argument("moving-plane direction must have unit metric norm");
  }
  AxisFrame<N> f;
  f.origin = space.lift(o);
  f.direction = space.lift_tangent(o, v.v / n);
  return f;
}

// pi_{v,s}: the hyperplane through gamma_v(s) orthogonal to gamma_v'(s), oriented
// toward increasing s.
template <int N>
GeodesicHyperplane<N> make_hyperplane(const SpaceForm<N>& space, const TangentVector<N>& v,
                                      double s) {
  if (!space.in_parameter_interval(s)) {
    throw DomainError("hyperplane parameter outside the model's interval");
  }
  if (space.kind() == Model::Euclidean) {
    const double n = space.norm(v);
    if (std::abs(n - 1.0) > space.tolerances().unit_vector) {
      throw std::invalid_argument("moving-plane direction must have unit metric norm");
    }
    return GeodesicHyperplane<N>::affine(space, v.v / n, s);
  }
  const AxisFrame<N> f = axis_frame(space, v);
  Vec<N + 1> M;
  if (space.kind() == Model::Spherical) {
    M = -std::sin(s) * f.origin + std::cos(s) * f.direction;
  } else {
    M = std::sinh(s) * f.origin + std::cosh(s) * f.direction;
  }
  return GeodesicHyperplane<N>::from_ambient(space, M);
}

// Hyperplane through the origin with the given chart normal direction.
template <int N>
GeodesicHyperplane<N> hyperplane_through_origin(const SpaceForm<N>& space, const Vec<N>& dir) {
  const Vec<N> o = space.origin_coords();
  const Vec<N> u = dir.normalized() / space.conformal_factor(o);
  return make_hyperplane(space, TangentVector<N>(o, u), 0.0);
}

// Perpendicular bisector of p and q, oriented toward p.
template <int N>
GeodesicHyperplane<N> bisector(const SpaceForm<N>& space, const Vec<N>& p, const Vec<N>& q) {
  if ((p - q).norm() == 0.0) throw DegenerateError("bisector of coincident points");
  if (space.kind() == Model::Euclidean) {
    const Vec<N> u = (p - q).normalized();
    return GeodesicHyperplane<N>::affine(space, u, u.dot(0.5 * (p + q)));
  }
  const Vec<N + 1> P = space.lift(p);
  const Vec<N + 1> Q = space.lift(q);
  return GeodesicHyperplane<N>::from_ambient(space, P - Q);
}

// sigma_v(p): the leaf parameter t with p in pi_{v,t}. Closed form in each model
// (the metric projection of p onto gamma_v).
template <int N>
double leaf_coordinate_raw(const SpaceForm<N>& space, const AxisFrame<N>& f,
                           const Vec<N>& p) {
  switch (space.kind()) {
    case Model::Euclidean: return f.direction.template head<N>().dot(p);
    case Model::Spherical: {
      const Vec<N + 1> X = space.lift(p);
      return std::atan2(X.dot(f.direction), X.dot(f.origin));
    }
    case Model::Hyperbolic: {
      const Vec<N + 1> X = space.lift(p);
      return std::atanh(space.amb_dot(X, f.direction) / -space.amb_dot(X, f.origin));
    }
  }
  return 0.0;
}

template <int N>
double leaf_coordinate(const SpaceForm<N>& space, const TangentVector<N>& v,
                       const ChartPoint<N>& p) {
  space.require_domain(p.x, "leaf coordinate argument");
  const AxisFrame<N> f = axis_frame(space, v);
  if (space.kind() == Model::Spherical && space.lift(p.x).dot(f.origin) <= 0.0) {
    throw DomainError("leaf coordinate: point outside the open hemisphere");
  }
  return leaf_coordinate_raw(space, f, p.x);
}

}  // namespace sfstab
