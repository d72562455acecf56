#pragma once

#include "sfstab/space_form.hpp"

#include <functional>
#include <memory>
#include <string>

namespace sfstab {

enum class Family { GeodesicSphere, ChartEllipsoid, PerturbedSphere };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::GeodesicSphere: return "geodesic_sphere";
    case Family::ChartEllipsoid: return "chart_ellipsoid";
    case Family::PerturbedSphere: return "perturbed_sphere";
  }
  return "unknown";
}

inline Family parse_family(std::string_view s) {
  if (s == "geodesic_sphere" || s == "sphere") return Family::GeodesicSphere;
  if (s == "chart_ellipsoid" || s == "ellipsoid" || s == "spheroid") return Family::ChartEllipsoid;
  if (s == "perturbed_sphere" || s == "perturbed") return Family::PerturbedSphere;
  throw std::invalid_argument("unknown surface family '" + std::string(s) + "'");
}

template <int N>
struct FamilyParams {
  Family family = Family::GeodesicSphere;
  double radius = 1.0;          // sphere radius / perturbation base radius
  Vec<N> axes = Vec<N>::Ones();  // ellipsoid semi-axes in chart units along the frame
  double eps = 0.0;
  int harmonic = 2;
};

enum class Containment { Inside, Boundary, Outside };

// Star-shaped closed hypersurface S = {exp_base(rho(u) e(u))} where u runs over
// the unit sphere of R^N and e(u) = frame * u / h(base) is the corresponding
// metric-unit tangent vector at base.
template <int N>
class RadialSurface {
 public:
  using V = Vec<N>;
  using RadiusFn = std::function<double(const V&)>;

  RadialSurface(SpaceForm<N> space, V base, Mat<N> frame, RadiusFn rho, FamilyParams<N> params)
      : space_(space), base_(base), frame_(frame), rho_(std::move(rho)), params_(params) {
    space_.require_domain(base_, "surface base point");
    if ((frame_.transpose() * frame_ - Mat<N>::Identity()).norm() > 1e-10) {
      throw std::invalid_argument("surface frame must be orthonormal");
    }
    hb_ = space_.conformal_factor(base_);
  }

  const SpaceForm<N>& space() const { return space_; }
  const V& base() const { return base_; }
  const Mat<N>& frame() const { return frame_; }
  const FamilyParams<N>& params() const { return params_; }

  double radius(const V& u) const { return rho_(u); }

  // Chart point of S in direction u (unit).
  V point(const V& u) const { return space_.exp_raw(base_, (rho_(u) / hb_) * (frame_ * u)); }

  // Direction coordinates of x as seen from base, and the distance.
  std::pair<V, double> polar(const V& x) const {
    const V w = space_.log_raw(base_, x);
    const double n = w.norm();
    if (n == 0.0) return {V::Unit(0), 0.0};
    return {frame_.transpose() * (w / n), space_.dist(base_, x)};
  }

  // rho(u_x) - d(base, x): positive inside, negative outside.
  double margin(const V& x) const {
    const auto [u, d] = polar(x);
    if (d == 0.0) return rho_(u);
    return rho_(u) - d;
  }

  double contains_tolerance(double scale) const { return 1e-9 * (1.0 + scale); }

  Containment contains(const ChartPoint<N>& x, double scale = 1.0) const {
    space_.require_domain(x.x, "containment query");
    const double m = margin(x.x);
    const double tol = contains_tolerance(scale);
    if (std::abs(m) <= tol) return Containment::Boundary;
    return m > 0 ? Containment::Inside : Containment::Outside;
  }

 private:
  SpaceForm<N> space_;
  V base_;
  Mat<N> frame_;
  RadiusFn rho_;
  FamilyParams<N> params_;
  double hb_ = 1.0;
};

namespace detail {

template <int N>
double harmonic_value(int harmonic, const Vec<N>& u) {
  switch (harmonic) {
    case 1: return u[0];
    case 2: return u[0] * u[1];
    case 3:
      if constexpr (N >= 3) {
        return u[0] * u[1] * u[2];
      } else {
        return u[0] * u[0] * u[0] - 3.0 * u[0] * u[1] * u[1];
      }
  }
  throw std::invalid_argument("harmonic index must be 1, 2 or 3");
}

// Geodesic radius at which exp_base(t e(u)) meets the chart ellipsoid
// sum ((x - base) . f_i / a_i)^2 = 1.
template <int N>
double ellipsoid_radius(const SpaceForm<N>& sp, const Vec<N>& base, const Mat<N>& frame,
                        const Vec<N>& axes, const Vec<N>& u) {
  const double hb = sp.conformal_factor(base);
  const Vec<N> dir = frame * u / hb;
  auto F = [&](double t) {
    const Vec<N> y = frame.transpose() * (sp.exp_raw(base, t * dir) - base);
    return y.cwiseQuotient(axes).squaredNorm() - 1.0;
  };
  // The Euclidean polar radius brackets the root from either side within a
  // factor that depends on h; expand until the sign changes.
  double lo = 0.0;
  double hi = hb / u.cwiseQuotient(axes).norm();
  const double cap = sp.kind() == Model::Spherical ? std::numbers::pi / 2 : 50.0;
  hi = std::min(hi, 0.5 * cap);
  while (F(hi) < 0.0) {
    lo = hi;
    hi = std::min(2.0 * hi, cap);
    if (lo >= cap) throw DomainError("chart ellipsoid leaves the model domain");
  }
  double flo = F(lo), fhi = F(hi);
  // Regula falsi (Illinois) to machine precision; curvature needs smooth radii.
  for (int it = 0; it < 200; ++it) {
    const double t = (lo * fhi - hi * flo) / (fhi - flo);
    const double ft = F(t);
    if (ft == 0.0 || hi - lo <= 4e-16 * hi) return t;
    if ((ft < 0) == (flo < 0)) {
      lo = t;
      flo = ft;
      fhi *= 0.5;
    } else {
      hi = t;
      fhi = ft;
      flo *= 0.5;
    }
    if (std::abs(ft) < 1e-16) return t;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Surface families centered at a base point (default: the chart origin) with
// the identity frame.
template <int N>
RadialSurface<N> make_surface(const SpaceForm<N>& space, const FamilyParams<N>& p,
                              const Vec<N>* base_in = nullptr, const Mat<N>* frame_in = nullptr) {
  const Vec<N> base = base_in ? *base_in : space.origin_coords();
  const Mat<N> frame = frame_in ? *frame_in : Mat<N>::Identity();
  const double max_rho = space.kind() == Model::Spherical ? std::numbers::pi / 2 - 1e-6
                                                          : std::numeric_limits<double>::infinity();
  typename RadialSurface<N>::RadiusFn rho;
  switch (p.family) {
    case Family::GeodesicSphere: {
      if (!(p.radius > 0.0) || !(p.radius < max_rho)) throw DomainError("sphere radius out of range");
      const double r = p.radius;
      rho = [r](const Vec<N>&) { return r; };
      break;
    }
    case Family::PerturbedSphere: {
      if (!(p.radius > 0.0)) throw DomainError("perturbed sphere radius must be positive");
      if (!(std::abs(p.eps) < 1.0)) throw DomainError("perturbation amplitude must be below 1");
      if (!(p.radius * (1.0 + std::abs(p.eps)) < max_rho)) {
        throw DomainError("perturbed sphere leaves the open hemisphere");
      }
      detail::harmonic_value<N>(p.harmonic, Vec<N>::Unit(0));
      const double r = p.radius, e = p.eps;
      const int k = p.harmonic;
      rho = [r, e, k](const Vec<N>& u) { return r * (1.0 + e * detail::harmonic_value<N>(k, u)); };
      break;
    }
    case Family::ChartEllipsoid: {
      if (!(p.axes.minCoeff() > 0.0)) throw DomainError("ellipsoid axes must be positive");
      const Vec<N> axes = p.axes;
      if (space.kind() == Model::Euclidean) {
        rho = [axes](const Vec<N>& u) { return 1.0 / u.cwiseQuotient(axes).norm(); };
      } else {
        if (space.kind() == Model::Hyperbolic) {
          const Vec<N> f = frame.transpose() * Vec<N>::Unit(N - 1);
          const double reach = axes.cwiseProduct(f).norm();
          if (!(reach < base[N - 1])) throw DomainError("chart ellipsoid crosses the half-space boundary");
        } else {
          if (!(base.norm() + axes.maxCoeff() < 1.0 - 1e-6)) {
            throw DomainError("chart ellipsoid leaves the open hemisphere");
          }
        }
        SpaceForm<N> sp = space;
        rho = [sp, base, frame, axes](const Vec<N>& u) {
          return detail::ellipsoid_radius<N>(sp, base, frame, axes, u);
        };
      }
      break;
    }
  }
  RadialSurface<N> s(space, base, frame, std::move(rho), p);
  return s;
}

template <int N>
RadialSurface<N> geodesic_sphere(const SpaceForm<N>& space, double r0) {
  FamilyParams<N> p;
  p.family = Family::GeodesicSphere;
  p.radius = r0;
  return make_surface(space, p);
}

template <int N>
RadialSurface<N> chart_ellipsoid(const SpaceForm<N>& space, const Vec<N>& axes) {
  FamilyParams<N> p;
  p.family = Family::ChartEllipsoid;
  p.axes = axes;
  return make_surface(space, p);
}

template <int N>
RadialSurface<N> perturbed_sphere(const SpaceForm<N>& space, double r0, double eps, int harmonic) {
  FamilyParams<N> p;
  p.family = Family::PerturbedSphere;
  p.radius = r0;
  p.eps = eps;
  p.harmonic = harmonic;
  return make_surface(space, p);
}

}  // namespace sfstab
