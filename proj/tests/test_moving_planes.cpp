#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sfstab;
using V3 = Vec<3>;

namespace {

const DirectionGrid<3>& grid() {
  static const DirectionGrid<3> g(4);
  return g;
}

struct Sampled {
  RadialSurface<3> s;
  std::vector<SurfaceSample<3>> samples;
  explicit Sampled(RadialSurface<3> surf) : s(std::move(surf)), samples(sample_surface(s, grid())) {}
  MovingPlanes<3> planes(MovingPlanesOptions o = {}) const { return MovingPlanes<3>(s, grid(), samples, o); }
};

RadialSurface<3> sphere_at(const SpaceForm<3>& sp, const V3& c, double r) {
  FamilyParams<3> p;
  p.radius = r;
  return make_surface(sp, p, &c);
}

TEST(CriticalPosition, SphereCenteredOnAxis) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const ChartPoint<3> o = sp.origin();
    const V3 v = V3(1, 2, 2).normalized();
    const TangentVector<3> tv(o, v / sp.conformal_factor(o.x));
    const double c = 0.3;
    const Sampled S(sphere_at(sp, sp.geodesic(o, tv, c).x, 0.7));
    const auto mp = S.planes();
    const auto cp = mp.critical_position(v);
    EXPECT_NEAR(cp.m, c, mp.containment_tolerance()) << model_name(m);
    EXPECT_LE(cp.m - cp.lo, mp.bisection_tolerance());
    EXPECT_TRUE(cp.monotone);
    EXPECT_FALSE(cp.degenerate);
  }
}

TEST(CriticalPosition, EuclideanExamples) {
  SpaceForm<3> E(Model::Euclidean);
  const Sampled ell(chart_ellipsoid(E, V3(2, 1, 1)));
  const auto mp = ell.planes();
  EXPECT_NEAR(mp.critical_position(V3::Unit(0)).m, 0.0, mp.containment_tolerance());
  const Sampled moved(sphere_at(E, V3(0.3, 0, 0), 1.0));
  const auto mp2 = moved.planes();
  EXPECT_NEAR(mp2.critical_position(V3::Unit(0)).m, 0.3, mp2.containment_tolerance());
}

TEST(CriticalPosition, ReflectedCapContainmentAroundCritical) {
  SpaceForm<3> H(Model::Hyperbolic);
  const Sampled S(perturbed_sphere(H, 0.8, 0.1, 2));
  const auto mp = S.planes();
  const V3 v = V3(1, 0.3, 0.2).normalized();
  const auto sigma = mp.leaf_coordinates(v);
  const auto cp = mp.critical_position(v, sigma);
  const double ts = mp.bisection_tolerance();
  EXPECT_GT(mp.min_reflected_margin(v, sigma, cp.m + 10 * ts), -mp.containment_tolerance());
  EXPECT_LT(mp.min_reflected_margin(v, sigma, cp.m - 10 * ts), 0.0);
  // P holds on sampled levels above m_v.
  for (double t = cp.m + 1e-3; t < cp.m + 0.5; t += 0.05) {
    EXPECT_GE(mp.min_reflected_margin(v, sigma, t), -mp.containment_tolerance());
  }
}

TEST(CriticalCap, SphereHasZeroDefectAndPlanesThroughCenter) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const ChartPoint<3> o = sp.origin();
    const V3 center = sp.exp_raw(o.x, V3(0.1, -0.2, 0.15) / sp.conformal_factor(o.x));
    const Sampled S(sphere_at(sp, center, 0.6));
    const auto mp = S.planes();
    for (const V3& v : fibonacci_directions<3>(6)) {
      EXPECT_LE(std::abs(mp.critical_position(v).m - leaf_coordinate(sp, mp.axis(v), ChartPoint<3>(center))),
                1e-6);
    }
    const auto r = mp.critical_cap(V3::Unit(0));
    EXPECT_LE(std::abs(r.plane.signed_distance(sp, center)), 1e-6);
    EXPECT_LE(r.defect, 1e-7) << model_name(m);
    EXPECT_EQ(r.warnings, 0);
    EXPECT_LE(r.max_match_distance, 1e-7);
  }
}

TEST(CriticalCap, PerturbedSphereDefectShrinksWithEps) {
  SpaceForm<3> E(Model::Euclidean);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.08, 0.04, 0.02}) {
    const Sampled S(perturbed_sphere(E, 1.0, eps, 2));
    const auto r = S.planes().critical_cap(V3::Unit(0));
    EXPECT_GT(r.defect, 1e-4);
    EXPECT_LT(r.defect, prev);
    prev = r.defect;
    EXPECT_FALSE(r.component.empty());
    EXPECT_EQ(r.reflected.size(), r.component.size());
  }
}

TEST(CriticalCap, SymmetricEllipsoidHasNoDefect) {
  SpaceForm<3> E(Model::Euclidean);
  const Sampled S(chart_ellipsoid(E, V3(1.05, 1, 1)));
  const auto r = S.planes().critical_cap(V3::Unit(1));
  EXPECT_NEAR(r.position.m, 0.0, 1e-8);
  EXPECT_LE(r.defect, 1e-7);
}

TEST(CriticalCap, Equivariance) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const auto base = perturbed_sphere(sp, 0.7, 0.1, 2);
    const Mat<3> Q = Eigen::AngleAxisd(0.9, V3::Unit(2)).toRotationMatrix();
    const V3 o = sp.origin_coords();
    const Sampled S(base);
    FamilyParams<3> p = base.params();
    const Sampled T(make_surface(sp, p, &o, &Q));
    const V3 v = V3(0.8, 0.6, 0.0);
    const auto a = S.planes().critical_cap(v);
    const auto b = T.planes().critical_cap(Q * v);
    EXPECT_NEAR(a.position.m, b.position.m, 2 * S.planes().bisection_tolerance() + 1e-12);
    EXPECT_NEAR(a.defect, b.defect, 1e-5);
  }
}

TEST(InnerProjection, ConcentricSpheres) {
  SpaceForm<3> E(Model::Euclidean), H(Model::Hyperbolic);
  {
    const auto outer = geodesic_sphere(E, 1.0);
    const V3 p(0, 0.6 * 0.9, 0.8 * 0.9);
    const V3 Np = -p.normalized();
    const auto m = inner_projection(outer, p, Np, 3.0);
    ASSERT_TRUE(m);
    EXPECT_NEAR(m->distance, 0.1, 1e-9);
    EXPECT_LE(m->normal_gap, 1e-8);
  }
  {
    const auto outer = geodesic_sphere(H, 1.0);
    const auto inner = geodesic_sphere(H, 0.99);
    const auto smp = surface_normal(inner, V3(0.6, 0, 0.8));
    const auto m = inner_projection(outer, smp.p, smp.normal, 3.0);
    ASSERT_TRUE(m);
    EXPECT_NEAR(m->distance, 0.01, 1e-6);
    EXPECT_LE(m->normal_gap, 1e-8);
  }
  {
    const auto s = geodesic_sphere(E, 1.0);
    const auto smp = surface_normal(s, V3(0, 1, 0));
    const auto m = inner_projection(s, smp.p, smp.normal, 3.0);
    ASSERT_TRUE(m);
    EXPECT_EQ(m->distance, 0.0);
    EXPECT_LE(m->normal_gap, 1e-9);
  }
}

}  // namespace
