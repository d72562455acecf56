#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sfstab;
using V3 = Vec<3>;

namespace {

const DirectionGrid<3>& grid() {
  static const DirectionGrid<3> g(4);
  return g;
}

double worst(const LemmaReport& r, const std::string& tag) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : r.checks) {
    if (c.tag == tag) m = std::min(m, c.margin);
  }
  return m;
}

double largest_lhs(const LemmaReport& r, const std::string& tag) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& c : r.checks) {
    if (c.tag == tag) m = std::max(m, c.lhs);
  }
  return m;
}

TEST(GraphRadius, PerModel) {
  EXPECT_DOUBLE_EQ(graph_radius(Model::Euclidean, 0.7), 0.7);
  EXPECT_DOUBLE_EQ(graph_radius(Model::Spherical, 0.7), 0.7 / std::numbers::pi);
  const double e = std::exp(1.0);
  const double a = (e - 1.0 / e) / (2.0 * e);
  EXPECT_NEAR(graph_radius(Model::Hyperbolic, 1.0), (1 - a) * a, 1e-15);
  EXPECT_NEAR(graph_radius(Model::Hyperbolic, 1.0), 0.2454, 1e-4);
}

TEST(RoundMetric, EquatorExample) {
  // d(0, e_1) by quadrature of 2/(1+t^2) along the radial line.
  const double d = oracle::segment_length(oracle::Kind::S, V3::Zero().eval(), V3::Unit(0).eval());
  EXPECT_NEAR(d, std::numbers::pi / 2, 1e-9);
  const auto c = round_metric_checks<3>(V3::Zero(), V3::Unit(0), 1.0);
  EXPECT_NEAR(c[0].margin, std::numbers::pi / 2 - 1.0, 1e-12);
  EXPECT_NEAR(c[1].margin, std::numbers::pi - std::numbers::pi / 2, 1e-12);
}

TEST(RoundMetric, RandomPairs) {
  const auto r = verify_round_metric<3>(7, 10000, 1.5);
  EXPECT_EQ(r.checks.size(), 20000u);
  EXPECT_EQ(r.failures(), 0u);
  EXPECT_GE(r.min_margin(CheckKind::ConstantFree), 0.0);
}

TEST(HyperbolicDistance, FittedConstantsStable) {
  const auto r = verify_hyperbolic_distance<3>(11, 4000, 1.0);
  EXPECT_EQ(r.failures(), 0u);
  ASSERT_EQ(r.constants.size(), 2u);
  for (const auto& c : r.constants) EXPECT_TRUE(c.stable()) << c.tag << " " << c.relative_change();
  // The vertical rays bracket the ratio d / |q - e_n|.
  EXPECT_GE(r.constants[0].value, 1.0 / (std::exp(1.0) - 1.0) - 1e-12);
  EXPECT_LE(r.constants[1].value, 1.0 / (1.0 - std::exp(-1.0)) + 1e-12);
}

TEST(GraphBounds, UnitSphereIsExtremal) {
  SpaceForm<3> E(Model::Euclidean);
  const auto s = geodesic_sphere(E, 1.0);
  const auto smp = sample_surface(s, grid());
  const auto r = verify_graph_bounds(s, smp, 1.0, 6, 3);
  EXPECT_EQ(r.skipped, 0u);
  EXPECT_EQ(r.checks.size(), 6u * 8u * 9u * 2u);
  // The sphere graph makes the height bound an equality.
  for (const auto& c : r.checks) {
    if (c.tag == "graph.height") {
      EXPECT_NEAR(c.margin, 0.0, 1e-9) << c.witness;
    } else {
      EXPECT_NEAR(c.margin, 0.0, 1e-6) << c.witness;
    }
  }
}

TEST(GraphBounds, PerturbedSpheresAllModels) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const auto s = perturbed_sphere(sp, 0.7, 0.1, 2);
    const auto smp = sample_surface(s, grid());
    const double rho = touching_ball_radius(s, smp);
    const auto r = verify_graph_bounds(s, smp, rho, 8, 5);
    EXPECT_EQ(r.failures(), 0u) << model_name(m) << " worst " << worst(r, "graph.height");
    EXPECT_GT(r.checks.size(), 500u);
  }
}

TEST(AreaGrowth, FittedConstantStable) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const auto s = perturbed_sphere(sp, 0.7, 0.05, 2);
    const auto smp = sample_surface(s, grid());
    const double rho = touching_ball_radius(s, smp);
    const auto r = verify_area_growth(s, smp, grid(), rho, 40, 9);
    EXPECT_EQ(r.failures(), 0u);
    ASSERT_EQ(r.constants.size(), 1u);
    EXPECT_TRUE(r.constants[0].stable()) << model_name(m) << " " << r.constants[0].relative_change();
    // Small intrinsic balls are nearly flat discs.
    EXPECT_GT(r.constants[0].value, 0.5 * std::numbers::pi);
    EXPECT_LT(r.constants[0].value, 1.2 * std::numbers::pi);
  }
}

TEST(NormalStability, SphereRate) {
  SpaceForm<3> E(Model::Euclidean);
  const double r0 = 0.8;
  const auto s = geodesic_sphere(E, r0);
  const auto smp = sample_surface(s, grid());
  double C = 0.0;
  const auto r = verify_normal_stability(s, smp, grid(), r0, 60, 1, &C);
  EXPECT_NEAR(C, 1.0 / r0, 0.02 / r0);
  EXPECT_EQ(r.failures(), 0u);
  EXPECT_TRUE(r.constants_stable());
}

TEST(NormalStability, EllipsoidAndCurvedModels) {
  SpaceForm<3> E(Model::Euclidean);
  {
    const auto s = chart_ellipsoid(E, V3(2, 1, 1));
    const auto smp = sample_surface(s, grid());
    double C = 0.0;
    const auto r = verify_normal_stability(s, smp, grid(), touching_ball_radius(s, smp), 80, 2, &C);
    EXPECT_LE(C, 2.2);
    EXPECT_EQ(r.failures(), 0u);
  }
  for (Model m : {Model::Hyperbolic, Model::Spherical}) {
    SpaceForm<3> sp(m);
    const auto s = perturbed_sphere(sp, 0.7, 0.05, 2);
    const auto smp = sample_surface(s, grid());
    const auto r = verify_normal_stability(s, smp, grid(), touching_ball_radius(s, smp), 60, 3);
    EXPECT_EQ(r.failures(), 0u) << model_name(m);
    EXPECT_TRUE(r.constants_stable()) << model_name(m);
  }
}

TEST(NormalStability, CoincidentPairIsTrivial) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const auto smp = principal_curvatures(geodesic_sphere(sp, 0.5), V3(0.3, 0.4, 0.5).normalized());
    const V3 t = sp.transport_raw(smp.p, smp.p, smp.normal);
    const double h = sp.conformal_factor(smp.p);
    EXPECT_NEAR(h * h * smp.normal.dot(t), 1.0, 1e-12);
    EXPECT_NEAR(h * (smp.normal - t).norm(), 0.0, 1e-15);
  }
}

TEST(CrossProductIdentity, RandomPairs) {
  const auto r = verify_cross_product_identity(13, 1000);
  EXPECT_EQ(r.checks.size(), 1000u);
  EXPECT_LE(largest_lhs(r, "projection.cross_identity"), 1e-12);
}

TEST(ProjectionCurvature, SphereCuts) {
  SpaceForm<3> E(Model::Euclidean);
  const double r0 = 0.8;
  const auto s = geodesic_sphere(E, r0);
  const auto smp = sample_surface(s, grid());
  const ChartIsometry<3> id(Model::Euclidean);
  for (double c : {0.0, 0.3}) {
    const auto pl = GeodesicHyperplane<3>::affine(E, V3(0.2, 0.1, 1.0), c * V3(0.2, 0.1, 1.0).norm());
    const auto r = verify_projection_curvature(s, smp, grid(), pl, id, 200);
    EXPECT_EQ(r.failures(), 0u);
    ASSERT_GT(r.checks.size(), 100u);
    const double kp = 1.0 / std::sqrt(r0 * r0 - c * c);
    for (const auto& x : r.checks) {
      if (x.tag == "projection.sandwich.upper") {
        EXPECT_NEAR(x.lhs, kp, 1e-6);
        EXPECT_NEAR(x.margin, 0.0, 1e-6);
      }
      if (x.tag == "projection.sandwich.lower") {
        EXPECT_NEAR(x.margin, 0.0, 1e-6);
      }
      if (x.tag == "projection.identity") {
        EXPECT_LE(x.lhs, 1e-9);
      }
    }
  }
}

TEST(ProjectionCurvature, CriticalCapsAllModels) {
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    const auto s = perturbed_sphere(sp, 0.7, 0.1, 2);
    const auto smp = sample_surface(s, grid());
    MovingPlanesOptions o;
    o.compute_defect = false;
    o.compute_matches = false;
    const MovingPlanes<3> mp(s, grid(), smp, o);
    const auto cap = mp.critical_cap(V3(1, 0.2, 0.1).normalized());
    const auto r = verify_projection_curvature(s, smp, grid(), cap.plane, tangency_chart(s, cap, smp), 200);
    // The stated bound ignores the curvature of pi in the chart. Spherical
    // planes off the origin are chart spheres, so there it is allowed to fail;
    // the check with the plane term restored must hold everywhere.
    for (const auto& x : r.checks) {
      const bool stated = x.tag == "projection.bound" || x.tag == "projection.bound.sphere_plane";
      if (stated && m == Model::Spherical) continue;
      if (!x.passed()) ADD_FAILURE() << model_name(m) << " " << x.tag << " lhs " << x.lhs << " rhs " << x.rhs << " " << x.witness;
    }
    std::size_t bounds = 0;
    for (const auto& x : r.checks) bounds += x.tag == "projection.bound";
    EXPECT_GT(bounds, 50u) << model_name(m);
    EXPECT_GE(worst(r, "projection.bound.with_plane_term"), -1e-6) << model_name(m);
    EXPECT_LE(largest_lhs(r, "projection.identity"), 1e-8);
  }
}

TEST(ChecksCsv, HeaderAndRows) {
  std::ostringstream os;
  write_checks_csv(os, {make_check("t", CheckKind::ConstantFree, 1.0, 2.0, "p=(0 0 0)")});
  EXPECT_EQ(os.str(), "tag,kind,lhs,rhs,margin,passed,witness\nt,constant_free,1,2,1,1,\"p=(0 0 0)\"\n");
}

}  // namespace
