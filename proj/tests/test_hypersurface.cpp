#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sfstab;
using V3 = Vec<3>;
using V2 = Vec<2>;

namespace {

const double kPi = std::numbers::pi;

const DirectionGrid<3>& grid3() {
  static const DirectionGrid<3> g(4);
  return g;
}

TEST(Surface, FamilyRadii) {
  SpaceForm<3> E(Model::Euclidean), S(Model::Spherical);
  const auto sph = geodesic_sphere(E, 1.0);
  EXPECT_EQ(sph.radius(V3(0.6, 0.8, 0)), 1.0);
  const auto ell = chart_ellipsoid(E, V3(2, 1, 1));
  const V3 u = V3(1, 1, 1).normalized();
  EXPECT_NEAR(ell.radius(u), 1.0 / std::sqrt(u[0] * u[0] / 4 + u[1] * u[1] + u[2] * u[2]), 1e-15);
  const auto per = perturbed_sphere(S, 1.0, 0.05, 2);
  double lo = 10, hi = 0;
  for (const auto& d : grid3().dirs()) {
    lo = std::min(lo, per.radius(d));
    hi = std::max(hi, per.radius(d));
  }
  EXPECT_GE(lo, 0.95);
  EXPECT_LE(hi, 1.05);
  EXPECT_LT(hi, kPi / 2);
}

TEST(Surface, InvalidParameters) {
  SpaceForm<3> S(Model::Spherical), H(Model::Hyperbolic);
  EXPECT_THROW(geodesic_sphere(S, 1.6), DomainError);
  EXPECT_THROW(geodesic_sphere(S, -1.0), DomainError);
  EXPECT_THROW(perturbed_sphere(S, 1.5, 0.1, 2), DomainError);
  EXPECT_THROW(chart_ellipsoid(H, V3(0.5, 0.5, 1.2)), DomainError);
  EXPECT_THROW(perturbed_sphere(S, 1.0, 0.1, 7), std::invalid_argument);
}

TEST(Surface, NonEuclideanEllipsoidLiesOnChartEllipsoid) {
  for (Model m : {Model::Hyperbolic, Model::Spherical}) {
    SpaceForm<3> sp(m);
    const V3 axes(0.5, 0.4, 0.3);
    const auto ell = chart_ellipsoid(sp, axes);
    const DirectionGrid<3> g(1);
    for (const auto& u : g.dirs()) {
      const V3 y = ell.point(u) - sp.origin_coords();
      EXPECT_NEAR(y.cwiseQuotient(axes).squaredNorm(), 1.0, 1e-13);
    }
  }
}

TEST(Surface, Contains) {
  SpaceForm<3> E(Model::Euclidean);
  const auto sph = geodesic_sphere(E, 1.0);
  EXPECT_EQ(sph.contains(ChartPoint<3>(V3(0.5, 0, 0))), Containment::Inside);
  EXPECT_EQ(sph.contains(ChartPoint<3>(sph.point(V3(0, 0.6, 0.8)))), Containment::Boundary);
  const auto ell = chart_ellipsoid(E, V3(2, 1, 1));
  EXPECT_EQ(ell.contains(ChartPoint<3>(V3(0, 1.5, 0))), Containment::Outside);
  EXPECT_EQ(ell.contains(ChartPoint<3>(V3::Zero())), Containment::Inside);
}

TEST(Curvature, SpheresInEachModel) {
  struct Case {
    Model m;
    double r;
    double kappa;
  };
  for (const Case c : {Case{Model::Euclidean, 2.0, 0.5}, Case{Model::Hyperbolic, 1.0, 1.0 / std::tanh(1.0)},
                       Case{Model::Spherical, 0.5, 1.0 / std::tan(0.5)}}) {
    SpaceForm<3> sp(c.m);
    const auto s = geodesic_sphere(sp, c.r);
    for (const V3& u : {V3(1, 0, 0), V3(0, 0, 1), V3(0, 0, -1), V3(1, 2, 3).normalized()}) {
      const auto smp = principal_curvatures(s, u);
      EXPECT_NEAR(smp.kappa[0], c.kappa, 1e-6) << model_name(c.m);
      EXPECT_NEAR(smp.kappa[1], c.kappa, 1e-6) << model_name(c.m);
      EXPECT_NEAR(sp.conformal_factor(smp.p) * smp.normal.norm(), 1.0, 1e-12);
      EXPECT_GT(smp.nu.dot(sp.log_raw(smp.p, s.base())), 0.0);
    }
  }
}

TEST(Curvature, TwoDimensionalCircles) {
  SpaceForm<2> H(Model::Hyperbolic);
  const auto s = geodesic_sphere(H, 0.7);
  const auto smp = principal_curvatures(s, V2(0.6, 0.8));
  EXPECT_NEAR(smp.kappa[0], 1.0 / std::tanh(0.7), 1e-6);
}

TEST(Curvature, EllipsoidMatchesClosedForm) {
  SpaceForm<3> E(Model::Euclidean);
  const V3 axes(2, 1, 1.5);
  const auto ell = chart_ellipsoid(E, axes);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const V3 u = testutil::gaussian<3>(rng).normalized();
    const auto smp = principal_curvatures(ell, u);
    const Eigen::Vector2d ref = oracle::ellipsoid_curvatures(axes, smp.p);
    EXPECT_NEAR(smp.kappa[0], ref[0], 1e-5);
    EXPECT_NEAR(smp.kappa[1], ref[1], 1e-5);
  }
}

TEST(Curvature, EllipsoidEquatorMean) {
  SpaceForm<3> E(Model::Euclidean);
  const auto ell = chart_ellipsoid(E, V3(2, 1, 1));
  const auto smp = principal_curvatures(ell, V3(0, 1, 0));
  EXPECT_NEAR(curvature_value(CurvatureOperator::mean(), smp.kappa), 0.625, 1e-7);
}

TEST(Curvature, IsometryInvariance) {
  std::mt19937_64 rng(9);
  for (Model m : testutil::kModels) {
    SpaceForm<3> sp(m);
    FamilyParams<3> p;
    p.family = Family::PerturbedSphere;
    p.radius = 0.6;
    p.eps = 0.1;
    const auto s0 = make_surface(sp, p);
    // Move the base and rotate the frame by an isometry.
    ChartIsometry<3> phi(m);
    const V3 o = sp.origin_coords();
    phi.reflect(make_hyperplane(sp, TangentVector<3>(o, V3(0.3, 0.4, 0.5).normalized() / sp.conformal_factor(o)), 0.35));
    phi.reflect(hyperplane_through_origin(sp, V3(1, -1, 0.2)));
    const auto [b1, dummy] = phi.apply_tangent_raw(o, V3::Zero());
    Mat<3> F;
    for (int i = 0; i < 3; ++i) {
      const V3 w = phi.apply_tangent_raw(o, V3::Unit(i)).second;
      F.col(i) = w.normalized();
    }
    const auto s1 = make_surface(sp, p, &b1, &F);
    for (int k = 0; k < 10; ++k) {
      const V3 u = testutil::gaussian<3>(rng).normalized();
      const auto a = principal_curvatures(s0, u);
      const auto b = principal_curvatures(s1, u);
      EXPECT_NEAR(sp.dist(phi.apply_raw(a.p), b.p), 0.0, 1e-9);
      EXPECT_NEAR(a.kappa[0], b.kappa[0], 1e-6);
      EXPECT_NEAR(a.kappa[1], b.kappa[1], 1e-6);
      EXPECT_NEAR(a.area_element, b.area_element, 1e-6 * a.area_element);
    }
  }
}

TEST(Operators, Values) {
  const auto mean = CurvatureOperator::mean();
  EXPECT_EQ(curvature_value(mean, Vec<2>(1, 1)), 1.0);
  EXPECT_EQ(curvature_value(mean, Vec<2>(0.25, 1)), 0.625);
  EXPECT_NEAR(curvature_value(CurvatureOperator::symmetric_root(2), Vec<2>(3, 3)), 3.0, 1e-15);
  EXPECT_THROW(curvature_value(CurvatureOperator::symmetric_root(2), Vec<2>(-1, 2)), DomainError);
  EXPECT_THROW(curvature_value(mean, Vec<2>(2, 1)), std::invalid_argument);
  EXPECT_EQ(CurvatureOperator::parse("hr:2").order(), 2);
  EXPECT_THROW(CurvatureOperator::parse("gauss"), std::invalid_argument);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-2, 5);
  for (int i = 0; i < 1000; ++i) {
    Vec<3> k(U(rng), U(rng), U(rng));
    std::sort(k.data(), k.data() + 3);
    EXPECT_EQ(curvature_value(mean, k), curvature_value(CurvatureOperator::symmetric_root(1), k));
  }
}

TEST(Operators, Admissibility) {
  EXPECT_TRUE(check_admissibility(CurvatureOperator::symmetric_root(2), 2, 3).passed());
  EXPECT_TRUE(check_admissibility(CurvatureOperator::symmetric_root(3), 3, 3).passed());
  const auto convex = CurvatureOperator::custom([](const Eigen::VectorXd& k) { return k.squaredNorm(); }, "sum of squares");
  const auto rep = check_admissibility(convex, 2, 3);
  EXPECT_EQ(rep.positivity_failures, 0);
  EXPECT_LT(rep.min_concavity_margin, -1e-3);
}

TEST(Summary, SphereAndEllipsoid) {
  SpaceForm<3> E(Model::Euclidean);
  const auto mean = CurvatureOperator::mean();
  const auto sph = osc_curvature(geodesic_sphere(E, 1.0), mean, grid3());
  EXPECT_LT(sph.osc, 1e-8);
  EXPECT_NEAR(sph.area, 4 * kPi, 4 * kPi * 1e-3);
  EXPECT_NEAR(sph.touching_radius, 1.0, 1e-6);
  const auto sph2 = osc_curvature(geodesic_sphere(E, 2.0), mean, grid3(), false);
  EXPECT_NEAR(sph2.area / sph.area, 4.0, 1e-9);

  const auto ell = osc_curvature(chart_ellipsoid(E, V3(2, 1, 1)), mean, grid3());
  EXPECT_NEAR(ell.min, 0.625, 1e-3);
  EXPECT_NEAR(ell.max, 2.0, 1e-6);
  EXPECT_NEAR(ell.osc, 1.375, 1e-3);
  EXPECT_NEAR(ell.touching_radius, 0.5, 0.01);

  const auto spheroid = osc_curvature(chart_ellipsoid(E, V3(1.05, 1, 1)), mean, grid3(), false);
  EXPECT_NEAR(spheroid.osc, 0.1, 0.01);
}

TEST(Summary, SphericalSphereArea) {
  SpaceForm<3> S(Model::Spherical);
  for (double t : {0.3, 0.8, 1.2}) {
    const auto s = osc_curvature(geodesic_sphere(S, t), CurvatureOperator::mean(), grid3(), false);
    EXPECT_NEAR(s.area, 4 * kPi * std::sin(t) * std::sin(t), 1e-3 * s.area);
    EXPECT_LT(s.osc, 1e-8);
  }
}

TEST(Summary, RefinementChangesOscLittle) {
  SpaceForm<3> E(Model::Euclidean);
  const auto ell = chart_ellipsoid(E, V3(1.2, 1, 0.9));
  const auto a = osc_curvature(ell, CurvatureOperator::mean(), DirectionGrid<3>(4), false);
  const auto b = osc_curvature(ell, CurvatureOperator::mean(), DirectionGrid<3>(5), false);
  EXPECT_LT(std::abs(a.osc - b.osc), 1e-3);
}

TEST(Grid, WeightsAndLookup) {
  const auto& g = grid3();
  double w = 0;
  for (std::size_t i = 0; i < g.size(); ++i) w += g.weight(i);
  EXPECT_NEAR(w, 4 * kPi, 1e-12);
  EXPECT_EQ(DirectionGrid<3>(5).size(), 10242u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(g.dir(g.nearest(V3::Unit(i))).dot(V3::Unit(i)), 1.0, 1e-15);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const V3 u = testutil::gaussian<3>(rng).normalized();
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i) {
      if (g.dir(i).dot(u) > g.dir(best).dot(u)) best = i;
    }
    EXPECT_EQ(static_cast<std::size_t>(g.nearest(u)), best);
  }
  const DirectionGrid<2> c(2000);
  EXPECT_EQ(c.dir(500), V2(0, 1));
  EXPECT_EQ(c.nearest(V2(-1, 0.001)), 1000);
}

TEST(Export, SamplesCsv) {
  SpaceForm<3> E(Model::Euclidean);
  const DirectionGrid<3> g(1);
  const auto op = CurvatureOperator::mean();
  const auto smp = sample_surface(geodesic_sphere(E, 1.0), g, &op);
  std::ostringstream os;
  write_samples_csv(os, smp);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "index,u_x,u_y,u_z,p_x,p_y,p_z,nu_x,nu_y,nu_z,N_x,N_y,N_z,kappa_1,kappa_2,H_S");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), static_cast<long>(g.size() + 1));
}

}  // namespace
