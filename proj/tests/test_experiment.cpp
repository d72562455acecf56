#include <gtest/gtest.h>

#include "test_util.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace sfstab;
using nlohmann::json;
using V3 = Vec<3>;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json{{"schema", "sfstab.experiment.v1"}, {"family", "ellipsoid"}, {"eps", {0.05}}};
}

std::string config_error_key(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sfstab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

ExperimentConfig small(Family f, std::vector<double> eps) {
  ExperimentConfig c;
  c.family = f;
  c.eps = std::move(eps);
  c.grid_resolution = 4;
  c.directions = 12;
  c.radial_nodes = 24;
  return c;
}

TEST(Config, Defaults) {
  const auto c = parse_config(minimal());
  ASSERT_EQ(c.models.size(), 1u);
  EXPECT_EQ(c.models[0], Model::Euclidean);
  EXPECT_EQ(c.family, Family::ChartEllipsoid);
  EXPECT_EQ(c.operators, std::vector<std::string>{"mean"});
  EXPECT_EQ(c.eps_values(), std::vector<double>{0.05});
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, FullDocument) {
  json j = minimal();
  j["models"] = {"hyperbolic", "S"};
  j["family"] = "perturbed";
  j["operator"] = {"mean", "hr:2"};
  j["seed"] = 42;
  j["tol_scale"] = 2.0;
  j["center_offset"] = {0.1, 0.0, 0.0};
  const auto c = parse_config(j);
  EXPECT_EQ(c.models, (std::vector<Model>{Model::Hyperbolic, Model::Spherical}));
  EXPECT_EQ(c.family, Family::PerturbedSphere);
  EXPECT_EQ(c.operators.size(), 2u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.tol_scale, 2.0);
  EXPECT_DOUBLE_EQ(c.center_offset[0], 0.1);
}

TEST(Config, ErrorsNameTheKey) {
  json j = minimal();
  j["bogus"] = 1;
  EXPECT_EQ(config_error_key(j), "bogus");
  j = minimal();
  j["schema"] = "v0";
  EXPECT_EQ(config_error_key(j), "schema");
  j = minimal();
  j.erase("schema");
  EXPECT_EQ(config_error_key(j), "schema");
  j = minimal();
  j["eps"] = {-0.1};
  EXPECT_EQ(config_error_key(j), "eps");
  j = minimal();
  j.erase("eps");
  EXPECT_EQ(config_error_key(j), "eps");
  j = minimal();
  j["models"] = {"klein"};
  EXPECT_EQ(config_error_key(j), "models");
  j = minimal();
  j["operator"] = "hr:5";
  EXPECT_EQ(config_error_key(j), "operator");
  j = minimal();
  j["grid_resolution"] = "fine";
  EXPECT_EQ(config_error_key(j), "grid_resolution");
  j = minimal();
  j["seed"] = -3;
  EXPECT_EQ(config_error_key(j), "seed");
  EXPECT_EQ(config_error_key(json::array()), "<root>");
}

TEST(Config, SpheresIgnoreEps) {
  json j{{"schema", "sfstab.experiment.v1"}, {"family", "sphere"}};
  EXPECT_EQ(parse_config(j).eps_values(), std::vector<double>{0.0});
}

TEST(Sweep, SpheroidRowMatchesClosedForm) {
  const auto t = sweep_family(small(Family::ChartEllipsoid, {0.05}), Model::Euclidean, "mean", 4);
  ASSERT_EQ(t.rows.size(), 1u);
  const auto& r = t.rows[0].report;
  ASSERT_TRUE(r.valid) << r.failed_stage;
  const V3 axes(1.05, 1, 1);
  const auto eq = oracle::ellipsoid_curvatures(axes, V3(0, 1, 0));
  const auto pole = oracle::ellipsoid_curvatures(axes, V3(1.05, 0, 0));
  const double osc = std::abs(eq.sum() - pole.sum()) / 2;
  EXPECT_NEAR(r.spread(), 0.05, 1e-6);
  EXPECT_NEAR(r.osc, osc, 1e-6);
  EXPECT_NEAR(r.ratio, 0.05 / osc, 1e-3);
  EXPECT_NEAR(r.ratio, 0.5, 0.05);
}

TEST(Sweep, ZeroEpsRowIsUndefined) {
  const auto t = sweep_family(small(Family::ChartEllipsoid, {0.0, 0.02}), Model::Euclidean, "mean", 4);
  std::ostringstream os;
  write_sweep_csv(os, t, 5);
  std::istringstream in(os.str());
  std::string header, cols, row0, row1;
  std::getline(in, header);
  std::getline(in, cols);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "# seed=5 schema=sfstab.experiment.v1 grid_resolution=4");
  EXPECT_EQ(cols.substr(0, 60), "model,family,eps,osc,r,R,R_minus_r,ratio,maxdist,psi_sup,psi");
  EXPECT_NE(row0.find(",undefined,"), std::string::npos);
  EXPECT_EQ(row1.find("undefined"), std::string::npos);
  EXPECT_EQ(row1.substr(0, 30), "euclidean,chart_ellipsoid,0.02");
  EXPECT_EQ(to_json(t.rows[0].report)["ratio"], json());
  EXPECT_FALSE(to_json(t.rows[0].report)["ratio_defined"].get<bool>());
}

TEST(Sweep, FailingRowIsRecordedAndSweepContinues) {
  ExperimentConfig c = small(Family::PerturbedSphere, {0.05, 0.5});
  c.radius = 1.2;  // 1.2 * 1.5 leaves the hemisphere
  const auto t = sweep_family(c, Model::Spherical, "mean", 4);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(t.rows[0].report.valid);
  EXPECT_FALSE(t.rows[1].report.valid);
  EXPECT_EQ(t.rows[1].report.failed_stage, "surface");
  const auto p = check_pipeline({t});
  EXPECT_FALSE(p.passed);
  EXPECT_NE(p.detail.find("surface"), std::string::npos);
  std::ostringstream os;
  write_sweep_csv(os, t, 1);
  EXPECT_NE(os.str().find("failed:surface"), std::string::npos);
}

TEST(Sweep, TablesAreDeterministic) {
  const auto c = small(Family::PerturbedSphere, {0.02, 0.05});
  std::ostringstream a, b;
  write_sweep_csv(a, sweep_family(c, Model::Hyperbolic, "mean", 4), 1);
  write_sweep_csv(b, sweep_family(c, Model::Hyperbolic, "mean", 4), 1);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Criteria, BandAndRate) {
  SweepTable t;
  for (double k : {0.5, 0.6, 0.9}) {
    SweepRow row;
    row.report.osc = 0.1;
    row.report.r = 1.0;
    row.report.R = 1.0 + 0.1 * k;
    row.report.ratio = k;
    row.report.psi_grad_sup = k * std::sqrt(0.1);
    t.rows.push_back(row);
  }
  EXPECT_TRUE(check_rate_band(3, {t}, 0.3, 0.8).passed == false);  // 0.9 above the band
  EXPECT_TRUE(check_rate_band(4, {t}).passed);                     // 1.8 < 2
  EXPECT_DOUBLE_EQ(ratio_band(t).spread(), 1.8);
  EXPECT_DOUBLE_EQ(psi_rate_band(t).spread(), 1.8);
  EXPECT_TRUE(check_psi_rate({t}).passed);
  t.rows[2].report.psi_sup = t.rows[2].report.spread() + 1e-6;
  EXPECT_FALSE(check_psi_rate({t}).passed);
}

TEST(Criteria, Convergence) {
  SweepTable a;
  SweepRow row;
  row.report.osc = 0.1;
  row.report.R = 1.05;
  row.report.r = 1.0;
  row.report.ratio = 0.5;
  a.rows.push_back(row);
  SweepTable b = a;
  b.rows[0].report.osc = 0.104;
  EXPECT_TRUE(check_convergence({a}, {b}).passed);
  b.rows[0].report.osc = 0.11;
  EXPECT_FALSE(check_convergence({a}, {b}).passed);
}

TEST(Experiment, SphereConfigPasses) {
  ExperimentConfig c = small(Family::GeodesicSphere, {});
  c.models = {Model::Euclidean, Model::Hyperbolic, Model::Spherical};
  c.radius = 0.6;
  c.center_offset = V3(0.2, -0.1, 0.15);
  c.output = scratch("sphere").string();
  std::ostringstream log;
  const auto out = run_experiment(c, log);
  EXPECT_EQ(out.exit_code, 0);
  const std::string summary = slurp(fs::path(c.output) / "summary.txt");
  EXPECT_NE(summary.find("criterion 2 sphere degeneracy: PASS"), std::string::npos) << summary;
  EXPECT_NE(summary.find("overall: PASS"), std::string::npos);
  for (const char* f : {"sweep_euclidean_geodesic_sphere_mean_g4.csv", "plot_spherical_geodesic_sphere_mean_g4_osc_spread.dat",
                        "reports/hyperbolic_geodesic_sphere_mean_g4_eps0.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(c.output) / f)) << f;
  }
  const json rep = json::parse(slurp(fs::path(c.output) / "reports/hyperbolic_geodesic_sphere_mean_g4_eps0.json"));
  EXPECT_EQ(rep["seed"], 1);
  EXPECT_LE(rep["R_minus_r"].get<double>(), 1e-7);
}

TEST(Experiment, RerunIsByteIdentical) {
  ExperimentConfig c = small(Family::ChartEllipsoid, {0.02, 0.1});
  c.output = scratch("det_a").string();
  std::ostringstream log;
  run_experiment(c, log);
  const fs::path a = c.output;
  c.output = scratch("det_b").string();
  run_experiment(c, log);
  const fs::path b = c.output;
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
  }
  EXPECT_GE(files, 6u);
}

TEST(Experiment, LemmaOutputs) {
  ExperimentConfig c = small(Family::GeodesicSphere, {});
  c.models = {Model::Euclidean, Model::Hyperbolic};
  c.lemma_pairs = 200;
  c.output = scratch("lemmas").string();
  std::ostringstream log;
  const auto out = run_lemma_check(c, log);
  ASSERT_EQ(out.criteria.size(), 1u);
  const json j = json::parse(slurp(fs::path(c.output) / "lemmas.json"));
  EXPECT_EQ(j["failures"], 0);
  EXPECT_TRUE(j["tags"].contains("graph.height"));
  EXPECT_TRUE(j["tags"].contains("hyperbolic_distance.lower"));
  EXPECT_FALSE(j["tags"].contains("round_metric.lower"));  // no spherical model requested
  EXPECT_GE(j["constants"].size(), 5u);
  const std::string csv = slurp(fs::path(c.output) / "checks.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "# seed=1 schema=sfstab.experiment.v1");
  // With every check passing the verdict rests on the count and the constants.
  bool stable = true;
  for (const auto& k : j["constants"]) stable = stable && k["stable"].get<bool>();
  std::size_t counted = 0;
  for (const auto& [tag, t] : j["tags"].items()) counted += t["kind"] != "fitted" ? t["count"].get<std::size_t>() : 0;
  EXPECT_EQ(out.criteria[0].passed, stable && counted >= 10000);
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(SFSTAB_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  const fs::path err = dir / "err.txt";
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"schema": "sfstab.experiment.v1", "family": "ellipsoid", "eps": [0.1], "grid_resolutoin": 3})";
  }
  EXPECT_EQ(run_cli("run " + (dir / "bad.json").string(), err), 2);
  EXPECT_NE(slurp(err).find("grid_resolutoin"), std::string::npos) << slurp(err);
  {
    std::ofstream f(dir / "broken.json");
    f << "{\"schema\": ";
  }
  EXPECT_EQ(run_cli("run " + (dir / "broken.json").string(), err), 2);
  EXPECT_EQ(run_cli("frobnicate", err), 2);
  EXPECT_EQ(run_cli("sweep --model euclidean --family sphere --radius 0.8 --grid 3 --directions 8 --out " +
                        (dir / "ok").string(),
                    err),
            0)
      << slurp(err);
  EXPECT_TRUE(fs::exists(dir / "ok" / "summary.txt"));
  EXPECT_EQ(run_cli("sweep --model spherical --family perturbed --radius 1.4 --eps 0.3 --grid 3 --out " +
                        (dir / "fail").string(),
                    err),
            1);
  EXPECT_NE(slurp(err).find("stage 'surface'"), std::string::npos) << slurp(err);
  EXPECT_EQ(run_cli("sweep --model euclidean --family ellipsoid --op hr:9 --eps 0.1 --out " + (dir / "x").string(),
                    err),
            2);
  EXPECT_NE(slurp(err).find("operator"), std::string::npos);
}

}  // namespace
