#include "sfstab/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace sfstab;

namespace {

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_scale;

  void apply(ExperimentConfig& c) const {
    if (out) c.output = *out;
    if (seed) c.seed = *seed;
    if (tol_scale) {
      if (!(*tol_scale > 0.0)) throw ConfigError("tol-scale", "must be positive");
      c.tol_scale = *tol_scale;
    }
  }
};

int report(const ExperimentOutcome& o, const ExperimentConfig& c) {
  for (const auto& r : o.criteria) std::cout << format_criterion(r) << '\n';
  std::cout << "outputs in " << c.output << '\n';
  for (const auto& r : o.criteria) {
    if (r.id == 0 && !r.passed) std::cerr << "pipeline failure: " << r.detail << '\n';
  }
  return o.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative Alexandrov stability analyzer for Euclidean, hyperbolic and spherical space"};
  app.require_subcommand(1);
  Overrides ov;
  app.add_option("--out", ov.out, "Output directory");
  app.add_option("--seed", ov.seed, "Random seed");
  app.add_option("--tol-scale", ov.tol_scale, "Multiplier for numerical tolerances");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config JSON")->required();
  run->fallthrough();

  ExperimentConfig sc;
  std::string model = "euclidean", family = "ellipsoid", op = "mean";
  std::vector<double> eps;
  auto* sweep = app.add_subcommand("sweep", "Sweep one surface family over eps");
  sweep->add_option("--model", model, "euclidean | hyperbolic | spherical");
  sweep->add_option("--family", family, "sphere | ellipsoid | perturbed");
  sweep->add_option("--eps", eps, "Comma separated eps values")->delimiter(',');
  sweep->add_option("--op", op, "mean | hr:R");
  sweep->add_option("--radius", sc.radius, "Base radius");
  sweep->add_option("--harmonic", sc.harmonic, "Perturbation harmonic (1..3)");
  sweep->add_option("--grid", sc.grid_resolution, "Grid refinement level");
  sweep->add_option("--directions", sc.directions, "Critical plane directions");
  sweep->fallthrough();

  std::string lemma_path;
  auto* lemmas = app.add_subcommand("check-lemmas", "Run the lemma verification suite");
  lemmas->add_option("config", lemma_path, "Config JSON")->required();
  lemmas->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      ExperimentConfig c = load_config(config_path);
      ov.apply(c);
      return report(run_experiment(c, std::cerr), c);
    }
    if (lemmas->parsed()) {
      ExperimentConfig c = load_config(lemma_path);
      ov.apply(c);
      return report(run_lemma_check(c, std::cerr), c);
    }
    // sweep: assemble the same config a file would give.
    nlohmann::json j;
    j["schema"] = kConfigSchema;
    j["models"] = model;
    j["family"] = family;
    j["operator"] = op;
    j["radius"] = sc.radius;
    j["harmonic"] = sc.harmonic;
    j["grid_resolution"] = sc.grid_resolution;
    j["directions"] = sc.directions;
    if (!eps.empty()) j["eps"] = eps;
    ExperimentConfig c = parse_config(j);
    ov.apply(c);
    return report(run_experiment(c, std::cerr), c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
