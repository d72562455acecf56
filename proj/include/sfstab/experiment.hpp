#pragma once

#include "sfstab/estimates.hpp"
#include "sfstab/stability.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sfstab {

inline constexpr std::string_view kConfigSchema = "sfstab.experiment.v1";

// Invalid configuration entry; key() names it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  std::vector<Model> models{Model::Euclidean};
  Family family = Family::ChartEllipsoid;
  double radius = 1.0;
  int harmonic = 2;
  Vec<3> center_offset = Vec<3>::Zero();  // metric tangent vector at the chart origin
  std::vector<double> eps;
  std::vector<std::string> operators{"mean"};
  int grid_resolution = 5;
  bool convergence = false;  // rerun every sweep one grid level finer
  int directions = 50;
  int radial_nodes = 64;
  double tol_scale = 1.0;
  bool lemmas = false;
  int lemma_pairs = 10000;
  bool export_samples = false;
  std::uint64_t seed = 1;
  std::string output = "sfstab_out";

  // Sweep values actually run: spheres have a single eps = 0 row.
  std::vector<double> eps_values() const {
    return family == Family::GeodesicSphere ? std::vector<double>{0.0} : eps;
  }
};

namespace detail {

using json = nlohmann::json;

inline double config_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key, "expected a number");
  return j.get<double>();
}

inline int config_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError(key, "expected an integer");
  return j.get<int>();
}

inline bool config_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw ConfigError(key, "expected true or false");
  return j.get<bool>();
}

inline std::string config_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key, "expected a string");
  return j.get<std::string>();
}

// A string or an array of strings.
inline std::vector<std::string> config_strings(const json& j, const std::string& key) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array() || j.empty()) throw ConfigError(key, "expected a string or a non-empty array of strings");
  std::vector<std::string> out;
  for (const auto& x : j) out.push_back(config_string(x, key));
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::json;
  static const std::set<std::string> known = {
      "schema",     "models",     "family",      "radius",      "harmonic",    "center_offset",
      "eps",        "operator",   "grid_resolution", "convergence", "directions", "radial_nodes",
      "tol_scale",  "lemmas",     "lemma_pairs", "export_samples", "seed",     "output"};
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(k, "unknown key");
  }
  if (!j.contains("schema")) throw ConfigError("schema", "missing (expected \"" + std::string(kConfigSchema) + "\")");
  if (detail::config_string(j["schema"], "schema") != kConfigSchema) {
    throw ConfigError("schema", "unsupported schema (expected \"" + std::string(kConfigSchema) + "\")");
  }
  ExperimentConfig c;
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& s : detail::config_strings(j["models"], "models")) {
      try {
        c.models.push_back(parse_model(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("models", e.what());
      }
    }
  }
  if (j.contains("family")) {
    try {
      c.family = parse_family(detail::config_string(j["family"], "family"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("family", e.what());
    }
  }
  if (j.contains("radius")) {
    c.radius = detail::config_number(j["radius"], "radius");
    if (!(c.radius > 0.0)) throw ConfigError("radius", "must be positive");
  }
  if (j.contains("harmonic")) {
    c.harmonic = detail::config_int(j["harmonic"], "harmonic");
    if (c.harmonic < 1 || c.harmonic > 3) throw ConfigError("harmonic", "must be 1, 2 or 3");
  }
  if (j.contains("center_offset")) {
    const json& a = j["center_offset"];
    if (!a.is_array() || a.size() != 3) throw ConfigError("center_offset", "expected an array of 3 numbers");
    for (int i = 0; i < 3; ++i) c.center_offset[i] = detail::config_number(a[i], "center_offset");
  }
  if (j.contains("eps")) {
    const json& a = j["eps"];
    if (!a.is_array()) throw ConfigError("eps", "expected an array of numbers");
    for (const auto& x : a) {
      const double e = detail::config_number(x, "eps");
      if (!(e >= 0.0) || !(e < 1.0)) throw ConfigError("eps", "values must lie in [0, 1)");
      c.eps.push_back(e);
    }
  }
  if (c.family != Family::GeodesicSphere && c.eps.empty()) throw ConfigError("eps", "at least one value required");
  if (j.contains("operator")) {
    c.operators = detail::config_strings(j["operator"], "operator");
    for (const auto& s : c.operators) {
      try {
        const auto op = CurvatureOperator::parse(s);
        if (op.order() < 1 || op.order() > 2) throw std::invalid_argument("order must be 1 or 2 in dimension 3");
      } catch (const std::invalid_argument& e) {
        throw ConfigError("operator", e.what());
      }
    }
  }
  if (j.contains("grid_resolution")) {
    c.grid_resolution = detail::config_int(j["grid_resolution"], "grid_resolution");
    if (c.grid_resolution < 1 || c.grid_resolution > 7) throw ConfigError("grid_resolution", "must be in 1..7");
  }
  if (j.contains("convergence")) c.convergence = detail::config_bool(j["convergence"], "convergence");
  if (j.contains("directions")) {
    c.directions = detail::config_int(j["directions"], "directions");
    if (c.directions < 3) throw ConfigError("directions", "must be at least 3");
  }
  if (j.contains("radial_nodes")) {
    c.radial_nodes = detail::config_int(j["radial_nodes"], "radial_nodes");
    if (c.radial_nodes < 2) throw ConfigError("radial_nodes", "must be at least 2");
  }
  if (j.contains("tol_scale")) {
    c.tol_scale = detail::config_number(j["tol_scale"], "tol_scale");
    if (!(c.tol_scale > 0.0)) throw ConfigError("tol_scale", "must be positive");
  }
  if (j.contains("lemmas")) c.lemmas = detail::config_bool(j["lemmas"], "lemmas");
  if (j.contains("lemma_pairs")) {
    c.lemma_pairs = detail::config_int(j["lemma_pairs"], "lemma_pairs");
    if (c.lemma_pairs < 10) throw ConfigError("lemma_pairs", "must be at least 10");
  }
  if (j.contains("export_samples")) c.export_samples = detail::config_bool(j["export_samples"], "export_samples");
  if (j.contains("seed")) {
    const json& sd = j["seed"];
    if (!sd.is_number_unsigned() && !(sd.is_number_integer() && sd.get<std::int64_t>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = detail::config_string(j["output"], "output");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RadialSurface<3> build_surface(const SpaceForm<3>& sp, const ExperimentConfig& c, double eps) {
  FamilyParams<3> p;
  p.family = c.family;
  p.radius = c.radius;
  p.eps = eps;
  p.harmonic = c.harmonic;
  if (c.family == Family::ChartEllipsoid) p.axes = c.radius * Vec<3>(1.0 + eps, 1.0, 1.0);
  const Vec<3> o = sp.origin_coords();
  const Vec<3> base = sp.exp_raw(o, c.center_offset / sp.conformal_factor(o));
  return make_surface(sp, p, &base);
}

struct SweepRow {
  double eps = 0.0;
  StabilityReport<3> report;

  // Psi_grad_sup / sqrt(osc), NaN when osc is below the floor.
  double psi_rate() const {
    return report.ratio_defined() ? report.psi_grad_sup / std::sqrt(report.osc)
                                  : std::numeric_limits<double>::quiet_NaN();
  }
};

struct SweepTable {
  Model model = Model::Euclidean;
  Family family = Family::ChartEllipsoid;
  std::string op;
  int grid_resolution = 0;
  std::vector<SweepRow> rows;

  std::string name() const {
    std::string o = op;
    std::erase(o, ':');
    return std::string(model_name(model)) + "_" + std::string(family_name(family)) + "_" + o + "_g" +
           std::to_string(grid_resolution);
  }
};

// One stability report per eps; failing rows are kept with their stage.
inline SweepTable sweep_family(const ExperimentConfig& c, Model m, const std::string& op, int grid_resolution) {
  SweepTable t;
  t.model = m;
  t.family = c.family;
  t.op = op;
  t.grid_resolution = grid_resolution;
  const auto eps = c.eps_values();
  t.rows.resize(eps.size());
  const CurvatureOperator cop = CurvatureOperator::parse(op);
  StabilityOptions opt;
  opt.grid_resolution = grid_resolution;
  opt.directions = c.directions;
  opt.radial_nodes = c.radial_nodes;
  opt.tol_scale = c.tol_scale;
  const SpaceForm<3> sp(m);
  numerics::parallel_for(eps.size(), [&](std::size_t i) {
    SweepRow& row = t.rows[i];
    row.eps = eps[i];
    try {
      row.report = stability_report(build_surface(sp, c, eps[i]), cop, opt);
    } catch (const std::exception& e) {
      row.report.model = m;
      row.report.op = op;
      row.report.valid = false;
      row.report.failed_stage = "surface";
      row.report.error = e.what();
    }
  });
  return t;
}

namespace detail {

inline std::string num12(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

inline nlohmann::json vec_json(const Vec<3>& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

}  // namespace detail

inline nlohmann::json to_json(const StabilityReport<3>& r) {
  using nlohmann::json;
  json j;
  j["model"] = model_name(r.model);
  j["family"] = family_name(r.family.family);
  j["radius"] = r.family.radius;
  j["eps"] = r.family.eps;
  j["axes"] = detail::vec_json(r.family.axes);
  j["harmonic"] = r.family.harmonic;
  j["operator"] = r.op;
  j["grid_resolution"] = r.grid_resolution;
  j["grid_size"] = r.grid_size;
  j["directions"] = r.directions;
  j["valid"] = r.valid;
  if (!r.valid) {
    j["failed_stage"] = r.failed_stage;
    j["error"] = r.error;
    return j;
  }
  j["osc"] = r.osc;
  j["H_min"] = r.H_min;
  j["H_max"] = r.H_max;
  j["area"] = r.area;
  j["center"] = detail::vec_json(r.center);
  j["center_residual"] = r.center_residual;
  j["center_exact"] = r.center_exact;
  j["center_of_mass"] = detail::vec_json(r.center_of_mass);
  j["center_of_mass_residual"] = r.com_residual;
  j["center_of_mass_distance"] = r.com_distance;
  j["r"] = r.r;
  j["R"] = r.R;
  j["R_minus_r"] = r.spread();
  j["ratio"] = detail::finite_or_null(r.ratio);
  j["ratio_defined"] = r.ratio_defined();
  j["frame_m"] = r.frame_m;
  j["frame_defect"] = r.frame_defect;
  j["max_center_plane_distance"] = r.max_center_plane_distance;
  json planes = json::array();
  for (std::size_t i = 0; i < r.plane_dirs.size(); ++i) {
    planes.push_back({{"v", detail::vec_json(r.plane_dirs[i])}, {"distance", r.plane_distance[i]}});
  }
  j["planes"] = planes;
  j["psi_sup"] = r.psi_sup;
  j["psi_grad_sup"] = r.psi_grad_sup;
  j["containment_violation"] = r.containment_violation;
  return j;
}

inline void write_sweep_csv(std::ostream& os, const SweepTable& t, std::uint64_t seed) {
  using detail::num12;
  os << "# seed=" << seed << " schema=" << kConfigSchema << " grid_resolution=" << t.grid_resolution << "\n";
  os << "model,family,eps,osc,r,R,R_minus_r,ratio,maxdist,psi_sup,psi_grad_sup,psi_grad_over_sqrt_osc,"
        "com_distance,operator,status\n";
  for (const auto& row : t.rows) {
    const auto& r = row.report;
    os << model_name(t.model) << ',' << family_name(t.family) << ',' << num12(row.eps) << ',';
    if (!r.valid) {
      os << "nan,nan,nan,nan,nan,nan,nan,nan,nan,nan," << t.op << ",failed:" << r.failed_stage << '\n';
      continue;
    }
    os << num12(r.osc) << ',' << num12(r.r) << ',' << num12(r.R) << ',' << num12(r.spread()) << ','
       << (r.ratio_defined() ? num12(r.ratio) : "undefined") << ',' << num12(r.max_center_plane_distance) << ','
       << num12(r.psi_sup) << ',' << num12(r.psi_grad_sup) << ','
       << (r.ratio_defined() ? num12(row.psi_rate()) : "undefined") << ',' << num12(r.com_distance) << ','
       << t.op << ",ok\n";
  }
}

// Two-column plot data: osc vs R - r and osc vs Psi_grad_sup^2.
inline void write_plot_files(const std::filesystem::path& dir, const SweepTable& t, std::uint64_t seed) {
  std::ofstream a(dir / ("plot_" + t.name() + "_osc_spread.dat"));
  std::ofstream b(dir / ("plot_" + t.name() + "_osc_psigrad2.dat"));
  a << "# seed=" << seed << "\n# osc R_minus_r\n";
  b << "# seed=" << seed << "\n# osc psi_grad_sup^2\n";
  for (const auto& row : t.rows) {
    if (!row.report.valid) continue;
    a << detail::num12(row.report.osc) << ' ' << detail::num12(row.report.spread()) << '\n';
    b << detail::num12(row.report.osc) << ' ' << detail::num12(row.report.psi_grad_sup * row.report.psi_grad_sup)
      << '\n';
  }
}

struct LemmaSuiteOptions {
  std::vector<Model> models{Model::Euclidean, Model::Hyperbolic, Model::Spherical};
  std::uint64_t seed = 1;
  int pairs = 10000;
  int grid_resolution = 4;
  double radius = 0.7;
  double eps = 0.05;
  int cap_directions = 3;
};

// Margin checks of the metric, graph, area, normal and projection lemmas on a
// perturbed sphere per model.
inline LemmaReport lemma_suite(const LemmaSuiteOptions& o) {
  LemmaReport rep;
  auto has = [&](Model m) { return std::find(o.models.begin(), o.models.end(), m) != o.models.end(); };
  if (has(Model::Spherical)) rep.append(verify_round_metric<3>(o.seed, o.pairs, 1.0));
  if (has(Model::Hyperbolic)) rep.append(verify_hyperbolic_distance<3>(o.seed + 1, o.pairs, 1.0));
  rep.append(verify_cross_product_identity(o.seed + 2, 1000));
  const DirectionGrid<3> grid(o.grid_resolution);
  for (Model m : o.models) {
    const SpaceForm<3> sp(m);
    const auto s = perturbed_sphere(sp, o.radius, o.eps, 2);
    const auto smp = sample_surface(s, grid);
    const double rho = touching_ball_radius(s, smp);
    LemmaReport part;
    part.append(verify_graph_bounds(s, smp, rho, 8, o.seed + 3));
    part.append(verify_area_growth(s, smp, grid, rho, 40, o.seed + 4));
    part.append(verify_normal_stability(s, smp, grid, rho, 60, o.seed + 5));
    MovingPlanesOptions mo;
    mo.compute_defect = false;
    mo.compute_matches = false;
    const MovingPlanes<3> mp(s, grid, smp, mo);
    for (const Vec<3>& v : fibonacci_directions<3>(o.cap_directions)) {
      const auto cap = mp.critical_cap(v);
      part.append(verify_projection_curvature(s, smp, grid, cap.plane, tangency_chart(s, cap, smp), 200));
    }
    const std::string tag = std::string(model_name(m));
    for (auto& c : part.checks) c.witness = "model=" + tag + " " + c.witness;
    for (auto& c : part.constants) c.tag = tag + "/" + c.tag;
    rep.append(std::move(part));
  }
  return rep;
}

struct TagSummary {
  CheckKind kind = CheckKind::ConstantFree;
  std::size_t count = 0;
  std::size_t failures = 0;
  double min_margin = std::numeric_limits<double>::infinity();
};

inline std::map<std::string, TagSummary> summarize_tags(const LemmaReport& r) {
  std::map<std::string, TagSummary> out;
  for (const auto& c : r.checks) {
    auto& t = out[c.tag];
    t.kind = c.kind;
    ++t.count;
    t.failures += !c.passed();
    t.min_margin = std::min(t.min_margin, c.margin);
  }
  return out;
}

inline nlohmann::json lemma_json(const LemmaReport& r, std::uint64_t seed) {
  using nlohmann::json;
  json j;
  j["schema"] = kConfigSchema;
  j["seed"] = seed;
  j["checks"] = r.checks.size();
  j["failures"] = r.failures();
  j["skipped"] = r.skipped;
  json tags = json::object();
  for (const auto& [tag, t] : summarize_tags(r)) {
    tags[tag] = {{"kind", check_kind_name(t.kind)}, {"count", t.count}, {"failures", t.failures},
                 {"min_margin", detail::finite_or_null(t.min_margin)}};
  }
  j["tags"] = tags;
  json cs = json::array();
  for (const auto& c : r.constants) {
    cs.push_back({{"tag", c.tag}, {"value", c.value}, {"first", c.first}, {"second", c.second},
                  {"relative_change", c.relative_change()}, {"stable", c.stable()}});
  }
  j["constants"] = cs;
  return j;
}

// Pass/fail of one acceptance property with a one-line explanation.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::string format_criterion(const CriterionResult& c) {
  std::ostringstream os;
  os << "criterion " << c.id << " " << c.name << ": " << (c.passed ? "PASS" : "FAIL") << "  " << c.detail;
  return os.str();
}

struct Band {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;

  void add(double x) {
    if (!std::isfinite(x)) return;
    min = std::min(min, x);
    max = std::max(max, x);
    ++n;
  }
  double spread() const { return n ? max / min : std::numeric_limits<double>::quiet_NaN(); }
};

inline Band ratio_band(const SweepTable& t) {
  Band b;
  for (const auto& row : t.rows) {
    if (row.report.valid && row.report.ratio_defined()) b.add(row.report.ratio);
  }
  return b;
}

inline Band psi_rate_band(const SweepTable& t) {
  Band b;
  for (const auto& row : t.rows) {
    if (row.report.valid) b.add(row.psi_rate());
  }
  return b;
}

inline CriterionResult check_pipeline(const std::vector<SweepTable>& tables) {
  CriterionResult c{0, "pipeline", true, "all rows valid"};
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      if (!row.report.valid) {
        c.passed = false;
        c.detail = t.name() + " eps=" + detail::num12(row.eps) + " failed at stage '" + row.report.failed_stage +
                   "': " + row.report.error;
        return c;
      }
    }
  }
  return c;
}

inline CriterionResult check_sphere_degeneracy(const std::vector<SweepTable>& tables) {
  double osc = 0, dist = 0, spread = 0;
  bool ok = true;
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      const auto& r = row.report;
      if (!r.valid) {
        ok = false;
        continue;
      }
      osc = std::max(osc, r.osc);
      dist = std::max(dist, r.max_center_plane_distance);
      spread = std::max(spread, r.spread());
    }
  }
  ok = ok && osc <= 1e-8 && dist <= 1e-6 && spread <= 1e-7;
  return {2, "sphere degeneracy", ok,
          "max osc " + detail::num12(osc) + " (<= 1e-8), max d(O, pi_v) " + detail::num12(dist) +
              " (<= 1e-6), max R-r " + detail::num12(spread) + " (<= 1e-7)"};
}

// Band of (R - r)/osc: max/min < 2, optionally inside [lo, hi].
inline CriterionResult check_rate_band(int id, const std::vector<SweepTable>& tables, double lo = 0.0,
                                       double hi = std::numeric_limits<double>::infinity()) {
  CriterionResult c{id, "linear rate band", true, ""};
  std::ostringstream os;
  for (const auto& t : tables) {
    const Band b = ratio_band(t);
    const bool within = b.n > 0 && b.min >= lo && b.max <= hi;
    const bool ok = within && b.n == t.rows.size() && b.spread() < 2.0;
    c.passed = c.passed && ok;
    os << t.name() << " ratio [" << detail::num12(b.min) << ", " << detail::num12(b.max) << "] max/min "
       << detail::num12(b.spread()) << "; ";
  }
  if (std::isfinite(hi)) os << "required band [" << lo << ", " << hi << "], max/min < 2";
  else os << "required max/min < 2";
  c.detail = os.str();
  return c;
}

inline CriterionResult check_psi_rate(const std::vector<SweepTable>& tables) {
  CriterionResult c{5, "radial graph rate", true, ""};
  std::ostringstream os;
  for (const auto& t : tables) {
    const Band b = psi_rate_band(t);
    double excess = -std::numeric_limits<double>::infinity();
    for (const auto& row : t.rows) {
      if (row.report.valid) excess = std::max(excess, row.report.psi_sup - row.report.spread());
    }
    const bool ok = b.n > 0 && b.spread() < 3.0 && excess <= 1e-8;
    c.passed = c.passed && ok;
    os << t.name() << " psi_grad/sqrt(osc) [" << detail::num12(b.min) << ", " << detail::num12(b.max)
       << "] max/min " << detail::num12(b.spread()) << " (< 3), max psi_sup-(R-r) " << detail::num12(excess)
       << " (<= 1e-8); ";
  }
  c.detail = os.str();
  if (c.detail.size() >= 2) c.detail.resize(c.detail.size() - 2);
  return c;
}

// d(center_of_mass, O) <= 5 osc on rows with a defined ratio.
inline CriterionResult check_center_consistency(const std::vector<SweepTable>& tables) {
  double worst = 0.0;
  std::size_t rows = 0;
  bool ok = true;
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      const auto& r = row.report;
      if (!r.valid || !r.ratio_defined()) continue;
      ++rows;
      const double k = r.com_distance / r.osc;
      worst = std::max(worst, k);
      ok = ok && r.com_distance <= 5.0 * r.osc;
    }
  }
  return {8, "center consistency", ok && rows > 0,
          "max d(com, O)/osc " + detail::num12(worst) + " over " + std::to_string(rows) + " rows (<= 5)"};
}

inline double relative_change(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d > 0 ? std::abs(a - b) / d : 0.0;
}

inline CriterionResult check_convergence(const std::vector<SweepTable>& coarse, const std::vector<SweepTable>& fine) {
  double worst = 0.0;
  std::string where;
  bool ok = coarse.size() == fine.size();
  for (std::size_t i = 0; ok && i < coarse.size(); ++i) {
    for (std::size_t k = 0; k < coarse[i].rows.size(); ++k) {
      const auto& a = coarse[i].rows[k].report;
      const auto& b = fine[i].rows[k].report;
      if (!a.valid || !b.valid) {
        ok = false;
        continue;
      }
      std::vector<std::pair<std::string, double>> q = {{"osc", relative_change(a.osc, b.osc)},
                                                       {"R-r", relative_change(a.spread(), b.spread())}};
      if (a.ratio_defined() && b.ratio_defined()) q.push_back({"ratio", relative_change(a.ratio, b.ratio)});
      for (const auto& [name, d] : q) {
        if (d > worst) {
          worst = d;
          where = coarse[i].name() + " eps=" + detail::num12(coarse[i].rows[k].eps) + " " + name;
        }
      }
    }
  }
  ok = ok && worst < 0.05;
  return {9, "grid convergence", ok, "max relative change " + detail::num12(worst) + " at " + where + " (< 0.05)"};
}

inline CriterionResult check_lemma_suite(const LemmaReport& r, std::size_t min_checks = 10000) {
  std::ostringstream os;
  const double mi = r.min_margin(CheckKind::Identity), mc = r.min_margin(CheckKind::ConstantFree);
  const std::size_t n = r.count(CheckKind::Identity) + r.count(CheckKind::ConstantFree);
  os << n << " checks (>= " << min_checks << "), identity min margin " << detail::num12(mi)
     << " (>= -1e-8), constant-free min margin " << detail::num12(mc) << " (>= -1e-6)";
  std::size_t unstable = 0;
  for (const auto& c : r.constants) unstable += !c.stable();
  os << ", " << r.constants.size() - unstable << "/" << r.constants.size() << " fitted constants stable";
  for (const auto& [tag, t] : summarize_tags(r)) {
    if (t.failures) os << "; failing " << tag << " " << t.failures << "/" << t.count << " min margin " << detail::num12(t.min_margin);
  }
  for (const auto& c : r.constants) {
    if (!c.stable()) os << "; unstable " << c.tag << " change " << detail::num12(c.relative_change());
  }
  return {7, "lemma suite", r.passed() && n >= min_checks, os.str()};
}

struct ExperimentOutcome {
  std::vector<CriterionResult> criteria;
  std::vector<SweepTable> tables;
  int exit_code = 0;
};

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
}

inline std::string eps_label(double e) {
  std::ostringstream os;
  os << e;
  return os.str();
}

}  // namespace detail

inline void write_lemma_outputs(const std::filesystem::path& dir, const LemmaReport& r, std::uint64_t seed) {
  std::ostringstream csv;
  csv << "# seed=" << seed << " schema=" << kConfigSchema << "\n";
  write_checks_csv(csv, r.checks);
  detail::write_text(dir / "checks.csv", csv.str());
  detail::write_text(dir / "lemmas.json", lemma_json(r, seed).dump(2) + "\n");
}

inline void write_summary(const std::filesystem::path& dir, const ExperimentConfig& c,
                          const std::vector<CriterionResult>& criteria, bool passed) {
  std::ostringstream os;
  os << "sfstab experiment summary\n";
  os << "schema " << kConfigSchema << "\nseed " << c.seed << "\nmodels";
  for (Model m : c.models) os << ' ' << model_name(m);
  os << "\nfamily " << family_name(c.family) << "\noperators";
  for (const auto& op : c.operators) os << ' ' << op;
  os << "\ngrid_resolution " << c.grid_resolution << "\n\n";
  for (const auto& r : criteria) os << format_criterion(r) << '\n';
  os << "\noverall: " << (passed ? "PASS" : "FAIL") << '\n';
  detail::write_text(dir / "summary.txt", os.str());
}

inline LemmaSuiteOptions lemma_options(const ExperimentConfig& c) {
  LemmaSuiteOptions o;
  o.models = c.models;
  o.seed = c.seed;
  o.pairs = c.lemma_pairs;
  return o;
}

// Runs every sweep of the config, writes reports, tables, plot data and the
// summary into c.output, and evaluates the properties that apply.
inline ExperimentOutcome run_experiment(const ExperimentConfig& c, std::ostream& log) {
  namespace fs = std::filesystem;
  ExperimentOutcome out;
  const fs::path dir(c.output);
  fs::create_directories(dir / "reports");
  for (Model m : c.models) {
    for (const auto& op : c.operators) {
      log << "sweep " << model_name(m) << ' ' << family_name(c.family) << ' ' << op << '\n';
      out.tables.push_back(sweep_family(c, m, op, c.grid_resolution));
    }
  }
  for (const auto& t : out.tables) {
    std::ostringstream csv;
    write_sweep_csv(csv, t, c.seed);
    detail::write_text(dir / ("sweep_" + t.name() + ".csv"), csv.str());
    write_plot_files(dir, t, c.seed);
    for (const auto& row : t.rows) {
      nlohmann::json j = to_json(row.report);
      j["seed"] = c.seed;
      j["schema"] = kConfigSchema;
      detail::write_text(dir / "reports" / (t.name() + "_eps" + detail::eps_label(row.eps) + ".json"),
                         j.dump(2) + "\n");
    }
  }
  if (c.export_samples) {
    fs::create_directories(dir / "samples");
    const DirectionGrid<3> grid(c.grid_resolution);
    for (const auto& t : out.tables) {
      const SpaceForm<3> sp(t.model);
      const CurvatureOperator op = CurvatureOperator::parse(t.op);
      for (const auto& row : t.rows) {
        if (!row.report.valid) continue;
        std::ostringstream os;
        write_samples_csv(os, sample_surface(build_surface(sp, c, row.eps), grid, &op));
        detail::write_text(dir / "samples" / (t.name() + "_eps" + detail::eps_label(row.eps) + ".csv"), os.str());
      }
    }
  }

  out.criteria.push_back(check_pipeline(out.tables));
  if (c.family == Family::GeodesicSphere) {
    out.criteria.push_back(check_sphere_degeneracy(out.tables));
  } else {
    for (const auto& t : out.tables) {
      const bool sharp = t.model == Model::Euclidean && t.family == Family::ChartEllipsoid;
      const int id = t.model == Model::Euclidean ? 3 : 4;
      out.criteria.push_back(sharp ? check_rate_band(id, {t}, 0.3, 0.8) : check_rate_band(id, {t}));
    }
    out.criteria.push_back(check_psi_rate(out.tables));
    out.criteria.push_back(check_center_consistency(out.tables));
  }
  if (c.convergence) {
    std::vector<SweepTable> fine;
    for (const auto& t : out.tables) {
      log << "refined sweep " << t.name() << '\n';
      fine.push_back(sweep_family(c, t.model, t.op, c.grid_resolution + 1));
      std::ostringstream csv;
      write_sweep_csv(csv, fine.back(), c.seed);
      detail::write_text(dir / ("sweep_" + fine.back().name() + ".csv"), csv.str());
    }
    out.criteria.push_back(check_convergence(out.tables, fine));
  }
  if (c.lemmas) {
    log << "lemma suite\n";
    const LemmaReport r = lemma_suite(lemma_options(c));
    write_lemma_outputs(dir, r, c.seed);
    out.criteria.push_back(check_lemma_suite(r));
  }
  bool passed = true;
  for (const auto& r : out.criteria) passed = passed && r.passed;
  write_summary(dir, c, out.criteria, passed);
  out.exit_code = passed ? 0 : 1;
  return out;
}

inline ExperimentOutcome run_lemma_check(const ExperimentConfig& c, std::ostream& log) {
  namespace fs = std::filesystem;
  ExperimentOutcome out;
  const fs::path dir(c.output);
  fs::create_directories(dir);
  log << "lemma suite\n";
  const LemmaReport r = lemma_suite(lemma_options(c));
  write_lemma_outputs(dir, r, c.seed);
  out.criteria.push_back(check_lemma_suite(r));
  write_summary(dir, c, out.criteria, out.criteria.back().passed);
  out.exit_code = out.criteria.back().passed ? 0 : 1;
  return out;
}

}  // namespace sfstab
