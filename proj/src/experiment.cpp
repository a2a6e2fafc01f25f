#include "lsmcf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"
#include "lsmcf/geometry.hpp"
#include "lsmcf/parallel.hpp"
#include "lsmcf/snapshot_io.hpp"
#include "lsmcf/svg.hpp"
#include "lsmcf/verifier.hpp"

namespace lsmcf {

using json = nlohmann::json;

namespace {

const std::set<std::string>& known_checks() {
  static const std::set<std::string> names{
      "radius_law",        "viscous_dissipation", "curvature_mass",   "curvature_mass_ladder",
      "bv_residuals",      "v_square_stability",  "level_dissipation", "comparison",
      "relabel",           "neumann_residuals",   "l1_continuity",    "coarea_layer_cake",
      "coarea_identity",   "perimeter_bound",     "stationary_residuals"};
  return names;
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Standard:
      return "standard";
    case ExperimentKind::Comparison:
      return "comparison";
    case ExperimentKind::Relabel:
      return "relabel";
  }
  return "unknown";
}

// ---- JSON reading ---------------------------------------------------------

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + " must be an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
      throw ValidationError("unknown key '" + path + "." + key + "'");
  }
}

double number(const json& j, const char* key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ValidationError(path + "." + key + " must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ValidationError(path + "." + key + " must be finite");
  return v;
}

int integer(const json& j, const char* key, const std::string& path, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) throw ValidationError(path + "." + key + " must be an integer");
  return j[key].get<int>();
}

bool boolean(const json& j, const char* key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ValidationError(path + "." + key + " must be a boolean");
  return j[key].get<bool>();
}

std::string text(const json& j, const char* key, const std::string& path,
                 const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ValidationError(path + "." + key + " must be a string");
  return j[key].get<std::string>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& path) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) throw ValidationError(path + "." + key + " must be an array");
  for (const auto& v : j[key]) {
    if (!v.is_number()) throw ValidationError(path + "." + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

InitialDataSpec parse_initial(const json& j, const std::string& path, int dimension, bool& certify) {
  allow_keys(j, path, {"preset", "far_field_value", "bumps", "certify"});
  InitialDataSpec spec;
  try {
    spec.preset = initial_preset_from_string(text(j, "preset", path, "radial_bump"));
  } catch (const SpecError& e) {
    throw ValidationError(path + ".preset: " + e.what());
  }
  spec.far_field_value = number(j, "far_field_value", path, 0.0);
  certify = boolean(j, "certify", path, true);
  if (j.contains("bumps")) {
    if (!j["bumps"].is_array()) throw ValidationError(path + ".bumps must be an array");
    spec.bumps.clear();
    for (std::size_t k = 0; k < j["bumps"].size(); ++k) {
      const json& b = j["bumps"][k];
      const std::string bp = path + ".bumps[" + std::to_string(k) + "]";
      allow_keys(b, bp, {"center", "inner_radius", "cap"});
      BumpParams bump;
      const auto c = numbers(b, "center", bp);
      if (!c.empty()) {
        if (static_cast<int>(c.size()) != dimension)
          throw ValidationError(bp + ".center must have one entry per dimension");
        for (std::size_t a = 0; a < c.size(); ++a) bump.center[a] = c[a];
      }
      bump.inner_radius = number(b, "inner_radius", bp, bump.inner_radius);
      bump.cap = number(b, "cap", bp, bump.cap);
      if (!(bump.cap > 0.0)) throw ValidationError(bp + ".cap must be positive");
      if (!(bump.inner_radius > 0.0)) throw ValidationError(bp + ".inner_radius must be positive");
      spec.bumps.push_back(bump);
    }
  } else if (spec.preset == InitialPreset::Constant) {
    spec.bumps.clear();
  }
  return spec;
}

json initial_to_json(const InitialDataSpec& spec, int dimension, bool certify) {
  json bumps = json::array();
  for (const auto& b : spec.bumps) {
    json c = json::array();
    for (int a = 0; a < dimension; ++a) c.push_back(b.center[a]);
    bumps.push_back({{"center", c}, {"inner_radius", b.inner_radius}, {"cap", b.cap}});
  }
  return {{"preset", to_string(spec.preset)},
          {"far_field_value", spec.far_field_value},
          {"bumps", bumps},
          {"certify", certify}};
}

void parse_tolerances(const json& j, Tolerances& t) {
  const std::string p = "verifier.tolerances";
  allow_keys(j, p,
             {"radius_rel", "runtime_s", "energy_step", "energy_defect", "curvature_step",
              "ladder_factor", "residual_rel", "decay_low", "decay_high", "level_defect",
              "comparison", "relabel_ratio", "affine", "l1_slack", "perimeter_agreement",
              "layer_cake", "perimeter_growth", "v2_ratio_low", "v2_ratio_high", "stationary"});
#define LSMCF_TOL(field) t.field = number(j, #field, p, t.field)
  LSMCF_TOL(radius_rel);
  LSMCF_TOL(runtime_s);
  LSMCF_TOL(energy_step);
  LSMCF_TOL(energy_defect);
  LSMCF_TOL(curvature_step);
  LSMCF_TOL(ladder_factor);
  LSMCF_TOL(residual_rel);
  LSMCF_TOL(decay_low);
  LSMCF_TOL(decay_high);
  LSMCF_TOL(level_defect);
  LSMCF_TOL(comparison);
  LSMCF_TOL(relabel_ratio);
  LSMCF_TOL(affine);
  LSMCF_TOL(l1_slack);
  LSMCF_TOL(perimeter_agreement);
  LSMCF_TOL(layer_cake);
  LSMCF_TOL(perimeter_growth);
  LSMCF_TOL(v2_ratio_low);
  LSMCF_TOL(v2_ratio_high);
  LSMCF_TOL(stationary);
#undef LSMCF_TOL
}

json tolerances_to_json(const Tolerances& t) {
  return {{"radius_rel", t.radius_rel},
          {"runtime_s", t.runtime_s},
          {"energy_step", t.energy_step},
          {"energy_defect", t.energy_defect},
          {"curvature_step", t.curvature_step},
          {"ladder_factor", t.ladder_factor},
          {"residual_rel", t.residual_rel},
          {"decay_low", t.decay_low},
          {"decay_high", t.decay_high},
          {"level_defect", t.level_defect},
          {"comparison", t.comparison},
          {"relabel_ratio", t.relabel_ratio},
          {"affine", t.affine},
          {"l1_slack", t.l1_slack},
          {"perimeter_agreement", t.perimeter_agreement},
          {"layer_cake", t.layer_cake},
          {"perimeter_growth", t.perimeter_growth},
          {"v2_ratio_low", t.v2_ratio_low},
          {"v2_ratio_high", t.v2_ratio_high},
          {"stationary", t.stationary}};
}

bool has_check(const ExperimentConfig& c, const std::string& name) {
  return std::find(c.checks.begin(), c.checks.end(), name) != c.checks.end();
}

void validate(const ExperimentConfig& c) {
  if (c.name.empty()) throw ValidationError("name must be a non-empty string");
  GridSpec grid;
  try {
    grid = c.grid();
    for (int r : c.refinement_n) c.grid_with(r);
  } catch (const SpecError& e) {
    throw ValidationError(std::string("grid: ") + e.what());
  }
  if (!(c.t_end > 0.0)) throw ValidationError("solver.t_end must be positive");
  if (c.epsilon && !(*c.epsilon > 0.0 && *c.epsilon <= 1.0))
    throw ValidationError("solver.epsilon must lie in (0, 1]");
  if (!(c.epsilon_over_h > 0.0)) throw ValidationError("solver.epsilon_over_h must be positive");
  if (!(c.dt_safety > 0.0 && c.dt_safety <= 1.0))
    throw ValidationError("solver.dt_safety must lie in (0, 1]");
  if (c.snapshot_interval < 0.0) throw ValidationError("solver.snapshot_interval must be >= 0");
  for (double m : c.epsilon_ladder)
    if (!(m > 0.0)) throw ValidationError("epsilon_ladder entries must be positive");
  for (double m : c.epsilon_ladder.empty() ? std::vector<double>{0.0} : c.epsilon_ladder) {
    const double e = c.solver_params(grid, m).epsilon;
    if (!(e > 0.0 && e <= 1.0)) throw ValidationError("epsilon must lie in (0, 1]");
  }
  if (c.level_count < 1) throw ValidationError("levels.count must be positive");
  if (!(c.level_margin > 0.0 && c.level_margin < 0.5))
    throw ValidationError("levels.margin must lie in (0, 0.5)");
  for (const auto& name : c.checks)
    if (!known_checks().count(name)) throw ValidationError("unknown check '" + name + "'");
  if (!(c.window_end > c.window_start)) throw ValidationError("verifier.window must be increasing");
  if (c.window_end > c.t_end + 1e-12) throw ValidationError("verifier.window ends after t_end");
  if (!(c.test_radius > 0.0)) throw ValidationError("verifier.test_radius must be positive");
  if (c.checkpoint_time && !(*c.checkpoint_time >= 0.0 && *c.checkpoint_time <= c.t_end))
    throw ValidationError("verifier.checkpoint_time must lie in [0, t_end]");
  if (c.kind == ExperimentKind::Comparison && !c.comparison_data)
    throw ValidationError("comparison experiments need comparison_data");
  if (c.kind == ExperimentKind::Relabel && c.epsilon_ladder.size() < 2)
    throw ValidationError("relabel experiments need an epsilon_ladder of two or more entries");
  if (c.kind == ExperimentKind::Relabel && !(std::abs(c.relabel_a * c.relabel_b) < 1.0))
    throw ValidationError("relabel needs |a * b| < 1");
  if (c.output_directory.empty()) throw ValidationError("outputs.directory must be non-empty");
  try {
    build(c.initial, grid);
    if (c.comparison_data) build(*c.comparison_data, grid);
  } catch (const SpecError& e) {
    throw ValidationError(std::string("initial_data: ") + e.what());
  }
}

}  // namespace

// ---- ExperimentConfig -----------------------------------------------------

GridSpec ExperimentConfig::grid() const { return grid_with(n); }

GridSpec ExperimentConfig::grid_with(int points) const {
  return GridSpec(dimension, half_width, points, boundary);
}

SolverParams ExperimentConfig::solver_params(const GridSpec& g, double epsilon_multiple) const {
  SolverParams p;
  const double h = g.spacing();
  if (epsilon_multiple > 0.0)
    p.epsilon = epsilon_multiple * h;
  else
    p.epsilon = epsilon ? *epsilon : epsilon_over_h * h;
  p.dt_safety = dt_safety;
  p.t_end = t_end;
  if (snapshot_interval > 0.0) {
    p.snapshot_interval = snapshot_interval;
  } else {
    const double dt_max = dt_safety * h * h / (2.0 * g.dimension());
    p.snapshot_interval = t_end / std::ceil(t_end / (10.0 * dt_max) - 1e-9);
  }
  return p;
}

std::vector<double> ExperimentConfig::levels() const {
  if (!level_values.empty()) return level_values;
  const double cap = initial.cap();
  if (cap <= 0.0) return {};
  const double c = initial.far_field_value;
  const double lo = c - cap + level_margin * cap, hi = c + cap - level_margin * cap;
  std::vector<double> out;
  for (int k = 0; k < level_count; ++k) out.push_back(lo + (hi - lo) * (k + 1) / (level_count + 1));
  return out;
}

ExperimentConfig parse_config(const json& j) {
  allow_keys(j, "config",
             {"name", "kind", "grid", "solver", "initial_data", "comparison_data", "levels",
              "verifier", "epsilon_ladder", "relabel", "outputs"});
  ExperimentConfig c;
  c.name = text(j, "name", "config", "");
  const std::string kind = text(j, "kind", "config", "standard");
  if (kind == "standard")
    c.kind = ExperimentKind::Standard;
  else if (kind == "comparison")
    c.kind = ExperimentKind::Comparison;
  else if (kind == "relabel")
    c.kind = ExperimentKind::Relabel;
  else
    throw ValidationError("unknown kind '" + kind + "'");

  if (j.contains("grid")) {
    const json& g = j["grid"];
    allow_keys(g, "grid", {"dimension", "half_width", "n", "boundary"});
    c.dimension = integer(g, "dimension", "grid", c.dimension);
    c.half_width = number(g, "half_width", "grid", c.half_width);
    c.n = integer(g, "n", "grid", c.n);
    try {
      c.boundary = boundary_regime_from_string(text(g, "boundary", "grid", "far_field_constant"));
    } catch (const SpecError& e) {
      throw ValidationError(std::string("grid.boundary: ") + e.what());
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    allow_keys(s, "solver", {"epsilon", "epsilon_over_h", "dt_safety", "t_end", "snapshot_interval"});
    if (s.contains("epsilon") && s.contains("epsilon_over_h"))
      throw ValidationError("solver: give either epsilon or epsilon_over_h, not both");
    if (s.contains("epsilon")) c.epsilon = number(s, "epsilon", "solver", 0.0);
    c.epsilon_over_h = number(s, "epsilon_over_h", "solver", c.epsilon_over_h);
    c.dt_safety = number(s, "dt_safety", "solver", c.dt_safety);
    c.t_end = number(s, "t_end", "solver", c.t_end);
    c.snapshot_interval = number(s, "snapshot_interval", "solver", c.snapshot_interval);
  }
  if (c.dimension != 2 && c.dimension != 3) throw ValidationError("grid.dimension must be 2 or 3");
  if (j.contains("initial_data"))
    c.initial = parse_initial(j["initial_data"], "initial_data", c.dimension, c.certify);
  if (j.contains("comparison_data")) {
    bool unused = true;
    c.comparison_data = parse_initial(j["comparison_data"], "comparison_data", c.dimension, unused);
  }
  if (j.contains("levels")) {
    const json& l = j["levels"];
    allow_keys(l, "levels", {"count", "margin", "values"});
    c.level_count = integer(l, "count", "levels", c.level_count);
    c.level_margin = number(l, "margin", "levels", c.level_margin);
    c.level_values = numbers(l, "values", "levels");
  }
  if (j.contains("verifier")) {
    const json& v = j["verifier"];
    allow_keys(v, "verifier",
               {"checks", "family", "refinement_n", "checkpoint_time", "window", "test_radius",
                "tolerances"});
    if (v.contains("checks")) {
      if (!v["checks"].is_array()) throw ValidationError("verifier.checks must be an array");
      for (const auto& x : v["checks"]) {
        if (!x.is_string()) throw ValidationError("verifier.checks must hold strings");
        c.checks.push_back(x.get<std::string>());
      }
    }
    if (v.contains("family")) {
      const json& f = v["family"];
      if (f.is_string() && f.get<std::string>() == "fixed")
        c.family_seed.reset();
      else if (f.is_number_integer() && f.get<std::int64_t>() >= 0)
        c.family_seed = f.get<std::uint64_t>();
      else
        throw ValidationError("verifier.family must be \"fixed\" or a non-negative seed");
    }
    for (double r : numbers(v, "refinement_n", "verifier")) {
      if (r != std::floor(r)) throw ValidationError("verifier.refinement_n must hold integers");
      c.refinement_n.push_back(static_cast<int>(r));
    }
    if (v.contains("checkpoint_time"))
      c.checkpoint_time = number(v, "checkpoint_time", "verifier", 0.0);
    const auto w = numbers(v, "window", "verifier");
    if (!w.empty()) {
      if (w.size() != 2) throw ValidationError("verifier.window must be [start, end]");
      c.window_start = w[0];
      c.window_end = w[1];
    }
    c.test_radius = number(v, "test_radius", "verifier", c.test_radius);
    if (v.contains("tolerances")) parse_tolerances(v["tolerances"], c.tolerances);
  }
  if (j.contains("epsilon_ladder")) {
    json wrapper{{"epsilon_ladder", j["epsilon_ladder"]}};
    c.epsilon_ladder = numbers(wrapper, "epsilon_ladder", "config");
  }
  if (j.contains("relabel")) {
    const json& r = j["relabel"];
    allow_keys(r, "relabel", {"a", "b"});
    c.relabel_a = number(r, "a", "relabel", c.relabel_a);
    c.relabel_b = number(r, "b", "relabel", c.relabel_b);
  }
  if (j.contains("outputs")) {
    const json& o = j["outputs"];
    allow_keys(o, "outputs", {"directory", "persist_snapshots", "emit_svg"});
    c.output_directory = text(o, "directory", "outputs", c.output_directory.string());
    c.persist_snapshots = boolean(o, "persist_snapshots", "outputs", c.persist_snapshots);
    c.emit_svg = boolean(o, "emit_svg", "outputs", c.emit_svg);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json solver{{"dt_safety", c.dt_safety}, {"t_end", c.t_end}, {"snapshot_interval", c.snapshot_interval}};
  if (c.epsilon)
    solver["epsilon"] = *c.epsilon;
  else
    solver["epsilon_over_h"] = c.epsilon_over_h;
  json verifier{{"checks", c.checks},
                {"refinement_n", c.refinement_n},
                {"window", {c.window_start, c.window_end}},
                {"test_radius", c.test_radius},
                {"tolerances", tolerances_to_json(c.tolerances)}};
  if (c.family_seed)
    verifier["family"] = *c.family_seed;
  else
    verifier["family"] = "fixed";
  if (c.checkpoint_time) verifier["checkpoint_time"] = *c.checkpoint_time;
  json levels{{"count", c.level_count}, {"margin", c.level_margin}};
  if (!c.level_values.empty()) levels["values"] = c.level_values;
  json j{{"name", c.name},
         {"kind", to_string(c.kind)},
         {"grid",
          {{"dimension", c.dimension},
           {"half_width", c.half_width},
           {"n", c.n},
           {"boundary", to_string(c.boundary)}}},
         {"solver", solver},
         {"initial_data", initial_to_json(c.initial, c.dimension, c.certify)},
         {"levels", levels},
         {"verifier", verifier},
         {"outputs",
          {{"directory", c.output_directory.string()},
           {"persist_snapshots", c.persist_snapshots},
           {"emit_svg", c.emit_svg}}}};
  if (c.comparison_data)
    j["comparison_data"] = initial_to_json(*c.comparison_data, c.dimension, c.certify);
  if (!c.epsilon_ladder.empty()) j["epsilon_ladder"] = c.epsilon_ladder;
  if (c.kind == ExperimentKind::Relabel) j["relabel"] = {{"a", c.relabel_a}, {"b", c.relabel_b}};
  return j;
}

// ---- Presets ----------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"stationary",          "shrinking_circle",   "nested_circles_comparison",
          "two_bumps",           "neumann_half_circle", "relabel_ladder",
          "epsilon_ladder_3d_small"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.output_directory = std::filesystem::path("lsmcf_out") / name;
  if (name == "stationary") {
    c.n = 65;
    c.initial.preset = InitialPreset::Constant;
    c.initial.bumps.clear();
    c.initial.far_field_value = 0.25;
    c.level_values = {0.15, 0.35};
    c.checks = {"stationary_residuals", "curvature_mass"};
  } else if (name == "shrinking_circle") {
    c.n = 257;
    c.checks = {"radius_law",        "viscous_dissipation", "curvature_mass", "bv_residuals",
                "v_square_stability", "level_dissipation",  "l1_continuity",  "coarea_layer_cake",
                "coarea_identity",   "perimeter_bound"};
    c.refinement_n = {129};
  } else if (name == "nested_circles_comparison") {
    c.kind = ExperimentKind::Comparison;
    c.n = 129;
    c.t_end = 0.05;
    c.initial.bumps = {BumpParams{{0.0, 0.0, 0.0}, 0.35, 0.2}};
    c.comparison_data = InitialDataSpec{};
    c.comparison_data->bumps = {BumpParams{{0.0, 0.0, 0.0}, 0.4, 0.2}};
    c.checks = {"comparison", "curvature_mass"};
  } else if (name == "two_bumps") {
    c.n = 257;
    c.half_width = 1.5;
    c.t_end = 0.03;
    c.initial.preset = InitialPreset::TwoBumps;
    c.initial.bumps = {BumpParams{{-0.45, 0.0, 0.0}, 0.3, 0.1}, BumpParams{{0.45, 0.0, 0.0}, 0.3, 0.1}};
    c.window_start = 0.005;
    c.window_end = 0.025;
    c.tolerances.perimeter_growth = 0.05;
    c.checks = {"curvature_mass", "perimeter_bound", "coarea_layer_cake"};
  } else if (name == "neumann_half_circle") {
    c.n = 257;
    c.boundary = BoundaryRegime::NeumannBox;
    c.initial.preset = InitialPreset::NeumannHalfBump;
    c.initial.bumps = {BumpParams{{0.0, -1.0, 0.0}, 0.4, 0.2}};
    c.tolerances.radius_rel = 0.03;
    c.checks = {"radius_law", "neumann_residuals", "curvature_mass"};
  } else if (name == "relabel_ladder") {
    c.kind = ExperimentKind::Relabel;
    c.n = 129;
    c.epsilon_ladder = {4.0, 2.0, 1.0};
    c.checks = {"relabel", "curvature_mass", "curvature_mass_ladder"};
  } else if (name == "epsilon_ladder_3d_small") {
    c.dimension = 3;
    c.n = 65;
    c.t_end = 0.02;
    c.window_start = 0.0;
    c.window_end = 0.02;
    c.epsilon_ladder = {4.0, 2.0, 1.0};
    c.tolerances.radius_rel = 0.05;
    c.tolerances.runtime_s = 600.0;
    c.checks = {"radius_law", "curvature_mass", "curvature_mass_ladder"};
  } else {
    throw ValidationError("unknown preset '" + name + "'");
  }
  validate(c);
  return c;
}

// ---- Results ----------------------------------------------------------------

bool ExperimentResult::passed() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const auto& kv) { return kv.second.pass; });
}

json ExperimentResult::summary() const {
  json cl = json::object();
  for (const auto& [key, c] : clauses) {
    json entry = c.detail.is_object() ? c.detail : json::object();
    entry["pass"] = c.pass;
    cl[key] = entry;
  }
  return {{"name", name},
          {"status", passed() ? "pass" : "fail"},
          {"clauses", cl},
          {"metrics", metrics},
          {"runtime_s", runtime_s}};
}

// ---- Pipeline ---------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Index of the grid axis on whose face a half bump is anchored, or -1.
int anchor_axis(const ExperimentConfig& c) {
  if (c.initial.preset != InitialPreset::NeumannHalfBump || c.initial.bumps.empty()) return -1;
  for (int a = 0; a < c.dimension; ++a)
    if (std::abs(std::abs(c.initial.bumps[0].center[a]) - c.half_width) <= 1e-12 * c.half_width)
      return a;
  return -1;
}

bool single_circle(const ExperimentConfig& c) {
  return (c.initial.preset == InitialPreset::RadialBump ||
          c.initial.preset == InitialPreset::NeumannHalfBump) &&
         c.initial.bumps.size() == 1;
}

// Radius of the zero level from the enclosed volume.
double measured_radius(const ExperimentConfig& c, const ScalarField& u) {
  double vol = superlevel_volume(u, c.initial.far_field_value);
  if (anchor_axis(c) >= 0) vol *= 2.0;
  if (c.dimension == 2) return std::sqrt(vol / std::numbers::pi);
  return std::cbrt(3.0 * vol / (4.0 * std::numbers::pi));
}

double exact_radius(const ExperimentConfig& c, double t) {
  const double r0 = c.initial.bumps[0].inner_radius;
  const double sq = r0 * r0 - 2.0 * (c.dimension - 1) * t;
  return sq > 0.0 ? std::sqrt(sq) : 0.0;
}

TestFamily family_for(const ExperimentConfig& c) {
  const BumpParams& b = c.initial.bumps.at(0);
  if (c.family_seed)
    return seeded_family(*c.family_seed, 5, b.center, b.inner_radius, c.test_radius,
                         c.window_start, c.window_end);
  return fixed_family(b.center, b.inner_radius, c.test_radius, c.window_start, c.window_end);
}

Clause curvature_clause(const std::vector<const DiagnosticsSeries*>& runs,
                        const std::vector<double>& epsilons, double tol) {
  Clause cl;
  cl.pass = true;
  json per = json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto cm = curvature_mass_series(*runs[k]);
    const bool ok = cm.max_relative_increase <= tol;
    cl.pass = cl.pass && ok;
    per.push_back({{"epsilon", epsilons[k]},
                   {"max_relative_increase", cm.max_relative_increase},
                   {"max_mass", cm.max_mass},
                   {"pass", ok}});
  }
  cl.detail = {{"tolerance", tol}, {"runs", per}};
  return cl;
}

Clause ladder_clause(const std::vector<const DiagnosticsSeries*>& runs,
                     const std::vector<double>& epsilons, double factor) {
  std::vector<double> maxima, hsq;
  for (const auto* d : runs) {
    maxima.push_back(curvature_mass_series(*d).max_mass);
    hsq.push_back(hsq_weighted_mass(*d));
  }
  Clause cl;
  const double lo = *std::min_element(maxima.begin(), maxima.end());
  const double hi = *std::max_element(maxima.begin(), maxima.end());
  const double ratio = lo > 0.0 ? hi / lo : (hi > 0.0 ? INFINITY : 1.0);
  cl.pass = ratio <= factor;
  const double hlo = *std::min_element(hsq.begin(), hsq.end());
  const double hhi = *std::max_element(hsq.begin(), hsq.end());
  cl.detail = {{"epsilons", epsilons},
               {"max_curvature_mass", maxima},
               {"ratio", ratio},
               {"tolerance", factor},
               {"hsq_mass", hsq},
               {"hsq_ratio", hlo > 0.0 ? hhi / hlo : 1.0}};
  return cl;
}

struct RunSet {
  std::vector<double> epsilons;
  std::vector<Trajectory> runs;
  std::vector<DiagnosticsSeries> diags;
  std::size_t primary = 0;
};

void write_diagnostics_csv(const std::filesystem::path& path, const DiagnosticsSeries& d) {
  std::ofstream out(path);
  out.precision(12);
  out << "time,E_eps,E_tv,curvature_mass,hsq_mass,bulk_dissipation";
  for (std::size_t l = 0; l < d.levels.levels.size(); ++l)
    out << ",level" << l << "_volume,level" << l << "_length,level" << l << "_v2";
  out << '\n';
  double hsq = 0.0;
  for (std::size_t k = 0; k < d.times.size(); ++k) {
    if (k > 0) hsq += 0.5 * (d.times[k] - d.times[k - 1]) * (d.hsq_density[k] + d.hsq_density[k - 1]);
    out << d.times[k] << ',' << d.energy_eps[k] << ',' << d.energy_tv[k] << ','
        << d.curvature_mass[k] << ',' << hsq << ',' << d.bulk_dissipation[k];
    for (const auto& s : d.levels.levels)
      out << ',' << s.volume[k] << ',' << s.perimeter[k] << ',' << s.surface_dissipation[k];
    out << '\n';
  }
}

void write_charts(const std::filesystem::path& dir, const ExperimentConfig& c, const RunSet& set) {
  const DiagnosticsSeries& d = set.diags[set.primary];
  write_line_chart(dir / "energy.svg", c.name + ": energy", "t", "energy",
                   {{"E_eps", d.times, d.energy_eps}, {"E_tv", d.times, d.energy_tv}});
  std::vector<ChartSeries> mass;
  for (std::size_t k = 0; k < set.diags.size(); ++k) {
    std::ostringstream label;
    label << "eps=" << set.epsilons[k];
    mass.push_back({label.str(), set.diags[k].times, set.diags[k].curvature_mass});
  }
  write_line_chart(dir / "curvature_mass.svg", c.name + ": curvature mass", "t", "int |H_eps|",
                   mass);
  if (!d.levels.levels.empty()) {
    std::vector<ChartSeries> lengths;
    for (const auto& s : d.levels.levels) {
      std::ostringstream label;
      label << "s=" << s.level;
      lengths.push_back({label.str(), d.times, s.perimeter});
    }
    write_line_chart(dir / "level_lengths.svg", c.name + ": level-set perimeter", "t", "perimeter",
                     lengths);
  }
  if (single_circle(c) && c.kind == ExperimentKind::Standard) {
    const Trajectory& tr = set.runs[set.primary];
    std::vector<double> measured, exact;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      measured.push_back(measured_radius(c, tr.snapshots[k]));
      exact.push_back(exact_radius(c, tr.times[k]));
    }
    write_line_chart(dir / "radius.svg", c.name + ": zero-level radius", "t", "R",
                     {{"measured", tr.times, measured}, {"exact law", tr.times, exact, true}});
  }
}

void persist(const std::filesystem::path& dir, const ExperimentConfig& c, const Trajectory& tr) {
  const auto snap_dir = dir / "snapshots";
  std::filesystem::create_directories(snap_dir);
  json manifest{{"config", to_json(c)},
                {"dt", tr.dt},
                {"epsilon", tr.epsilon()},
                {"count", tr.size()},
                {"boundary", to_string(tr.grid.boundary())}};
  std::ofstream(snap_dir / "run.json") << manifest.dump(2) << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "snap_%05zu", k);
    write_snapshot(snap_dir / stem, tr.snapshots[k], {tr.times[k], tr.epsilon(), c.name});
  }
}

// Checks that need only the primary trajectory and its diagnostics.
void single_run_checks(const ExperimentConfig& c, const Trajectory& tr, const DiagnosticsSeries& d,
                       std::vector<ResidualReport>& reports, ExperimentResult& result) {
  const Tolerances& tol = c.tolerances;
  const double t_cp = c.checkpoint_time.value_or(tr.times.back());
  const std::size_t cp = tr.index_at(t_cp);
  const double c_inf = c.initial.far_field_value;
  const double h = tr.grid.spacing();
  const bool planar = tr.grid.dimension() == 2;

  if (has_check(c, "radius_law") && single_circle(c)) {
    const double r = measured_radius(c, tr.snapshots[cp]);
    const double exact = exact_radius(c, tr.times[cp]);
    const double rel = std::abs(r - exact) / exact;
    result.metrics["radius_rel_err"] = rel;
    result.clauses["radius_law"] = {rel <= tol.radius_rel,
                                    {{"time", tr.times[cp]},
                                     {"measured_radius", r},
                                     {"exact_radius", exact},
                                     {"radius_rel_err", rel},
                                     {"tolerance", tol.radius_rel}}};
  }

  if (has_check(c, "bv_residuals") || has_check(c, "stationary_residuals")) {
    FamilyRequest req;
    if (c.initial.preset == InitialPreset::Constant) {
      req.family = fixed_family({0.0, 0.0, 0.0}, 0.4, c.test_radius, c.window_start, c.window_end);
      if (planar) req.levels = c.levels();
    } else {
      req.family = family_for(c);
      if (planar) req.levels = {c_inf};
    }
    auto reps = evaluate_family(tr, req);
    reports.insert(reports.end(), reps.begin(), reps.end());
  }

  if (has_check(c, "stationary_residuals")) {
    double worst = 0.0;
    for (const auto& r : reports) worst = std::max(worst, std::abs(r.raw));
    const auto dd = dissipation_defect(d, 0.0, tr.times.back());
    double level_worst = 0.0;
    for (const auto& s : d.levels.levels)
      level_worst = std::max(level_worst,
                             std::abs(level_dissipation_defect(s, d.times, 0.0, tr.times.back()).defect));
    const bool ok = worst <= tol.stationary && std::abs(dd.defect) <= 1e-10 && level_worst <= 1e-10;
    result.clauses["stationary_residuals"] = {ok,
                                              {{"max_abs_residual", worst},
                                               {"dissipation_defect", dd.defect},
                                               {"max_level_defect", level_worst},
                                               {"tolerance", tol.stationary}}};
  }

  if (has_check(c, "level_dissipation") && planar) {
    Clause cl;
    cl.pass = true;
    json per = json::array();
    for (const auto& s : d.levels.levels) {
      const auto ld = level_dissipation_defect(s, d.times, 0.0, tr.times[cp]);
      const bool ok = ld.defect <= tol.level_defect * ld.length_t1;
      cl.pass = cl.pass && ok;
      per.push_back({{"level", s.level},
                     {"length_t1", ld.length_t1},
                     {"length_t2", ld.length_t2},
                     {"dissipation", ld.dissipation},
                     {"defect", ld.defect},
                     {"relative_defect", ld.length_t1 > 0 ? ld.defect / ld.length_t1 : 0.0},
                     {"pass", ok}});
    }
    cl.detail = {{"levels", per}, {"tolerance", tol.level_defect}};
    if (single_circle(c)) {
      // Both sides of the circle equality.
      const LevelSweep sweep = sweep_levels(tr, {c_inf});
      const auto ld = level_dissipation_defect(sweep.levels[0], sweep.times, 0.0, tr.times[cp]);
      const double rel = std::abs(ld.defect) / ld.length_t1;
      const bool ok = rel <= tol.level_defect;
      cl.pass = cl.pass && ok;
      cl.detail["circle"] = {{"level", c_inf},
                             {"lhs", ld.length_t2 + ld.dissipation},
                             {"rhs", ld.length_t1},
                             {"relative_gap", rel},
                             {"pass", ok}};
    }
    result.clauses["level_dissipation"] = cl;
  }

  if (has_check(c, "l1_continuity") && planar && single_circle(c)) {
    const LevelSweep sweep = sweep_levels(tr, {c_inf});
    const auto l1 = l1_continuity_check(tr, sweep.levels[0], 0.0, tr.times[cp], tol.l1_slack);
    const double r0 = exact_radius(c, 0.0), r1 = exact_radius(c, tr.times[cp]);
    double reference = std::numbers::pi * (r0 * r0 - r1 * r1);
    if (anchor_axis(c) >= 0) reference *= 0.5;
    result.clauses["l1_continuity"] = {l1.pass,
                                       {{"lhs", l1.lhs},
                                        {"rhs", l1.rhs},
                                        {"slack", l1.slack},
                                        {"slack_fraction", tol.l1_slack},
                                        {"reference_lhs", reference},
                                        {"lhs_rel_err", std::abs(l1.lhs - reference) / reference},
                                        {"perimeter_weighted_bound", l1.perimeter_weighted_bound}}};
  }

  if (has_check(c, "coarea_layer_cake")) {
    const std::vector<double> levels = c.levels();
    double worst_perimeter = 0.0, worst_cake = 0.0;
    json snaps = json::array();
    for (std::size_t k : {std::size_t{0}, cp}) {
      const ScalarField& u = tr.snapshots[k];
      json entry{{"time", tr.times[k]}};
      if (planar) {
        const auto coarea = coarea_density(u, levels, 2.0 * h);
        json per = json::array();
        for (std::size_t l = 0; l < levels.size(); ++l) {
          // The averaging band has to fit inside the range of u.
          if (levels[l] - h <= u.min() || levels[l] + h >= u.max()) {
            per.push_back({{"level", levels[l]}, {"skipped", "band leaves the range of u"}});
            continue;
          }
          const double length = extract_contour(u, levels[l]).length();
          const double rel = std::abs(coarea[l] - length) / std::max(length, coarea[l]);
          worst_perimeter = std::max(worst_perimeter, rel);
          per.push_back({{"level", levels[l]}, {"contour", length}, {"coarea", coarea[l]}, {"rel", rel}});
        }
        entry["perimeters"] = per;
      }
      // Layer cake with Phi = exp.
      // K = min u puts the jump of |{u > s}| on the interval end.
      const double K = u.min(), hi = u.max();
      const int count = 256;
      const double ds = (hi - K) / count;
      double rhs = 0.0;
      for (int m = 0; m < count; ++m) {
        const double s = K + (m + 0.5) * ds;
        rhs += std::exp(s) * superlevel_volume(u, s) * ds;
      }
      ScalarField phi = u;
      for (double& v : phi.values()) v = std::exp(v);
      const double lhs = integrate(phi) - std::exp(K) * tr.grid.box_volume();
      const double rel = std::abs(lhs - rhs) / std::abs(lhs);
      worst_cake = std::max(worst_cake, rel);
      entry["layer_cake"] = {{"lhs", lhs}, {"rhs", rhs}, {"rel", rel}};
      snaps.push_back(entry);
    }
    const bool ok = worst_perimeter <= tol.perimeter_agreement && worst_cake <= tol.layer_cake;
    result.clauses["coarea_layer_cake"] = {ok,
                                           {{"snapshots", snaps},
                                            {"max_perimeter_disagreement", worst_perimeter},
                                            {"max_layer_cake_rel", worst_cake},
                                            {"perimeter_tolerance", tol.perimeter_agreement},
                                            {"layer_cake_tolerance", tol.layer_cake}}};
  }

  if (has_check(c, "coarea_identity") && c.initial.cap() > 0.0) {
    // phi is a quartic bump supported in the certified band.
    const double cap = c.initial.cap();
    const double half = cap - c.level_margin * cap;
    auto phi = [&](double s) {
      const double q = (s - c_inf) / half;
      return std::abs(q) >= 1.0 ? 0.0 : (1.0 - q * q) * (1.0 - q * q);
    };
    const int count = 64;
    const double ds = 2.0 * half / count;
    std::vector<double> levels;
    for (int m = 0; m < count; ++m) levels.push_back(c_inf - half + (m + 0.5) * ds);
    double worst = 0.0;
    json snaps = json::array();
    for (std::size_t k : {std::size_t{0}, cp}) {
      const ScalarField& u = tr.snapshots[k];
      const ScalarField gn = gradient(u).norm();
      ScalarField dens = gn;
      for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = gn[i] * phi(u[i]);
      const double lhs = integrate(dens);
      const auto p = coarea_density(u, levels, ds);
      double rhs = 0.0;
      for (int m = 0; m < count; ++m) rhs += phi(levels[m]) * p[m] * ds;
      const double rel = lhs > 0.0 ? std::abs(lhs - rhs) / lhs : std::abs(rhs);
      worst = std::max(worst, rel);
      snaps.push_back({{"time", tr.times[k]}, {"lhs", lhs}, {"rhs", rhs}, {"rel", rel}});
    }
    result.clauses["coarea_identity"] = {worst <= tol.perimeter_agreement,
                                         {{"snapshots", snaps},
                                          {"max_rel", worst},
                                          {"tolerance", tol.perimeter_agreement}}};
  }

  if (has_check(c, "perimeter_bound")) {
    Clause cl;
    cl.pass = true;
    json per = json::array();
    for (const auto& s : d.levels.levels) {
      const double first = s.perimeter.front();
      const double peak = *std::max_element(s.perimeter.begin(), s.perimeter.end());
      const bool ok = peak <= first * (1.0 + tol.perimeter_growth);
      cl.pass = cl.pass && ok;
      per.push_back({{"level", s.level}, {"initial", first}, {"max", peak}, {"pass", ok}});
    }
    cl.detail = {{"levels", per}, {"tolerance", tol.perimeter_growth}};
    result.clauses["perimeter_bound"] = cl;
  }

  if (has_check(c, "neumann_residuals") && planar) {
    const int axis = anchor_axis(c);
    if (axis < 0) throw ValidationError("neumann_residuals needs a neumann_half_bump datum");
    const BumpParams& b = c.initial.bumps[0];
    FamilyRequest req;
    req.family = neumann_family(b.center, axis, b.inner_radius, c.test_radius, c.window_start,
                                c.window_end);
    auto reps = evaluate_family(tr, req);
    const double mc = median_relative(reps, Identity::DistMC);
    const double v = median_relative(reps, Identity::DistV);
    reports.insert(reports.end(), reps.begin(), reps.end());
    result.clauses["neumann_residuals"] = {mc <= tol.residual_rel,
                                           {{"median_distMC", mc},
                                            {"median_distV", v},
                                            {"tolerance", tol.residual_rel}}};
  }

  const auto dd = dissipation_defect(d, 0.0, tr.times[cp]);
  result.metrics["tv_dissipation"] = {{"E_t1", dd.energy_t1},
                                      {"E_t2", dd.energy_t2},
                                      {"E_eps_t1", dd.energy_eps_t1},
                                      {"E_eps_t2", dd.energy_eps_t2},
                                      {"dissipation", dd.dissipation},
                                      {"defect", dd.defect},
                                      {"defect_over_drop",
                                       dd.energy_t1 > dd.energy_t2
                                           ? dd.defect / (dd.energy_t1 - dd.energy_t2)
                                           : 0.0}};
  result.metrics["hsq_mass"] = hsq_weighted_mass(d);
}

Clause bv_residual_clause(const ExperimentConfig& c, const std::vector<ResidualReport>& fine,
                          const std::map<int, std::vector<ResidualReport>>& coarse) {
  const Tolerances& tol = c.tolerances;
  Clause cl;
  cl.pass = true;
  json ids = json::object();
  for (Identity id : {Identity::DistV, Identity::DistMC, Identity::LevelV, Identity::LevelMC}) {
    const double med = median_relative(fine, id);
    bool ok = med <= tol.residual_rel;
    json entry{{"median_rel", med}, {"n", c.n}, {"within_tolerance", ok}};
    json decays = json::array();
    for (const auto& [n, reps] : coarse) {
      const double other = median_relative(reps, id);
      const double ratio = n < c.n ? (other > 0.0 ? med / other : 0.0)
                                   : (med > 0.0 ? other / med : 0.0);
      const bool in_band = ratio >= tol.decay_low && ratio <= tol.decay_high;
      ok = ok && in_band;
      decays.push_back({{"n", n}, {"median_rel", other}, {"ratio_fine_over_coarse", ratio},
                        {"pass", in_band}});
    }
    entry["refinement"] = decays;
    entry["pass"] = ok;
    cl.pass = cl.pass && ok;
    ids[to_string(id)] = entry;
  }
  cl.detail = {{"identities", ids},
               {"tolerance", tol.residual_rel},
               {"decay_band", {tol.decay_low, tol.decay_high}}};
  return cl;
}

void standard_pipeline(const ExperimentConfig& c, ExperimentResult& result,
                       std::vector<ResidualReport>& reports, RunSet& set) {
  const GridSpec grid = c.grid();
  const ScalarField g = build(c.initial, grid);
  if (c.certify) {
    const auto rep = certify_well_prepared(g, certification_ladder(grid));
    result.metrics["certification"] = {{"epsilons", rep.epsilons},
                                       {"curvature_mass", rep.curvature_mass},
                                       {"growth", rep.growth}};
  }
  set.epsilons.clear();
  std::vector<double> multiples = c.epsilon_ladder;
  if (multiples.empty()) multiples = {0.0};
  for (double m : multiples) set.epsilons.push_back(c.solver_params(grid, m).epsilon);
  set.primary = static_cast<std::size_t>(
      std::min_element(set.epsilons.begin(), set.epsilons.end()) - set.epsilons.begin());
  set.runs.resize(multiples.size());
  const bool track = has_check(c, "viscous_dissipation");
  const auto solve_start = Clock::now();
  parallel_for(multiples.size(), [&](std::size_t k) {
    RunOptions opts;
    opts.track_energy = track && k == set.primary;
    set.runs[k] = run(g, c.solver_params(grid, multiples[k]), opts);
  });
  result.metrics["solver_runtime_s"] = seconds_since(solve_start);

  const Trajectory& tr = set.runs[set.primary];
  set.diags.resize(set.runs.size());
  for (std::size_t k = 0; k < set.runs.size(); ++k)
    set.diags[k] = compute_diagnostics(set.runs[k], k == set.primary ? c.levels() : std::vector<double>{});
  const DiagnosticsSeries& d = set.diags[set.primary];

  std::vector<const DiagnosticsSeries*> dptr;
  for (const auto& x : set.diags) dptr.push_back(&x);
  if (has_check(c, "curvature_mass"))
    result.clauses["curvature_mass"] = curvature_clause(dptr, set.epsilons, c.tolerances.curvature_step);
  if (has_check(c, "curvature_mass_ladder") && set.runs.size() > 1)
    result.clauses["curvature_mass_ladder"] = ladder_clause(dptr, set.epsilons, c.tolerances.ladder_factor);

  if (track) {
    double max_step = -INFINITY, cumulative = 0.0;
    const auto& e = tr.step_energy;
    for (std::size_t k = 0; k + 1 < e.size(); ++k) {
      max_step = std::max(max_step, e[k + 1] - e[k]);
      cumulative += e[k + 1] - e[k] + tr.dt * tr.step_dissipation[k];
    }
    const double drop = e.front() - e.back();
    const bool monotone = max_step <= c.tolerances.energy_step * e.front();
    const bool defect_ok = std::abs(cumulative) <= c.tolerances.energy_defect * drop;
    result.clauses["viscous_dissipation"] = {monotone && defect_ok,
                                             {{"E_eps_0", e.front()},
                                              {"E_eps_T", e.back()},
                                              {"max_step_increase", max_step},
                                              {"step_tolerance", c.tolerances.energy_step * e.front()},
                                              {"cumulative_defect", cumulative},
                                              {"defect_over_drop", drop > 0 ? cumulative / drop : 0.0},
                                              {"defect_tolerance", c.tolerances.energy_defect},
                                              {"steps", e.size() - 1}}};
  }

  single_run_checks(c, tr, d, reports, result);

  if (has_check(c, "bv_residuals")) {
    std::map<int, std::vector<ResidualReport>> coarse;
    std::map<int, double> v2;
    const double c_inf = c.initial.far_field_value;
    const double t_cp = c.checkpoint_time.value_or(tr.times.back());
    for (int n : c.refinement_n) {
      const GridSpec rg = c.grid_with(n);
      const Trajectory rt = run(build(c.initial, rg), c.solver_params(rg, c.epsilon_ladder.empty() ? 0.0 : 1.0));
      FamilyRequest req;
      req.family = family_for(c);
      if (c.dimension == 2) req.levels = {c_inf};
      coarse[n] = evaluate_family(rt, req);
      reports.insert(reports.end(), coarse[n].begin(), coarse[n].end());
      if (has_check(c, "v_square_stability") && c.dimension == 2) {
        const LevelSweep s = sweep_levels(rt, {c_inf});
        v2[n] = level_dissipation_defect(s.levels[0], s.times, 0.0, t_cp).dissipation;
      }
    }
    std::vector<ResidualReport> fine;
    for (const auto& r : reports)
      if (r.n == c.n && (r.identity == Identity::DistV || r.identity == Identity::DistMC ||
                         r.identity == Identity::LevelV || r.identity == Identity::LevelMC))
        fine.push_back(r);
    result.clauses["bv_residuals"] = bv_residual_clause(c, fine, coarse);

    if (has_check(c, "v_square_stability") && c.dimension == 2) {
      const LevelSweep s = sweep_levels(tr, {c_inf});
      const double here = level_dissipation_defect(s.levels[0], s.times, 0.0, t_cp).dissipation;
      Clause cl;
      cl.pass = std::isfinite(here);
      json per = json::array();
      for (const auto& [n, value] : v2) {
        const double ratio = here / value;
        const bool ok = ratio >= c.tolerances.v2_ratio_low && ratio <= c.tolerances.v2_ratio_high;
        cl.pass = cl.pass && ok;
        per.push_back({{"n", n}, {"v2", value}, {"ratio", ratio}, {"pass", ok}});
      }
      cl.detail = {{"level", c_inf}, {"v2", here}, {"n", c.n}, {"refinement", per}};
      result.clauses["v_square_stability"] = cl;
    }
  }
}

void comparison_pipeline(const ExperimentConfig& c, ExperimentResult& result, RunSet& set) {
  const GridSpec grid = c.grid();
  const ScalarField g1 = build(c.initial, grid);
  const ScalarField g2 = build(*c.comparison_data, grid);
  for (std::size_t i = 0; i < g1.size(); ++i)
    if (g1[i] > g2[i] + 1e-15) throw ValidationError("comparison data must satisfy g1 <= g2");
  if (c.certify) {
    certify_well_prepared(g1, certification_ladder(grid));
    certify_well_prepared(g2, certification_ladder(grid));
  }
  const SolverParams p = c.solver_params(grid);
  set.runs.resize(1);
  const double excess = comparison_excess(g1, g2, p, &set.runs[0]);
  set.epsilons = {p.epsilon};
  set.diags = {compute_diagnostics(set.runs[0], c.levels())};
  result.clauses["comparison"] = {excess <= c.tolerances.comparison,
                                  {{"max_u1_minus_u2", excess}, {"tolerance", c.tolerances.comparison}}};
  if (has_check(c, "curvature_mass"))
    result.clauses["curvature_mass"] =
        curvature_clause({&set.diags[0]}, set.epsilons, c.tolerances.curvature_step);
}

void relabel_pipeline(const ExperimentConfig& c, ExperimentResult& result, RunSet& set) {
  const GridSpec grid = c.grid();
  const ScalarField g = build(c.initial, grid);
  if (c.certify) certify_well_prepared(g, certification_ladder(grid));
  const TanhRelabel phi(c.relabel_a, c.relabel_b);
  std::vector<double> eps;
  for (double m : c.epsilon_ladder) eps.push_back(c.solver_params(grid, m).epsilon);
  RelabelReport rep = relabel_compare(g, phi, c.solver_params(grid), eps);
  SolverParams finest = c.solver_params(grid);
  finest.epsilon = *std::min_element(eps.begin(), eps.end());
  const double affine = affine_rescaling_deviation(g, finest);
  const double ratio = rep.ladder_ratio();
  result.clauses["relabel"] = {ratio <= c.tolerances.relabel_ratio && affine <= c.tolerances.affine,
                               {{"epsilons", eps},
                                {"deviation", rep.deviation},
                                {"ratio_smallest_over_largest", ratio},
                                {"ratio_tolerance", c.tolerances.relabel_ratio},
                                {"affine_deviation", affine},
                                {"affine_tolerance", c.tolerances.affine}}};
  set.epsilons = eps;
  set.runs = std::move(rep.base_runs);
  set.primary = static_cast<std::size_t>(std::min_element(eps.begin(), eps.end()) - eps.begin());
  set.diags.resize(set.runs.size());
  for (std::size_t k = 0; k < set.runs.size(); ++k)
    set.diags[k] = compute_diagnostics(set.runs[k], k == set.primary ? c.levels() : std::vector<double>{});
  std::vector<const DiagnosticsSeries*> dptr;
  for (const auto& x : set.diags) dptr.push_back(&x);
  if (has_check(c, "curvature_mass"))
    result.clauses["curvature_mass"] = curvature_clause(dptr, eps, c.tolerances.curvature_step);
  if (has_check(c, "curvature_mass_ladder"))
    result.clauses["curvature_mass_ladder"] = ladder_clause(dptr, eps, c.tolerances.ladder_factor);
}

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& c,
                   const ExperimentResult& result, const std::vector<ResidualReport>& reports,
                   const RunSet& set, const std::string& summary_name) {
  std::filesystem::create_directories(dir);
  if (!set.diags.empty()) write_diagnostics_csv(dir / "diagnostics.csv", set.diags[set.primary]);
  {
    std::ofstream out(dir / "residuals.csv");
    write_residual_csv(out, reports);
  }
  json summary = result.summary();
  if (!set.diags.empty()) {
    json levels = json::array();
    for (const auto& s : set.diags[set.primary].levels.levels) levels.push_back(s.level);
    summary["levels"] = levels;
  }
  std::ofstream(dir / summary_name) << summary.dump(2) << '\n';
  if (c.emit_svg && !set.diags.empty()) write_charts(dir, c, set);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const auto start = Clock::now();
  ExperimentResult result;
  result.name = config.name;
  std::vector<ResidualReport> reports;
  RunSet set;
  switch (config.kind) {
    case ExperimentKind::Standard:
      standard_pipeline(config, result, reports, set);
      break;
    case ExperimentKind::Comparison:
      comparison_pipeline(config, result, set);
      break;
    case ExperimentKind::Relabel:
      relabel_pipeline(config, result, set);
      break;
  }
  result.runtime_s = seconds_since(start);
  if (auto it = result.clauses.find("radius_law"); it != result.clauses.end()) {
    it->second.detail["runtime_s"] = result.runtime_s;
    it->second.detail["runtime_limit_s"] = config.tolerances.runtime_s;
    it->second.pass = it->second.pass && result.runtime_s <= config.tolerances.runtime_s;
  }
  write_outputs(config.output_directory, config, result, reports, set, "summary.json");
  if (config.persist_snapshots && !set.runs.empty())
    persist(config.output_directory, config, set.runs[set.primary]);
  return result;
}

ExperimentResult verify_snapshots(const std::filesystem::path& snapshot_dir) {
  std::ifstream in(snapshot_dir / "run.json");
  if (!in) throw ValidationError("no run.json in " + snapshot_dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("run.json is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = parse_config(manifest.at("config"));
  const BoundaryRegime regime = boundary_regime_from_string(manifest.at("boundary").get<std::string>());
  const std::size_t count = manifest.at("count").get<std::size_t>();

  Trajectory tr;
  for (std::size_t k = 0; k < count; ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "snap_%05zu", k);
    LoadedSnapshot snap = read_snapshot(snapshot_dir / stem, regime);
    if (k == 0) {
      tr.grid = snap.field.grid();
      tr.initial = snap.field;
      tr.params = c.solver_params(tr.grid);
      tr.params.epsilon = snap.meta.epsilon;
    }
    if (!(snap.field.grid() == tr.grid)) throw ValidationError("snapshots disagree on the grid");
    tr.times.push_back(snap.meta.time);
    tr.snapshots.push_back(std::move(snap.field));
  }
  if (tr.size() < 2) throw ValidationError("verification needs at least two snapshots");
  tr.dt = manifest.at("dt").get<double>();
  tr.far_field = tr.initial[0];

  // Checks that need fresh solver runs are not repeated here.
  std::erase_if(c.checks, [](const std::string& s) {
    return s == "viscous_dissipation" || s == "curvature_mass_ladder" || s == "comparison" ||
           s == "relabel" || s == "v_square_stability" || s == "radius_law";
  });
  const auto start = Clock::now();
  ExperimentResult result;
  result.name = c.name;
  std::vector<ResidualReport> reports;
  RunSet set;
  set.epsilons = {tr.epsilon()};
  set.diags = {compute_diagnostics(tr, c.levels())};
  if (has_check(c, "curvature_mass"))
    result.clauses["curvature_mass"] =
        curvature_clause({&set.diags[0]}, set.epsilons, c.tolerances.curvature_step);
  single_run_checks(c, tr, set.diags[0], reports, result);
  if (has_check(c, "bv_residuals")) result.clauses["bv_residuals"] = bv_residual_clause(c, reports, {});
  if (single_circle(c) && c.kind == ExperimentKind::Standard) {
    const std::size_t cp = tr.index_at(c.checkpoint_time.value_or(tr.times.back()));
    const double r = measured_radius(c, tr.snapshots[cp]);
    const double exact = exact_radius(c, tr.times[cp]);
    const double rel = std::abs(r - exact) / exact;
    result.clauses["radius_law"] = {rel <= c.tolerances.radius_rel,
                                    {{"time", tr.times[cp]},
                                     {"measured_radius", r},
                                     {"exact_radius", exact},
                                     {"radius_rel_err", rel},
                                     {"tolerance", c.tolerances.radius_rel}}};
  }
  result.runtime_s = seconds_since(start);
  set.runs.push_back(std::move(tr));
  c.emit_svg = false;
  write_outputs(snapshot_dir, c, result, reports, set, "verify_summary.json");
  return result;
}

}  // namespace lsmcf
