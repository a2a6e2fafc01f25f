#pragma once

// Declarative experiments: JSON configuration, presets, the run pipeline
// (build, certify, solve, measure, verify) and its artifacts.
//
// Config schema (every key optional unless noted; unknown keys are rejected):
//   name            string (required)
//   kind            "standard" | "comparison" | "relabel"
//   grid            {dimension, half_width, n, boundary}
//   solver          {epsilon | epsilon_over_h, dt_safety, t_end, snapshot_interval}
//   initial_data    {preset, far_field_value, bumps: [{center, inner_radius, cap}], certify}
//   comparison_data same shape as initial_data; the upper datum of a comparison
//   levels          {count, margin, values}
//   verifier        {checks, family, refinement_n, checkpoint_time, window, test_radius,
//                    tolerances: {...}}
//   epsilon_ladder  list of multiples of h
//   relabel         {a, b}
//   outputs         {directory, persist_snapshots, emit_svg}

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lsmcf/field.hpp"
#include "lsmcf/initial_data.hpp"
#include "lsmcf/solver.hpp"

namespace lsmcf {

enum class ExperimentKind { Standard, Comparison, Relabel };

struct Tolerances {
  double radius_rel = 0.02;
  double runtime_s = 300.0;
  double energy_step = 1e-8;      // per-step increase relative to E_eps(0)
  double energy_defect = 0.05;    // cumulative defect relative to the drop
  double curvature_step = 1e-3;   // per-interval relative increase
  double ladder_factor = 2.0;
  double residual_rel = 0.05;
  double decay_low = 0.3;
  double decay_high = 0.8;
  double level_defect = 0.03;
  double comparison = 1e-6;
  double relabel_ratio = 0.5;
  double affine = 1e-10;
  double l1_slack = 0.1;
  double perimeter_agreement = 0.03;
  double layer_cake = 0.01;
  double perimeter_growth = 0.03;
  double v2_ratio_low = 0.8;
  double v2_ratio_high = 1.25;
  double stationary = 1e-12;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::Standard;

  int dimension = 2;
  double half_width = 1.0;
  int n = 129;
  BoundaryRegime boundary = BoundaryRegime::FarFieldConstant;

  /// Absolute epsilon when set, otherwise epsilon_over_h * h.
  std::optional<double> epsilon;
  double epsilon_over_h = 1.0;
  double dt_safety = 0.8;
  double t_end = 0.06;
  /// <= 0: the largest interval of ten steps that divides t_end.
  double snapshot_interval = 0.0;

  InitialDataSpec initial;
  bool certify = true;
  std::optional<InitialDataSpec> comparison_data;

  int level_count = 5;
  double level_margin = 0.1;  // eta as a fraction of the cap
  std::vector<double> level_values;  // explicit override

  std::vector<std::string> checks;
  std::optional<std::uint64_t> family_seed;  // nullopt: fixed family
  std::vector<int> refinement_n;
  std::optional<double> checkpoint_time;  // default t_end
  double window_start = 0.01;
  double window_end = 0.05;
  double test_radius = 0.15;
  Tolerances tolerances;

  std::vector<double> epsilon_ladder;  // multiples of h
  double relabel_a = 0.3;
  double relabel_b = 1.0;

  std::filesystem::path output_directory = "lsmcf_out";
  bool persist_snapshots = false;
  bool emit_svg = true;

  GridSpec grid() const;
  GridSpec grid_with(int points) const;
  SolverParams solver_params(const GridSpec& grid, double epsilon_multiple = 0.0) const;
  /// Levels evenly spaced strictly inside the certified band, or the override.
  std::vector<double> levels() const;
};

/// Throws ValidationError on schema or value errors, before any compute.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

std::vector<std::string> preset_names();
/// Throws ValidationError for unknown names.
ExperimentConfig preset(const std::string& name);

struct Clause {
  bool pass = false;
  nlohmann::json detail;
};

struct ExperimentResult {
  std::string name;
  std::map<std::string, Clause> clauses;
  nlohmann::json metrics = nlohmann::json::object();
  double runtime_s = 0.0;
  bool passed() const;
  nlohmann::json summary() const;
};

/// Full pipeline. Writes diagnostics.csv, residuals.csv, summary.json and
/// (optionally) SVG charts and snapshots under the output directory.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Reloads persisted snapshots and re-runs the single-trajectory checks.
/// Writes verify_summary.json and residuals.csv into `snapshot_dir`.
ExperimentResult verify_snapshots(const std::filesystem::path& snapshot_dir);

}  // namespace lsmcf
