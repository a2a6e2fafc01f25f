#pragma once

// Explicit Euler integration of the regularized level set equation
//
//   u_t = Lap u - (grad u . Hess u grad u) / (|grad u|^2 + eps^2)
//       = -H_eps sqrt(|grad u|^2 + eps^2),   H_eps = div nu_eps,
//   nu_eps = -grad u / sqrt(|grad u|^2 + eps^2).
//
// Cost is O(n^d) per step with O(n^2) steps to a fixed horizon, i.e. O(n^4)
// in 2D and O(n^5) in 3D.

#include <functional>
#include <vector>

#include "lsmcf/field.hpp"

namespace lsmcf {

struct SolverParams {
  double epsilon = 0.0;
  /// dt = dt_safety * h^2 / (2d), rounded down to divide snapshot_interval.
  double dt_safety = 0.8;
  double t_end = 0.0;
  /// <= 0 selects the default of ten time steps.
  double snapshot_interval = 0.0;

  void validate() const;
};

struct TimeStepPlan {
  double dt = 0.0;
  int steps_per_snapshot = 1;
  int snapshot_count = 0;  // excluding the initial snapshot
  double snapshot_interval() const noexcept { return dt * steps_per_snapshot; }
};

TimeStepPlan plan_time_steps(const GridSpec& grid, const SolverParams& params);

/// Hessian form of the right-hand side, evaluated at every node.
ScalarField rhs_hessian_form(const ScalarField& u, double epsilon);
/// -div(nu_eps) * sqrt(|grad u|^2 + eps^2).
ScalarField rhs_divergence_form(const ScalarField& u, double epsilon);

VectorField approximate_normal(const ScalarField& u, double epsilon);
/// H_eps = div nu_eps, always from the divergence form.
ScalarField approximate_curvature(const ScalarField& u, double epsilon);
/// sqrt(|grad u|^2 + eps^2) at every node.
ScalarField regularized_gradient_norm(const ScalarField& u, double epsilon);

/// E_eps = integral of sqrt(|grad u|^2 + eps^2).
double regularized_energy(const ScalarField& u, double epsilon);
/// E = integral of |grad u|.
double total_variation(const ScalarField& u);

/// Discrete u_t of the scheme: the Hessian-form rhs, zero on faces held
/// fixed under FarFieldConstant.
ScalarField time_derivative(const ScalarField& u, double epsilon);

/// One explicit Euler step. `far_field` is the face value re-imposed under
/// FarFieldConstant. Throws BlowupError on non-finite samples or when the
/// sup-norm exceeds `blowup_bound`.
ScalarField step(const ScalarField& u, const SolverParams& params, double dt, double far_field,
                 double blowup_bound, double time = 0.0);

struct Trajectory {
  GridSpec grid;
  SolverParams params;
  double dt = 0.0;
  double far_field = 0.0;
  ScalarField initial;
  std::vector<double> times;
  std::vector<ScalarField> snapshots;
  /// E_eps and integral of H_eps^2 sqrt(...) at the start of every step, plus
  /// the final state; empty unless energy tracking was requested.
  std::vector<double> step_energy;
  std::vector<double> step_dissipation;

  double epsilon() const noexcept { return params.epsilon; }
  std::size_t size() const noexcept { return snapshots.size(); }
  ScalarField time_derivative(std::size_t k) const;
  /// Index of the snapshot closest to t.
  std::size_t index_at(double t) const;
};

struct RunOptions {
  bool keep_snapshots = true;
  bool track_energy = false;
  /// Called with (time, u) for the initial state and every snapshot.
  std::function<void(double, const ScalarField&)> observer;
};

/// Integrates from g to params.t_end. The first snapshot is (0, g).
Trajectory run(const ScalarField& g, const SolverParams& params, const RunOptions& options = {});

}  // namespace lsmcf
