#include "lsmcf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"

namespace lsmcf {

void SolverParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw SpecError("epsilon must be positive");
  if (!(dt_safety > 0.0 && dt_safety <= 1.0)) throw SpecError("dt_safety must lie in (0, 1]");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw SpecError("t_end must be non-negative");
  if (!std::isfinite(snapshot_interval)) throw SpecError("snapshot_interval must be finite");
}

TimeStepPlan plan_time_steps(const GridSpec& grid, const SolverParams& params) {
  params.validate();
  const double h = grid.spacing();
  const double dt_max = params.dt_safety * h * h / (2.0 * grid.dimension());
  TimeStepPlan plan;
  if (params.snapshot_interval > 0.0) {
    plan.steps_per_snapshot =
        std::max(1, static_cast<int>(std::ceil(params.snapshot_interval / dt_max - 1e-9)));
    plan.dt = params.snapshot_interval / plan.steps_per_snapshot;
  } else {
    plan.steps_per_snapshot = 10;
    plan.dt = dt_max;
  }
  const double interval = plan.snapshot_interval();
  plan.snapshot_count = params.t_end > 0.0
                            ? static_cast<int>(std::ceil(params.t_end / interval - 1e-9))
                            : 0;
  return plan;
}

namespace {

ScalarField hessian_rhs(const ScalarField& u, double epsilon) {
  const GridSpec& grid = u.grid();
  const int d = grid.dimension();
  const VectorField grad = gradient(u);
  const SymMatrixField hess = hessian(u);
  ScalarField out(grid);
  const double eps2 = epsilon * epsilon;
  if (d == 2) {
    const auto ux = grad.component(0), uy = grad.component(1);
    const auto uxx = hess.entry(0, 0), uxy = hess.entry(0, 1), uyy = hess.entry(1, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double px = ux[i], py = uy[i];
      const double quad = px * px * uxx[i] + 2.0 * px * py * uxy[i] + py * py * uyy[i];
      out[i] = uxx[i] + uyy[i] - quad / (px * px + py * py + eps2);
    }
    return out;
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sq = eps2, lap = 0.0, quad = 0.0;
    for (int a = 0; a < d; ++a) {
      const double pa = grad.component(a)[i];
      sq += pa * pa;
      lap += hess.entry(a, a)[i];
      for (int b = 0; b < d; ++b) quad += pa * hess.entry(a, b)[i] * grad.component(b)[i];
    }
    out[i] = lap - quad / sq;
  }
  return out;
}

void zero_faces(ScalarField& f) {
  const GridSpec& grid = f.grid();
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.on_boundary(i)) f[i] = 0.0;
}

}  // namespace

ScalarField rhs_hessian_form(const ScalarField& u, double epsilon) {
  if (!(epsilon > 0.0)) throw SpecError("epsilon must be positive");
  return hessian_rhs(u, epsilon);
}

VectorField approximate_normal(const ScalarField& u, double epsilon) {
  VectorField nu = gradient(u);
  const GridSpec& grid = u.grid();
  const double eps2 = epsilon * epsilon;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sq = eps2;
    for (int a = 0; a < grid.dimension(); ++a) sq += nu.component(a)[i] * nu.component(a)[i];
    const double inv = -1.0 / std::sqrt(sq);
    for (int a = 0; a < grid.dimension(); ++a) nu.component(a)[i] *= inv;
  }
  return nu;
}

ScalarField approximate_curvature(const ScalarField& u, double epsilon) {
  return divergence(approximate_normal(u, epsilon));
}

ScalarField regularized_gradient_norm(const ScalarField& u, double epsilon) {
  const VectorField grad = gradient(u);
  ScalarField out(u.grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double sq = epsilon * epsilon;
    for (int a = 0; a < u.grid().dimension(); ++a) sq += grad.component(a)[i] * grad.component(a)[i];
    out[i] = std::sqrt(sq);
  }
  return out;
}

ScalarField rhs_divergence_form(const ScalarField& u, double epsilon) {
  if (!(epsilon > 0.0)) throw SpecError("epsilon must be positive");
  ScalarField h = approximate_curvature(u, epsilon);
  const ScalarField root = regularized_gradient_norm(u, epsilon);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = -h[i] * root[i];
  return h;
}

double regularized_energy(const ScalarField& u, double epsilon) {
  return integrate(regularized_gradient_norm(u, epsilon));
}

double total_variation(const ScalarField& u) { return integrate(gradient(u).norm()); }

ScalarField time_derivative(const ScalarField& u, double epsilon) {
  ScalarField ut = rhs_hessian_form(u, epsilon);
  if (u.grid().boundary() == BoundaryRegime::FarFieldConstant) zero_faces(ut);
  return ut;
}

ScalarField step(const ScalarField& u, const SolverParams& params, double dt, double far_field,
                 double blowup_bound, double time) {
  ScalarField next = rhs_hessian_form(u, params.epsilon);
  const GridSpec& grid = u.grid();
  const bool far = grid.boundary() == BoundaryRegime::FarFieldConstant;
  double sup = 0.0;
  bool finite = true;
  for (std::size_t i = 0; i < next.size(); ++i) {
    double v = u[i] + dt * next[i];
    if (far && grid.on_boundary(i)) v = far_field;
    next[i] = v;
    finite = finite && std::isfinite(v);
    sup = std::max(sup, std::abs(v));
  }
  if (!finite || sup > blowup_bound) {
    std::ostringstream msg;
    msg << "solver blow-up at t = " << time + dt
        << (finite ? " (sup-norm exceeded bound)" : " (non-finite sample)");
    throw BlowupError(msg.str(), time + dt);
  }
  return next;
}

ScalarField Trajectory::time_derivative(std::size_t k) const {
  return lsmcf::time_derivative(snapshots.at(k), params.epsilon);
}

std::size_t Trajectory::index_at(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return times.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  return (t - times[hi - 1] <= times[hi] - t) ? hi - 1 : hi;
}

Trajectory run(const ScalarField& g, const SolverParams& params, const RunOptions& options) {
  const TimeStepPlan plan = plan_time_steps(g.grid(), params);
  Trajectory traj;
  traj.grid = g.grid();
  traj.params = params;
  traj.dt = plan.dt;
  traj.initial = g;
  traj.far_field = g[0];  // corner node; well-prepared data are constant there

  const double initial_sup = g.sup_norm();
  const double bound = initial_sup > 0.0 ? 2.0 * initial_sup : 1e-300;
  auto record = [&](double t, const ScalarField& u) {
    if (options.observer) options.observer(t, u);
    if (options.keep_snapshots) {
      traj.times.push_back(t);
      traj.snapshots.push_back(u);
    }
  };
  auto track = [&](const ScalarField& u) {
    if (!options.track_energy) return;
    const ScalarField root = regularized_gradient_norm(u, params.epsilon);
    const ScalarField curv = approximate_curvature(u, params.epsilon);
    std::vector<double> dens(u.size());
    for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = curv[i] * curv[i] * root[i];
    traj.step_energy.push_back(integrate(root));
    traj.step_dissipation.push_back(integrate(u.grid(), dens));
  };

  ScalarField u = g;
  record(0.0, u);
  long long n = 0;
  for (int s = 0; s < plan.snapshot_count; ++s) {
    for (int k = 0; k < plan.steps_per_snapshot; ++k, ++n) {
      track(u);
      u = step(u, params, plan.dt, traj.far_field, bound, static_cast<double>(n) * plan.dt);
    }
    record(static_cast<double>(n) * plan.dt, u);
  }
  track(u);
  return traj;
}

}  // namespace lsmcf
