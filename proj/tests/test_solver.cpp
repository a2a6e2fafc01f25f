#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lsmcf/errors.hpp"
#include "lsmcf/initial_data.hpp"
#include "lsmcf/solver.hpp"

using namespace lsmcf;
using doctest::Approx;

namespace {

SolverParams params_for(const GridSpec& g, double t_end, double eps_over_h = 1.0) {
  SolverParams p;
  p.epsilon = eps_over_h * g.spacing();
  p.t_end = t_end;
  return p;
}

// Radial form of the rhs: psi'' eps^2 / (psi'^2 + eps^2) + (d - 1) psi' / r.
double radial_rhs(const RadialProfile& p, double r, double eps, int d) {
  const double s = p.slope(r), c = p.curvature(r);
  return c * eps * eps / (s * s + eps * eps) + (d - 1) * s / r;
}

struct RhsError {
  double hessian_form = 0.0;
  double divergence_form = 0.0;
};

RhsError rhs_error(int n, double eps) {
  GridSpec g(2, 1.0, n);
  const RadialProfile prof(0.4, 0.2);
  const ScalarField u = build(InitialDataSpec{}, g);
  const ScalarField f = rhs_hessian_form(u, eps), fd = rhs_divergence_form(u, eps);
  RhsError err;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point x = g.position(i);
    const double r = std::hypot(x[0], x[1]);
    if (r < 0.1 || r > 0.7) continue;
    const double exact = radial_rhs(prof, r, eps, 2);
    err.hessian_form = std::max(err.hessian_form, std::abs(f[i] - exact));
    err.divergence_form = std::max(err.divergence_form, std::abs(fd[i] - exact));
  }
  return err;
}

}  // namespace

TEST_CASE("time step plan") {
  GridSpec g(2, 1.0, 65);
  SolverParams p = params_for(g, 0.01);
  p.snapshot_interval = 1e-3;
  const auto plan = plan_time_steps(g, p);
  const double h = g.spacing();
  CHECK(plan.dt <= 0.8 * h * h / 4 * (1 + 1e-12));
  CHECK(plan.snapshot_interval() == Approx(1e-3));
  CHECK(plan.snapshot_count == 10);

  p.snapshot_interval = 0;
  const auto dflt = plan_time_steps(g, p);
  CHECK(dflt.steps_per_snapshot == 10);
  CHECK(dflt.dt == Approx(0.8 * h * h / 4));

  p.epsilon = 0;
  CHECK_THROWS_AS(plan_time_steps(g, p), SpecError);
}

TEST_CASE("rhs of a radial profile") {
  // |psi''| reaches 30/16 / (cap/2) = 18.75 on the ramps.
  for (double eps : {0.05, 0.2}) {
    const auto coarse = rhs_error(129, eps), fine = rhs_error(257, eps);
    CHECK(fine.hessian_form < 0.03 * 18.75);
    CHECK(fine.hessian_form < 0.4 * coarse.hessian_form);
    CHECK(fine.divergence_form < 0.6 * coarse.divergence_form);
  }
}

TEST_CASE("energy functionals of flat and linear data") {
  GridSpec g(2, 1.0, 129);
  const ScalarField flat(g, 0.3);
  CHECK(regularized_energy(flat, 0.1) == Approx(0.4));
  CHECK(total_variation(flat) < 1e-12);
  const ScalarField ramp = ScalarField::sample(g, [](const Point& x) { return 0.5 * x[0]; });
  CHECK(total_variation(ramp) == Approx(2.0));
}

TEST_CASE("property: constants are stationary") {
  for (auto regime : {BoundaryRegime::FarFieldConstant, BoundaryRegime::NeumannBox}) {
    GridSpec g(2, 1.0, 33, regime);
    const ScalarField c(g, -0.7);
    const auto tr = run(c, params_for(g, 0.01));
    for (const auto& s : tr.snapshots)
      for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(s[i] == -0.7);
  }
}

TEST_CASE("property: maximum principle") {
  GridSpec g(2, 1.0, 65);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  for (int trial = 0; trial < 3; ++trial) {
    InitialDataSpec spec;
    spec.far_field_value = U(rng);
    spec.bumps[0].center = {U(rng) * 0.3, U(rng) * 0.3, 0};
    spec.bumps[0].inner_radius = 0.3 + std::abs(U(rng)) * 0.2;
    const ScalarField g0 = build(spec, g);
    const auto tr = run(g0, params_for(g, 0.02));
    for (const auto& s : tr.snapshots) {
      REQUIRE(s.max() <= g0.max() + 1e-12);
      REQUIRE(s.min() >= g0.min() - 1e-12);
    }
  }
}

TEST_CASE("property: comparison of ordered data") {
  GridSpec g(2, 1.0, 65);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    InitialDataSpec lo, hi;
    const double r = 0.3 + 0.05 * U(rng);
    lo.bumps[0].inner_radius = r;
    hi.bumps[0].inner_radius = r + 0.02 + 0.05 * U(rng);
    const ScalarField g1 = build(lo, g), g2 = build(hi, g);
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(g1[i] <= g2[i]);
    const auto t1 = run(g1, params_for(g, 0.02)), t2 = run(g2, params_for(g, 0.02));
    for (std::size_t k = 0; k < t1.size(); ++k)
      for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(t1.snapshots[k][i] <= t2.snapshots[k][i] + 1e-12);
  }
}

TEST_CASE("property: far-field faces stay fixed") {
  GridSpec g(2, 1.0, 65);
  InitialDataSpec spec;
  spec.far_field_value = 0.1;
  const auto tr = run(build(spec, g), params_for(g, 0.03));
  CHECK(tr.far_field == Approx(-0.1));
  for (const auto& s : tr.snapshots)
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.on_boundary(i)) REQUIRE(s[i] == tr.far_field);
}

TEST_CASE("property: runs are deterministic") {
  GridSpec g(2, 1.0, 49);
  const ScalarField g0 = build(InitialDataSpec{}, g);
  const auto a = run(g0, params_for(g, 0.01)), b = run(g0, params_for(g, 0.01));
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(a.snapshots[k][i] == b.snapshots[k][i]);
}

TEST_CASE("trajectory layout and energy tracking") {
  GridSpec g(2, 1.0, 65);
  SolverParams p = params_for(g, 0.02);
  p.snapshot_interval = 0.002;
  RunOptions opts;
  opts.track_energy = true;
  int observed = 0;
  opts.observer = [&](double, const ScalarField&) { ++observed; };
  const auto tr = run(build(InitialDataSpec{}, g), p, opts);
  CHECK(tr.size() == 11);
  CHECK(observed == 11);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == Approx(0.02));
  CHECK(tr.index_at(0.0071) == 4);
  for (std::size_t k = 0; k + 1 < tr.step_energy.size(); ++k)
    REQUIRE(tr.step_energy[k + 1] <= tr.step_energy[k]);
  const ScalarField ut = tr.time_derivative(3);
  const ScalarField direct = time_derivative(tr.snapshots[3], p.epsilon);
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(ut[i] == direct[i]);
}

TEST_CASE("shrinking circle radius") {
  // Zero-level area pi (R0^2 - 2t) at t = 0.04.
  GridSpec g(2, 1.0, 129);
  const auto tr = run(build(InitialDataSpec{}, g), params_for(g, 0.04));
  const ScalarField& u = tr.snapshots.back();
  double area = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) area += (u[i] > 0.0) * g.cell_volume();
  const double r = std::sqrt(area / M_PI);
  CHECK(r == Approx(std::sqrt(0.16 - 0.08)).epsilon(0.03));
}

TEST_CASE("blow-up detection") {
  GridSpec g(2, 1.0, 33);
  ScalarField u = build(InitialDataSpec{}, g);
  SolverParams p = params_for(g, 0.01);
  CHECK_THROWS_AS(step(u, p, 1e-5, u[0], 0.05), BlowupError);
  u[500] = std::numeric_limits<double>::quiet_NaN();
  try {
    step(u, p, 1e-5, u[0], 1e6, 0.25);
    FAIL("expected a blow-up");
  } catch (const BlowupError& e) {
    CHECK(e.time() == Approx(0.25 + 1e-5));
  }
}
