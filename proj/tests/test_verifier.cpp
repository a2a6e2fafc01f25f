#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "lsmcf/errors.hpp"
#include "lsmcf/initial_data.hpp"
#include "lsmcf/solver.hpp"
#include "lsmcf/verifier.hpp"

using namespace lsmcf;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

SolverParams circle_params(const GridSpec& g, double t_end = 0.06) {
  SolverParams p;
  p.epsilon = g.spacing();
  p.t_end = t_end;
  const double dt_max = 0.8 * g.spacing() * g.spacing() / 4;
  p.snapshot_interval = t_end / std::ceil(t_end / (10 * dt_max));
  return p;
}

const Trajectory& circle() {
  static const Trajectory tr = [] {
    GridSpec g(2, 1.0, 129);
    return run(build(InitialDataSpec{}, g), circle_params(g));
  }();
  return tr;
}

}  // namespace

TEST_CASE("test function shape") {
  TestScalar z{"z", {0.1, -0.2, 0}, 0.2, 0.03, 0.02, 2.0};
  CHECK(z.space({0.1, -0.2, 0}) == 2.0);
  CHECK(std::abs(z.space({0.3, -0.2, 0})) < 1e-12);
  CHECK(z.time(0.03) == 1.0);
  CHECK(std::abs(z.time(0.01)) < 1e-12);
  CHECK(std::abs(z.time(0.05)) < 1e-12);
  CHECK(z.window_start() == Approx(0.01));
  CHECK(z.window_end() == Approx(0.05));
  const double step = 1e-7;
  for (double t : {0.015, 0.025, 0.04}) {
    const double fd = (z.time(t + step) - z.time(t - step)) / (2 * step);
    CHECK(z.time_derivative(t) == Approx(fd).epsilon(1e-5));
  }
  const Point x{0.2, -0.13, 0};
  const auto grad = z.space_gradient(x);
  for (int a = 0; a < 2; ++a) {
    Point xp = x, xm = x;
    xp[a] += step;
    xm[a] -= step;
    CHECK(grad[a] == Approx((z.space(xp) - z.space(xm)) / (2 * step)).epsilon(1e-5));
  }
  CHECK(z.value(x, 0.03) == Approx(z.space(x)));
}

TEST_CASE("families") {
  const TestFamily f = fixed_family({0, 0, 0}, 0.4);
  REQUIRE(f.scalars.size() == 5);
  REQUIRE(f.vectors.size() == 5);
  for (int k = 0; k < 5; ++k) {
    const auto& c = f.scalars[k].center;
    CHECK(std::hypot(c[0], c[1]) == Approx(0.4));
    CHECK(std::atan2(c[1], c[0]) == Approx(std::remainder(2 * pi * k / 5, 2 * pi)));
    CHECK(f.scalars[k].id == "zeta" + std::to_string(k));
    CHECK(f.vectors[k].base.id == "xi" + std::to_string(k));
  }
  // Vector fields follow the axis closest to the radial direction.
  CHECK(f.vectors[0].direction == 0);
  CHECK(f.vectors[1].direction == 1);

  const TestFamily a = seeded_family(42, 5, {0, 0, 0}, 0.4), b = seeded_family(42, 5, {0, 0, 0}, 0.4);
  const TestFamily c = seeded_family(43, 5, {0, 0, 0}, 0.4);
  for (int k = 0; k < 5; ++k) {
    CHECK(a.scalars[k].center == b.scalars[k].center);
    CHECK(a.scalars[k].radius == b.scalars[k].radius);
    CHECK(a.scalars[k].radius >= 0.7 * 0.15 - 1e-12);
    CHECK(a.scalars[k].radius <= 1.3 * 0.15 + 1e-12);
  }
  CHECK(a.scalars[0].center != c.scalars[0].center);

  const TestFamily n = neumann_family({0, -1, 0}, 1, 0.4);
  REQUIRE(n.scalars.size() == 5);
  for (const auto& v : n.vectors) {
    CHECK(v.direction == 0);
    CHECK(v.base.center[1] >= -1.0);
  }
}

TEST_CASE("residuals vanish on stationary data") {
  GridSpec g(2, 1.0, 65);
  SolverParams p = circle_params(g);
  const Trajectory tr = run(ScalarField(g, 0.3), p);
  FamilyRequest req;
  req.family = fixed_family({0, 0, 0}, 0.4);
  req.levels = {0.3};
  const auto reps = evaluate_family(tr, req);
  CHECK(reps.size() == 20);
  for (const auto& r : reps) {
    CHECK(std::abs(r.raw) <= 1e-12);
    CHECK(r.n == 65);
    CHECK(r.epsilon == Approx(g.spacing()));
  }
}

TEST_CASE("degenerate normalization") {
  GridSpec g(2, 1.0, 65);
  const Trajectory tr = run(ScalarField(g, 0.0), circle_params(g));
  TestScalar z{"corner", {0.7, 0.7, 0}, 0.1, 0.03, 0.02, 1.0};
  const ResidualReport r = residual_distMC(tr, TestVector{z, 0});
  CHECK(r.degenerate);
  CHECK(r.relative == 0.0);
  CHECK_THROWS_AS(r.checked(), DegenerateTest);
}

TEST_CASE("shrinking circle residuals are small") {
  const Trajectory& tr = circle();
  FamilyRequest req;
  req.family = fixed_family({0, 0, 0}, 0.4);
  req.levels = {0.0};
  const auto reps = evaluate_family(tr, req);
  REQUIRE(reps.size() == 20);
  for (Identity id : {Identity::DistV, Identity::DistMC, Identity::LevelV, Identity::LevelMC})
    CHECK(median_relative(reps, id) < 0.01);
  for (const auto& r : reps) {
    CHECK_FALSE(r.degenerate);
    CHECK(r.t_window.first == Approx(0.01));
    CHECK(r.t_window.second == Approx(0.05));
    double sum = 0.0, norm = 0.0;
    for (double t : r.terms) {
      sum += t;
      norm += std::abs(t);
    }
    CHECK(r.raw == Approx(sum));
    CHECK(r.normalization == Approx(norm));
  }
  // Single-test entry points agree with the batched evaluation.
  const ResidualReport one = residual_distV(tr, req.family.scalars[2]);
  CHECK(one.raw == Approx(reps[2].raw).epsilon(1e-12));
  const ResidualReport lvl = residual_level_MC(tr, 0.0, req.family.vectors[3]);
  CHECK(lvl.raw == Approx(reps[18].raw).epsilon(1e-12));
  CHECK(lvl.level.value() == 0.0);
}

TEST_CASE("residual csv") {
  const Trajectory& tr = circle();
  FamilyRequest req;
  req.family = fixed_family({0, 0, 0}, 0.4);
  const auto reps = evaluate_family(tr, req);
  std::ostringstream out;
  write_residual_csv(out, reps);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "identity,test_id,raw,norm,rel,n,epsilon,level,t_window");
  std::getline(in, line);
  CHECK(line.rfind("distV,zeta0,", 0) == 0);
  CHECK(line.find(",0.01:0.05") != std::string::npos);
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 10);
}

TEST_CASE("test admissibility") {
  const Trajectory& tr = circle();
  FamilyRequest late;
  late.family.scalars = {TestScalar{"late", {0.4, 0, 0}, 0.15, 0.05, 0.02, 1.0}};
  CHECK_THROWS_AS(evaluate_family(tr, late), SpecError);
  FamilyRequest outside;
  outside.family.scalars = {TestScalar{"out", {0.95, 0, 0}, 0.15, 0.03, 0.02, 1.0}};
  CHECK_THROWS_AS(evaluate_family(tr, outside), SpecError);
  FamilyRequest early;
  early.family.vectors = {TestVector{TestScalar{"early", {0.4, 0, 0}, 0.15, 0.01, 0.02, 1.0}, 0}};
  CHECK_THROWS_AS(evaluate_family(tr, early), SpecError);
}

TEST_CASE("dissipation diagnostics on the shrinking circle") {
  const Trajectory& tr = circle();
  const DiagnosticsSeries d = compute_diagnostics(tr, {-0.1, 0.0, 0.1});
  REQUIRE(d.times.size() == tr.size());
  const auto cm = curvature_mass_series(d);
  CHECK(cm.max_relative_increase <= 1e-3);
  CHECK(cm.max_mass > 0.0);

  const DissipationDefect dd = dissipation_defect(d, 0.0, 0.06);
  CHECK(dd.energy_t2 < dd.energy_t1);
  CHECK(dd.defect < 0.05 * (dd.energy_t1 - dd.energy_t2));

  // Zero level: L = 2 pi R with R^2 = 0.16 - 2t and V = 1/R, so the V^2 integral is
  // 2 pi (R(0) - R(T)).
  const LevelDissipation ld = level_dissipation_defect(d.levels.levels[1], d.times, 0.0, 0.06);
  CHECK(ld.length_t1 == Approx(2 * pi * 0.4).epsilon(2e-3));
  CHECK(ld.length_t2 == Approx(2 * pi * 0.2).epsilon(5e-3));
  CHECK(ld.dissipation == Approx(2 * pi * 0.2).epsilon(0.02));
  CHECK(std::abs(ld.defect) < 0.03 * ld.length_t1);

  CHECK(hsq_weighted_mass(d) > 0.0);
}

TEST_CASE("L1 continuity quantities") {
  const Trajectory& tr = circle();
  const L1Continuity l1 = l1_continuity_check(tr, 0.0, 0.0, 0.06);
  CHECK(l1.lhs == Approx(pi * 0.12).epsilon(0.01));
  CHECK(l1.rhs > 0.0);
  CHECK(l1.perimeter_weighted_bound >= l1.lhs * 0.98);
  CHECK(l1.slack == Approx(tr.grid.spacing() * 2 * pi * 0.4).epsilon(0.01));
}

TEST_CASE("property: diagnostics do not depend on the thread count") {
  GridSpec g(2, 1.0, 65);
  const Trajectory tr = run(build(InitialDataSpec{}, g), circle_params(g, 0.03));
  setenv("LSMCF_THREADS", "1", 1);
  const DiagnosticsSeries a = compute_diagnostics(tr, {0.0});
  FamilyRequest req;
  req.family = fixed_family({0, 0, 0}, 0.4, 0.15, 0.005, 0.025);
  req.levels = {0.0};
  const auto ra = evaluate_family(tr, req);
  setenv("LSMCF_THREADS", "3", 1);
  const DiagnosticsSeries b = compute_diagnostics(tr, {0.0});
  const auto rb = evaluate_family(tr, req);
  unsetenv("LSMCF_THREADS");
  CHECK(a.energy_eps == b.energy_eps);
  CHECK(a.curvature_mass == b.curvature_mass);
  CHECK(a.levels.levels[0].perimeter == b.levels.levels[0].perimeter);
  for (std::size_t k = 0; k < ra.size(); ++k) REQUIRE(ra[k].raw == rb[k].raw);
}

TEST_CASE("relabeling and comparison") {
  CHECK_THROWS_AS(TanhRelabel(2.0, 0.6), SpecError);
  const TanhRelabel phi(0.3, 1.0);
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(0.5) == Approx(0.5 + 0.3 * std::tanh(0.5)));

  GridSpec g(2, 1.0, 33);
  const ScalarField g0 = build(InitialDataSpec{}, g);
  SolverParams p = circle_params(g, 0.01);
  CHECK(affine_rescaling_deviation(g0, p) <= 1e-10);

  const RelabelReport rep = relabel_compare(g0, phi, p, {4 * g.spacing(), g.spacing()});
  REQUIRE(rep.deviation.size() == 2);
  REQUIRE(rep.base_runs.size() == 2);
  CHECK(rep.ladder_ratio() == Approx(rep.deviation[1] / rep.deviation[0]));

  InitialDataSpec small;
  small.bumps[0].inner_radius = 0.35;
  GridSpec g2(2, 1.0, 49);
  const ScalarField lo = build(small, g2), hi = build(InitialDataSpec{}, g2);
  SolverParams p2 = circle_params(g2, 0.01);
  Trajectory upper;
  CHECK(comparison_excess(lo, hi, p2, &upper) <= 1e-12);
  CHECK(upper.size() > 1);
  CHECK(comparison_excess(hi, lo, p2) > 0.01);
}
