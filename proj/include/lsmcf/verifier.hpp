#pragma once

// Residuals and defects of the weak (BV) solution identities evaluated on
// computed trajectories.
//
// Space integrals use the trapezoid node weights of integrate(); integrals over
// level sets use contour_integral(). In time, terms carrying d/dt of a test
// function integrate the analytic derivative against the piecewise-linear
// interpolant of the snapshots. Every other term uses the trapezoid rule over
// snapshots.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lsmcf/field.hpp"
#include "lsmcf/geometry.hpp"
#include "lsmcf/solver.hpp"

namespace lsmcf {

/// zeta(x, t) = amplitude * rho(|x - center| / radius) * theta(t) with
/// rho(q) = 1 - S(q), theta(t) = 1 - S(|t - t_center| / t_half_width) and S the
/// quintic smoothstep.
struct TestScalar {
  std::string id;
  Point center{0.0, 0.0, 0.0};
  double radius = 0.15;
  double t_center = 0.03;
  double t_half_width = 0.02;
  double amplitude = 1.0;

  double window_start() const noexcept { return t_center - t_half_width; }
  double window_end() const noexcept { return t_center + t_half_width; }
  /// amplitude * rho at x.
  double space(const Point& x) const;
  std::array<double, 3> space_gradient(const Point& x) const;
  double time(double t) const;
  double time_derivative(double t) const;
  double value(const Point& x, double t) const { return space(x) * time(t); }
};

/// xi = zeta * e_direction.
struct TestVector {
  TestScalar base;
  int direction = 0;
};

enum class Identity { DistV, DistMC, LevelV, LevelMC };
std::string to_string(Identity id);

struct ResidualReport {
  Identity identity = Identity::DistV;
  std::string test_id;
  /// Signed terms whose sum is the raw residual.
  std::vector<double> terms;
  double raw = 0.0;
  /// Sum of |terms|.
  double normalization = 0.0;
  /// raw / normalization; 0 when degenerate.
  double relative = 0.0;
  bool degenerate = false;
  int n = 0;
  double epsilon = 0.0;
  std::optional<double> level;
  std::pair<double, double> t_window{0.0, 0.0};

  /// Throws DegenerateTest when the normalization is below 1e-12.
  const ResidualReport& checked() const;
};

/// Integral identity for the normal velocity in the bulk.
ResidualReport residual_distV(const Trajectory& traj, const TestScalar& zeta,
                              double cutoff_factor = 0.1);
/// Integral identity for the curvature in the bulk, nu = nu_eps.
ResidualReport residual_distMC(const Trajectory& traj, const TestVector& xi,
                               double cutoff_factor = 0.1);
/// Level-set form of the velocity identity (2D).
ResidualReport residual_level_V(const Trajectory& traj, double s, const TestScalar& zeta,
                                double cutoff_factor = 0.1);
/// Level-set form of the curvature identity (2D).
ResidualReport residual_level_MC(const Trajectory& traj, double s, const TestVector& xi,
                                 double cutoff_factor = 0.1);

struct TestFamily {
  std::vector<TestScalar> scalars;
  std::vector<TestVector> vectors;
};

/// Five scalar and five vector bumps centered on the circle of radius
/// `circle_radius` at angles 2 pi k / 5. Each vector bump points along the axis
/// best aligned with the radial direction at its center.
TestFamily fixed_family(const Point& center, double circle_radius, double test_radius = 0.15,
                        double t_start = 0.01, double t_stop = 0.05);
/// Random angles, radial offsets within +-test_radius/3, radii in
/// [0.7, 1.3] * test_radius and random axes, reproducible from the seed.
TestFamily seeded_family(std::uint64_t seed, int count, const Point& center, double circle_radius,
                         double test_radius = 0.15, double t_start = 0.01, double t_stop = 0.05);
/// Half circle anchored on the face normal to `anchor_axis`: centers at angles
/// pi k / 4, k = 0..4, measured from the first tangential axis, vector fields
/// along that tangential axis (so xi . n = 0 on the anchoring face).
TestFamily neumann_family(const Point& center, int anchor_axis, double circle_radius,
                          double test_radius = 0.15, double t_start = 0.01, double t_stop = 0.05);

struct FamilyRequest {
  TestFamily family;
  bool bulk = true;
  /// Level identities are evaluated at each of these levels (2D only).
  std::vector<double> levels;
  double cutoff_factor = 0.1;
};

/// All residuals of a family in one pass over the snapshots. Order: bulk
/// scalars, bulk vectors, then per level scalars and vectors.
std::vector<ResidualReport> evaluate_family(const Trajectory& traj, const FamilyRequest& request);

/// Median |relative| over the non-degenerate reports of one identity; 0 if none.
double median_relative(const std::vector<ResidualReport>& reports, Identity id);

/// Columns identity, test_id, raw, norm, rel, n, epsilon, level, t_window.
void write_residual_csv(std::ostream& out, const std::vector<ResidualReport>& reports);

/// Per-snapshot functionals.
struct DiagnosticsSeries {
  std::vector<double> times;
  std::vector<double> energy_eps;        // integral of sqrt(|grad u|^2 + eps^2)
  std::vector<double> energy_tv;         // integral of |grad u|
  std::vector<double> curvature_mass;    // integral of |H_eps|
  std::vector<double> hsq_density;       // integral of H_eps^2 sqrt(|grad u|^2 + eps^2)
  std::vector<double> bulk_dissipation;  // integral of V^2 |grad u|
  LevelSweep levels;
};

DiagnosticsSeries compute_diagnostics(const Trajectory& traj, const std::vector<double>& levels,
                                      double cutoff_factor = 0.1);

struct DissipationDefect {
  double energy_t1 = 0.0;
  double energy_t2 = 0.0;
  double energy_eps_t1 = 0.0;
  double energy_eps_t2 = 0.0;
  double dissipation = 0.0;
  /// E(t2) + dissipation - E(t1); non-positive when the inequality holds.
  double defect = 0.0;
};

DissipationDefect dissipation_defect(const DiagnosticsSeries& series, double t1, double t2);
DissipationDefect dissipation_defect(const Trajectory& traj, double t1, double t2);

struct LevelDissipation {
  double level = 0.0;
  double length_t1 = 0.0;
  double length_t2 = 0.0;
  double dissipation = 0.0;
  double defect = 0.0;
};

LevelDissipation level_dissipation_defect(const LevelSeries& series,
                                          const std::vector<double>& times, double t1, double t2);
LevelDissipation level_dissipation_defect(const Trajectory& traj, double s, double t1, double t2);

struct CurvatureMassSeries {
  std::vector<double> times;
  std::vector<double> mass;
  double max_mass = 0.0;
  /// Largest M(t_{k+1}) - M(t_k), and the same relative to M(t_k).
  double max_increase = 0.0;
  double max_relative_increase = 0.0;
};

CurvatureMassSeries curvature_mass_series(const DiagnosticsSeries& series);
CurvatureMassSeries curvature_mass_series(const Trajectory& traj);

/// Trapezoid in time of hsq_density over the whole run.
double hsq_weighted_mass(const DiagnosticsSeries& series);
double hsq_weighted_mass(const Trajectory& traj);

struct L1Continuity {
  double lhs = 0.0;
  /// sqrt(t1 - t0) * sqrt(integral of V^2 over the level, t0..t1).
  double rhs = 0.0;
  double slack = 0.0;  // h * max perimeter
  bool pass = false;
  /// sqrt(integral of perimeter dt) * sqrt(same V^2 integral); the
  /// Cauchy-Schwarz bound for the symmetric difference.
  double perimeter_weighted_bound = 0.0;
};

/// Passes when lhs <= rhs * (1 + slack_fraction) + h * max perimeter.
L1Continuity l1_continuity_check(const Trajectory& traj, const LevelSeries& series, double t0,
                                 double t1, double slack_fraction = 0.1);
L1Continuity l1_continuity_check(const Trajectory& traj, double s, double t0, double t1,
                                 double slack_fraction = 0.1);

/// Phi(s) = s + a tanh(b s). Requires a * b < 1 so that Phi' > 0.
struct TanhRelabel {
  double a = 0.3;
  double b = 1.0;
  TanhRelabel(double a, double b);
  double operator()(double s) const;
};

struct RelabelReport {
  std::vector<double> epsilons;
  /// sup over grid and snapshots of |u_{Phi(g)} - Phi(u_g)|.
  std::vector<double> deviation;
  /// Trajectories from g, one per epsilon, kept for further diagnostics.
  std::vector<Trajectory> base_runs;
  /// deviation at the smallest epsilon over deviation at the largest.
  double ladder_ratio() const;
};

/// Runs g and Phi(g) with identical parameters for each epsilon (fanned out).
RelabelReport relabel_compare(const ScalarField& g, const std::function<double(double)>& phi,
                              const SolverParams& params, const std::vector<double>& epsilons);

/// sup |v - (2 u + 1)| where u runs from g at eps and v from 2 g + 1 at 2 eps.
double affine_rescaling_deviation(const ScalarField& g, const SolverParams& params);

/// max over grid and snapshots of u1 - u2 for runs from g1 and g2. The run
/// from g2 is moved into `upper` when given.
double comparison_excess(const ScalarField& g1, const ScalarField& g2, const SolverParams& params,
                         Trajectory* upper = nullptr);

}  // namespace lsmcf
