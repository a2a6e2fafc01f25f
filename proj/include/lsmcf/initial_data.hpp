#pragma once

#include <string>
#include <vector>

#include "lsmcf/field.hpp"

namespace lsmcf {

/// Monotone C^3 radial profile psi with psi(r) = cap for r <= inner plateau
/// edge, a unit-slope zone crossing zero at `zero_radius`, and psi = -cap for
/// r >= outer_radius(). The slope -psi' is a quintic smoothstep ramp up, a
/// plateau at 1 and a quintic smoothstep ramp down; ramp width cap/2, plateau
/// width 3*cap/2.
class RadialProfile {
 public:
  RadialProfile(double zero_radius, double cap);

  double value(double r) const;
  double slope(double r) const;      // psi'
  double curvature(double r) const;  // psi''

  double zero_radius() const noexcept { return zero_radius_; }
  double cap() const noexcept { return cap_; }
  double ramp_width() const noexcept { return 0.5 * cap_; }
  double inner_radius() const noexcept { return inner_; }
  /// psi is exactly -cap beyond this radius.
  double outer_radius() const noexcept { return inner_ + 2.0 * ramp_width() + 1.5 * cap_; }
  /// r with psi(r) = level, for level in (-cap, cap). Bisection on [inner, outer].
  double radius_of_level(double level) const;

 private:
  double zero_radius_;
  double cap_;
  double inner_;
};

/// Quintic smoothstep 6q^5 - 15q^4 + 10q^3 on [0, 1], clamped outside.
double smoothstep5(double q);
double smoothstep5_derivative(double q);

struct BumpParams {
  Point center{0.0, 0.0, 0.0};
  double inner_radius = 0.4;  // R0, where psi crosses zero with slope -1
  double cap = 0.2;           // delta

  RadialProfile profile() const { return RadialProfile(inner_radius, cap); }
};

enum class InitialPreset { Constant, RadialBump, TwoBumps, NeumannHalfBump };

std::string to_string(InitialPreset preset);
InitialPreset initial_preset_from_string(const std::string& name);

/// g = c + sum of bump profiles. With one bump, g(center) = c + cap,
/// g = c on the circle of radius R0 and g = c - cap far away. TwoBumps needs
/// equal caps and adds the second bump on top of the same far-field level.
struct InitialDataSpec {
  InitialPreset preset = InitialPreset::RadialBump;
  std::vector<BumpParams> bumps{BumpParams{}};
  double far_field_value = 0.0;

  /// Value g takes outside every bump support.
  double far_field_constant() const;
  /// Largest cap; the certified level band is centered at far_field_value.
  double cap() const;
};

/// Throws SpecError if a support violates the L/3 face margin (the anchoring
/// face of a NeumannHalfBump excepted) or TwoBumps supports overlap.
ScalarField build(const InitialDataSpec& spec, const GridSpec& grid);

struct CertificationReport {
  std::vector<double> epsilons;
  std::vector<double> curvature_mass;
  double max_mass = 0.0;
  /// max_k M(eps_k) / M(eps_0); 1 when every mass is zero.
  double growth = 1.0;
  double allowed_growth = 3.0;
  bool passed = true;
};

/// Default ladder {1, 1/2, 1/4, ...} down to max(h, 1/64).
std::vector<double> certification_ladder(const GridSpec& grid);

/// M(eps) = integral of |div(grad g / sqrt(|grad g|^2 + eps^2))| for each eps.
/// Throws SpecError on a malformed ladder and CertificationFailure when the
/// growth exceeds `allowed_growth`.
CertificationReport certify_well_prepared(const ScalarField& g, const std::vector<double>& epsilons,
                                          double allowed_growth = 3.0);

}  // namespace lsmcf
