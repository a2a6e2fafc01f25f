#include "lsmcf/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"

namespace lsmcf {
namespace {

// Antiderivative of smoothstep5 with I(0) = 0, I(1) = 1/2.
double smoothstep5_integral(double q) {
  const double q4 = q * q * q * q;
  return q4 * (q * q - 3.0 * q + 2.5);
}

double distance(const Point& a, const Point& b, int d) {
  double sq = 0.0;
  for (int i = 0; i < d; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

}  // namespace

double smoothstep5(double q) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return q * q * q * (q * (6.0 * q - 15.0) + 10.0);
}

double smoothstep5_derivative(double q) {
  if (q <= 0.0 || q >= 1.0) return 0.0;
  const double t = q * (1.0 - q);
  return 30.0 * t * t;
}

RadialProfile::RadialProfile(double zero_radius, double cap)
    : zero_radius_(zero_radius), cap_(cap), inner_(zero_radius - 1.25 * cap) {
  if (!(cap > 0.0)) throw SpecError("bump cap must be positive");
  if (inner_ < 0.0) throw SpecError("bump inner radius must be at least 1.25 * cap");
}

double RadialProfile::value(double r) const {
  const double b = ramp_width();
  const double plateau_end = inner_ + b + 1.5 * cap_;
  if (r <= inner_) return cap_;
  if (r <= inner_ + b) return cap_ - b * smoothstep5_integral((r - inner_) / b);
  if (r <= plateau_end) return cap_ - 0.5 * b - (r - inner_ - b);
  if (r <= plateau_end + b) {
    const double q = (r - plateau_end) / b;
    return cap_ - 0.5 * b - 1.5 * cap_ - b * (q - smoothstep5_integral(q));
  }
  return -cap_;
}

double RadialProfile::slope(double r) const {
  const double b = ramp_width();
  const double plateau_end = inner_ + b + 1.5 * cap_;
  if (r <= inner_) return 0.0;
  if (r <= inner_ + b) return -smoothstep5((r - inner_) / b);
  if (r <= plateau_end) return -1.0;
  return -(1.0 - smoothstep5((r - plateau_end) / b));
}

double RadialProfile::curvature(double r) const {
  const double b = ramp_width();
  const double plateau_end = inner_ + b + 1.5 * cap_;
  if (r <= inner_ + b) return -smoothstep5_derivative((r - inner_) / b) / b;
  if (r <= plateau_end) return 0.0;
  return smoothstep5_derivative((r - plateau_end) / b) / b;
}

double RadialProfile::radius_of_level(double level) const {
  if (!(level > -cap_ && level < cap_)) throw SpecError("level outside the profile range");
  double lo = inner_;
  double hi = outer_radius();
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string to_string(InitialPreset preset) {
  switch (preset) {
    case InitialPreset::Constant:
      return "constant";
    case InitialPreset::RadialBump:
      return "radial_bump";
    case InitialPreset::TwoBumps:
      return "two_bumps";
    case InitialPreset::NeumannHalfBump:
      return "neumann_half_bump";
  }
  return "unknown";
}

InitialPreset initial_preset_from_string(const std::string& name) {
  for (auto p : {InitialPreset::Constant, InitialPreset::RadialBump, InitialPreset::TwoBumps,
                 InitialPreset::NeumannHalfBump})
    if (to_string(p) == name) return p;
  throw SpecError("unknown initial-data preset '" + name + "'");
}

double InitialDataSpec::cap() const {
  double c = 0.0;
  for (const auto& b : bumps) c = std::max(c, b.cap);
  return preset == InitialPreset::Constant ? 0.0 : c;
}

double InitialDataSpec::far_field_constant() const { return far_field_value - cap(); }

namespace {

void check_support(const InitialDataSpec& spec, const GridSpec& grid) {
  const double L = grid.half_width();
  const double margin = L / 3.0;
  const int d = grid.dimension();
  const std::size_t expected = spec.preset == InitialPreset::TwoBumps ? 2 : 1;
  if (spec.bumps.size() != expected) {
    std::ostringstream msg;
    msg << to_string(spec.preset) << " needs " << expected << " bump(s)";
    throw SpecError(msg.str());
  }
  for (const auto& bump : spec.bumps) {
    const double R = bump.profile().outer_radius();
    int anchored_axis = -1;
    if (spec.preset == InitialPreset::NeumannHalfBump) {
      for (int a = 0; a < d; ++a)
        if (std::abs(std::abs(bump.center[a]) - L) <= 1e-12 * L) anchored_axis = a;
      if (anchored_axis < 0) throw SpecError("neumann_half_bump center must lie on a box face");
      if (grid.boundary() != BoundaryRegime::NeumannBox)
        throw SpecError("neumann_half_bump requires the neumann_box regime");
    }
    for (int a = 0; a < d; ++a) {
      if (a == anchored_axis) continue;
      if (std::abs(bump.center[a]) + R > L - margin + 1e-12)
        throw SpecError("bump support violates the L/3 margin to the box faces");
    }
  }
  if (spec.preset == InitialPreset::TwoBumps) {
    const auto& b0 = spec.bumps[0];
    const auto& b1 = spec.bumps[1];
    if (b0.cap != b1.cap) throw SpecError("two_bumps requires equal caps");
    if (distance(b0.center, b1.center, d) <
        b0.profile().outer_radius() + b1.profile().outer_radius())
      throw SpecError("two_bumps supports overlap");
  }
}

}  // namespace

ScalarField build(const InitialDataSpec& spec, const GridSpec& grid) {
  if (spec.preset == InitialPreset::Constant) return ScalarField(grid, spec.far_field_value);
  check_support(spec, grid);
  const int d = grid.dimension();
  std::vector<RadialProfile> profiles;
  for (const auto& b : spec.bumps) profiles.push_back(b.profile());
  const double base = spec.far_field_value;
  return ScalarField::sample(grid, [&](const Point& x) {
    double g = base;
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const double psi = profiles[k].value(distance(x, spec.bumps[k].center, d));
      // Bumps after the first stand on the common far-field level.
      g += k == 0 ? psi : psi + profiles[k].cap();
    }
    return g;
  });
}

std::vector<double> certification_ladder(const GridSpec& grid) {
  const double floor = std::max(grid.spacing(), 1.0 / 64.0);
  std::vector<double> ladder;
  for (double eps = 1.0; eps >= floor * (1.0 - 1e-12); eps *= 0.5) ladder.push_back(eps);
  if (ladder.back() > floor * (1.0 + 1e-12)) ladder.push_back(floor);
  return ladder;
}

CertificationReport certify_well_prepared(const ScalarField& g, const std::vector<double>& epsilons,
                                          double allowed_growth) {
  if (epsilons.empty()) throw SpecError("certification needs at least one epsilon");
  const double h = g.grid().spacing();
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    const double e = epsilons[k];
    if (!(e > 0.0 && e <= 1.0)) throw SpecError("certification epsilons must lie in (0, 1]");
    if (k > 0 && !(e < epsilons[k - 1])) throw SpecError("certification epsilons must descend");
  }
  if (epsilons.back() < 0.25 * h) throw SpecError("certification epsilon below h/4");

  CertificationReport report;
  report.epsilons = epsilons;
  report.allowed_growth = allowed_growth;
  const VectorField grad = gradient(g);
  const GridSpec& grid = g.grid();
  for (double eps : epsilons) {
    VectorField flux(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double sq = eps * eps;
      for (int a = 0; a < grid.dimension(); ++a) sq += grad.component(a)[i] * grad.component(a)[i];
      const double inv = 1.0 / std::sqrt(sq);
      for (int a = 0; a < grid.dimension(); ++a) flux.component(a)[i] = grad.component(a)[i] * inv;
    }
    ScalarField div = divergence(flux);
    for (double& v : div.values()) v = std::abs(v);
    report.curvature_mass.push_back(integrate(div));
  }
  report.max_mass = *std::max_element(report.curvature_mass.begin(), report.curvature_mass.end());
  const double first = report.curvature_mass.front();
  if (first > 0.0)
    report.growth = report.max_mass / first;
  else
    report.growth = report.max_mass > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  report.passed = report.growth <= allowed_growth;
  if (!report.passed) {
    std::ostringstream msg;
    msg << "curvature mass grows by " << report.growth << "x over the epsilon ladder (allowed "
        << allowed_growth << "x)";
    throw CertificationFailure(msg.str());
  }
  return report;
}

}  // namespace lsmcf
