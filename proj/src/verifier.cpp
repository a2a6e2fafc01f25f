#include "lsmcf/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"
#include "lsmcf/initial_data.hpp"
#include "lsmcf/parallel.hpp"

namespace lsmcf {

double TestScalar::space(const Point& x) const {
  const double dist = std::hypot(x[0] - center[0], x[1] - center[1], x[2] - center[2]);
  const double q = dist / radius;
  return q >= 1.0 ? 0.0 : amplitude * (1.0 - smoothstep5(q));
}

std::array<double, 3> TestScalar::space_gradient(const Point& x) const {
  const std::array<double, 3> diff{x[0] - center[0], x[1] - center[1], x[2] - center[2]};
  const double dist = std::hypot(diff[0], diff[1], diff[2]);
  const double q = dist / radius;
  if (q >= 1.0 || dist == 0.0) return {0.0, 0.0, 0.0};
  const double scale = -amplitude * smoothstep5_derivative(q) / (radius * dist);
  return {scale * diff[0], scale * diff[1], scale * diff[2]};
}

double TestScalar::time(double t) const {
  return 1.0 - smoothstep5(std::abs(t - t_center) / t_half_width);
}

double TestScalar::time_derivative(double t) const {
  const double tau = t - t_center;
  const double slope = smoothstep5_derivative(std::abs(tau) / t_half_width) / t_half_width;
  return tau > 0.0 ? -slope : slope;
}

std::string to_string(Identity id) {
  switch (id) {
    case Identity::DistV:
      return "distV";
    case Identity::DistMC:
      return "distMC";
    case Identity::LevelV:
      return "levelV";
    case Identity::LevelMC:
      return "levelMC";
  }
  return "unknown";
}

const ResidualReport& ResidualReport::checked() const {
  if (degenerate)
    throw DegenerateTest(to_string(identity) + " residual for test '" + test_id +
                         "' has a vanishing normalization");
  return *this;
}

namespace {

constexpr double kDegenerate = 1e-12;

enum class Weighting { Value, Derivative, Initial };

// Node (or cell) samples of one test inside its support.
struct SupportSample {
  std::size_t index;
  double weight;  // quadrature weight (node) or cell volume (cell)
  double rho;
  std::array<double, 3> grad;
};

struct Plan {
  Identity identity;
  const TestScalar* test;
  int direction = -1;
  std::optional<double> level;
  std::vector<Weighting> weighting;
  std::size_t offset = 0;
};

std::vector<SupportSample> node_support(const GridSpec& grid, const std::vector<double>& weights,
                                        const TestScalar& t) {
  std::vector<SupportSample> out;
  const int d = grid.dimension();
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < d; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((t.center[a] - t.radius + grid.half_width()) / h)));
    hi[a] = std::min(n - 1, static_cast<int>(std::ceil((t.center[a] + t.radius + grid.half_width()) / h)));
  }
  std::array<int, 3> idx{0, 0, 0};
  for (idx[0] = lo[0]; idx[0] <= hi[0]; ++idx[0])
    for (idx[1] = lo[1]; idx[1] <= hi[1]; ++idx[1])
      for (idx[2] = lo[2]; idx[2] <= hi[2]; ++idx[2]) {
        const std::size_t flat = grid.flatten(idx);
        const Point x = grid.position(flat);
        const double rho = t.space(x);
        if (rho == 0.0) continue;
        out.push_back({flat, weights[flat], rho, t.space_gradient(x)});
      }
  return out;
}

std::vector<SupportSample> cell_support(const GridSpec& grid, const TestScalar& t) {
  std::vector<SupportSample> out;
  const std::size_t m = static_cast<std::size_t>(grid.points_per_axis() - 1);
  const double h = grid.spacing();
  std::array<long, 2> lo{}, hi{};
  for (int a = 0; a < 2; ++a) {
    lo[a] = std::max(0L, static_cast<long>(std::floor((t.center[a] - t.radius + grid.half_width()) / h)) - 1);
    hi[a] = std::min(static_cast<long>(m) - 1,
                     static_cast<long>(std::ceil((t.center[a] + t.radius + grid.half_width()) / h)));
  }
  for (long i = lo[0]; i <= hi[0]; ++i)
    for (long j = lo[1]; j <= hi[1]; ++j) {
      const std::size_t cell = static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j);
      const double rho = t.space(cell_center(grid, cell));
      if (rho == 0.0) continue;
      out.push_back({cell, grid.cell_volume(), rho, {0.0, 0.0, 0.0}});
    }
  return out;
}

std::vector<double> trapezoid_weights(const std::vector<double>& times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    w[k] += 0.5 * dt;
    w[k + 1] += 0.5 * dt;
  }
  return w;
}

// Weights w_k with sum_k w_k f(t_k) = integral of theta'(t) times the
// piecewise-linear interpolant of f.
std::vector<double> derivative_weights(const std::vector<double>& times, const TestScalar& t) {
  static constexpr std::array<double, 5> node{-0.9061798459386640, -0.5384693101056831, 0.0,
                                              0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> gw{0.2369268850561891, 0.4786286704993665,
                                            0.5688888888888889, 0.4786286704993665,
                                            0.2369268850561891};
  const std::array<double, 3> breaks{t.window_start(), t.t_center, t.window_end()};
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double a = times[k], b = times[k + 1];
    if (b <= breaks[0] || a >= breaks[2]) continue;
    std::vector<double> cuts{a};
    for (double br : breaks)
      if (br > a && br < b) cuts.push_back(br);
    cuts.push_back(b);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double mid = 0.5 * (cuts[c] + cuts[c + 1]), half = 0.5 * (cuts[c + 1] - cuts[c]);
      for (int g = 0; g < 5; ++g) {
        const double x = mid + half * node[g];
        const double f = gw[g] * half * t.time_derivative(x);
        w[k] += f * (b - x) / (b - a);
        w[k + 1] += f * (x - a) / (b - a);
      }
    }
  }
  return w;
}

void check_test(const Trajectory& traj, const TestScalar& t, bool interior_in_time) {
  const GridSpec& grid = traj.grid;
  if (!(t.radius > 0.0 && t.t_half_width > 0.0)) throw SpecError("test support must be positive");
  if (grid.boundary() == BoundaryRegime::FarFieldConstant)
    for (int a = 0; a < grid.dimension(); ++a)
      if (std::abs(t.center[a]) + t.radius >= grid.half_width())
        throw SpecError("test '" + t.id + "' support leaves the box");
  const double t_last = traj.times.back();
  if (t.window_end() > t_last + 1e-12)
    throw SpecError("test '" + t.id + "' window extends past the final snapshot");
  if (interior_in_time && t.window_start() < -1e-12)
    throw SpecError("test '" + t.id + "' must vanish at t = 0");
  const auto inside = std::count_if(traj.times.begin(), traj.times.end(), [&](double s) {
    return s >= t.window_start() - 1e-12 && s <= t.window_end() + 1e-12;
  });
  if (inside < 8) throw SpecError("test '" + t.id + "' time window spans fewer than 8 snapshots");
}

}  // namespace

std::vector<ResidualReport> evaluate_family(const Trajectory& traj, const FamilyRequest& request) {
  const GridSpec& grid = traj.grid;
  const int d = grid.dimension();
  if (traj.size() < 2) throw SpecError("residuals need at least two snapshots");
  if (!request.levels.empty() && d != 2) throw SpecError("level identities are 2D only");

  std::vector<Plan> plans;
  using W = Weighting;
  if (request.bulk) {
    for (const auto& t : request.family.scalars)
      plans.push_back({Identity::DistV, &t, -1, std::nullopt, {W::Derivative, W::Value, W::Initial}});
    for (const auto& v : request.family.vectors)
      plans.push_back({Identity::DistMC, &v.base, v.direction, std::nullopt, {W::Value, W::Value}});
  }
  for (double s : request.levels) {
    for (const auto& t : request.family.scalars)
      plans.push_back({Identity::LevelV, &t, -1, s, {W::Derivative, W::Value, W::Initial}});
    for (const auto& v : request.family.vectors)
      plans.push_back({Identity::LevelMC, &v.base, v.direction, s, {W::Value, W::Value}});
  }
  std::size_t slots = 0;
  for (auto& p : plans) {
    check_test(traj, *p.test, p.direction >= 0);
    if (p.direction >= d || p.direction < -1) throw SpecError("test vector direction out of range");
    p.offset = slots;
    slots += p.weighting.size();
  }

  const std::vector<double> qw = quadrature_weights(grid);
  std::vector<std::vector<SupportSample>> nodes(plans.size()), cells(plans.size());
  for (std::size_t r = 0; r < plans.size(); ++r) {
    const Plan& p = plans[r];
    if (p.identity == Identity::DistV || p.identity == Identity::DistMC)
      nodes[r] = node_support(grid, qw, *p.test);
    else if (p.identity == Identity::LevelV)
      cells[r] = cell_support(grid, *p.test);
  }

  const double eps = traj.epsilon();
  const double cutoff = request.cutoff_factor * eps;
  std::vector<std::vector<double>> rows(traj.size(), std::vector<double>(slots, 0.0));

  parallel_for(traj.size(), [&](std::size_t k) {
    const ScalarField& u = traj.snapshots[k];
    const ScalarField ut = traj.time_derivative(k);
    const VectorField grad = gradient(u);
    const ScalarField gnorm = grad.norm();
    std::vector<double>& row = rows[k];

    // V |grad u| with the velocity cutoff, and nu_eps.
    auto rate = [&](std::size_t i) { return gnorm[i] >= cutoff ? ut[i] : 0.0; };
    auto nu = [&](std::size_t i, int a) {
      return -grad.component(a)[i] / std::sqrt(gnorm[i] * gnorm[i] + eps * eps);
    };

    std::vector<std::vector<double>> fractions(request.levels.size());
    std::vector<Contour> contours(request.levels.size());
    ScalarField velocity;
    if (!request.levels.empty()) {
      velocity = velocity_field(ut, grad, cutoff);
      for (std::size_t l = 0; l < request.levels.size(); ++l) {
        fractions[l] = cell_fractions(u, request.levels[l]);
        try {
          contours[l] = extract_contour(u, request.levels[l], {{"V", &velocity}}, traj.times[k]);
        } catch (const EmptyLevelSet&) {
          contours[l] = Contour{};
        }
      }
    }

    for (std::size_t r = 0; r < plans.size(); ++r) {
      const Plan& p = plans[r];
      double* out = row.data() + p.offset;
      switch (p.identity) {
        case Identity::DistV:
          for (const auto& s : nodes[r]) {
            out[0] += s.weight * s.rho * u[s.index];
            out[1] += s.weight * s.rho * rate(s.index);
          }
          if (k == 0) out[2] = out[0];
          break;
        case Identity::DistMC: {
          const int i = p.direction;
          for (const auto& s : nodes[r]) {
            double grad_dot_nu = 0.0;
            std::array<double, 3> n{0.0, 0.0, 0.0};
            for (int a = 0; a < d; ++a) {
              n[a] = nu(s.index, a);
              grad_dot_nu += s.grad[a] * n[a];
            }
            out[0] += s.weight * (s.grad[i] - n[i] * grad_dot_nu) * gnorm[s.index];
            out[1] += s.weight * s.rho * n[i] * rate(s.index);
          }
          break;
        }
        case Identity::LevelV: {
          const std::size_t l = static_cast<std::size_t>(
              std::find(request.levels.begin(), request.levels.end(), *p.level) -
              request.levels.begin());
          for (const auto& s : cells[r]) out[0] += s.weight * s.rho * fractions[l][s.index];
          const Contour& c = contours[l];
          if (!c.segments.empty()) {
            const auto& v = c.field("V");
            for (std::size_t q = 0; q < c.segments.size(); ++q)
              out[1] += p.test->space(c.segments[q].mid) * v[q] * c.segments[q].length;
          }
          if (k == 0) out[2] = out[0];
          break;
        }
        case Identity::LevelMC: {
          const std::size_t l = static_cast<std::size_t>(
              std::find(request.levels.begin(), request.levels.end(), *p.level) -
              request.levels.begin());
          const Contour& c = contours[l];
          if (c.segments.empty()) break;
          const auto& v = c.field("V");
          const int i = p.direction;
          for (std::size_t q = 0; q < c.segments.size(); ++q) {
            const Point& x = c.segments[q].mid;
            const double rho = p.test->space(x);
            const auto g = p.test->space_gradient(x);
            const auto& n = c.normals[q];
            const double grad_dot_nu = g[0] * n[0] + g[1] * n[1];
            const double len = c.segments[q].length;
            out[0] += (g[i] - n[i] * grad_dot_nu) * len;
            out[1] += rho * n[i] * v[q] * len;
          }
          break;
        }
      }
    }
  });

  const std::vector<double> trap = trapezoid_weights(traj.times);
  std::vector<ResidualReport> reports;
  reports.reserve(plans.size());
  for (const Plan& p : plans) {
    const TestScalar& t = *p.test;
    const std::vector<double> deriv = derivative_weights(traj.times, t);
    ResidualReport rep;
    rep.identity = p.identity;
    rep.test_id = t.id;
    rep.n = grid.points_per_axis();
    rep.epsilon = eps;
    rep.level = p.level;
    rep.t_window = {t.window_start(), t.window_end()};
    for (std::size_t term = 0; term < p.weighting.size(); ++term) {
      double total = 0.0;
      const std::size_t slot = p.offset + term;
      switch (p.weighting[term]) {
        case Weighting::Value:
          for (std::size_t k = 0; k < traj.size(); ++k)
            total += trap[k] * t.time(traj.times[k]) * rows[k][slot];
          break;
        case Weighting::Derivative:
          for (std::size_t k = 0; k < traj.size(); ++k) total += deriv[k] * rows[k][slot];
          break;
        case Weighting::Initial:
          total = t.time(traj.times[0]) * rows[0][slot];
          break;
      }
      rep.terms.push_back(total);
      rep.raw += total;
      rep.normalization += std::abs(total);
    }
    rep.degenerate = rep.normalization < kDegenerate;
    rep.relative = rep.degenerate ? 0.0 : rep.raw / rep.normalization;
    reports.push_back(std::move(rep));
  }
  return reports;
}

namespace {

ResidualReport single(const Trajectory& traj, FamilyRequest request) {
  auto reports = evaluate_family(traj, request);
  return reports.front();
}

}  // namespace

ResidualReport residual_distV(const Trajectory& traj, const TestScalar& zeta, double cutoff_factor) {
  return single(traj, {{{zeta}, {}}, true, {}, cutoff_factor});
}

ResidualReport residual_distMC(const Trajectory& traj, const TestVector& xi, double cutoff_factor) {
  return single(traj, {{{}, {xi}}, true, {}, cutoff_factor});
}

ResidualReport residual_level_V(const Trajectory& traj, double s, const TestScalar& zeta,
                                double cutoff_factor) {
  return single(traj, {{{zeta}, {}}, false, {s}, cutoff_factor});
}

ResidualReport residual_level_MC(const Trajectory& traj, double s, const TestVector& xi,
                                 double cutoff_factor) {
  return single(traj, {{{}, {xi}}, false, {s}, cutoff_factor});
}

namespace {

TestScalar make_test(std::string id, const Point& c, double radius, double t_start, double t_stop) {
  if (!(t_stop > t_start)) throw SpecError("test time window must be non-empty");
  TestScalar t;
  t.id = std::move(id);
  t.center = c;
  t.radius = radius;
  t.t_center = 0.5 * (t_start + t_stop);
  t.t_half_width = 0.5 * (t_stop - t_start);
  return t;
}

}  // namespace

TestFamily fixed_family(const Point& center, double circle_radius, double test_radius,
                        double t_start, double t_stop) {
  TestFamily fam;
  for (int k = 0; k < 5; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 5.0;
    const double cx = std::cos(angle), cy = std::sin(angle);
    const Point c{center[0] + circle_radius * cx, center[1] + circle_radius * cy, center[2]};
    fam.scalars.push_back(make_test("zeta" + std::to_string(k), c, test_radius, t_start, t_stop));
    TestVector v{make_test("xi" + std::to_string(k), c, test_radius, t_start, t_stop),
                 std::abs(cx) >= std::abs(cy) ? 0 : 1};
    fam.vectors.push_back(v);
  }
  return fam;
}

TestFamily seeded_family(std::uint64_t seed, int count, const Point& center, double circle_radius,
                         double test_radius, double t_start, double t_stop) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> offset(-test_radius / 3.0, test_radius / 3.0);
  std::uniform_real_distribution<double> scale(0.7, 1.3);
  std::uniform_int_distribution<int> axis(0, 1);
  TestFamily fam;
  for (int k = 0; k < count; ++k) {
    const double a = angle(rng);
    const double r = circle_radius + offset(rng);
    const Point c{center[0] + r * std::cos(a), center[1] + r * std::sin(a), center[2]};
    const double radius = test_radius * scale(rng);
    fam.scalars.push_back(make_test("zeta_s" + std::to_string(k), c, radius, t_start, t_stop));
    fam.vectors.push_back(
        {make_test("xi_s" + std::to_string(k), c, radius, t_start, t_stop), axis(rng)});
  }
  return fam;
}

TestFamily neumann_family(const Point& center, int anchor_axis, double circle_radius,
                          double test_radius, double t_start, double t_stop) {
  if (anchor_axis < 0 || anchor_axis > 1) throw SpecError("neumann family is 2D");
  const int tangential = 1 - anchor_axis;
  // Angles open towards the box interior.
  const double inward = center[anchor_axis] < 0.0 ? 1.0 : -1.0;
  TestFamily fam;
  for (int k = 0; k <= 4; ++k) {
    const double angle = std::numbers::pi * k / 4.0;
    Point c = center;
    c[tangential] += circle_radius * std::cos(angle);
    c[anchor_axis] += inward * circle_radius * std::sin(angle);
    fam.scalars.push_back(make_test("zeta_n" + std::to_string(k), c, test_radius, t_start, t_stop));
    fam.vectors.push_back(
        {make_test("xi_n" + std::to_string(k), c, test_radius, t_start, t_stop), tangential});
  }
  return fam;
}

double median_relative(const std::vector<ResidualReport>& reports, Identity id) {
  std::vector<double> rel;
  for (const auto& r : reports)
    if (r.identity == id && !r.degenerate) rel.push_back(std::abs(r.relative));
  if (rel.empty()) return 0.0;
  std::sort(rel.begin(), rel.end());
  const std::size_t m = rel.size() / 2;
  return rel.size() % 2 ? rel[m] : 0.5 * (rel[m - 1] + rel[m]);
}

void write_residual_csv(std::ostream& out, const std::vector<ResidualReport>& reports) {
  out << "identity,test_id,raw,norm,rel,n,epsilon,level,t_window\n";
  const auto old = out.precision(12);
  for (const auto& r : reports) {
    out << to_string(r.identity) << ',' << r.test_id << ',' << r.raw << ',' << r.normalization
        << ',';
    if (r.degenerate)
      out << "degenerate";
    else
      out << r.relative;
    out << ',' << r.n << ',' << r.epsilon << ',';
    if (r.level) out << *r.level;
    out << ',' << r.t_window.first << ':' << r.t_window.second << '\n';
  }
  out.precision(old);
}

DiagnosticsSeries compute_diagnostics(const Trajectory& traj, const std::vector<double>& levels,
                                      double cutoff_factor) {
  const std::size_t count = traj.size();
  DiagnosticsSeries out;
  out.times = traj.times;
  out.energy_eps.resize(count);
  out.energy_tv.resize(count);
  out.curvature_mass.resize(count);
  out.hsq_density.resize(count);
  out.bulk_dissipation.resize(count);
  out.levels.times = traj.times;
  for (double s : levels) {
    LevelSeries series;
    series.level = s;
    series.volume.resize(count);
    series.perimeter.resize(count);
    series.surface_dissipation.resize(count);
    out.levels.levels.push_back(std::move(series));
  }
  const GridSpec& grid = traj.grid;
  const int d = grid.dimension();
  const double eps = traj.epsilon();
  const double cutoff = cutoff_factor * eps;
  const std::vector<double> qw = quadrature_weights(grid);

  parallel_for(count, [&](std::size_t k) {
    const ScalarField& u = traj.snapshots[k];
    const ScalarField ut = traj.time_derivative(k);
    const VectorField grad = gradient(u);
    VectorField nu(grid);
    std::vector<double> root(grid.size()), gnorm(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double sq = 0.0;
      for (int a = 0; a < d; ++a) sq += grad.component(a)[i] * grad.component(a)[i];
      gnorm[i] = std::sqrt(sq);
      root[i] = std::sqrt(sq + eps * eps);
      for (int a = 0; a < d; ++a) nu.component(a)[i] = -grad.component(a)[i] / root[i];
    }
    const ScalarField curv = divergence(nu);
    double e_eps = 0.0, e_tv = 0.0, mass = 0.0, hsq = 0.0, bulk = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double w = qw[i];
      e_eps += w * root[i];
      e_tv += w * gnorm[i];
      mass += w * std::abs(curv[i]);
      hsq += w * curv[i] * curv[i] * root[i];
      if (gnorm[i] >= cutoff) bulk += w * ut[i] * ut[i] / gnorm[i];
    }
    out.energy_eps[k] = e_eps;
    out.energy_tv[k] = e_tv;
    out.curvature_mass[k] = mass;
    out.hsq_density[k] = hsq;
    out.bulk_dissipation[k] = bulk;
    if (out.levels.levels.empty()) return;
    const ScalarField v = d == 2 ? velocity_field(ut, grad, cutoff) : ScalarField(grid);
    for (auto& series : out.levels.levels) {
      const LevelMeasure m = measure_level(u, v, series.level);
      series.volume[k] = m.volume;
      series.perimeter[k] = m.perimeter;
      series.surface_dissipation[k] = m.surface_dissipation;
    }
  });
  return out;
}

namespace {

std::size_t nearest(const std::vector<double>& times, double t) {
  if (times.empty()) throw SpecError("empty time series");
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return times.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  return (t - times[hi - 1] <= times[hi] - t) ? hi - 1 : hi;
}

std::pair<std::size_t, std::size_t> window(const std::vector<double>& times, double t1, double t2) {
  if (!(t1 <= t2)) throw SpecError("time window must satisfy t1 <= t2");
  return {nearest(times, t1), nearest(times, t2)};
}

double trapezoid(const std::vector<double>& times, const std::vector<double>& f, std::size_t a,
                 std::size_t b) {
  double total = 0.0;
  for (std::size_t k = a; k < b; ++k) total += 0.5 * (times[k + 1] - times[k]) * (f[k] + f[k + 1]);
  return total;
}

}  // namespace

DissipationDefect dissipation_defect(const DiagnosticsSeries& series, double t1, double t2) {
  const auto [a, b] = window(series.times, t1, t2);
  DissipationDefect out;
  out.energy_t1 = series.energy_tv[a];
  out.energy_t2 = series.energy_tv[b];
  out.energy_eps_t1 = series.energy_eps[a];
  out.energy_eps_t2 = series.energy_eps[b];
  out.dissipation = trapezoid(series.times, series.bulk_dissipation, a, b);
  out.defect = out.energy_t2 + out.dissipation - out.energy_t1;
  return out;
}

DissipationDefect dissipation_defect(const Trajectory& traj, double t1, double t2) {
  return dissipation_defect(compute_diagnostics(traj, {}), t1, t2);
}

LevelDissipation level_dissipation_defect(const LevelSeries& series,
                                          const std::vector<double>& times, double t1, double t2) {
  const auto [a, b] = window(times, t1, t2);
  LevelDissipation out;
  out.level = series.level;
  out.length_t1 = series.perimeter[a];
  out.length_t2 = series.perimeter[b];
  out.dissipation = trapezoid(times, series.surface_dissipation, a, b);
  out.defect = out.length_t2 + out.dissipation - out.length_t1;
  return out;
}

LevelDissipation level_dissipation_defect(const Trajectory& traj, double s, double t1, double t2) {
  if (traj.grid.dimension() != 2) throw SpecError("level dissipation is 2D only");
  const LevelSweep sweep = sweep_levels(traj, {s});
  return level_dissipation_defect(sweep.levels.front(), sweep.times, t1, t2);
}

CurvatureMassSeries curvature_mass_series(const DiagnosticsSeries& series) {
  CurvatureMassSeries out;
  out.times = series.times;
  out.mass = series.curvature_mass;
  if (out.mass.empty()) return out;
  out.max_mass = *std::max_element(out.mass.begin(), out.mass.end());
  for (std::size_t k = 0; k + 1 < out.mass.size(); ++k) {
    const double inc = out.mass[k + 1] - out.mass[k];
    out.max_increase = std::max(out.max_increase, inc);
    if (out.mass[k] > 0.0)
      out.max_relative_increase = std::max(out.max_relative_increase, inc / out.mass[k]);
    else if (inc > 0.0)
      out.max_relative_increase = std::numeric_limits<double>::infinity();
  }
  return out;
}

CurvatureMassSeries curvature_mass_series(const Trajectory& traj) {
  return curvature_mass_series(compute_diagnostics(traj, {}));
}

double hsq_weighted_mass(const DiagnosticsSeries& series) {
  if (series.times.size() < 2) return 0.0;
  return trapezoid(series.times, series.hsq_density, 0, series.times.size() - 1);
}

double hsq_weighted_mass(const Trajectory& traj) {
  return hsq_weighted_mass(compute_diagnostics(traj, {}));
}

L1Continuity l1_continuity_check(const Trajectory& traj, const LevelSeries& series, double t0,
                                 double t1, double slack_fraction) {
  if (traj.grid.dimension() != 2) throw SpecError("L1 continuity check is 2D only");
  const auto [a, b] = window(traj.times, t0, t1);
  L1Continuity out;
  const std::vector<double> f0 = cell_fractions(traj.snapshots[a], series.level);
  const std::vector<double> f1 = cell_fractions(traj.snapshots[b], series.level);
  for (std::size_t c = 0; c < f0.size(); ++c) out.lhs += std::abs(f0[c] - f1[c]);
  out.lhs *= traj.grid.cell_volume();
  const double v2 = trapezoid(traj.times, series.surface_dissipation, a, b);
  const double span = traj.times[b] - traj.times[a];
  out.rhs = std::sqrt(span) * std::sqrt(v2);
  double max_perimeter = 0.0;
  for (std::size_t k = a; k <= b; ++k) max_perimeter = std::max(max_perimeter, series.perimeter[k]);
  out.slack = traj.grid.spacing() * max_perimeter;
  out.pass = out.lhs <= (1.0 + slack_fraction) * out.rhs + out.slack;
  out.perimeter_weighted_bound =
      std::sqrt(trapezoid(traj.times, series.perimeter, a, b)) * std::sqrt(v2);
  return out;
}

L1Continuity l1_continuity_check(const Trajectory& traj, double s, double t0, double t1,
                                 double slack_fraction) {
  const LevelSweep sweep = sweep_levels(traj, {s});
  return l1_continuity_check(traj, sweep.levels.front(), t0, t1, slack_fraction);
}

TanhRelabel::TanhRelabel(double a_, double b_) : a(a_), b(b_) {
  if (!(std::abs(a * b) < 1.0)) throw SpecError("relabel profile needs |a * b| < 1");
}

double TanhRelabel::operator()(double s) const { return s + a * std::tanh(b * s); }

double RelabelReport::ladder_ratio() const {
  if (deviation.empty()) return 0.0;
  const auto lo = std::min_element(epsilons.begin(), epsilons.end()) - epsilons.begin();
  const auto hi = std::max_element(epsilons.begin(), epsilons.end()) - epsilons.begin();
  return deviation[hi] > 0.0 ? deviation[lo] / deviation[hi] : 0.0;
}

namespace {

// Runs `second` and calls cmp(base snapshot, second snapshot) at every
// snapshot of the base trajectory.
void run_against(const Trajectory& base, const ScalarField& start, const SolverParams& params,
                 const std::function<void(const ScalarField&, const ScalarField&)>& cmp) {
  std::size_t k = 0;
  RunOptions opts;
  opts.keep_snapshots = false;
  opts.observer = [&](double, const ScalarField& v) {
    if (k >= base.size()) throw SpecError("paired runs produced different snapshot counts");
    cmp(base.snapshots[k++], v);
  };
  run(start, params, opts);
}

ScalarField mapped(const ScalarField& g, const std::function<double(double)>& f) {
  ScalarField out = g;
  for (double& v : out.values()) v = f(v);
  return out;
}

}  // namespace

RelabelReport relabel_compare(const ScalarField& g, const std::function<double(double)>& phi,
                              const SolverParams& params, const std::vector<double>& epsilons) {
  RelabelReport report;
  report.epsilons = epsilons;
  report.deviation.assign(epsilons.size(), 0.0);
  report.base_runs.resize(epsilons.size());
  const ScalarField start = mapped(g, phi);
  parallel_for(epsilons.size(), [&](std::size_t e) {
    SolverParams p = params;
    p.epsilon = epsilons[e];
    report.base_runs[e] = run(g, p);
    double dev = 0.0;
    run_against(report.base_runs[e], start, p, [&](const ScalarField& u, const ScalarField& v) {
      for (std::size_t i = 0; i < u.size(); ++i) dev = std::max(dev, std::abs(v[i] - phi(u[i])));
    });
    report.deviation[e] = dev;
  });
  return report;
}

double affine_rescaling_deviation(const ScalarField& g, const SolverParams& params) {
  const Trajectory base = run(g, params);
  SolverParams doubled = params;
  doubled.epsilon = 2.0 * params.epsilon;
  double dev = 0.0;
  run_against(base, mapped(g, [](double s) { return 2.0 * s + 1.0; }), doubled,
              [&](const ScalarField& u, const ScalarField& v) {
                for (std::size_t i = 0; i < u.size(); ++i)
                  dev = std::max(dev, std::abs(v[i] - (2.0 * u[i] + 1.0)));
              });
  return dev;
}

double comparison_excess(const ScalarField& g1, const ScalarField& g2, const SolverParams& params,
                         Trajectory* upper) {
  if (!(g1.grid() == g2.grid())) throw SpecError("compared runs must share a grid");
  Trajectory top = run(g2, params);
  double excess = -std::numeric_limits<double>::infinity();
  run_against(top, g1, params, [&](const ScalarField& u2, const ScalarField& u1) {
    for (std::size_t i = 0; i < u1.size(); ++i) excess = std::max(excess, u1[i] - u2[i]);
  });
  if (upper) *upper = std::move(top);
  return excess;
}

}  // namespace lsmcf
