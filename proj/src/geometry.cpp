#include "lsmcf/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"
#include "lsmcf/parallel.hpp"

namespace lsmcf {
namespace {

// Edge-crossing parameter from endpoint values.
double crossing(double fa, double fb, double s) { return (s - fa) / (fb - fa); }

// Inside fraction of the unit square for corner values f0..f3 ordered
// (0,0), (1,0), (1,1), (0,1).
double square_fraction(const std::array<double, 4>& f, double s) {
  const std::array<bool, 4> in{f[0] > s, f[1] > s, f[2] > s, f[3] > s};
  const int count = in[0] + in[1] + in[2] + in[3];
  if (count == 0) return 0.0;
  if (count == 4) return 1.0;
  // Crossing parameters along e0 = c0->c1, e1 = c1->c2, e2 = c3->c2, e3 = c0->c3.
  const double t0 = in[0] != in[1] ? crossing(f[0], f[1], s) : 0.0;
  const double t1 = in[1] != in[2] ? crossing(f[1], f[2], s) : 0.0;
  const double t2 = in[3] != in[2] ? crossing(f[3], f[2], s) : 0.0;
  const double t3 = in[0] != in[3] ? crossing(f[0], f[3], s) : 0.0;

  const bool saddle = count == 2 && in[0] == in[2];
  if (saddle) {
    const std::array<double, 4> corner_triangle{0.5 * t0 * t3, 0.5 * (1.0 - t0) * t1,
                                                0.5 * (1.0 - t1) * (1.0 - t2),
                                                0.5 * t2 * (1.0 - t3)};
    const bool center_in = 0.25 * (f[0] + f[1] + f[2] + f[3]) > s;
    double cut = 0.0;
    for (int k = 0; k < 4; ++k)
      if (in[k] != center_in) cut += corner_triangle[k];
    return center_in ? 1.0 - cut : cut;
  }

  // Walk the boundary c0, e0, c1, e1, c2, e2, c3, e3 collecting the inside polygon.
  std::array<std::array<double, 2>, 8> poly{};
  int m = 0;
  const std::array<std::array<double, 2>, 4> corner{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  auto add = [&](double x, double y) { poly[m++] = {x, y}; };
  if (in[0]) add(0, 0);
  if (in[0] != in[1]) add(t0, 0);
  if (in[1]) add(corner[1][0], corner[1][1]);
  if (in[1] != in[2]) add(1, t1);
  if (in[2]) add(corner[2][0], corner[2][1]);
  if (in[3] != in[2]) add(t2, 1);
  if (in[3]) add(corner[3][0], corner[3][1]);
  if (in[0] != in[3]) add(0, t3);
  double area2 = 0.0;
  for (int k = 0; k < m; ++k) {
    const auto& p = poly[k];
    const auto& q = poly[(k + 1) % m];
    area2 += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(area2);
}

// Volume fraction of a tetrahedron where the linear interpolant of v exceeds s.
double tet_fraction(std::array<double, 4> v, double s) {
  std::sort(v.begin(), v.end());
  const int above = static_cast<int>(v.end() - std::upper_bound(v.begin(), v.end(), s));
  switch (above) {
    case 0:
      return 0.0;
    case 4:
      return 1.0;
    case 1: {
      const double a = v[3];
      const double t = a - s;
      return t * t * t / ((a - v[0]) * (a - v[1]) * (a - v[2]));
    }
    case 3: {
      const double d = v[0];
      const double t = s - d;
      return 1.0 - t * t * t / ((v[1] - d) * (v[2] - d) * (v[3] - d));
    }
    default: {
      // Divided difference of phi(x) = (x - s)^3 / ((x - c)(x - d)) over the two
      // values above s.
      const double a = v[3], b = v[2], c = v[1], d = v[0];
      auto phi = [&](double x) { return (x - s) * (x - s) * (x - s) / ((x - c) * (x - d)); };
      if (a - b > 1e-6 * (a - d)) return (phi(a) - phi(b)) / (a - b);
      const double x = 0.5 * (a + b);
      return phi(x) * (3.0 / (x - s) - 1.0 / (x - c) - 1.0 / (x - d));
    }
  }
}

double cube_fraction(const std::array<double, 8>& f, double s) {
  // Corner index bit a set means +1 along axis a.
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  double total = 0.0;
  for (const auto& p : perms) {
    const int v1 = 1 << p[0];
    const int v2 = v1 | (1 << p[1]);
    total += tet_fraction({f[0], f[v1], f[v2], f[7]}, s);
  }
  return total / 6.0;
}

// Calls fn(cell, corner_values) for every cell; corners ordered as in
// square_fraction (2D) or by axis bits (3D).
template <typename F>
void for_each_cell(const ScalarField& u, F&& fn) {
  const GridSpec& grid = u.grid();
  const int n = grid.points_per_axis();
  const std::size_t sn = static_cast<std::size_t>(n);
  std::size_t cell = 0;
  if (grid.dimension() == 2) {
    for (int i = 0; i < n - 1; ++i)
      for (int j = 0; j < n - 1; ++j, ++cell) {
        const std::size_t p = i * sn + j;
        fn(cell, std::array<double, 4>{u[p], u[p + sn], u[p + sn + 1], u[p + 1]});
      }
    return;
  }
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j)
      for (int k = 0; k < n - 1; ++k, ++cell) {
        std::array<double, 8> f{};
        for (int bits = 0; bits < 8; ++bits) {
          const std::size_t p = ((i + (bits & 1)) * sn + j + ((bits >> 1) & 1)) * sn + k +
                                ((bits >> 2) & 1);
          f[bits] = u[p];
        }
        fn(cell, f);
      }
}

template <std::size_t N>
double corner_fraction(const std::array<double, N>& f, double s) {
  if constexpr (N == 4)
    return square_fraction(f, s);
  else
    return cube_fraction(f, s);
}

}  // namespace

ScalarField velocity_field(const ScalarField& u_t, const VectorField& grad_u, double cutoff) {
  if (!(cutoff > 0.0)) throw SpecError("velocity cutoff must be positive");
  ScalarField v(u_t.grid(), 0.0);
  const int d = u_t.grid().dimension();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double sq = 0.0;
    for (int a = 0; a < d; ++a) sq += grad_u.component(a)[i] * grad_u.component(a)[i];
    const double norm = std::sqrt(sq);
    if (norm >= cutoff) v[i] = u_t[i] / norm;
  }
  return v;
}

double interpolate(const ScalarField& f, const Point& p) {
  const GridSpec& grid = f.grid();
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> t{0.0, 0.0, 0.0};
  for (int a = 0; a < grid.dimension(); ++a) {
    const double q = std::clamp((p[a] + grid.half_width()) / h, 0.0, static_cast<double>(n - 1));
    base[a] = std::min(static_cast<int>(q), n - 2);
    t[a] = q - base[a];
  }
  double value = 0.0;
  const int corners = 1 << grid.dimension();
  for (int bits = 0; bits < corners; ++bits) {
    double w = 1.0;
    std::array<int, 3> idx = base;
    for (int a = 0; a < grid.dimension(); ++a) {
      const bool up = (bits >> a) & 1;
      idx[a] += up;
      w *= up ? t[a] : 1.0 - t[a];
    }
    if (w != 0.0) value += w * f[grid.flatten(idx)];
  }
  return value;
}

double Contour::length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length;
  return total;
}

const std::vector<double>& Contour::field(const std::string& name) const {
  for (std::size_t k = 0; k < field_names.size(); ++k)
    if (field_names[k] == name) return field_values[k];
  throw std::out_of_range("contour has no attached field '" + name + "'");
}

bool Contour::closed(const GridSpec& grid) const {
  const std::uint64_t n = static_cast<std::uint64_t>(grid.points_per_axis());
  std::unordered_map<std::uint64_t, int> uses;
  for (const auto& s : segments) {
    ++uses[s.edge_a];
    ++uses[s.edge_b];
  }
  for (const auto& [edge, count] : uses) {
    const std::uint64_t node = edge / 2;
    const std::uint64_t i = node / n, j = node % n;
    // x-edges run along axis 0, y-edges along axis 1.
    const bool on_box = (edge % 2 == 0) ? (j == 0 || j == n - 1) : (i == 0 || i == n - 1);
    if (count != 2 && !(on_box && count == 1)) return false;
  }
  return true;
}

Contour extract_contour(const ScalarField& u, double s, const std::vector<NamedField>& attach,
                        double time) {
  const GridSpec& grid = u.grid();
  if (grid.dimension() != 2) throw SpecError("contour extraction is 2D only");
  if (!(s > u.min() && s < u.max())) throw EmptyLevelSet("level outside the range of u");

  Contour c;
  c.level = s;
  c.time = time;
  const int n = grid.points_per_axis();
  const std::size_t sn = static_cast<std::size_t>(n);
  const double h = grid.spacing();
  for (int i = 0; i < n - 1; ++i) {
    const double x0 = grid.coordinate(i);
    for (int j = 0; j < n - 1; ++j) {
      const std::size_t p = i * sn + j;
      const std::array<double, 4> f{u[p], u[p + sn], u[p + sn + 1], u[p + 1]};
      const std::array<bool, 4> in{f[0] > s, f[1] > s, f[2] > s, f[3] > s};
      const int count = in[0] + in[1] + in[2] + in[3];
      if (count == 0 || count == 4) continue;
      const double y0 = grid.coordinate(j);

      std::array<Point, 4> pt{};
      std::array<bool, 4> cut{in[0] != in[1], in[1] != in[2], in[3] != in[2], in[0] != in[3]};
      const std::array<std::uint64_t, 4> id{2 * p, 2 * (p + sn) + 1, 2 * (p + 1), 2 * p + 1};
      if (cut[0]) pt[0] = {x0 + h * crossing(f[0], f[1], s), y0, 0.0};
      if (cut[1]) pt[1] = {x0 + h, y0 + h * crossing(f[1], f[2], s), 0.0};
      if (cut[2]) pt[2] = {x0 + h * crossing(f[3], f[2], s), y0 + h, 0.0};
      if (cut[3]) pt[3] = {x0, y0 + h * crossing(f[0], f[3], s), 0.0};

      auto emit = [&](int ea, int eb) {
        Segment seg;
        seg.a = pt[ea];
        seg.b = pt[eb];
        seg.mid = {0.5 * (seg.a[0] + seg.b[0]), 0.5 * (seg.a[1] + seg.b[1]), 0.0};
        seg.length = std::hypot(seg.b[0] - seg.a[0], seg.b[1] - seg.a[1]);
        seg.edge_a = id[ea];
        seg.edge_b = id[eb];
        c.segments.push_back(seg);
      };

      if (count == 2 && in[0] == in[2]) {
        // Saddle: cut off the corners whose state differs from the cell mean.
        const bool center_in = 0.25 * (f[0] + f[1] + f[2] + f[3]) > s;
        static constexpr std::array<std::array<int, 2>, 4> corner_edges{
            {{3, 0}, {0, 1}, {1, 2}, {2, 3}}};
        for (int k = 0; k < 4; ++k)
          if (in[k] != center_in) emit(corner_edges[k][0], corner_edges[k][1]);
      } else {
        int first = -1;
        for (int e = 0; e < 4; ++e) {
          if (!cut[e]) continue;
          if (first < 0) {
            first = e;
          } else {
            emit(first, e);
          }
        }
      }
    }
  }

  const VectorField grad = gradient(u);
  ScalarField gx(grid, std::vector<double>(grad.component(0).begin(), grad.component(0).end()));
  ScalarField gy(grid, std::vector<double>(grad.component(1).begin(), grad.component(1).end()));
  c.normals.reserve(c.segments.size());
  for (const auto& seg : c.segments) {
    const double px = interpolate(gx, seg.mid), py = interpolate(gy, seg.mid);
    const double norm = std::hypot(px, py);
    c.normals.push_back(norm > 0.0 ? std::array<double, 2>{-px / norm, -py / norm}
                                   : std::array<double, 2>{1.0, 0.0});
  }
  for (const auto& nf : attach) {
    std::vector<double> vals;
    vals.reserve(c.segments.size());
    for (const auto& seg : c.segments) vals.push_back(interpolate(*nf.field, seg.mid));
    c.field_names.push_back(nf.name);
    c.field_values.push_back(std::move(vals));
  }
  return c;
}

double contour_integral(const Contour& c, std::span<const double> integrand) {
  if (integrand.size() != c.segments.size())
    throw SpecError("contour integrand does not match the segment count");
  double total = 0.0;
  for (std::size_t k = 0; k < integrand.size(); ++k) total += integrand[k] * c.segments[k].length;
  return total;
}

std::size_t cell_count(const GridSpec& grid) {
  std::size_t total = 1;
  for (int a = 0; a < grid.dimension(); ++a) total *= static_cast<std::size_t>(grid.points_per_axis() - 1);
  return total;
}

Point cell_center(const GridSpec& grid, std::size_t cell) {
  const std::size_t m = static_cast<std::size_t>(grid.points_per_axis() - 1);
  Point p{0.0, 0.0, 0.0};
  for (int a = grid.dimension() - 1; a >= 0; --a) {
    p[a] = grid.coordinate(static_cast<int>(cell % m)) + 0.5 * grid.spacing();
    cell /= m;
  }
  return p;
}

std::vector<double> cell_fractions(const ScalarField& u, double s) {
  std::vector<double> out(cell_count(u.grid()));
  for_each_cell(u, [&](std::size_t cell, const auto& f) { out[cell] = corner_fraction(f, s); });
  return out;
}

double superlevel_volume(const ScalarField& u, double s) {
  double total = 0.0;
  for_each_cell(u, [&](std::size_t, const auto& f) { total += corner_fraction(f, s); });
  return total * u.grid().cell_volume();
}

std::vector<double> coarea_density(const ScalarField& u, const std::vector<double>& levels,
                                   double ds) {
  if (!(ds > 0.0)) throw SpecError("coarea band width must be positive");
  const ScalarField grad_norm = gradient(u).norm();
  const double scale = u.grid().cell_volume() / ds;
  std::vector<double> out;
  out.reserve(levels.size());
  for (double s : levels) {
    double total = 0.0;
    for_each_cell(u, [&](std::size_t cell, const auto& f) {
      const double lo = 0.5 * ds;
      double fmin = f[0], fmax = f[0];
      for (double v : f) fmin = std::min(fmin, v), fmax = std::max(fmax, v);
      if (fmax <= s - lo || fmin > s + lo) return;
      const double band = corner_fraction(f, s - lo) - corner_fraction(f, s + lo);
      if (band <= 0.0) return;
      // Mean |grad u| over the cell corners.
      GridSpec const& grid = u.grid();
      const std::size_t m = static_cast<std::size_t>(grid.points_per_axis() - 1);
      const std::size_t n = m + 1;
      std::size_t rest = cell;
      std::array<std::size_t, 3> idx{0, 0, 0};
      for (int a = grid.dimension() - 1; a >= 0; --a) {
        idx[a] = rest % m;
        rest /= m;
      }
      double mean = 0.0;
      const int corners = 1 << grid.dimension();
      for (int bits = 0; bits < corners; ++bits) {
        std::size_t flat = 0;
        for (int a = 0; a < grid.dimension(); ++a) flat = flat * n + idx[a] + ((bits >> a) & 1);
        mean += grad_norm[flat];
      }
      total += band * mean / corners;
    });
    out.push_back(total * scale);
  }
  return out;
}

std::vector<double> evenly_spaced_levels(double lo, double hi, int count) {
  if (count < 1) throw SpecError("level count must be positive");
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(lo + (hi - lo) * k / (count - 1));
  return out;
}

void write_contour_csv(std::ostream& out, const Contour& c) {
  auto lookup = [&](const char* name) -> const std::vector<double>* {
    for (std::size_t k = 0; k < c.field_names.size(); ++k)
      if (c.field_names[k] == name) return &c.field_values[k];
    return nullptr;
  };
  const auto* v = lookup("V");
  const auto* hcurv = lookup("H");
  out << "x,y,V,H,nu_x,nu_y\n";
  for (std::size_t k = 0; k < c.segments.size(); ++k) {
    out << c.segments[k].mid[0] << ',' << c.segments[k].mid[1] << ',' << (v ? (*v)[k] : 0.0)
        << ',' << (hcurv ? (*hcurv)[k] : 0.0) << ',' << c.normals[k][0] << ',' << c.normals[k][1]
        << '\n';
  }
}

LevelMeasure measure_level(const ScalarField& u, const ScalarField& velocity, double s) {
  LevelMeasure m;
  m.volume = superlevel_volume(u, s);
  if (u.grid().dimension() != 2) {
    m.perimeter = coarea_density(u, {s}, 2.0 * u.grid().spacing())[0];
    return m;
  }
  try {
    const Contour c = extract_contour(u, s, {{"V", &velocity}});
    const auto& v = c.field("V");
    m.perimeter = c.length();
    for (std::size_t k = 0; k < v.size(); ++k) m.surface_dissipation += v[k] * v[k] * c.segments[k].length;
  } catch (const EmptyLevelSet&) {
  }
  return m;
}

LevelSweep sweep_levels(const Trajectory& traj, const std::vector<double>& levels,
                        double cutoff_factor) {
  LevelSweep sweep;
  sweep.times = traj.times;
  for (double s : levels) {
    LevelSeries series;
    series.level = s;
    series.volume.resize(traj.size());
    series.perimeter.resize(traj.size());
    series.surface_dissipation.resize(traj.size());
    sweep.levels.push_back(std::move(series));
  }
  const double cutoff = cutoff_factor * traj.epsilon();
  parallel_for(traj.size(), [&](std::size_t k) {
    const ScalarField& u = traj.snapshots[k];
    const ScalarField v = traj.grid.dimension() == 2
                              ? velocity_field(traj.time_derivative(k), gradient(u), cutoff)
                              : ScalarField(u.grid());
    for (auto& series : sweep.levels) {
      const LevelMeasure m = measure_level(u, v, series.level);
      series.volume[k] = m.volume;
      series.perimeter[k] = m.perimeter;
      series.surface_dissipation[k] = m.surface_dissipation;
    }
  });
  return sweep;
}

}  // namespace lsmcf
