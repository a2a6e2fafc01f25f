#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lsmcf/field.hpp"
#include "lsmcf/solver.hpp"

namespace lsmcf {

/// V = u_t / |grad u| where |grad u| >= cutoff, 0 elsewhere.
ScalarField velocity_field(const ScalarField& u_t, const VectorField& grad_u, double cutoff);

/// Multilinear interpolation of node samples at p (p clamped into the box).
double interpolate(const ScalarField& f, const Point& p);

struct Segment {
  Point a{};
  Point b{};
  Point mid{};
  double length = 0.0;
  /// Grid edges carrying the endpoints; used to check loop closure.
  std::uint64_t edge_a = 0;
  std::uint64_t edge_b = 0;
};

struct NamedField {
  std::string name;
  const ScalarField* field = nullptr;
};

/// Piecewise-linear approximation of {u = s} in 2D. Per-segment values live at
/// segment midpoints.
struct Contour {
  double level = 0.0;
  double time = 0.0;
  std::vector<Segment> segments;
  /// Unit outer normal of the super level set, -grad u / |grad u|.
  std::vector<std::array<double, 2>> normals;
  std::vector<std::string> field_names;
  std::vector<std::vector<double>> field_values;

  double length() const;
  /// Values of an attached field by name; throws std::out_of_range if absent.
  const std::vector<double>& field(const std::string& name) const;
  /// Every interior crossing edge is shared by exactly two segments. Crossings
  /// on the box boundary (open arcs) are allowed to appear once.
  bool closed(const GridSpec& grid) const;
};

/// Marching squares with linear edge interpolation; saddles resolved by
/// comparing the mean of the four corners to s. Throws EmptyLevelSet unless
/// min u < s < max u, SpecError for 3D grids.
Contour extract_contour(const ScalarField& u, double s, const std::vector<NamedField>& attach = {},
                        double time = 0.0);

/// Sum over segments of value * length.
double contour_integral(const Contour& c, std::span<const double> integrand);

/// Fraction of each grid cell where the piecewise-linear reconstruction of u
/// exceeds s. 2D: polygon clipping consistent with extract_contour. 3D: six
/// Kuhn tetrahedra per cell with exact linear clipping. Cells are indexed on
/// the (n-1)^d cell lattice, row-major like nodes.
std::vector<double> cell_fractions(const ScalarField& u, double s);
std::size_t cell_count(const GridSpec& grid);
Point cell_center(const GridSpec& grid, std::size_t cell);

/// Volume of {u > s}.
double superlevel_volume(const ScalarField& u, double s);

/// Band-averaged perimeter (1/ds) * integral of |grad u| over {|u - s| < ds/2},
/// with the band measured by cell fractions.
std::vector<double> coarea_density(const ScalarField& u, const std::vector<double>& levels,
                                   double ds);

/// Levels evenly spaced from lo to hi inclusive.
std::vector<double> evenly_spaced_levels(double lo, double hi, int count);

/// Writes x, y, V, H, nu_x, nu_y per segment midpoint. V and H come from the
/// attached fields of those names, or 0 when not attached.
void write_contour_csv(std::ostream& out, const Contour& c);

struct LevelMeasure {
  double volume = 0.0;
  double perimeter = 0.0;
  double surface_dissipation = 0.0;
};

/// Geometry of one level of one snapshot. `velocity` is V on the same grid;
/// it is ignored in 3D.
LevelMeasure measure_level(const ScalarField& u, const ScalarField& velocity, double s);

struct LevelSeries {
  double level = 0.0;
  std::vector<double> volume;
  /// Contour length in 2D, coarea density in 3D.
  std::vector<double> perimeter;
  /// Integral of V^2 over the level set at each snapshot (2D only, else 0).
  std::vector<double> surface_dissipation;
};

struct LevelSweep {
  std::vector<double> times;
  std::vector<LevelSeries> levels;
};

/// Per-snapshot geometry of every level. V uses cutoff = cutoff_factor * eps.
/// Snapshots are processed in parallel.
LevelSweep sweep_levels(const Trajectory& traj, const std::vector<double>& levels,
                        double cutoff_factor = 0.1);

}  // namespace lsmcf
