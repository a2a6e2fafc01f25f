#pragma once

// Uniform Cartesian grids on the box [-L, L]^d and fields sampled on them.
//
// Layout: samples are stored row-major with axis 0 varying slowest, so in 2D
// the flat index of node (i, j) is i * n + j and in 3D (i, j, k) maps to
// (i * n + j) * n + k. Node i along any axis sits at coordinate -L + i * h.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lsmcf {

enum class BoundaryRegime {
  /// Stand-in for R^d: face values are held at the far-field constant.
  FarFieldConstant,
  /// Homogeneous Neumann box: even reflection across every face.
  NeumannBox,
};

std::string to_string(BoundaryRegime regime);
BoundaryRegime boundary_regime_from_string(const std::string& name);

using Point = std::array<double, 3>;

class GridSpec {
 public:
  GridSpec() = default;
  /// Throws SpecError unless dimension is 2 or 3, half_width > 0 and n >= 16.
  GridSpec(int dimension, double half_width, int points_per_axis,
           BoundaryRegime regime = BoundaryRegime::FarFieldConstant);

  int dimension() const noexcept { return dimension_; }
  double half_width() const noexcept { return half_width_; }
  int points_per_axis() const noexcept { return n_; }
  double spacing() const noexcept { return 2.0 * half_width_ / (n_ - 1); }
  BoundaryRegime boundary() const noexcept { return regime_; }

  std::size_t size() const noexcept;
  /// Distance in the flat array between neighbours along `axis`.
  std::size_t stride(int axis) const noexcept;
  double coordinate(int index) const noexcept { return -half_width_ + index * spacing(); }
  /// Volume (area in 2D) of the box.
  double box_volume() const noexcept;
  double cell_volume() const noexcept;

  std::array<int, 3> unflatten(std::size_t flat) const noexcept;
  std::size_t flatten(const std::array<int, 3>& idx) const noexcept;
  Point position(std::size_t flat) const noexcept;
  /// True when the node lies on any face of the box.
  bool on_boundary(std::size_t flat) const noexcept;

  bool operator==(const GridSpec& other) const noexcept = default;

 private:
  int dimension_ = 2;
  double half_width_ = 1.0;
  int n_ = 16;
  BoundaryRegime regime_ = BoundaryRegime::FarFieldConstant;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& grid, double fill = 0.0);
  ScalarField(const GridSpec& grid, std::vector<double> values);

  /// Samples f at every node.
  template <typename F>
  static ScalarField sample(const GridSpec& grid, F&& f) {
    ScalarField out(grid);
    for (std::size_t i = 0; i < out.values_.size(); ++i) out.values_[i] = f(grid.position(i));
    return out;
  }

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  double min() const;
  double max() const;
  double sup_norm() const;
  bool all_finite() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const GridSpec& grid);

  const GridSpec& grid() const noexcept { return grid_; }
  int components() const noexcept { return static_cast<int>(components_.size()); }
  std::span<const double> component(int axis) const noexcept { return components_[axis]; }
  std::span<double> component(int axis) noexcept { return components_[axis]; }
  /// Euclidean norm at every node.
  ScalarField norm() const;

 private:
  GridSpec grid_;
  std::vector<std::vector<double>> components_;
};

/// Symmetric d x d matrix per node, upper triangle stored row by row:
/// 2D (xx, xy, yy), 3D (xx, xy, xz, yy, yz, zz).
class SymMatrixField {
 public:
  SymMatrixField() = default;
  explicit SymMatrixField(const GridSpec& grid);

  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> entry(int row, int col) const noexcept {
    return entries_[slot(row, col)];
  }
  std::span<double> entry(int row, int col) noexcept { return entries_[slot(row, col)]; }

 private:
  int slot(int row, int col) const noexcept;

  GridSpec grid_;
  std::vector<std::vector<double>> entries_;
};

}  // namespace lsmcf
