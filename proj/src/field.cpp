#include "lsmcf/field.hpp"

#include <algorithm>
#include <cmath>

#include "lsmcf/errors.hpp"

namespace lsmcf {

std::string to_string(BoundaryRegime regime) {
  switch (regime) {
    case BoundaryRegime::FarFieldConstant:
      return "far_field_constant";
    case BoundaryRegime::NeumannBox:
      return "neumann_box";
  }
  return "unknown";
}

BoundaryRegime boundary_regime_from_string(const std::string& name) {
  if (name == "far_field_constant") return BoundaryRegime::FarFieldConstant;
  if (name == "neumann_box") return BoundaryRegime::NeumannBox;
  throw SpecError("unknown boundary regime '" + name + "'");
}

GridSpec::GridSpec(int dimension, double half_width, int points_per_axis, BoundaryRegime regime)
    : dimension_(dimension), half_width_(half_width), n_(points_per_axis), regime_(regime) {
  if (dimension != 2 && dimension != 3) throw SpecError("grid dimension must be 2 or 3");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw SpecError("grid half_width must be positive");
  if (points_per_axis < 16) throw SpecError("grid needs at least 16 points per axis");
}

std::size_t GridSpec::size() const noexcept {
  std::size_t total = 1;
  for (int a = 0; a < dimension_; ++a) total *= static_cast<std::size_t>(n_);
  return total;
}

std::size_t GridSpec::stride(int axis) const noexcept {
  std::size_t s = 1;
  for (int a = dimension_ - 1; a > axis; --a) s *= static_cast<std::size_t>(n_);
  return s;
}

double GridSpec::box_volume() const noexcept { return std::pow(2.0 * half_width_, dimension_); }

double GridSpec::cell_volume() const noexcept { return std::pow(spacing(), dimension_); }

std::array<int, 3> GridSpec::unflatten(std::size_t flat) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dimension_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n_);
    flat /= n_;
  }
  return idx;
}

std::size_t GridSpec::flatten(const std::array<int, 3>& idx) const noexcept {
  std::size_t flat = 0;
  for (int a = 0; a < dimension_; ++a) flat = flat * n_ + static_cast<std::size_t>(idx[a]);
  return flat;
}

Point GridSpec::position(std::size_t flat) const noexcept {
  const auto idx = unflatten(flat);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dimension_; ++a) p[a] = coordinate(idx[a]);
  return p;
}

bool GridSpec::on_boundary(std::size_t flat) const noexcept {
  const auto idx = unflatten(flat);
  for (int a = 0; a < dimension_; ++a)
    if (idx[a] == 0 || idx[a] == n_ - 1) return true;
  return false;
}

ScalarField::ScalarField(const GridSpec& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw SpecError("sample count does not match grid");
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::sup_norm() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

VectorField::VectorField(const GridSpec& grid)
    : grid_(grid),
      components_(static_cast<std::size_t>(grid.dimension()), std::vector<double>(grid.size())) {}

ScalarField VectorField::norm() const {
  ScalarField out(grid_);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    double sq = 0.0;
    for (const auto& c : components_) sq += c[i] * c[i];
    out[i] = std::sqrt(sq);
  }
  return out;
}

SymMatrixField::SymMatrixField(const GridSpec& grid)
    : grid_(grid),
      entries_(static_cast<std::size_t>(grid.dimension() * (grid.dimension() + 1) / 2),
               std::vector<double>(grid.size())) {}

int SymMatrixField::slot(int row, int col) const noexcept {
  if (row > col) std::swap(row, col);
  const int d = grid_.dimension();
  // Offset of the first entry of `row` in the packed upper triangle.
  return row * d - row * (row - 1) / 2 + (col - row);
}

}  // namespace lsmcf
