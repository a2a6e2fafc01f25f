#pragma once

// Second-order finite-difference calculus on GridSpec fields.
//
// Interior nodes use central differences. Face nodes follow the grid's
// boundary regime:
//   FarFieldConstant  one-sided second-order stencils,
//   NeumannBox        ghost values from reflection across the face.
// Scalars reflect evenly. In divergence() the component normal to a face is
// reflected oddly, which is the parity of the gradient of an even scalar.

#include <optional>

#include "lsmcf/field.hpp"

namespace lsmcf {

enum class Parity { Even, Odd };

/// d/dx_axis of a flat sample array laid out on `grid`.
void differentiate(const GridSpec& grid, std::span<const double> in, std::span<double> out,
                   int axis, Parity parity = Parity::Even);

/// d^2/dx_axis^2 of a flat sample array (3-point interior stencil).
void second_difference(const GridSpec& grid, std::span<const double> in, std::span<double> out,
                       int axis);

VectorField gradient(const ScalarField& f);

/// Diagonal from 3-point second differences, off-diagonal from the composition
/// of two first differences (the 4-point cross stencil at interior nodes).
SymMatrixField hessian(const ScalarField& f);

ScalarField divergence(const VectorField& v);

/// Trapezoid-consistent box quadrature: node weight h^d times 1/2 per face the
/// node lies on. Exact for constants and for odd functions on the symmetric box.
double integrate(const ScalarField& f, const std::optional<ScalarField>& weight = std::nullopt);
double integrate(const GridSpec& grid, std::span<const double> values);

/// Per-node quadrature weights used by integrate().
std::vector<double> quadrature_weights(const GridSpec& grid);

}  // namespace lsmcf
