#include "lsmcf/calculus.hpp"

#include "lsmcf/errors.hpp"

namespace lsmcf {
namespace {

// Visits every grid line along `axis`. The callback receives the flat offset of
// the line's first node; consecutive nodes are `stride` apart.
template <typename F>
void for_each_line(const GridSpec& grid, int axis, F&& f) {
  const std::size_t n = static_cast<std::size_t>(grid.points_per_axis());
  const std::size_t stride = grid.stride(axis);
  const std::size_t block = n * stride;
  const std::size_t blocks = grid.size() / block;
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t j = 0; j < stride; ++j) f(b * block + j, stride);
}

}  // namespace

void differentiate(const GridSpec& grid, std::span<const double> in, std::span<double> out,
                   int axis, Parity parity) {
  const int n = grid.points_per_axis();
  const double inv2h = 1.0 / (2.0 * grid.spacing());
  const bool neumann = grid.boundary() == BoundaryRegime::NeumannBox;
  for_each_line(grid, axis, [&](std::size_t base, std::size_t s) {
    const double* f = in.data() + base;
    double* g = out.data() + base;
    for (int k = 1; k < n - 1; ++k) g[k * s] = (f[(k + 1) * s] - f[(k - 1) * s]) * inv2h;
    const std::size_t last = static_cast<std::size_t>(n - 1) * s;
    if (neumann) {
      // Ghost f[-1] = +/- f[1]; even parity cancels exactly.
      if (parity == Parity::Even) {
        g[0] = 0.0;
        g[last] = 0.0;
      } else {
        g[0] = 2.0 * f[s] * inv2h;
        g[last] = -2.0 * f[last - s] * inv2h;
      }
    } else {
      g[0] = (-3.0 * f[0] + 4.0 * f[s] - f[2 * s]) * inv2h;
      g[last] = (3.0 * f[last] - 4.0 * f[last - s] + f[last - 2 * s]) * inv2h;
    }
  });
}

void second_difference(const GridSpec& grid, std::span<const double> in, std::span<double> out,
                       int axis) {
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const double invh2 = 1.0 / (h * h);
  const bool neumann = grid.boundary() == BoundaryRegime::NeumannBox;
  for_each_line(grid, axis, [&](std::size_t base, std::size_t s) {
    const double* f = in.data() + base;
    double* g = out.data() + base;
    for (int k = 1; k < n - 1; ++k)
      g[k * s] = (f[(k + 1) * s] - 2.0 * f[k * s] + f[(k - 1) * s]) * invh2;
    const std::size_t last = static_cast<std::size_t>(n - 1) * s;
    if (neumann) {
      g[0] = 2.0 * (f[s] - f[0]) * invh2;
      g[last] = 2.0 * (f[last - s] - f[last]) * invh2;
    } else {
      g[0] = (2.0 * f[0] - 5.0 * f[s] + 4.0 * f[2 * s] - f[3 * s]) * invh2;
      g[last] = (2.0 * f[last] - 5.0 * f[last - s] + 4.0 * f[last - 2 * s] - f[last - 3 * s]) *
                invh2;
    }
  });
}

VectorField gradient(const ScalarField& f) {
  VectorField g(f.grid());
  for (int a = 0; a < f.grid().dimension(); ++a) differentiate(f.grid(), f.values(), g.component(a), a);
  return g;
}

SymMatrixField hessian(const ScalarField& f) {
  const GridSpec& grid = f.grid();
  const int d = grid.dimension();
  SymMatrixField out(grid);
  std::vector<double> first(grid.size());
  for (int a = 0; a < d; ++a) {
    second_difference(grid, f.values(), out.entry(a, a), a);
    if (a + 1 >= d) continue;
    differentiate(grid, f.values(), first, a);
    for (int b = a + 1; b < d; ++b) differentiate(grid, first, out.entry(a, b), b);
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  const GridSpec& grid = v.grid();
  ScalarField out(grid, 0.0);
  std::vector<double> partial(grid.size());
  for (int a = 0; a < grid.dimension(); ++a) {
    differentiate(grid, v.component(a), partial, a, Parity::Odd);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] += partial[i];
  }
  return out;
}

std::vector<double> quadrature_weights(const GridSpec& grid) {
  const int n = grid.points_per_axis();
  std::vector<double> w(grid.size(), grid.cell_volume());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto idx = grid.unflatten(i);
    for (int a = 0; a < grid.dimension(); ++a)
      if (idx[a] == 0 || idx[a] == n - 1) w[i] *= 0.5;
  }
  return w;
}

double integrate(const GridSpec& grid, std::span<const double> values) {
  // Row sums with per-axis end weights, avoiding a full weight array.
  const int n = grid.points_per_axis();
  const int d = grid.dimension();
  double total = 0.0;
  std::size_t i = 0;
  if (d == 2) {
    for (int a = 0; a < n; ++a) {
      const double wa = (a == 0 || a == n - 1) ? 0.5 : 1.0;
      double row = 0.5 * (values[i] + values[i + n - 1]);
      for (int b = 1; b < n - 1; ++b) row += values[i + b];
      total += wa * row;
      i += n;
    }
  } else {
    for (int a = 0; a < n; ++a) {
      const double wa = (a == 0 || a == n - 1) ? 0.5 : 1.0;
      double plane = 0.0;
      for (int b = 0; b < n; ++b) {
        const double wb = (b == 0 || b == n - 1) ? 0.5 : 1.0;
        double row = 0.5 * (values[i] + values[i + n - 1]);
        for (int c = 1; c < n - 1; ++c) row += values[i + c];
        plane += wb * row;
        i += n;
      }
      total += wa * plane;
    }
  }
  return total * grid.cell_volume();
}

double integrate(const ScalarField& f, const std::optional<ScalarField>& weight) {
  if (!weight) return integrate(f.grid(), f.values());
  if (!(weight->grid() == f.grid())) throw SpecError("integrate: weight lives on another grid");
  std::vector<double> prod(f.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = f[i] * (*weight)[i];
  return integrate(f.grid(), prod);
}

}  // namespace lsmcf
