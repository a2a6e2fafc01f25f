#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"
#include "lsmcf/field.hpp"
#include "lsmcf/snapshot_io.hpp"

using namespace lsmcf;
using doctest::Approx;

namespace {

double max_interior_abs(const GridSpec& g, std::span<const double> v) {
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!g.on_boundary(i)) m = std::max(m, std::abs(v[i]));
  return m;
}

}  // namespace

TEST_CASE("grid geometry") {
  GridSpec g(2, 1.0, 65);
  CHECK(g.spacing() == Approx(1.0 / 32));
  CHECK(g.size() == 65u * 65u);
  CHECK(g.box_volume() == Approx(4.0));
  CHECK(g.coordinate(0) == -1.0);
  CHECK(g.coordinate(64) == Approx(1.0));
  for (std::size_t i : {std::size_t{0}, std::size_t{1234}, g.size() - 1})
    CHECK(g.flatten(g.unflatten(i)) == i);
  CHECK(g.on_boundary(0));
  CHECK_FALSE(g.on_boundary(g.flatten({32, 32, 0})));

  GridSpec g3(3, 0.5, 17);
  CHECK(g3.size() == 17u * 17u * 17u);
  CHECK(g3.box_volume() == Approx(1.0));
}

TEST_CASE("grid rejects bad specs") {
  CHECK_THROWS_AS(GridSpec(1, 1.0, 32), SpecError);
  CHECK_THROWS_AS(GridSpec(2, 0.0, 32), SpecError);
  CHECK_THROWS_AS(GridSpec(2, 1.0, 8), SpecError);
  CHECK_THROWS_AS(boundary_regime_from_string("periodic"), SpecError);
  CHECK(boundary_regime_from_string(to_string(BoundaryRegime::NeumannBox)) ==
        BoundaryRegime::NeumannBox);
}

TEST_CASE("trapezoid integral of a narrow gaussian") {
  // Exact value 2 pi sigma^2; the tails outside the box are below 1e-20.
  const double sigma = 0.1;
  GridSpec g(2, 1.0, 129);
  auto f = ScalarField::sample(g, [&](const Point& p) {
    return std::exp(-(p[0] * p[0] + p[1] * p[1]) / (2 * sigma * sigma));
  });
  CHECK(integrate(f) == Approx(2 * std::numbers::pi * sigma * sigma).epsilon(1e-10));

  GridSpec g3(3, 1.0, 65);
  auto f3 = ScalarField::sample(g3, [&](const Point& p) {
    return std::exp(-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (2 * sigma * sigma));
  });
  CHECK(integrate(f3) == Approx(std::pow(2 * std::numbers::pi * sigma * sigma, 1.5)).epsilon(1e-8));
}

TEST_CASE("weights sum to the box volume") {
  for (int d : {2, 3}) {
    GridSpec g(d, 0.75, 20);
    double sum = 0.0;
    for (double w : quadrature_weights(g)) sum += w;
    CHECK(sum == Approx(g.box_volume()).epsilon(1e-13));
  }
}

TEST_CASE("differences are exact on quadratics") {
  GridSpec g(2, 1.0, 33);
  auto f = ScalarField::sample(g, [](const Point& p) { return p[0] * p[0] * p[1] + 3 * p[1] * p[1]; });
  const VectorField grad = gradient(f);
  const SymMatrixField hess = hessian(f);
  for (std::size_t i = 0; i < g.size(); i += 7) {
    const Point p = g.position(i);
    CHECK(grad.component(0)[i] == Approx(2 * p[0] * p[1]).epsilon(1e-11));
    CHECK(grad.component(1)[i] == Approx(p[0] * p[0] + 6 * p[1]).epsilon(1e-11));
    if (!g.on_boundary(i)) {
      CHECK(hess.entry(0, 0)[i] == Approx(2 * p[1]).epsilon(1e-9));
      CHECK(hess.entry(1, 1)[i] == Approx(6.0).epsilon(1e-9));
      CHECK(hess.entry(0, 1)[i] == Approx(2 * p[0]).epsilon(1e-9));
    }
  }
}

TEST_CASE("divergence of the position field") {
  GridSpec g(3, 1.0, 17);
  VectorField v(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int a = 0; a < 3; ++a) v.component(a)[i] = g.position(i)[a];
  const ScalarField div = divergence(v);
  for (std::size_t i = 0; i < g.size(); i += 11) CHECK(div[i] == Approx(3.0));
}

TEST_CASE("neumann even ghosts zero the normal derivative") {
  GridSpec g(2, 1.0, 33, BoundaryRegime::NeumannBox);
  auto f = ScalarField::sample(g, [](const Point& p) { return std::cos(std::numbers::pi * p[0]); });
  const VectorField grad = gradient(f);
  for (int j = 0; j < 33; ++j) {
    CHECK(grad.component(0)[g.flatten({0, j, 0})] == 0.0);
    CHECK(grad.component(0)[g.flatten({32, j, 0})] == 0.0);
  }
}

TEST_CASE("property: gradient is linear") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  GridSpec g(2, 1.0, 24);
  for (int trial = 0; trial < 5; ++trial) {
    ScalarField f(g), h(g), mix(g);
    const double a = U(rng), b = U(rng);
    for (std::size_t i = 0; i < g.size(); ++i) {
      f[i] = U(rng);
      h[i] = U(rng);
      mix[i] = a * f[i] + b * h[i];
    }
    const VectorField gf = gradient(f), gh = gradient(h), gm = gradient(mix);
    for (int axis = 0; axis < 2; ++axis)
      for (std::size_t i = 0; i < g.size(); ++i)
        REQUIRE(gm.component(axis)[i] ==
                Approx(a * gf.component(axis)[i] + b * gh.component(axis)[i]).epsilon(1e-10).scale(10));
  }
}

TEST_CASE("property: product rule defect shrinks with h") {
  auto defect = [](int n) {
    GridSpec g(2, 1.0, n);
    auto f = ScalarField::sample(g, [](const Point& p) { return std::sin(2 * p[0]) + p[1]; });
    auto h = ScalarField::sample(g, [](const Point& p) { return std::exp(p[0] * p[1]); });
    ScalarField fh(g);
    for (std::size_t i = 0; i < g.size(); ++i) fh[i] = f[i] * h[i];
    const VectorField gf = gradient(f), gh = gradient(h), gfh = gradient(fh);
    std::vector<double> err(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      err[i] = gfh.component(0)[i] - f[i] * gh.component(0)[i] - h[i] * gf.component(0)[i];
    return max_interior_abs(g, err);
  };
  const double coarse = defect(33), fine = defect(65);
  CHECK(fine < coarse);
  CHECK(fine / coarse < 0.5);
}

TEST_CASE("snapshot round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "lsmcf_test_snapshot";
  std::filesystem::create_directories(dir);
  GridSpec g(2, 1.0, 17, BoundaryRegime::NeumannBox);
  auto f = ScalarField::sample(g, [](const Point& p) { return p[0] - 0.5 * p[1] + 1e-17; });
  write_snapshot(dir / "s", f, {0.125, 0.0625, "roundtrip"});
  const LoadedSnapshot back = read_snapshot(dir / "s", BoundaryRegime::NeumannBox);
  CHECK(back.field.grid() == g);
  CHECK(back.meta.time == 0.125);
  CHECK(back.meta.epsilon == 0.0625);
  CHECK(back.meta.name == "roundtrip");
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(back.field[i] == f[i]);
  CHECK_THROWS_AS(read_snapshot(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}
