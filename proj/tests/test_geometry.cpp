#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>

#include "lsmcf/calculus.hpp"
#include "lsmcf/errors.hpp"
#include "lsmcf/geometry.hpp"
#include "lsmcf/initial_data.hpp"
#include "lsmcf/parallel.hpp"
#include "lsmcf/solver.hpp"

using namespace lsmcf;
using doctest::Approx;

namespace {

constexpr double pi = std::numbers::pi;

ScalarField cone(const GridSpec& g) {
  return ScalarField::sample(g, [&](const Point& x) {
    double sq = 0.0;
    for (int a = 0; a < g.dimension(); ++a) sq += x[a] * x[a];
    return 1.0 - std::sqrt(sq);
  });
}

}  // namespace

TEST_CASE("cone contour is a circle") {
  GridSpec g(2, 1.0, 129);
  const ScalarField u = cone(g);
  const Contour c = extract_contour(u, 0.75);
  CHECK(c.length() == Approx(2 * pi * 0.25).epsilon(1e-3));
  CHECK(c.closed(g));
  REQUIRE(c.normals.size() == c.segments.size());
  for (std::size_t k = 0; k < c.segments.size(); ++k) {
    const Point& m = c.segments[k].mid;
    const double r = std::hypot(m[0], m[1]);
    REQUIRE(r == Approx(0.25).epsilon(0.01));
    // Outward normal of the disc {u > 0.75}.
    REQUIRE(c.normals[k][0] * m[0] / r + c.normals[k][1] * m[1] / r > 0.99);
  }
  std::vector<double> ones(c.segments.size(), 1.0);
  CHECK(contour_integral(c, ones) == Approx(c.length()));
}

TEST_CASE("contour attaches fields at midpoints") {
  GridSpec g(2, 1.0, 65);
  const ScalarField u = cone(g);
  const ScalarField x = ScalarField::sample(g, [](const Point& p) { return p[0]; });
  const Contour c = extract_contour(u, 0.5, {{"x", &x}}, 0.125);
  CHECK(c.time == 0.125);
  const auto& vals = c.field("x");
  for (std::size_t k = 0; k < c.segments.size(); ++k)
    REQUIRE(vals[k] == Approx(c.segments[k].mid[0]).epsilon(1e-12).scale(1));
  CHECK_THROWS_AS(c.field("missing"), std::out_of_range);

  std::ostringstream csv;
  write_contour_csv(csv, c);
  CHECK(csv.str().rfind("x,y,V,H,nu_x,nu_y\n", 0) == 0);
}

TEST_CASE("contour preconditions") {
  GridSpec g(2, 1.0, 33);
  const ScalarField u = cone(g);
  CHECK_THROWS_AS(extract_contour(u, 1.5), EmptyLevelSet);
  CHECK_THROWS_AS(extract_contour(u, u.min()), EmptyLevelSet);
  CHECK_THROWS_AS(extract_contour(cone(GridSpec(3, 1.0, 17)), 0.5), SpecError);
}

TEST_CASE("saddle levels stay consistent") {
  GridSpec g(2, 1.0, 64);
  const ScalarField u = ScalarField::sample(g, [](const Point& p) { return p[0] * p[1]; });
  for (double s : {-0.1, 0.0, 1e-3, 0.2}) {
    const Contour c = extract_contour(u, s);
    CHECK(c.closed(g));
    CHECK(c.length() > 0.0);
  }
}

TEST_CASE("disc area and exact linear volumes") {
  GridSpec g(2, 1.0, 129);
  CHECK(superlevel_volume(cone(g), 0.75) == Approx(pi * 0.0625).epsilon(1e-3));
  const ScalarField x = ScalarField::sample(g, [](const Point& p) { return p[0]; });
  CHECK(superlevel_volume(x, 0.3) == Approx(1.4).epsilon(1e-12));
  CHECK(superlevel_volume(x, -2.0) == Approx(4.0));
  CHECK(superlevel_volume(x, 2.0) == 0.0);

  GridSpec g3(3, 1.0, 33);
  const ScalarField plane = ScalarField::sample(g3, [](const Point& p) { return p[0] + p[1] + p[2]; });
  CHECK(superlevel_volume(plane, 0.0) == Approx(4.0).epsilon(1e-12));
  const ScalarField xz = ScalarField::sample(g3, [](const Point& p) { return p[2]; });
  CHECK(superlevel_volume(xz, 0.5) == Approx(2.0).epsilon(1e-12));
  CHECK(superlevel_volume(cone(GridSpec(3, 1.0, 65)), 0.5) == Approx(4.0 / 3 * pi * 0.125).epsilon(0.01));
}

TEST_CASE("property: cell fractions lie in [0, 1] and are monotone in s") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int d : {2, 3}) {
    GridSpec g(d, 1.0, 16);
    ScalarField u(g);
    for (double& v : u.values()) v = U(rng);
    const auto lo = cell_fractions(u, -0.2), hi = cell_fractions(u, 0.3);
    REQUIRE(lo.size() == cell_count(g));
    for (std::size_t k = 0; k < lo.size(); ++k) {
      REQUIRE(lo[k] >= 0.0);
      REQUIRE(lo[k] <= 1.0);
      REQUIRE(hi[k] <= lo[k] + 1e-12);
    }
  }
}

TEST_CASE("property: fraction of s and of -u at -s are complementary") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  GridSpec g(3, 1.0, 16);
  ScalarField u(g), neg(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    u[i] = U(rng);
    neg[i] = -u[i];
  }
  const auto a = cell_fractions(u, 0.1), b = cell_fractions(neg, -0.1);
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k] + b[k] == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coarea density of the cone") {
  // |grad u| = 1, so the density is the perimeter 2 pi (1 - s).
  GridSpec g(2, 1.0, 257);
  const ScalarField u = cone(g);
  const auto p = coarea_density(u, {0.3, 0.5, 0.7}, 2 * g.spacing());
  CHECK(p[0] == Approx(2 * pi * 0.7).epsilon(0.02));
  CHECK(p[1] == Approx(2 * pi * 0.5).epsilon(0.02));
  CHECK(p[2] == Approx(2 * pi * 0.3).epsilon(0.02));
}

TEST_CASE("cell geometry and helpers") {
  GridSpec g(2, 1.0, 17);
  CHECK(cell_count(g) == 256);
  const Point c0 = cell_center(g, 0);
  CHECK(c0[0] == Approx(-1.0 + g.spacing() / 2));
  CHECK(c0[1] == Approx(-1.0 + g.spacing() / 2));
  const auto lv = evenly_spaced_levels(-0.2, 0.2, 5);
  REQUIRE(lv.size() == 5);
  CHECK(lv[0] == -0.2);
  CHECK(lv[2] == Approx(0.0).scale(1));
  CHECK(lv[4] == Approx(0.2));
}

TEST_CASE("interpolation reproduces bilinear data") {
  GridSpec g(2, 1.0, 21);
  const ScalarField f = ScalarField::sample(g, [](const Point& p) { return p[0] * p[1] + 2 * p[0] - p[1]; });
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Point p{U(rng), U(rng), 0};
    REQUIRE(interpolate(f, p) == Approx(p[0] * p[1] + 2 * p[0] - p[1]).epsilon(1e-12).scale(1));
  }
  CHECK(interpolate(f, {5.0, 0.0, 0.0}) == Approx(2.0));
}

TEST_CASE("velocity cutoff") {
  GridSpec g(2, 1.0, 17);
  const VectorField grad = gradient(ScalarField::sample(g, [](const Point& p) { return 0.5 * p[0]; }));
  ScalarField ut(g, 0.25);
  const ScalarField v = velocity_field(ut, grad, 0.1);
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(v[i] == Approx(0.5));
  const ScalarField cut = velocity_field(ut, grad, 0.6);
  for (std::size_t i = 0; i < g.size(); ++i) REQUIRE(cut[i] == 0.0);
}

TEST_CASE("level measure on a circle") {
  GridSpec g(2, 1.0, 129);
  const ScalarField u = cone(g);
  const LevelMeasure m = measure_level(u, ScalarField(g, 2.0), 0.6);
  CHECK(m.volume == Approx(pi * 0.16).epsilon(1e-3));
  CHECK(m.perimeter == Approx(2 * pi * 0.4).epsilon(1e-3));
  CHECK(m.surface_dissipation == Approx(4.0 * m.perimeter));
  const LevelMeasure gone = measure_level(u, ScalarField(g, 2.0), 1.5);
  CHECK(gone.perimeter == 0.0);
  CHECK(gone.volume == 0.0);
}

TEST_CASE("property: level sweeps do not depend on the thread count") {
  GridSpec g(2, 1.0, 65);
  SolverParams p;
  p.epsilon = g.spacing();
  p.t_end = 0.01;
  const auto tr = run(build(InitialDataSpec{}, g), p);
  setenv("LSMCF_THREADS", "1", 1);
  const LevelSweep one = sweep_levels(tr, {-0.1, 0.0, 0.1});
  setenv("LSMCF_THREADS", "4", 1);
  CHECK(thread_limit() == 4);
  const LevelSweep four = sweep_levels(tr, {-0.1, 0.0, 0.1});
  unsetenv("LSMCF_THREADS");
  for (std::size_t l = 0; l < 3; ++l)
    for (std::size_t k = 0; k < tr.size(); ++k) {
      REQUIRE(one.levels[l].perimeter[k] == four.levels[l].perimeter[k]);
      REQUIRE(one.levels[l].volume[k] == four.levels[l].volume[k]);
      REQUIRE(one.levels[l].surface_dissipation[k] == four.levels[l].surface_dissipation[k]);
    }
}

TEST_CASE("parallel_for visits every index and forwards exceptions") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) REQUIRE(h == 1);
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw Error("seven");
                  }),
                  Error);
}
