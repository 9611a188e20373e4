#include <cmath>

#include "doctest.h"
#include "pflow/grid.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

TEST_CASE("make_grid spacings and validation") {
  const Grid g = make_grid(128, 128, 1.0, 1.0);
  CHECK(g.hx == doctest::Approx(1.0 / 128));
  CHECK(g.hy == doctest::Approx(1.0 / 128));
  const Grid r = make_grid(8, 16, 1.0, 2.0);
  CHECK(r.hx == doctest::Approx(0.125));
  CHECK(r.hy == doctest::Approx(0.125));
  CHECK_THROWS_AS(make_grid(4, 4, 1.0, 1.0), Error);
  CHECK_THROWS_AS(make_grid(16, 16, 0.0, 1.0), Error);
  CHECK_THROWS_AS(make_grid(16, 16, 1.0, -2.0), Error);
}

TEST_CASE("divergence of constant and linear fields vanishes") {
  const Grid g = make_grid(16, 12, 1.0, 0.75);
  const VectorField c = sample_faces(g, [](double, double) { return 1.0; },
                                     [](double, double) { return 0.0; });
  CHECK(divergence(c).max_abs() < 1e-13);
  const VectorField lin = sample_faces(g, [](double x, double) { return x; },
                                       [](double, double y) { return -y; });
  CHECK(divergence(lin).max_abs() < 1e-12);
}

TEST_CASE("divergence is second order on sin(pi x)") {
  auto err = [](int n) {
    const Grid g = make_grid(n, n, 1.0, 1.0);
    const VectorField v = sample_faces(
        g, [](double x, double) { return std::sin(kPi * x); },
        [](double, double) { return 0.0; });
    const ScalarField exact =
        sample_cells(g, [](double x, double) { return kPi * std::cos(kPi * x); });
    return (divergence(v) - exact).max_abs();
  };
  const double e1 = err(32), e2 = err(64), e3 = err(128);
  CHECK(order(e1, e2) >= 1.9);
  CHECK(order(e2, e3) >= 1.9);
}

TEST_CASE("gradient of constant and linear scalars") {
  const Grid g = make_grid(16, 16, 1.0, 1.0);
  CHECK(gradient(ScalarField(g, 3.0)).max_abs() == 0.0);
  const VectorField gx = gradient(sample_cells(g, [](double x, double) { return x; }));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) CHECK(gx.u(i, j) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gx.max_wall_value() == 0.0);
  double vmax = 0.0;
  for (double x : gx.v_values()) vmax = std::max(vmax, std::abs(x));
  CHECK(vmax < 1e-12);
}

TEST_CASE("gradient is the negative adjoint of divergence") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Grid g = make_grid(17 + trial, 23, 1.3, 0.9);
    const ScalarField p = random_cells(g, rng);
    const VectorField v = random_faces(g, rng);
    const double lhs = inner(gradient(p), v);
    const double rhs = -inner(p, divergence(v));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0));
  }
}

TEST_CASE("gradient refinement order on a smooth scalar") {
  auto err = [](int n) {
    const Grid g = make_grid(n, n, 1.0, 1.0);
    const VectorField gp = gradient(sample_cells(
        g, [](double x, double y) { return std::sin(2 * x) * std::cos(3 * y); }));
    double e = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i)
        e = std::max(e, std::abs(gp.u(i, j) - 2 * std::cos(2 * i * g.hx) * std::cos(3 * g.yc(j))));
    return e;
  };
  CHECK(order(err(32), err(64)) >= 1.9);
}

TEST_CASE("div(grad) matches the Neumann Laplacian stencil") {
  std::mt19937_64 rng(3);
  const Grid g = make_grid(12, 9, 1.0, 1.0);
  const ScalarField p = random_cells(g, rng);
  const ScalarField lap = laplacian_neumann(p);
  double worst = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double s = 0.0;
      if (i > 0) s += (p(i - 1, j) - p(i, j)) / (g.hx * g.hx);
      if (i + 1 < g.nx) s += (p(i + 1, j) - p(i, j)) / (g.hx * g.hx);
      if (j > 0) s += (p(i, j - 1) - p(i, j)) / (g.hy * g.hy);
      if (j + 1 < g.ny) s += (p(i, j + 1) - p(i, j)) / (g.hy * g.hy);
      worst = std::max(worst, std::abs(s - lap(i, j)) / (1.0 + std::abs(s)));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("no-slip Laplacian: zero, eigenfunction and symmetry") {
  const Grid g0 = make_grid(16, 16, 1.0, 1.0);
  CHECK(laplacian_dirichlet(VectorField(g0), 1.0).max_abs() == 0.0);

  const double mu = 0.7;
  auto err = [mu](int n) {
    const Grid g = make_grid(n, n, 1.0, 1.0);
    auto mode = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
    const VectorField v = sample_faces(g, mode, [](double, double) { return 0.0; });
    VectorField expect = v;
    expect *= -2.0 * kPi * kPi * mu;
    expect.zero_walls();
    return (laplacian_dirichlet(v, mu) - expect).max_abs();
  };
  const double e1 = err(32), e2 = err(64), e3 = err(128);
  CHECK(order(e1, e2) >= 1.9);
  CHECK(order(e2, e3) >= 1.9);

  std::mt19937_64 rng(11);
  const Grid g = make_grid(14, 19, 1.0, 1.2);
  const VectorField a = random_faces(g, rng);
  const VectorField b = random_faces(g, rng);
  const double ab = inner(laplacian_dirichlet(a, 1.0), b);
  const double ba = inner(a, laplacian_dirichlet(b, 1.0));
  CHECK(std::abs(ab - ba) <= 1e-12 * std::abs(ab));
}

TEST_CASE("velocity gradient trace equals the MAC divergence") {
  std::mt19937_64 rng(5);
  const Grid g = make_grid(10, 13, 1.0, 1.0);
  const VectorField v = random_faces(g, rng);
  const MatrixField grad = velocity_gradient(v);
  const ScalarField div = divergence(v);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      CHECK(grad(i, j).trace() == doctest::Approx(div(i, j)).epsilon(1e-12));
}

TEST_CASE("Poincare constant on the unit square and a 2x1 rectangle") {
  const DomainConstants unit = poincare_constant(make_grid(128, 128, 1.0, 1.0));
  const double exact = 1.0 / (kPi * std::sqrt(2.0));
  CHECK(std::abs(unit.poincare_constant - exact) <= 0.005 * exact);
  CHECK(unit.lambda1 == doctest::Approx(2 * kPi * kPi).epsilon(0.01));
  CHECK(unit.diameter == doctest::Approx(std::sqrt(2.0)));

  const DomainConstants rect = poincare_constant(make_grid(128, 64, 2.0, 1.0));
  const double exact_rect = 2.0 / (kPi * std::sqrt(5.0));
  CHECK(std::abs(rect.poincare_constant - exact_rect) <= 0.005 * exact_rect);

  const DomainConstants small = poincare_constant(make_grid(32, 32, 1.0, 1.0));
  const DomainConstants big = poincare_constant(make_grid(32, 32, 2.0, 2.0));
  CHECK(big.poincare_constant == doctest::Approx(2.0 * small.poincare_constant).epsilon(1e-7));
}
