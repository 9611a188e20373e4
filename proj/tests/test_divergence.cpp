#include <cmath>

#include "doctest.h"
#include "pflow/divergence_solver.hpp"
#include "pflow/grid.hpp"
#include "pflow/metrics.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

namespace {

// Smooth field vanishing on the whole boundary.
VectorField smooth_d(const Grid& g) {
  return sample_faces(
      g, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y) * (x + 0.3); },
      [](double x, double y) { return std::sin(2 * kPi * x) * std::sin(kPi * y) * y; });
}

ScalarField bump_source(const Grid& g) {
  ScalarField f = sample_cells(g, [](double x, double y) {
    return std::exp(-30.0 * ((x - 0.3) * (x - 0.3) + (y - 0.6) * (y - 0.6))) -
           std::exp(-30.0 * ((x - 0.7) * (x - 0.7) + (y - 0.4) * (y - 0.4)));
  });
  const double mean = f.sum() / static_cast<double>(g.cells());
  for (double& x : f.values()) x -= mean;
  return f;
}

double stability_constant(int n) {
  const Grid g = make_grid(n, n, 1.0, 1.0);
  const ScalarField f = bump_source(g);
  const DivergenceSolution s = solve_divergence({f});
  return h1_seminorm(s.b) / neg_sobolev_norm(f, 2.0).value;
}

}  // namespace

TEST_CASE("solve_divergence of zero is zero") {
  const Grid g = make_grid(16, 16, 1.0, 1.0);
  const DivergenceSolution s = solve_divergence({ScalarField(g)});
  CHECK(s.b.max_abs() == 0.0);
  CHECK(s.residual_l2 == 0.0);
}

TEST_CASE("solve_divergence of div(d): small residual, zero boundary faces") {
  const Grid g = make_grid(48, 48, 1.0, 1.0);
  const VectorField d = smooth_d(g);
  const MatrixField id(g, Mat2::identity());
  DivergenceProblem p{divergence(d), &id, &d};
  const DivergenceSolution s = solve_divergence(p);
  CHECK(s.residual_l2 <= 1e-8);
  CHECK(l2_norm(divergence(s.b) - p.f) <= 1e-8);
  CHECK(s.b.max_wall_value() == 0.0);
  // Tangential boundary values are zero through the odd ghosts; the minimum
  // norm solution is no larger than d.
  CHECK(h1_seminorm(s.b) <= h1_seminorm(d) * (1.0 + 1e-8));
  CHECK(std::isfinite(s.constant_l2));
  CHECK(std::isfinite(s.constant_grad));
}

TEST_CASE("solve_divergence rejects data with nonzero mean") {
  const Grid g = make_grid(16, 16, 1.0, 1.0);
  try {
    solve_divergence({ScalarField(g, 1.0)});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("solve_divergence is linear and commutes with time weights") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  const ScalarField f1 = bump_source(g);
  const ScalarField f2 = divergence(smooth_d(g));
  StokesOptions opt;
  opt.tol = 1e-12;
  const VectorField b1 = solve_divergence({f1}, opt).b;
  const VectorField b2 = solve_divergence({f2}, opt).b;
  const double alpha = -1.7;
  const VectorField b12 = solve_divergence({alpha * f1 + f2}, opt).b;
  const VectorField want = alpha * b1 + b2;
  CHECK((b12 - want).max_abs() <= 1e-7 * want.max_abs());

  const double w = std::exp(2.0 * 0.3);
  const VectorField bw = solve_divergence({w * f1}, opt).b;
  CHECK((bw - w * b1).max_abs() <= 1e-9 * bw.max_abs());
}

TEST_CASE("solve_divergence stability constant is grid independent") {
  const double c1 = stability_constant(32);
  const double c2 = stability_constant(64);
  CHECK(std::abs(c2 - c1) <= 0.2 * c1);
}

TEST_CASE("Stokes eigenmode of the unit square") {
  const Grid g = make_grid(48, 48, 1.0, 1.0);
  const EigenmodeResult e = stokes_eigenmode(g);
  // First eigenvalue of the Stokes operator on the unit square.
  CHECK(e.lambda == doctest::Approx(52.3447).epsilon(0.01));
  CHECK(l2_norm(e.v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(divergence(e.v).max_abs() <= 1e-8);
  const VectorField lv = laplacian_dirichlet(e.v, -1.0);
  CHECK(inner(lv, e.v) == doctest::Approx(e.lambda).epsilon(1e-6));
}

TEST_CASE("decompose_difference: identical members and t = 0") {
  const Grid g = make_grid(24, 24, 1.0, 1.0);
  const MatrixField id(g, Mat2::identity());
  VelocitySpec vs;
  const CellVectorField u = to_cell_centers(make_initial_velocity(vs, g));
  const Decomposition same = decompose_difference(id, id, u, u);
  CHECK(l2_norm(same.w) == 0.0);
  CHECK(l2_norm(same.z) == 0.0);
  CHECK(same.w_bar.max_abs() == 0.0);

  vs.amplitude = 0.3;
  const CellVectorField u2 = to_cell_centers(make_initial_velocity(vs, g));
  const Decomposition t0 = decompose_difference(id, id, u, u2);
  CHECK(l2_norm(t0.w) == 0.0);
  CHECK(t0.f_l2 == 0.0);
  double dz = 0.0;
  for (std::size_t k = 0; k < g.cells(); ++k)
    dz = std::max(dz, std::sqrt((t0.z.values()[k] - (u2.values()[k] - u.values()[k])).norm2()));
  CHECK(dz == 0.0);
}

TEST_CASE("decompose_difference: sheared cofactors give div(A1 w) = div(dA u2)") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  MatrixField a1(g, Mat2::identity()), a2(g, Mat2::identity());
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double s = 0.2 * std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j));
      a1(i, j) = {1.0, 0.0, -s, 1.0};
      a2(i, j) = {1.0, 0.5 * s, 0.0, 1.0};
    }
  }
  VelocitySpec vs;
  const CellVectorField u1 = to_cell_centers(make_initial_velocity(vs, g));
  vs.kx = 2;
  const CellVectorField u2 = to_cell_centers(make_initial_velocity(vs, g));
  const Decomposition d = decompose_difference(a1, a2, u1, u2);
  CHECK(d.f_l2 > 0.0);
  CHECK(d.solver_residual <= 1e-8);
  CHECK(d.w_bar.max_wall_value() == 0.0);
  CHECK(d.w_l2 > 0.0);
  CHECK(std::isfinite(d.z_residual));
  for (std::size_t k = 0; k < g.cells(); ++k) {
    const Vec2 sum = d.w.values()[k] + d.z.values()[k];
    const Vec2 du = u2.values()[k] - u1.values()[k];
    CHECK(std::sqrt((sum - du).norm2()) < 1e-14);
  }
}
