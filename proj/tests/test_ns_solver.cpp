#include <cmath>

#include "doctest.h"
#include "pflow/grid.hpp"
#include "pflow/metrics.hpp"
#include "pflow/ns_solver.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

namespace {

DensityField uniform(const Grid& g, double c) { return DensityField{ScalarField(g, c), 1.0}; }

DensityField half_vacuum(const Grid& g) {
  return DensityField{sample_cells(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; }), 1.0};
}

// Interior-face L2 error of (v* - v)/dt against mu Lap v - (v.grad) v for the
// sin^2 stream mode on the unit square, with rho = 1.
double predictor_error(int n, double dt) {
  const Grid g = make_grid(n, n, 1.0, 1.0);
  VelocitySpec vs;
  vs.amplitude = 1.0 / kPi;
  const VectorField v = make_initial_velocity(vs, g);
  const double mu = 0.05;
  const SolutionState s = make_state(uniform(g, 1.0), v, mu);
  SchemeParams sp;
  sp.tol = 1e-13;
  const VectorField rate = (1.0 / dt) * (momentum_predictor(s, dt, sp).v_star - v);
  const VectorField lap = laplacian_dirichlet(v, mu);
  // u = sin^2(pi x) sin(2 pi y), v = -sin^2(pi y) sin(2 pi x).
  auto u_ = [](double x, double y) { return std::pow(std::sin(kPi * x), 2) * std::sin(2 * kPi * y); };
  auto v_ = [](double x, double y) { return -std::pow(std::sin(kPi * y), 2) * std::sin(2 * kPi * x); };
  auto conv_x = [&](double x, double y) {
    const double ux = kPi * std::sin(2 * kPi * x) * std::sin(2 * kPi * y);
    const double uy = 2 * kPi * std::pow(std::sin(kPi * x), 2) * std::cos(2 * kPi * y);
    return u_(x, y) * ux + v_(x, y) * uy;
  };
  auto conv_y = [&](double x, double y) {
    const double vx = -2 * kPi * std::pow(std::sin(kPi * y), 2) * std::cos(2 * kPi * x);
    const double vy = -kPi * std::sin(2 * kPi * y) * std::sin(2 * kPi * x);
    return u_(x, y) * vx + v_(x, y) * vy;
  };
  double err = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      err += std::pow(rate.u(i, j) - lap.u(i, j) + conv_x(i * g.hx, g.yc(j)), 2);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      err += std::pow(rate.v(i, j) - lap.v(i, j) + conv_y(g.xc(i), j * g.hy), 2);
  return std::sqrt(err * g.cell_area());
}

}  // namespace

TEST_CASE("stream-function velocity is discretely divergence free") {
  const Grid g = make_grid(64, 64, 1.0, 1.0);
  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  CHECK(divergence(v).max_abs() <= 1e-8);
  CHECK(v.max_wall_value() == 0.0);
  CHECK(velocity_from_stream_function(g, [](double, double) { return 0.0; }).max_abs() == 0.0);
  vs.amplitude *= 3.0;
  const VectorField w = make_initial_velocity(vs, g);
  CHECK((w - 3.0 * v).max_abs() <= 1e-13 * w.max_abs());
  CHECK(h1_seminorm(w) == doctest::Approx(3.0 * h1_seminorm(v)).epsilon(1e-12));
  CHECK_THROWS_AS(velocity_from_stream_function(g, [](double x, double) { return x; }), Error);
}

TEST_CASE("Stokes eigenmode initial velocity") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  VelocitySpec vs;
  vs.kind = VelocitySpec::Kind::kStokesEigenmode;
  vs.amplitude = 0.2;
  const VectorField v = make_initial_velocity(vs, g);
  CHECK(v.max_abs() == doctest::Approx(0.2));
  CHECK(divergence(v).max_abs() <= 1e-8);
  CHECK(v.max_wall_value() == 0.0);
  CHECK(velocity_kind_from_string(to_string(vs.kind)) == vs.kind);
  CHECK_THROWS_AS(velocity_kind_from_string("swirl"), Error);
}

TEST_CASE("scheme parameters are validated") {
  SchemeParams sp;
  CHECK_NOTHROW(sp.validate());
  sp.cfl = 1.5;
  sp.eps_vac = 0.0;
  try {
    sp.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cfl") != std::string::npos);
    CHECK(msg.find("eps_vac") != std::string::npos);
  }
}

TEST_CASE("predictor of a fluid at rest is zero") {
  const Grid g = make_grid(16, 16, 1.0, 1.0);
  const SolutionState s = make_state(uniform(g, 1.0), VectorField(g), 0.1);
  CHECK(momentum_predictor(s, 0.01, SchemeParams{}).v_star.max_abs() == 0.0);
}

TEST_CASE("predictor is consistent with mu Lap v - v.grad v") {
  const double e1 = predictor_error(32, 1e-7);
  const double e2 = predictor_error(64, 1e-7);
  CHECK(e2 < 0.5 * e1);
  CHECK(order(e1, e2) >= 1.5);
  // First order in dt once the spatial error is fixed.
  const double big = predictor_error(32, 4e-3), small = predictor_error(32, 2e-3);
  CHECK(big > small);
}

TEST_CASE("vacuum half domain: step completes with finite fields") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  VelocitySpec vs;
  SolutionState s = make_state(half_vacuum(g), make_initial_velocity(vs, g), 0.05);
  SchemeParams sp;
  const PredictorResult pr = momentum_predictor(s, 0.01, sp);
  CHECK(pr.v_star.all_finite());
  for (int k = 0; k < 5; ++k) {
    const StepInfo info = step(s, sp);
    CHECK(info.div_max <= 1e-8);
  }
  CHECK(s.v.all_finite());
  CHECK(s.p.all_finite());
  CHECK(s.rho.rho.min() >= 0.0);
}

TEST_CASE("projection of a divergence-free field is the identity") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  const ProjectionResult pr = pressure_projection(v, uniform(g, 1.0), 0.01, SchemeParams{});
  CHECK((pr.v - v).max_abs() <= 1e-10 * v.max_abs());
  CHECK(pr.p.max_abs() <= 1e-10);
  CHECK(std::abs(pr.p.sum()) <= 1e-10);
}

TEST_CASE("projection removes a gradient field") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  const ScalarField psi =
      sample_cells(g, [](double x, double y) { return std::cos(kPi * x) * std::cos(2 * kPi * y); });
  const VectorField vs = gradient(psi);
  const ProjectionResult pr = pressure_projection(vs, uniform(g, 1.0), 0.1, SchemeParams{});
  CHECK(pr.v.max_abs() <= 1e-9 * vs.max_abs());
}

TEST_CASE("projection with density ratio 1e3 reaches div <= 1e-8") {
  const Grid g = make_grid(64, 64, 1.0, 1.0);
  std::mt19937_64 rng(3);
  const VectorField vs = random_faces(g, rng);
  const ProjectionResult pr = pressure_projection(vs, half_vacuum(g), 0.01, SchemeParams{});
  CHECK(pr.div_max <= 1e-8);
  CHECK(divergence(pr.v).max_abs() <= 1e-8);
  CHECK(pr.v.max_wall_value() == 0.0);
}

TEST_CASE("step of a fluid at rest only advances time") {
  const Grid g = make_grid(16, 16, 1.0, 1.0);
  PatchSpec ps;
  ps.shapes = parse_shapes("disk 0.5 0.5 0.2 1");
  SolutionState s = make_state(make_patch(ps, g, 1.0), VectorField(g), 0.05);
  const SolutionState s0 = s;
  const StepInfo info = step(s, SchemeParams{});
  CHECK(s.t == info.dt);
  CHECK(info.dt == doctest::Approx(0.5 * g.hmin()));
  CHECK(s.v.max_abs() == 0.0);
  for (std::size_t k = 0; k < g.cells(); ++k) CHECK(s.rho.rho.values()[k] == s0.rho.rho.values()[k]);
}

TEST_CASE("choose_dt respects the CFL number and the end time") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  VelocitySpec vs;
  vs.amplitude = 1.0;
  SolutionState s = make_state(uniform(g, 1.0), make_initial_velocity(vs, g), 0.05);
  SchemeParams sp;
  const double dt = choose_dt(s, sp);
  CHECK(dt == doctest::Approx(sp.cfl * g.hmin() / std::max(1.0, s.v.max_abs())));
  CHECK(choose_dt(s, sp, 1e-4) == doctest::Approx(1e-4));
}

TEST_CASE("constant density, mu = 1: energy strictly decreases") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  VelocitySpec vs;
  vs.amplitude = 0.5;
  SolutionState s = make_state(uniform(g, 1.0), make_initial_velocity(vs, g), 1.0);
  SchemeParams sp;
  for (int k = 0; k < 30; ++k) {
    const StepInfo info = step(s, sp);
    CHECK(info.energy_after < info.energy_before);
  }
  CHECK(solver_energy(s.rho, s.v, sp.eps_vac) == doctest::Approx(0.5 * inner(s.v, s.v)));
}

TEST_CASE("patch with eigenmode velocity: invariants hold for 1000 steps") {
  const Grid g = make_grid(24, 24, 1.0, 1.0);
  PatchSpec ps;
  ps.shapes = parse_shapes("disk 0.5 0.5 0.2 1");
  VelocitySpec vs;
  vs.kind = VelocitySpec::Kind::kStokesEigenmode;
  vs.amplitude = 0.5;
  SolutionState s = make_state(make_patch(ps, g, 1.0), make_initial_velocity(vs, g), 0.05);
  const double m0 = s.rho.mass();
  SchemeParams sp;
  int bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const StepInfo info = step(s, sp);
    if (info.energy_after > info.energy_before * (1.0 + 1e-10)) ++bad;
    if (info.div_max > 1e-8) ++bad;
    if (s.rho.rho.min() < 0.0 || s.rho.rho.max() > 1.0) ++bad;
    if (std::abs(s.rho.mass() - m0) > 1e-10 * m0) ++bad;
  }
  CHECK(bad == 0);
  CHECK(s.v.all_finite());
}
