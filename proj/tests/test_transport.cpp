#include <cmath>

#include "doctest.h"
#include "pflow/grid.hpp"
#include "pflow/ns_solver.hpp"
#include "pflow/transport.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

namespace {

DensityField disk(const Grid& g, double cx, double cy, double r) {
  PatchSpec ps;
  ps.shapes = parse_shapes("disk " + std::to_string(cx) + " " + std::to_string(cy) + " " +
                           std::to_string(r) + " 1");
  return make_patch(ps, g, 1.0);
}

// Forward for time T with v, then back with -v: exact transport returns rho0.
double round_trip_error(int n, double* mass_drift) {
  const Grid g = make_grid(n, n, 1.0, 1.0);
  const DensityField rho0 = disk(g, 0.5, 0.62, 0.12);
  VelocitySpec vs;
  vs.kind = VelocitySpec::Kind::kVortex;
  vs.amplitude = 0.2;
  vs.radius = 0.45;
  const VectorField v = make_initial_velocity(vs, g);
  const double dt = 0.4 * g.hmin() / v.max_abs();
  const int steps = static_cast<int>(std::ceil(0.5 / dt));
  DensityField rho = rho0;
  for (int k = 0; k < steps; ++k) rho = advect_density(rho, v, dt);
  const VectorField back = -1.0 * v;
  for (int k = 0; k < steps; ++k) rho = advect_density(rho, back, dt);
  *mass_drift = std::abs(rho.mass() - rho0.mass()) / rho0.mass();
  return lp_norm(rho.rho - rho0.rho, 1.0);
}

}  // namespace

TEST_CASE("parse_shapes reads disks and rectangles") {
  const auto s = parse_shapes("disk 0.5 0.5 0.2 1 ; rect 0.1 0.2 0.3 0.4 0.5");
  REQUIRE(s.size() == 2);
  CHECK(s[0].kind == PatchShape::Kind::kDisk);
  CHECK(s[0].r == 0.2);
  CHECK(s[1].kind == PatchShape::Kind::kRect);
  CHECK(s[1].y1 == 0.4);
  CHECK(s[1].level == 0.5);
  CHECK(parse_shapes(format_shapes(s)).size() == 2);
  CHECK_THROWS_AS(parse_shapes("disk 0.5 0.5"), Error);
  CHECK_THROWS_AS(parse_shapes("blob 1 2 3 4"), Error);
}

TEST_CASE("make_patch: disk mass approaches pi r^2") {
  double prev = 1.0;
  for (int n : {64, 128, 256}) {
    const Grid g = make_grid(n, n, 1.0, 1.0);
    const double err = std::abs(disk(g, 0.5, 0.5, 0.2).mass() - kPi * 0.04);
    CHECK(err <= 2.0 * kPi * 0.2 * g.hx);
    CHECK(err < prev * 1.01);
    prev = err;
  }
}

TEST_CASE("make_patch: background only and disjoint disks") {
  const Grid g = make_grid(32, 16, 2.0, 1.0);
  PatchSpec ps;
  ps.background = 1.0;
  const DensityField one = make_patch(ps, g, 1.0);
  CHECK(one.rho.min() == 1.0);
  CHECK(one.mass() == doctest::Approx(2.0));

  const Grid h = make_grid(64, 64, 1.0, 1.0);
  const DensityField a = disk(h, 0.3, 0.3, 0.15);
  const DensityField b = disk(h, 0.7, 0.7, 0.15);
  for (std::size_t k = 0; k < h.cells(); ++k) CHECK(a.rho.values()[k] * b.rho.values()[k] == 0.0);

  PatchSpec bad;
  bad.shapes = parse_shapes("disk 0.9 0.5 0.2 1");
  CHECK_THROWS_AS(make_patch(bad, h, 1.0), Error);
  bad.shapes = parse_shapes("disk 0.5 0.5 0.2 2");
  CHECK_THROWS_AS(make_patch(bad, h, 1.0), Error);
  CHECK_THROWS_AS(make_patch(PatchSpec{}, h, 1.0), Error);
}

TEST_CASE("lp_norm examples") {
  const Grid g = make_grid(64, 64, 1.0, 1.0);
  const ScalarField one(g, 1.0);
  for (double p : {1.0, 2.0, 3.5, HUGE_VAL}) CHECK(lp_norm(one, p) == doctest::Approx(1.0));
  const ScalarField half = sample_cells(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; });
  CHECK(lp_norm(half, 2.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  const Grid f = make_grid(256, 256, 1.0, 1.0);
  CHECK(lp_norm(disk(f, 0.5, 0.5, 0.25).rho, 1.0) ==
        doctest::Approx(kPi / 16).epsilon(2.0 * kPi * 0.25 * f.hx / (kPi / 16)));
}

TEST_CASE("advection: zero velocity and constant density are exact") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  const DensityField rho = disk(g, 0.5, 0.5, 0.2);
  const DensityField same = advect_density(rho, VectorField(g), 0.1);
  for (std::size_t k = 0; k < g.cells(); ++k) CHECK(same.rho.values()[k] == rho.rho.values()[k]);

  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  DensityField c{ScalarField(g, 0.7), 1.0};
  for (int k = 0; k < 20; ++k) c = advect_density(c, v, 0.5 * g.hx / v.max_abs());
  CHECK((c.rho - ScalarField(g, 0.7)).max_abs() < 1e-13);
}

TEST_CASE("advection keeps bounds, mass and monotone L_p norms") {
  const Grid g = make_grid(64, 64, 1.0, 1.0);
  VelocitySpec vs;
  vs.amplitude = 0.3;
  const VectorField v = make_initial_velocity(vs, g);
  DensityField rho = disk(g, 0.4, 0.55, 0.2);
  const double m0 = rho.mass();
  double l2 = lp_norm(rho.rho, 2.0), l4 = lp_norm(rho.rho, 4.0);
  for (int k = 0; k < 100; ++k) {
    AdvectionStats st;
    rho = advect_density(rho, v, 0.45 * g.hx / v.max_abs(), &st);
    CHECK(rho.rho.min() >= 0.0);
    CHECK(rho.rho.max() <= 1.0);
    const double n2 = lp_norm(rho.rho, 2.0), n4 = lp_norm(rho.rho, 4.0);
    CHECK(n2 <= l2 * (1.0 + 1e-12));
    CHECK(n4 <= l4 * (1.0 + 1e-12));
    l2 = n2;
    l4 = n4;
  }
  CHECK(std::abs(rho.mass() - m0) / m0 < 1e-12);
}

TEST_CASE("advection rejects CFL violations and divergent fields") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  const DensityField rho = disk(g, 0.5, 0.5, 0.2);
  try {
    advect_density(rho, v, 0.95 * g.hx / v.max_abs());
    FAIL("expected a CFL error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCflViolation);
  }
  VectorField bad(g);
  bad.u(5, 5) = 0.1;
  try {
    advect_density(rho, bad, 0.01);
    FAIL("expected a divergence error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotDivergenceFree);
  }
}

TEST_CASE("advection round trip converges under refinement") {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  const double e1 = round_trip_error(32, &d1);
  const double e2 = round_trip_error(64, &d2);
  const double e3 = round_trip_error(128, &d3);
  CHECK(d1 < 1e-12);
  CHECK(d2 < 1e-12);
  CHECK(d3 < 1e-12);
  // The patch edge is a discontinuity: L1 error ~ h^{2/3} or better.
  CHECK(e2 < e1 * std::pow(0.5, 0.6));
  CHECK(e3 < e2 * std::pow(0.5, 0.6));
  const double perimeter = 2.0 * kPi * 0.12;
  CHECK(e3 <= 4.0 * std::pow(1.0 / 128, 2.0 / 3.0) * perimeter);
}
