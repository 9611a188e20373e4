#include <cmath>

#include "doctest.h"
#include "pflow/grid.hpp"
#include "pflow/metrics.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

namespace {

DensityField patch(const Grid& g, const std::string& shapes, double background = 0.0) {
  PatchSpec ps;
  ps.background = background;
  ps.shapes = parse_shapes(shapes);
  return make_patch(ps, g, 1.0);
}

}  // namespace

TEST_CASE("kinetic energy examples") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  const VectorField ones = sample_faces(g, [](double, double) { return 1.0; },
                                        [](double, double) { return 0.0; });
  CHECK(kinetic_energy(ScalarField(g), ones) == 0.0);
  CHECK(kinetic_energy(ScalarField(g, 1.0), ones) == doctest::Approx(1.0).epsilon(1e-14));
  const ScalarField half = sample_cells(g, [](double x, double) { return x < 0.5 ? 1.0 : 0.0; });
  CHECK(kinetic_energy(half, ones) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("h1 seminorm: analytic value and Laplacian compatibility") {
  auto err = [](int n) {
    const Grid g = make_grid(n, n, 1.0, 1.0);
    const VectorField v = sample_faces(
        g, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); },
        [](double, double) { return 0.0; });
    return std::abs(h1_seminorm(v) - kPi / std::sqrt(2.0));
  };
  CHECK(err(64) < 1e-3);
  CHECK(order(err(32), err(64)) >= 1.8);
  CHECK(h1_seminorm(VectorField(make_grid(8, 8, 1.0, 1.0))) == 0.0);

  const Grid g = make_grid(20, 14, 1.0, 0.7);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    const VectorField v = random_faces(g, rng);
    const double lhs = -inner(laplacian_dirichlet(v, 1.0), v);
    const double h1 = h1_seminorm(v);
    CHECK(std::abs(lhs - h1 * h1) <= 1e-12 * lhs);
  }
}

TEST_CASE("l2 norms of the field containers") {
  const Grid g = make_grid(16, 16, 1.0, 1.0);
  CHECK(l2_norm(ScalarField(g, 2.0)) == doctest::Approx(2.0));
  CellVectorField c(g);
  for (Vec2& x : c.values()) x = {3.0, 4.0};
  CHECK(l2_norm(c) == doctest::Approx(5.0));
  CHECK(l2_norm(MatrixField(g, Mat2::identity())) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("W^{-1}_2 norm: zero, constant and cos(pi x) oracles") {
  const Grid g = make_grid(256, 256, 1.0, 1.0);
  CHECK(neg_sobolev_norm(ScalarField(g), 2.0).value == 0.0);
  const NegativeNorm c = neg_sobolev_norm(ScalarField(g, 0.3), 2.0);
  CHECK_FALSE(c.lower_bound);
  CHECK(c.value == doctest::Approx(0.3).epsilon(1e-8));
  const double exact = 1.0 / std::sqrt(2.0 * (1.0 + kPi * kPi));
  CHECK(exact == doctest::Approx(0.21448).epsilon(1e-4));
  const ScalarField cx = sample_cells(g, [](double x, double) { return std::cos(kPi * x); });
  CHECK(neg_sobolev_norm(cx, 2.0).value == doctest::Approx(exact).epsilon(0.01));
  CHECK_THROWS_AS(neg_sobolev_norm(cx, 1.0), Error);
}

TEST_CASE("W^{-1}_2 is a norm and is dominated by L2") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const ScalarField a = random_cells(g, rng), b = random_cells(g, rng);
    const double na = neg_sobolev_norm(a, 2.0).value, nb = neg_sobolev_norm(b, 2.0).value;
    CHECK(neg_sobolev_norm(-2.5 * a, 2.0).value == doctest::Approx(2.5 * na).epsilon(1e-9));
    CHECK(neg_sobolev_norm(a + b, 2.0).value <= (na + nb) * (1.0 + 1e-9));
    CHECK(na <= l2_norm(a) * (1.0 + 1e-9));
  }
}

TEST_CASE("W^{-1}_p dictionary bound") {
  const Grid g = make_grid(64, 64, 1.0, 1.0);
  const ScalarField c(g, 0.3);
  const NegativeNorm n3 = neg_sobolev_norm(c, 3.0);
  CHECK(n3.lower_bound);
  CHECK(n3.value == doctest::Approx(0.3).epsilon(1e-12));
  const ScalarField cx = sample_cells(g, [](double x, double) { return std::cos(kPi * x); });
  // At p = 2 the dictionary cannot exceed the exact dual norm.
  CHECK(neg_sobolev_dictionary(cx, 2.0) <= neg_sobolev_norm(cx, 2.0).value * (1.0 + 1e-6));
  CHECK(neg_sobolev_dictionary(cx, 2.0) >= 0.95 * neg_sobolev_norm(cx, 2.0).value);
  std::mt19937_64 rng(2);
  const ScalarField r = random_cells(g, rng);
  CHECK(neg_sobolev_dictionary(r, 2.0) <= neg_sobolev_norm(r, 2.0).value * (1.0 + 1e-6));
}

TEST_CASE("translated patch: W^{-1}_2 linear in the shift, L2 like its square root") {
  const Grid g = make_grid(256, 256, 1.0, 1.0);
  const DensityField base = patch(g, "rect 0.3 0.3 0.6 0.6 1");
  std::vector<double> eps, neg, l2;
  for (int s : {2, 4, 8, 16}) {
    const double e = s * g.hx;
    const DensityField moved = patch(g, "rect " + std::to_string(0.3 + e) + " 0.3 " +
                                            std::to_string(0.6 + e) + " 0.6 1");
    const ScalarField d = moved.rho - base.rho;
    eps.push_back(e);
    neg.push_back(neg_sobolev_norm(d, 2.0).value);
    l2.push_back(l2_norm(d));
  }
  CHECK(loglog_slope(eps, neg) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(loglog_slope(eps, l2) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("X-norm examples") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  CHECK(x_norm(ScalarField(g), ScalarField(g, 1.0)).value == 0.0);
  const XNorm one = x_norm(ScalarField(g, 1.0), ScalarField(g, 1.0));
  CHECK_FALSE(one.infinite);
  CHECK(one.value == doctest::Approx(1.0).epsilon(1e-14));
  const DensityField a = patch(g, "disk 0.3 0.3 0.15 1");
  const DensityField b = patch(g, "disk 0.7 0.7 0.15 1");
  const XNorm off = x_norm(a.rho - b.rho, b.rho);
  CHECK(off.infinite);
  CHECK(std::isinf(off.value));
}

TEST_CASE("intermediate data") {
  const Grid g = make_grid(64, 64, 1.0, 1.0);
  const DensityField a = patch(g, "disk 0.3 0.3 0.15 1");
  const DensityField b = patch(g, "disk 0.7 0.7 0.2 1");
  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  const IntermediateData same = intermediate_data(a, a, v);
  CHECK(same.x_norm == 0.0);
  CHECK((same.rho.rho - a.rho).max_abs() == 0.0);

  const IntermediateData mid = intermediate_data(a, b, v);
  for (std::size_t k = 0; k < g.cells(); ++k) {
    const double s = a.rho.values()[k] + b.rho.values()[k];
    CHECK(mid.rho.rho.values()[k] == (s > 0.0 ? 0.5 : 0.0));
  }
  CHECK((mid.v - v).max_abs() == 0.0);
  // The support condition holds against the intermediate density.
  CHECK_FALSE(x_norm(0.5 * (b.rho - a.rho), mid.rho.rho).infinite);
  CHECK(mid.holds);
  // Per cell |d|^4/(16 s^2) <= d^2/16 with d = rho2 - rho1, s = rho1 + rho2.
  CHECK(mid.x_norm <= 0.5 * mid.bound * (1.0 + 1e-12));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> c(0.25, 0.75), r(0.05, 0.2), lv(0.1, 1.0);
  for (int k = 0; k < 50; ++k) {
    PatchSpec p1, p2;
    p1.shapes = {PatchShape{PatchShape::Kind::kDisk, c(rng), c(rng), r(rng), 0, 0, 0, 0, lv(rng)}};
    p2.shapes = {PatchShape{PatchShape::Kind::kDisk, c(rng), c(rng), r(rng), 0, 0, 0, 0, lv(rng)}};
    const IntermediateData d =
        intermediate_data(make_patch(p1, g, 1.0), make_patch(p2, g, 1.0), v);
    CHECK(d.holds);
    CHECK(d.x_norm <= d.bound);
  }
}

TEST_CASE("decay-rate fits") {
  std::vector<double> t, y, c, two;
  for (int k = 0; k <= 100; ++k) {
    const double s = 0.1 * k;
    t.push_back(s);
    y.push_back(3.0 * std::exp(-2.0 * s));
    c.push_back(0.7);
    two.push_back(std::exp(-s) + std::exp(-3.0 * s));
  }
  const DecayFit f = fit_decay_rate(t, y);
  CHECK(f.rate == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);
  CHECK(std::abs(fit_decay_rate(t, c).rate) < 1e-14);

  TimeSeries ts({"t", "e"});
  for (std::size_t k = 0; k < t.size(); ++k) ts.add({t[k], two[k]});
  CHECK(fit_decay_rate(ts, "e", 5.0, 10.0).rate == doctest::Approx(1.0).epsilon(0.05));
  CHECK_THROWS_AS(fit_decay_rate(ts, "e", 0.0, 0.5), Error);
  y[3] = 0.0;
  CHECK_THROWS_AS(fit_decay_rate(t, y), Error);
}

TEST_CASE("smallness indicator") {
  const Grid g = make_grid(32, 32, 1.0, 1.0);
  const DensityField one{ScalarField(g, 1.0), 1.0};
  CHECK(smallness_indicator(one, VectorField(g), 1.0) == 0.0);
  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  const double s = smallness_indicator(one, v, 1.0);
  CHECK(s == doctest::Approx(std::sqrt(kinetic_energy(one, v)) * h1_seminorm(v)));
  CHECK(smallness_indicator(one, 3.0 * v, 1.0) == doctest::Approx(9.0 * s));
  CHECK_THROWS_AS(smallness_indicator(one, v, 0.0), Error);
}

TEST_CASE("weighted integrals and log-log slopes") {
  std::vector<double> t, y;
  for (int k = 0; k <= 2000; ++k) {
    t.push_back(0.001 * k);
    y.push_back(std::exp(-3.0 * t.back()));
  }
  // int_0^2 e^{2t} e^{-3t} dt = 1 - e^{-2}.
  CHECK(weighted_integral(t, y, 1.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-6));
  CHECK(weighted_integral(t, y, 1.0, 1.0, 2.0) ==
        doctest::Approx(std::exp(-1.0) - std::exp(-2.0)).epsilon(1e-6));
  CHECK(loglog_slope({1, 2, 4, 8}, {3, 6 * std::sqrt(2.0) / 2, 6, 6 * std::sqrt(2.0)}) ==
        doctest::Approx(0.5));
}

TEST_CASE("stability functionals of identical and density-only pairs") {
  const Grid g = make_grid(24, 24, 1.0, 1.0);
  VelocitySpec vs;
  const VectorField v = make_initial_velocity(vs, g);
  const SolutionState s1 = make_state(patch(g, "disk 0.5 0.5 0.2 1"), v, 0.05);
  const FlowMap fm = identity_flow(g);

  PairedRun same = make_paired_run("same", 0, 0, s1, s1, 2);
  const MemberView m = make_member_view(s1, fm);
  for (int k = 0; k < 4; ++k) observe_pair(same, m, m);
  observe_decomposition(same, m, m);
  const StabilityReport r = stability_functionals(same, 0.5);
  CHECK(r.lhs == 0.0);
  CHECK(r.sup_drho_neg == 0.0);
  CHECK(r.data_functional == 0.0);
  CHECK(r.ratio == 0.0);
  CHECK(same.samples.size() == 2);

  const SolutionState s2 = make_state(patch(g, "disk 0.5 0.5 0.2 1 ; disk 0.2 0.2 0.1 1"), v, 0.05);
  PairedRun dens = make_paired_run("dens", 0, 1, s1, s2, 10);
  observe_pair(dens, m, make_member_view(s2, fm));
  const StabilityReport d = stability_functionals(dens, 0.5);
  CHECK(d.dv0_weighted == 0.0);
  CHECK(d.data_functional == doctest::Approx(std::sqrt(l2_norm(s2.rho.rho - s1.rho.rho))));
  CHECK(d.sup_drho_neg > 0.0);
  CHECK_FALSE(d.x_norm_infinite);
  CHECK(d.a1_max > 0.0);
  CHECK(d.iphi_max == doctest::Approx(d.a1_max).epsilon(1e-12));

  const std::string text = d.text();
  CHECK(text.find("data_functional = ") != std::string::npos);
  CHECK(d.csv_header().find("sup_drho_neg") != std::string::npos);
  CHECK(StabilityReport::keys().size() == d.values().size());
}
