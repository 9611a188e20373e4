#include "pflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pflow/grid.hpp"
#include "pflow/linear_solvers.hpp"

namespace pflow {
namespace {

constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }

// Id - Lap_N on cell centers (no-flux walls), symmetric in the unweighted
// Euclidean product.
StencilMatrix helmholtz_neumann(const Grid& g) {
  StencilMatrix a(g.nx, g.ny);
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      double d = 1.0;
      if (i > 0) { a.west[k] = -ax; d += ax; }
      if (i + 1 < g.nx) { a.east[k] = -ax; d += ax; }
      if (j > 0) { a.south[k] = -ay; d += ay; }
      if (j + 1 < g.ny) { a.north[k] = -ay; d += ay; }
      a.diag[k] = d;
    }
  }
  return a;
}

struct TestFunction {
  std::vector<double> value;  // at cell centers
  double norm = 0.0;          // W^1_q norm
};

TestFunction make_test_function(const Grid& g, double q, auto&& phi, auto&& grad) {
  TestFunction tf;
  tf.value.resize(g.cells());
  double acc = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.xc(i), y = g.yc(j);
      const double f = phi(x, y);
      const Vec2 d = grad(x, y);
      tf.value[g.index(i, j)] = f;
      acc += std::pow(std::abs(f), q) + std::pow(std::sqrt(d.norm2()), q);
    }
  }
  tf.norm = std::pow(acc * g.cell_area(), 1.0 / q);
  return tf;
}

std::vector<std::string> step_channels() {
  return {"t", "du_weighted", "du_l2", "grad_du", "dv_l2", "grad_dv", "drho_l2"};
}

std::vector<std::string> sample_channels() { return {"t", "drho_neg", "a1", "a2", "iphi"}; }

std::vector<std::string> decomposition_channels() {
  return {"t", "f_l2", "solver_residual", "z_residual", "w_l2", "z_l2", "grad_w_bar", "grad_du"};
}

double max_abs_column(const TimeSeries& ts, const std::string& name) {
  double m = 0.0;
  for (double x : ts.column(name)) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double kinetic_energy(const ScalarField& rho, const VectorField& v) {
  require_same_grid(rho.grid(), v.grid(), "kinetic_energy");
  const CellVectorField c = to_cell_centers(v);
  const auto r = rho.values();
  const auto w = c.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) acc += r[k] * w[k].norm2();
  return acc * rho.grid().cell_area();
}

double h1_seminorm(const VectorField& v) {
  const Grid& g = v.grid();
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);
  double acc = 0.0;
  // x-component: pairs along x include the (zero) wall-normal faces; along y
  // the odd ghost contributes 2 u^2 / hy^2 at each wall.
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) acc += sq(v.u(i + 1, j) - v.u(i, j)) * ax;
  }
  for (int i = 1; i < g.nx; ++i) {
    for (int j = 0; j + 1 < g.ny; ++j) acc += sq(v.u(i, j + 1) - v.u(i, j)) * ay;
    acc += 2.0 * (sq(v.u(i, 0)) + sq(v.u(i, g.ny - 1))) * ay;
  }
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) acc += sq(v.v(i, j + 1) - v.v(i, j)) * ay;
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) acc += sq(v.v(i + 1, j) - v.v(i, j)) * ax;
    acc += 2.0 * (sq(v.v(0, j)) + sq(v.v(g.nx - 1, j))) * ax;
  }
  return std::sqrt(acc * g.cell_area());
}

double l2_norm(const ScalarField& f) {
  double acc = 0.0;
  for (double x : f.values()) acc += x * x;
  return std::sqrt(acc * f.grid().cell_area());
}

double l2_norm(const VectorField& v) { return std::sqrt(inner(v, v)); }

double l2_norm(const CellVectorField& v) {
  double acc = 0.0;
  for (const Vec2& x : v.values()) acc += x.norm2();
  return std::sqrt(acc * v.grid().cell_area());
}

double l2_norm(const MatrixField& m) {
  double acc = 0.0;
  for (const Mat2& x : m.values()) acc += x.frobenius2();
  return std::sqrt(acc * m.grid().cell_area());
}

NegativeNorm neg_sobolev_norm(const ScalarField& drho, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::kInvalidArgument, "negative norm exponent must lie in (1, inf)");
  }
  if (p != 2.0) return {neg_sobolev_dictionary(drho, p), true};
  const Grid& g = drho.grid();
  if (drho.max_abs() == 0.0) return {0.0, false};
  const StencilMatrix a = helmholtz_neumann(g);
  std::vector<double> psi(g.cells(), 0.0);
  SolverOptions opt;
  opt.rel_tol = 1e-12;
  require_converged(solve_pcg(a, drho.values(), psi, opt), "W^{-1}_2 Riesz solve");
  const auto r = drho.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) acc += r[k] * psi[k];
  return {std::sqrt(std::max(0.0, acc * g.cell_area())), false};
}

double neg_sobolev_dictionary(const ScalarField& drho, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw Error(ErrorCode::kInvalidArgument, "negative norm exponent must lie in (1, inf)");
  }
  const Grid& g = drho.grid();
  const double q = p / (p - 1.0);
  const auto r = drho.values();
  double best = 0.0;
  auto consider = [&](const TestFunction& tf) {
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) acc += r[k] * tf.value[k];
    best = std::max(best, std::abs(acc) * g.cell_area() / tf.norm);
  };
  for (int k = 0; k <= 4; ++k) {
    for (int l = 0; l <= 4; ++l) {
      const double wx = k * kPi / g.lx, wy = l * kPi / g.ly;
      consider(make_test_function(
          g, q, [&](double x, double y) { return std::cos(wx * x) * std::cos(wy * y); },
          [&](double x, double y) {
            return Vec2{-wx * std::sin(wx * x) * std::cos(wy * y),
                        -wy * std::cos(wx * x) * std::sin(wy * y)};
          }));
    }
  }
  const double sx = 0.1 * g.lx, sy = 0.1 * g.ly;
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) {
      const double cx = (m + 0.5) * g.lx / 4.0, cy = (n + 0.5) * g.ly / 4.0;
      auto bump = [&](double x, double y) {
        return std::exp(-0.5 * (sq((x - cx) / sx) + sq((y - cy) / sy)));
      };
      consider(make_test_function(g, q, bump, [&](double x, double y) {
        const double b = bump(x, y);
        return Vec2{-b * (x - cx) / (sx * sx), -b * (y - cy) / (sy * sy)};
      }));
    }
  }
  return best;
}

XNorm x_norm(const ScalarField& drho0, const ScalarField& rho_ref) {
  require_same_grid(drho0.grid(), rho_ref.grid(), "x_norm");
  const auto d = drho0.values();
  const auto r = rho_ref.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (r[k] > 0.0) {
      acc += sq(sq(d[k])) / sq(r[k]);
    } else if (d[k] != 0.0) {
      return {std::numeric_limits<double>::infinity(), true};
    }
  }
  return {std::pow(acc * drho0.grid().cell_area(), 0.25), false};
}

IntermediateData intermediate_data(const DensityField& rho01, const DensityField& rho02,
                                   const VectorField& v02) {
  require_same_grid(rho01.grid(), rho02.grid(), "intermediate_data");
  require_same_grid(rho01.grid(), v02.grid(), "intermediate_data");
  IntermediateData out;
  out.rho.rho = 0.5 * (rho01.rho + rho02.rho);
  out.rho.rho_star = std::max(rho01.rho_star, rho02.rho_star);
  out.v = v02;
  const auto a = rho01.rho.values();
  const auto b = rho02.rho.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double s = a[k] + b[k];
    if (s > 0.0) acc += sq(sq(0.5 * (b[k] - a[k]))) / sq(s);
  }
  out.x_norm = std::pow(acc * rho01.grid().cell_area(), 0.25);
  out.bound = std::sqrt(l2_norm(rho01.rho - rho02.rho));
  out.holds = out.x_norm <= out.bound * (1.0 + 1e-12) + 1e-300;
  if (!out.holds) {
    throw Error(ErrorCode::kInconsistent, "intermediate X-norm exceeds ||rho1 - rho2||_2^{1/2}");
  }
  return out;
}

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "decay fit needs matching samples");
  }
  if (t.size() < 10) throw Error(ErrorCode::kInvalidArgument, "decay fit needs at least 10 samples");
  const double n = static_cast<double>(t.size());
  double st = 0.0, sl = 0.0;
  std::vector<double> l(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!(y[k] > 0.0) || !std::isfinite(y[k])) {
      throw Error(ErrorCode::kInvalidArgument, "decay fit needs positive finite samples");
    }
    l[k] = std::log(y[k]);
    st += t[k];
    sl += l[k];
  }
  const double tm = st / n, lm = sl / n;
  double stt = 0.0, stl = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    stt += sq(t[k] - tm);
    stl += (t[k] - tm) * (l[k] - lm);
  }
  if (stt == 0.0) throw Error(ErrorCode::kInvalidArgument, "decay fit needs distinct times");
  const double slope = stl / stt;
  const double intercept = lm - slope * tm;
  double res = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) res += sq(l[k] - (intercept + slope * t[k]));
  DecayFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  fit.residual = std::sqrt(res / n);
  fit.samples = static_cast<int>(t.size());
  return fit;
}

DecayFit fit_decay_rate(const TimeSeries& ts, const std::string& channel, double t0, double t1) {
  const std::vector<double> t = ts.column("t");
  const std::vector<double> y = ts.column(channel);
  std::vector<double> tw, yw;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] >= t0 && t[k] <= t1) {
      tw.push_back(t[k]);
      yw.push_back(y[k]);
    }
  }
  return fit_decay_rate(tw, yw);
}

double smallness_indicator(const DensityField& rho0, const VectorField& v0, double mu) {
  if (!(mu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "viscosity must be positive");
  return std::pow(rho0.rho_star, 1.5) * std::sqrt(kinetic_energy(rho0, v0)) * h1_seminorm(v0) /
         (mu * mu);
}

double weighted_integral(const std::vector<double>& t, const std::vector<double>& y, double beta,
                         double t0, double t1, bool times_t) {
  if (t.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "weighted integral needs matching samples");
  }
  double acc = 0.0;
  bool have = false;
  double tp = 0.0, fp = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t0 || t[k] > t1) continue;
    const double f = std::exp(2.0 * beta * t[k]) * (times_t ? t[k] : 1.0) * y[k];
    if (have) acc += 0.5 * (t[k] - tp) * (f + fp);
    have = true;
    tp = t[k];
    fp = f;
  }
  return acc;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "log-log slope needs at least two points");
  }
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "log-log slope needs positive values");
    }
    lx[k] = std::log(x[k]);
    ly[k] = std::log(y[k]);
    sx += lx[k];
    sy += ly[k];
  }
  const double n = static_cast<double>(x.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += sq(lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kInvalidArgument, "log-log slope needs distinct x");
  return sxy / sxx;
}

MemberView make_member_view(const SolutionState& s, const FlowMap& fm) {
  MemberView m;
  m.state = &s;
  m.flow = &fm;
  m.u = lagrangian_velocity(s.v, fm);
  m.grad_u = lagrangian_gradient(s.v, fm);
  return m;
}

PairedRun make_paired_run(const std::string& name, int first, int second,
                          const SolutionState& s1, const SolutionState& s2, int cadence) {
  require_same_grid(s1.rho.grid(), s2.rho.grid(), "paired run");
  if (s1.mu != s2.mu) throw Error(ErrorCode::kInvalidArgument, "paired members differ in mu");
  if (cadence < 1) throw Error(ErrorCode::kInvalidArgument, "sampling cadence must be >= 1");
  PairedRun p;
  p.name = name;
  p.first = first;
  p.second = second;
  p.mu = s1.mu;
  p.rho01 = s1.rho;
  p.rho02 = s2.rho;
  p.v01 = s1.v;
  p.v02 = s2.v;
  p.cadence = cadence;
  p.steps = TimeSeries(step_channels());
  p.samples = TimeSeries(sample_channels());
  p.decompositions = TimeSeries(decomposition_channels());
  return p;
}

namespace {

void require_synchronized(const PairedRun& pair, const MemberView& m1, const MemberView& m2) {
  const double t1 = m1.state->t, t2 = m2.state->t;
  const double tol = 1e-12 * std::max(1.0, std::abs(t1));
  if (std::abs(t1 - t2) > tol || std::abs(m1.flow->t - t1) > tol ||
      std::abs(m2.flow->t - t2) > tol) {
    throw Error(ErrorCode::kInconsistent, "paired run '" + pair.name + "' is not synchronized");
  }
  require_same_grid(m1.flow->seeds, pair.rho01.grid(), "paired run seeds");
  require_same_grid(m2.flow->seeds, pair.rho01.grid(), "paired run seeds");
}

}  // namespace

void observe_pair(PairedRun& pair, const MemberView& m1, const MemberView& m2, bool force_sample) {
  require_synchronized(pair, m1, m2);
  const Grid& g = pair.rho01.grid();
  const double t = m1.state->t;
  const auto u1 = m1.u.values(), u2 = m2.u.values();
  const auto r1 = pair.rho01.rho.values(), r2 = pair.rho02.rho.values();
  double weighted = 0.0, plain = 0.0;
  for (std::size_t k = 0; k < u1.size(); ++k) {
    const double d = (u2[k] - u1[k]).norm2();
    weighted += std::min(r1[k], r2[k]) * d;
    plain += d;
  }
  const auto g1 = m1.grad_u.values(), g2 = m2.grad_u.values();
  double grad = 0.0;
  for (std::size_t k = 0; k < g1.size(); ++k) grad += (g2[k] - g1[k]).frobenius2();
  const double area = g.cell_area();
  const VectorField dv = m2.state->v - m1.state->v;
  const ScalarField drho = m2.state->rho.rho - m1.state->rho.rho;
  pair.steps.add({t, std::sqrt(weighted * area), std::sqrt(plain * area), std::sqrt(grad * area),
                  l2_norm(dv), h1_seminorm(dv), l2_norm(drho)});
  pair.clamp_fraction =
      std::max({pair.clamp_fraction, m1.flow->clamp_fraction(), m2.flow->clamp_fraction()});

  const bool sample = pair.step_count % pair.cadence == 0 || force_sample;
  ++pair.step_count;
  if (!sample) return;
  // I_phi = int (rho1 - rho2) phi = A1 + A2 with phi = cos(pi x/lx) cos(pi y/ly).
  auto phi = [&](Vec2 x) { return std::cos(kPi * x.x / g.lx) * std::cos(kPi * x.y / g.ly); };
  const auto& x1 = m1.flow->X;
  const auto& x2 = m2.flow->X;
  double a1 = 0.0, a2 = 0.0, iphi = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      const double p1 = phi(x1[k]);
      a1 += (r1[k] - r2[k]) * p1;
      a2 += r2[k] * (p1 - phi(x2[k]));
      iphi += -drho(i, j) * phi(Vec2{g.xc(i), g.yc(j)});
    }
  }
  pair.samples.add({t, neg_sobolev_norm(drho, 2.0).value, a1 * area, a2 * area, iphi * area});
}

Decomposition observe_decomposition(PairedRun& pair, const MemberView& m1, const MemberView& m2) {
  require_synchronized(pair, m1, m2);
  const MatrixField a1 = cofactor_matrix(*m1.flow);
  const MatrixField a2 = cofactor_matrix(*m2.flow);
  Decomposition d = decompose_difference(a1, a2, m1.u, m2.u);
  const auto g1 = m1.grad_u.values(), g2 = m2.grad_u.values();
  double grad = 0.0;
  for (std::size_t k = 0; k < g1.size(); ++k) grad += (g2[k] - g1[k]).frobenius2();
  pair.decompositions.add({m1.state->t, d.f_l2, d.solver_residual, d.z_residual, d.w_l2, d.z_l2,
                           d.grad_w_bar_l2, std::sqrt(grad * pair.rho01.grid().cell_area())});
  return d;
}

std::vector<std::string> StabilityReport::keys() {
  return {"beta",
          "cadence",
          "sup_weighted_du",
          "grad_du_weighted",
          "grad_dv_weighted",
          "sup_weighted_du_half",
          "grad_du_weighted_half",
          "grad_dv_weighted_half",
          "sup_drho_neg",
          "drho0_neg",
          "data_functional",
          "dv0_weighted",
          "drho0_l2",
          "x_norm",
          "x_norm_infinite",
          "a1_max",
          "a2_max",
          "iphi_max",
          "decompositions",
          "decomposition_residual_max",
          "decomposition_gap_max",
          "w_l2_max",
          "lhs",
          "ratio",
          "clamp_fraction"};
}

std::vector<double> StabilityReport::values() const {
  return {beta,
          static_cast<double>(cadence),
          sup_weighted_du,
          grad_du_weighted,
          grad_dv_weighted,
          sup_weighted_du_half,
          grad_du_weighted_half,
          grad_dv_weighted_half,
          sup_drho_neg,
          drho0_neg,
          data_functional,
          dv0_weighted,
          drho0_l2,
          x_norm,
          x_norm_infinite ? 1.0 : 0.0,
          a1_max,
          a2_max,
          iphi_max,
          static_cast<double>(decompositions),
          decomposition_residual_max,
          decomposition_gap_max,
          w_l2_max,
          lhs,
          ratio,
          clamp_fraction};
}

std::string StabilityReport::csv_header() const {
  std::string out = "name";
  for (const auto& k : keys()) out += "," + k;
  return out + "\n";
}

std::string StabilityReport::csv_row() const {
  std::string out = name;
  for (double v : values()) out += "," + format_double(v);
  return out + "\n";
}

std::string StabilityReport::text() const {
  std::string out = "name = " + name + "\n";
  const auto k = keys();
  const auto v = values();
  for (std::size_t i = 0; i < k.size(); ++i) out += k[i] + " = " + format_double(v[i]) + "\n";
  return out;
}

StabilityReport stability_functionals(const PairedRun& pair, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::kInvalidArgument, "weight rate beta must be finite and >= 0");
  }
  if (pair.steps.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "paired run '" + pair.name + "' has no samples");
  }
  StabilityReport r;
  r.name = pair.name;
  r.beta = beta;
  r.cadence = pair.cadence;
  const auto t = pair.steps.column("t");
  const auto du = pair.steps.column("du_weighted");
  auto squares = [](std::vector<double> x) {
    for (double& e : x) e *= e;
    return x;
  };
  const auto gdu2 = squares(pair.steps.column("grad_du"));
  const auto gdv2 = squares(pair.steps.column("grad_dv"));
  auto sup_weighted = [&](double b) {
    double m = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) m = std::max(m, std::exp(b * t[k]) * du[k]);
    return m;
  };
  r.sup_weighted_du = sup_weighted(beta);
  r.grad_du_weighted = std::sqrt(weighted_integral(t, gdu2, beta));
  r.grad_dv_weighted = std::sqrt(weighted_integral(t, gdv2, beta));
  r.sup_weighted_du_half = sup_weighted(0.5 * beta);
  r.grad_du_weighted_half = std::sqrt(weighted_integral(t, gdu2, 0.5 * beta));
  r.grad_dv_weighted_half = std::sqrt(weighted_integral(t, gdv2, 0.5 * beta));
  if (!pair.samples.empty()) {
    r.sup_drho_neg = max_abs_column(pair.samples, "drho_neg");
    r.a1_max = max_abs_column(pair.samples, "a1");
    r.a2_max = max_abs_column(pair.samples, "a2");
    r.iphi_max = max_abs_column(pair.samples, "iphi");
  }
  const ScalarField drho0 = pair.rho02.rho - pair.rho01.rho;
  r.drho0_neg = neg_sobolev_norm(drho0, 2.0).value;
  r.dv0_weighted = std::sqrt(kinetic_energy(pair.rho01, pair.v02 - pair.v01));
  r.drho0_l2 = l2_norm(drho0);
  r.data_functional = r.dv0_weighted + std::sqrt(r.drho0_l2);
  const XNorm xn = x_norm(drho0, pair.rho02.rho);
  r.x_norm = xn.value;
  r.x_norm_infinite = xn.infinite;
  r.decompositions = static_cast<int>(pair.decompositions.size());
  if (!pair.decompositions.empty()) {
    r.decomposition_residual_max = max_abs_column(pair.decompositions, "solver_residual");
    const auto gap = pair.decompositions.column("z_residual");
    const auto grad = pair.decompositions.column("grad_du");
    for (std::size_t k = 0; k < gap.size(); ++k) {
      r.decomposition_gap_max = std::max(r.decomposition_gap_max, gap[k] / (1.0 + grad[k]));
    }
    r.w_l2_max = max_abs_column(pair.decompositions, "w_l2");
  }
  r.lhs = r.sup_weighted_du + r.grad_du_weighted;
  r.ratio = r.data_functional > 0.0 ? r.lhs / r.data_functional : 0.0;
  r.clamp_fraction = pair.clamp_fraction;
  return r;
}

}  // namespace pflow
