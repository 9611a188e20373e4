#include "pflow/divergence_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pflow/grid.hpp"
#include "pflow/linear_solvers.hpp"
#include "pflow/metrics.hpp"

namespace pflow {
namespace {

// No-slip -Lap on the interior faces of one velocity component.
StencilMatrix component_laplacian(const Grid& g, bool x_component) {
  const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
  if (x_component) {
    StencilMatrix a(g.nx - 1, g.ny);
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 1; i < g.nx; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * (g.nx - 1) + (i - 1);
        double d = 2.0 * ax + 2.0 * ay;
        if (i > 1) a.west[k] = -ax;
        if (i + 1 < g.nx) a.east[k] = -ax;
        if (j > 0) a.south[k] = -ay; else d += ay;
        if (j + 1 < g.ny) a.north[k] = -ay; else d += ay;
        a.diag[k] = d;
      }
    }
    return a;
  }
  StencilMatrix a(g.nx, g.ny - 1);
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j - 1) * g.nx + i;
      double d = 2.0 * ax + 2.0 * ay;
      if (i > 0) a.west[k] = -ax; else d += ax;
      if (i + 1 < g.nx) a.east[k] = -ax; else d += ax;
      if (j > 1) a.south[k] = -ay;
      if (j + 1 < g.ny) a.north[k] = -ay;
      a.diag[k] = d;
    }
  }
  return a;
}

class VectorLaplacianSolver {
 public:
  VectorLaplacianSolver(const Grid& g, double tol)
      : g_(g), ax_(component_laplacian(g, true)), ay_(component_laplacian(g, false)) {
    opt_.rel_tol = tol;
  }

  // x = L^{-1} b on interior faces; wall faces of x stay zero.
  VectorField solve(const VectorField& b, int& iterations) const {
    VectorField x(g_);
    const int nu = g_.nx - 1;
    std::vector<double> rb(ax_.size()), rx(ax_.size(), 0.0);
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 1; i < g_.nx; ++i) rb[static_cast<std::size_t>(j) * nu + i - 1] = b.u(i, j);
    SolveStats st = solve_pcg(ax_, rb, rx, opt_);
    require_converged(st, "vector Laplacian (x)");
    iterations += st.iterations;
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 1; i < g_.nx; ++i) x.u(i, j) = rx[static_cast<std::size_t>(j) * nu + i - 1];

    std::vector<double> sb(ay_.size()), sx(ay_.size(), 0.0);
    for (int j = 1; j < g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) sb[static_cast<std::size_t>(j - 1) * g_.nx + i] = b.v(i, j);
    st = solve_pcg(ay_, sb, sx, opt_);
    require_converged(st, "vector Laplacian (y)");
    iterations += st.iterations;
    for (int j = 1; j < g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) x.v(i, j) = sx[static_cast<std::size_t>(j - 1) * g_.nx + i];
    return x;
  }

 private:
  Grid g_;
  StencilMatrix ax_, ay_;
  SolverOptions opt_;
};

double dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s;
}

void remove_mean(ScalarField& f) {
  const double m = f.sum() / static_cast<double>(f.size());
  for (double& x : f.values()) x -= m;
}

// Neumann Poisson correction: returns b - grad psi with div grad psi = div b - f.
void correct_divergence(VectorField& b, const ScalarField& f) {
  const Grid& g = b.grid();
  ScalarField r = divergence(b) - f;
  remove_mean(r);
  StencilMatrix a(g.nx, g.ny);
  const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      double d = 0.0;
      if (i > 0) { a.west[k] = -ax; d += ax; }
      if (i + 1 < g.nx) { a.east[k] = -ax; d += ax; }
      if (j > 0) { a.south[k] = -ay; d += ay; }
      if (j + 1 < g.ny) { a.north[k] = -ay; d += ay; }
      a.diag[k] = d;
    }
  }
  std::vector<double> rhs(g.cells()), psi(g.cells(), 0.0);
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -r.values()[k];
  SolverOptions opt;
  opt.singular = true;
  opt.rel_tol = 1e-12;
  const SolveStats st = solve_pcg(a, rhs, psi, opt);
  require_converged(st, "divergence correction");
  ScalarField p(g);
  std::copy(psi.begin(), psi.end(), p.values().begin());
  b -= gradient(p);
}

}  // namespace

StokesSolution solve_stokes(const VectorField& gv, const ScalarField& f, const StokesOptions& opt) {
  const Grid& g = gv.grid();
  require_same_grid(g, f.grid(), "solve_stokes");
  const VectorLaplacianSolver lap(g, opt.inner_tol);
  StokesSolution out;
  out.q = ScalarField(g);

  // Schur complement system S q = f - D L^{-1} g with S = -D L^{-1} G.
  const VectorField lg = lap.solve(gv, out.inner_iterations);
  ScalarField rhs = f - divergence(lg);
  remove_mean(rhs);
  const double scale = std::max({rhs.max_abs(), f.max_abs(), 1e-300});
  const double stop = opt.tol * scale;

  ScalarField q(g);
  ScalarField r = rhs;  // residual for q = 0; also f - div v
  ScalarField p = r;
  double rr = dot(r, r);
  VectorField v = lg;
  if (r.max_abs() > stop) {
    for (int it = 1; it <= opt.max_outer; ++it) {
      const VectorField lgp = lap.solve(gradient(p), out.inner_iterations);
      ScalarField sp = divergence(lgp);
      sp *= -1.0;
      remove_mean(sp);
      const double psp = dot(p, sp);
      if (!(psp > 0.0)) break;
      const double alpha = rr / psp;
      auto qv = q.values();
      auto rv = r.values();
      auto pv = p.values();
      auto sv = sp.values();
      for (std::size_t k = 0; k < qv.size(); ++k) {
        qv[k] += alpha * pv[k];
        rv[k] -= alpha * sv[k];
      }
      out.outer_iterations = it;
      // v = L^{-1}(g - G q) updated incrementally.
      VectorField step_v = lgp;
      step_v *= -alpha;
      v += step_v;
      if (r.max_abs() <= stop) break;
      const double rr_next = dot(r, r);
      const double beta = rr_next / rr;
      rr = rr_next;
      for (std::size_t k = 0; k < pv.size(); ++k) pv[k] = rv[k] + beta * pv[k];
    }
  }
  const double gap = (divergence(v) - f).max_abs();
  if (gap > 1e3 * stop && gap > 1e-8) {
    std::ostringstream os;
    os << "Stokes saddle solve did not converge: " << out.outer_iterations
       << " outer iterations, max|div v - f| = " << gap;
    throw Error(ErrorCode::kNotConverged, os.str());
  }
  out.v = std::move(v);
  out.q = std::move(q);
  return out;
}

EigenmodeResult stokes_eigenmode(const Grid& g, double tol, int max_iters) {
  using std::numbers::pi;
  // Start from the sin^2 stream-function mode, which is close to the answer.
  VectorField v(g);
  {
    std::vector<double> node(static_cast<std::size_t>(g.nx + 1) * (g.ny + 1));
    auto at = [&](int i, int j) -> double& {
      return node[static_cast<std::size_t>(j) * (g.nx + 1) + i];
    };
    for (int j = 0; j <= g.ny; ++j) {
      for (int i = 0; i <= g.nx; ++i) {
        const double sx = std::sin(pi * i / g.nx), sy = std::sin(pi * j / g.ny);
        at(i, j) = sx * sx * sy * sy;
      }
    }
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) v.u(i, j) = (at(i, j + 1) - at(i, j)) / g.hy;
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) v.v(i, j) = -(at(i + 1, j) - at(i, j)) / g.hx;
  }
  const ScalarField zero(g);
  StokesOptions opt;
  opt.tol = 1e-11;
  EigenmodeResult out;
  double lambda_prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    v *= 1.0 / std::sqrt(inner(v, v));
    StokesSolution s = solve_stokes(v, zero, opt);
    // Rayleigh quotient <v, v>/<S^{-1} v, v> on the divergence-free subspace.
    const double lambda = inner(v, v) / inner(s.v, v);
    v = std::move(s.v);
    out.iterations = it;
    if (it >= 3 && std::abs(lambda - lambda_prev) <= tol * lambda) {
      out.lambda = lambda;
      break;
    }
    lambda_prev = lambda;
    out.lambda = lambda;
  }
  v *= 1.0 / std::sqrt(inner(v, v));
  // Fix the sign so that the first interior u value is nonnegative.
  double sign_probe = 0.0;
  for (double x : v.u_values()) {
    if (std::abs(x) > 1e-12) { sign_probe = x; break; }
  }
  if (sign_probe < 0.0) v *= -1.0;
  out.v = std::move(v);
  return out;
}

DivergenceSolution solve_divergence(const DivergenceProblem& prob, const StokesOptions& opt) {
  const Grid& g = prob.f.grid();
  DivergenceSolution out;
  ScalarField f = prob.f;
  double l1 = 0.0;
  for (double x : f.values()) l1 += std::abs(x);
  l1 *= g.cell_area();
  const double integral = f.sum() * g.cell_area();
  if (std::abs(integral) > 1e-10 * l1) {
    std::ostringstream os;
    os << "solve_divergence: right-hand side has nonzero mean (integral " << integral << ")";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
  out.removed_mean = f.sum() / static_cast<double>(f.size());
  for (double& x : f.values()) x -= out.removed_mean;

  if (f.max_abs() == 0.0) {
    out.b = VectorField(g);
  } else {
    StokesSolution s = solve_stokes(VectorField(g), f, opt);
    out.b = std::move(s.v);
    out.outer_iterations = s.outer_iterations;
    correct_divergence(out.b, f);
  }
  out.b.zero_walls();
  const ScalarField res = divergence(out.b) - f;
  out.residual_l2 = std::sqrt(inner(res, res));
  out.residual_max = res.max_abs();
  if (out.residual_max > 1e-8) {
    std::ostringstream os;
    os << "solve_divergence: residual " << out.residual_max << " above 1e-8";
    throw Error(ErrorCode::kNotConverged, os.str());
  }

  if (prob.A && prob.d) {
    require_same_grid(g, prob.A->grid(), "solve_divergence");
    require_same_grid(g, prob.d->grid(), "solve_divergence");
    const CellVectorField dc = to_cell_centers(*prob.d);
    const MatrixField gd = velocity_gradient(*prob.d);
    double ad2 = 0.0, atgd2 = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const Mat2& a = (*prob.A)(i, j);
        ad2 += (a * dc(i, j)).norm2();
        atgd2 += (a.transpose() * gd(i, j)).frobenius2();
      }
    }
    ad2 *= g.cell_area();
    atgd2 *= g.cell_area();
    const double b_l2 = std::sqrt(inner(out.b, out.b));
    out.constant_l2 = b_l2 / std::sqrt(ad2);
    out.constant_grad = h1_seminorm(out.b) / std::sqrt(atgd2);
  }
  return out;
}

Decomposition decompose_difference(const MatrixField& a1, const MatrixField& a2,
                                   const CellVectorField& u1, const CellVectorField& u2,
                                   const StokesOptions& opt) {
  const Grid& g = a1.grid();
  require_same_grid(g, a2.grid(), "decompose_difference");
  require_same_grid(g, u1.grid(), "decompose_difference");
  require_same_grid(g, u2.grid(), "decompose_difference");

  CellVectorField da_u2(g), du(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      da_u2(i, j) = (a1(i, j) - a2(i, j)) * u2(i, j);
      du(i, j) = u2(i, j) - u1(i, j);
    }
  }
  DivergenceProblem prob{divergence(to_faces(da_u2))};
  // Telescoping sums make the mean vanish up to rounding; remove it exactly.
  const double mean = prob.f.sum() / static_cast<double>(prob.f.size());
  for (double& x : prob.f.values()) x -= mean;
  const DivergenceSolution sol = solve_divergence(prob, opt);

  Decomposition out;
  out.w_bar = sol.b;
  out.solver_residual = sol.residual_l2;
  out.f_l2 = std::sqrt(inner(prob.f, prob.f));
  out.grad_w_bar_l2 = h1_seminorm(sol.b);
  const CellVectorField wc = to_cell_centers(sol.b);
  out.w = CellVectorField(g);
  out.z = CellVectorField(g);
  CellVectorField a1z(g);
  double w2 = 0.0, z2 = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      out.w(i, j) = inverse(a1(i, j)) * wc(i, j);
      out.z(i, j) = du(i, j) - out.w(i, j);
      a1z(i, j) = a1(i, j) * out.z(i, j);
      w2 += out.w(i, j).norm2();
      z2 += out.z(i, j).norm2();
    }
  }
  out.w_l2 = std::sqrt(w2 * g.cell_area());
  out.z_l2 = std::sqrt(z2 * g.cell_area());
  const ScalarField gap = divergence(to_faces(a1z));
  out.z_residual = std::sqrt(inner(gap, gap));
  return out;
}

}  // namespace pflow
