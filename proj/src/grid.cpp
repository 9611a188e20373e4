#include "pflow/grid.hpp"

#include <cmath>
#include <sstream>

#include "pflow/linear_solvers.hpp"

namespace pflow {

ScalarField divergence(const VectorField& v) {
  const Grid& g = v.grid();
  ScalarField d(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      d(i, j) = (v.u(i + 1, j) - v.u(i, j)) / g.hx + (v.v(i, j + 1) - v.v(i, j)) / g.hy;
    }
  }
  return d;
}

VectorField gradient(const ScalarField& p) {
  const Grid& g = p.grid();
  VectorField out(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) out.u(i, j) = (p(i, j) - p(i - 1, j)) / g.hx;
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) out.v(i, j) = (p(i, j) - p(i, j - 1)) / g.hy;
  }
  return out;
}

VectorField laplacian_dirichlet(const VectorField& v, double mu) {
  const Grid& g = v.grid();
  VectorField out(g);
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      const double c = v.u(i, j);
      const double s = j > 0 ? v.u(i, j - 1) : -c;
      const double n = j + 1 < g.ny ? v.u(i, j + 1) : -c;
      out.u(i, j) = mu * ((v.u(i + 1, j) - 2.0 * c + v.u(i - 1, j)) * ax + (n - 2.0 * c + s) * ay);
    }
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double c = v.v(i, j);
      const double w = i > 0 ? v.v(i - 1, j) : -c;
      const double e = i + 1 < g.nx ? v.v(i + 1, j) : -c;
      out.v(i, j) = mu * ((e - 2.0 * c + w) * ax + (v.v(i, j + 1) - 2.0 * c + v.v(i, j - 1)) * ay);
    }
  }
  return out;
}

ScalarField laplacian_neumann(const ScalarField& p) {
  return divergence(gradient(p));
}

ScalarField laplacian_dirichlet_scalar(const ScalarField& p) {
  const Grid& g = p.grid();
  ScalarField out(g);
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double c = p(i, j);
      const double w = i > 0 ? p(i - 1, j) : -c;
      const double e = i + 1 < g.nx ? p(i + 1, j) : -c;
      const double s = j > 0 ? p(i, j - 1) : -c;
      const double n = j + 1 < g.ny ? p(i, j + 1) : -c;
      out(i, j) = (e - 2.0 * c + w) * ax + (n - 2.0 * c + s) * ay;
    }
  }
  return out;
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  double s = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s * a.grid().cell_area();
}

double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid(), b.grid(), "inner");
  double s = 0.0;
  auto au = a.u_values();
  auto bu = b.u_values();
  for (std::size_t k = 0; k < au.size(); ++k) s += au[k] * bu[k];
  auto av = a.v_values();
  auto bv = b.v_values();
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return s * a.grid().cell_area();
}

MatrixField velocity_gradient(const VectorField& v) {
  const Grid& g = v.grid();
  MatrixField out(g);
  auto u_at = [&](int i, int j) {
    // x-velocity with odd reflection across the horizontal walls
    if (j < 0) return -v.u(i, 0);
    if (j >= g.ny) return -v.u(i, g.ny - 1);
    return v.u(i, j);
  };
  auto v_at = [&](int i, int j) {
    if (i < 0) return -v.v(0, j);
    if (i >= g.nx) return -v.v(g.nx - 1, j);
    return v.v(i, j);
  };
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      Mat2 m;
      m.a = (v.u(i + 1, j) - v.u(i, j)) / g.hx;
      m.d = (v.v(i, j + 1) - v.v(i, j)) / g.hy;
      m.b = 0.25 * ((u_at(i, j + 1) - u_at(i, j - 1)) + (u_at(i + 1, j + 1) - u_at(i + 1, j - 1))) / g.hy;
      m.c = 0.25 * ((v_at(i + 1, j) - v_at(i - 1, j)) + (v_at(i + 1, j + 1) - v_at(i - 1, j + 1))) / g.hx;
      out(i, j) = m;
    }
  }
  return out;
}

CellVectorField to_cell_centers(const VectorField& v) {
  const Grid& g = v.grid();
  CellVectorField c(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      c(i, j) = {0.5 * (v.u(i, j) + v.u(i + 1, j)), 0.5 * (v.v(i, j) + v.v(i, j + 1))};
    }
  }
  return c;
}

VectorField to_faces(const CellVectorField& c) {
  const Grid& g = c.grid();
  VectorField v(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) v.u(i, j) = 0.5 * (c(i - 1, j).x + c(i, j).x);
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) v.v(i, j) = 0.5 * (c(i, j - 1).y + c(i, j).y);
  }
  return v;
}

namespace {

// -Laplacian with Dirichlet walls (odd reflection), SPD.
StencilMatrix dirichlet_operator(const Grid& g) {
  StencilMatrix a(g.nx, g.ny);
  const double ax = 1.0 / (g.hx * g.hx);
  const double ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      double d = 2.0 * ax + 2.0 * ay;
      if (i > 0) a.west[k] = -ax; else d += ax;
      if (i + 1 < g.nx) a.east[k] = -ax; else d += ax;
      if (j > 0) a.south[k] = -ay; else d += ay;
      if (j + 1 < g.ny) a.north[k] = -ay; else d += ay;
      a.diag[k] = d;
    }
  }
  return a;
}

}  // namespace

DomainConstants poincare_constant(const Grid& g) {
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 10000;
  const StencilMatrix a = dirichlet_operator(g);
  const std::size_t n = a.size();
  std::vector<double> x(n, 1.0), y(n, 0.0), ax(n);
  SolverOptions opt;
  opt.rel_tol = 1e-13;

  auto normalize = [](std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    s = std::sqrt(s);
    for (double& e : v) e /= s;
  };
  normalize(x);

  DomainConstants out;
  out.diameter = std::sqrt(g.lx * g.lx + g.ly * g.ly);
  double lambda_prev = 0.0;
  for (int it = 1; it <= kMaxIter; ++it) {
    const SolveStats st = solve_pcg(a, x, y, opt);
    require_converged(st, "poincare inverse iteration");
    normalize(y);
    a.multiply(y, ax);
    double lambda = 0.0;
    for (std::size_t k = 0; k < n; ++k) lambda += y[k] * ax[k];
    x = y;
    // Warm start for the next solve: A^{-1} x ~ x / lambda.
    for (std::size_t k = 0; k < n; ++k) y[k] = x[k] / lambda;
    if (it >= 3 && std::abs(lambda - lambda_prev) <= kTol * lambda) {
      out.lambda1 = lambda;
      out.poincare_constant = 1.0 / std::sqrt(lambda);
      out.iterations = it;
      return out;
    }
    lambda_prev = lambda;
  }
  std::ostringstream os;
  os << "poincare_constant: inverse iteration did not converge in " << kMaxIter
     << " iterations on " << g.nx << "x" << g.ny;
  throw Error(ErrorCode::kNotConverged, os.str());
}

}  // namespace pflow
