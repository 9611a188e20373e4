#include "pflow/ns_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pflow/divergence_solver.hpp"
#include "pflow/grid.hpp"

namespace pflow {

void SchemeParams::validate() const {
  std::ostringstream bad;
  if (!(eps_vac > 0.0 && eps_vac <= 0.1)) bad << " eps_vac=" << eps_vac << " (need (0, 0.1])";
  if (!(cfl > 0.0 && cfl <= 0.9)) bad << " cfl=" << cfl << " (need (0, 0.9])";
  if (!(tol > 0.0 && tol <= 1e-4)) bad << " tol=" << tol << " (need (0, 1e-4])";
  if (!(div_tol > 0.0 && div_tol <= 1e-4)) bad << " div_tol=" << div_tol << " (need (0, 1e-4])";
  if (max_iters < 1) bad << " max_iters=" << max_iters;
  if (!bad.str().empty()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid scheme parameters:" + bad.str());
  }
}

const char* to_string(VelocitySpec::Kind k) {
  switch (k) {
    case VelocitySpec::Kind::kZero: return "zero";
    case VelocitySpec::Kind::kSin2: return "sin2";
    case VelocitySpec::Kind::kVortex: return "vortex";
    case VelocitySpec::Kind::kStokesEigenmode: return "stokes_eigenmode";
  }
  return "?";
}

VelocitySpec::Kind velocity_kind_from_string(const std::string& s) {
  if (s == "zero") return VelocitySpec::Kind::kZero;
  if (s == "sin2") return VelocitySpec::Kind::kSin2;
  if (s == "vortex") return VelocitySpec::Kind::kVortex;
  if (s == "stokes_eigenmode") return VelocitySpec::Kind::kStokesEigenmode;
  throw Error(ErrorCode::kConfig, "unknown velocity kind '" + s + "'");
}

VectorField velocity_from_stream_function(const Grid& g,
                                          const std::function<double(double, double)>& psi) {
  std::vector<double> node(static_cast<std::size_t>(g.nx + 1) * (g.ny + 1));
  auto at = [&](int i, int j) -> double& {
    return node[static_cast<std::size_t>(j) * (g.nx + 1) + i];
  };
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) at(i, j) = psi(i * g.hx, j * g.hy);

  VectorField v(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) v.u(i, j) = (at(i, j + 1) - at(i, j)) / g.hy;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v.v(i, j) = -(at(i + 1, j) - at(i, j)) / g.hx;

  const double wall = v.max_wall_value();
  if (wall > 1e-12 * std::max(v.max_abs(), 1e-300)) {
    std::ostringstream os;
    os << "stream function is not constant on the boundary (wall velocity " << wall << ")";
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
  v.zero_walls();
  return v;
}

VectorField make_initial_velocity(const VelocitySpec& spec, const Grid& g) {
  using std::numbers::pi;
  switch (spec.kind) {
    case VelocitySpec::Kind::kZero:
      return VectorField(g);
    case VelocitySpec::Kind::kSin2: {
      if (spec.kx < 1 || spec.ky < 1) {
        throw Error(ErrorCode::kInvalidArgument, "sin2 mode numbers must be >= 1");
      }
      const double kx = spec.kx * pi / g.lx, ky = spec.ky * pi / g.ly, a = spec.amplitude;
      return velocity_from_stream_function(g, [=](double x, double y) {
        const double sx = std::sin(kx * x), sy = std::sin(ky * y);
        return a * sx * sx * sy * sy;
      });
    }
    case VelocitySpec::Kind::kVortex: {
      const double r2 = spec.radius * spec.radius, a = spec.amplitude;
      if (!(spec.radius > 0.0) || spec.cx - spec.radius < 0.0 || spec.cx + spec.radius > g.lx ||
          spec.cy - spec.radius < 0.0 || spec.cy + spec.radius > g.ly) {
        throw Error(ErrorCode::kInvalidArgument, "vortex support must lie inside the domain");
      }
      const double cx = spec.cx, cy = spec.cy;
      return velocity_from_stream_function(g, [=](double x, double y) {
        const double q = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / r2;
        return q < 1.0 ? a * (1.0 - q) * (1.0 - q) * (1.0 - q) : 0.0;
      });
    }
    case VelocitySpec::Kind::kStokesEigenmode: {
      VectorField v = stokes_eigenmode(g).v;
      const double m = v.max_abs();
      v *= spec.amplitude / m;
      return v;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown velocity kind");
}

SolutionState make_state(const DensityField& rho, const VectorField& v, double mu) {
  require_same_grid(rho.grid(), v.grid(), "make_state");
  if (!(mu > 0.0)) throw Error(ErrorCode::kInvalidArgument, "viscosity must be positive");
  if (v.max_wall_value() != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "initial velocity has nonzero wall faces");
  }
  SolutionState s;
  s.rho = rho;
  s.v = v;
  s.p = ScalarField(rho.grid());
  s.mu = mu;
  return s;
}

namespace {

ScalarField floored(const DensityField& rho, double eps_vac) {
  ScalarField r = rho.rho;
  const double floor = eps_vac * rho.rho_star;
  for (double& x : r.values()) x = std::max(x, floor);
  return r;
}

// rho~ at grid node (i, j), averaging the existing adjacent cells.
double node_density(const ScalarField& r, int i, int j) {
  const Grid& g = r.grid();
  double s = 0.0;
  int n = 0;
  for (int jj = j - 1; jj <= j; ++jj) {
    for (int ii = i - 1; ii <= i; ++ii) {
      if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) continue;
      s += r(ii, jj);
      ++n;
    }
  }
  return s / n;
}

// Adds the convective coupling with outward mass flux F (already divided by
// the control volume) to row k and neighbor slot `off`; up = 1 adds the
// first-order upwind dissipation 1/2 |F| (w_k - w_nb).
inline void convect(double flux, double up, double& diag, double& off) {
  diag += 0.5 * up * std::abs(flux);
  off += 0.5 * flux - 0.5 * up * std::abs(flux);
}

}  // namespace

VectorField face_density(const DensityField& rho, double eps_vac) {
  const ScalarField r = floored(rho, eps_vac);
  const Grid& g = r.grid();
  VectorField f(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) {
      const double w = i > 0 ? r(i - 1, j) : r(i, j);
      const double e = i < g.nx ? r(i, j) : r(i - 1, j);
      f.u(i, j) = 0.5 * (w + e);
    }
  }
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double s = j > 0 ? r(i, j - 1) : r(i, j);
      const double n = j < g.ny ? r(i, j) : r(i, j - 1);
      f.v(i, j) = 0.5 * (s + n);
    }
  }
  return f;
}

double solver_energy(const DensityField& rho, const VectorField& v, double eps_vac) {
  const VectorField f = face_density(rho, eps_vac);
  double s = 0.0;
  auto fu = f.u_values();
  auto vu = v.u_values();
  for (std::size_t k = 0; k < vu.size(); ++k) s += fu[k] * vu[k] * vu[k];
  auto fv = f.v_values();
  auto vv = v.v_values();
  for (std::size_t k = 0; k < vv.size(); ++k) s += fv[k] * vv[k] * vv[k];
  return 0.5 * s * v.grid().cell_area();
}

PredictorResult momentum_predictor(const SolutionState& s, double dt, const SchemeParams& sp,
                                   const DensityField* rho_next) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "momentum_predictor needs dt > 0");
  const DensityField& rn = rho_next ? *rho_next : s.rho;
  const Grid& g = s.v.grid();
  require_same_grid(g, rn.grid(), "momentum_predictor");
  const VectorField fa = face_density(s.rho, sp.eps_vac);
  const VectorField fb = face_density(rn, sp.eps_vac);
  const ScalarField r = floored(rn, sp.eps_vac);
  const VectorField& v = s.v;
  const double ax = s.mu / (g.hx * g.hx), ay = s.mu / (g.hy * g.hy);
  const double vol = g.cell_area();
  const double up = sp.upwind ? 1.0 : 0.0;

  PredictorResult out{VectorField(g), 0};
  SolverOptions opt;
  opt.rel_tol = sp.tol;
  opt.max_iters = sp.max_iters;

  // x-velocity on interior vertical faces, lattice (nx-1) x ny.
  {
    const int n1 = g.nx - 1;
    StencilMatrix a(n1, g.ny);
    std::vector<double> b(a.size()), x(a.size());
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 1; i < g.nx; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * n1 + (i - 1);
        const double sa = std::sqrt(fa.u(i, j)), sb = std::sqrt(fb.u(i, j));
        double d = sb * sb / dt + 2.0 * ax + 2.0 * ay;
        double e = 0.0, w = 0.0, n = 0.0, so = 0.0;
        const double fe = r(i, j) * 0.5 * (v.u(i, j) + v.u(i + 1, j)) * g.hy / vol;
        const double fw = -r(i - 1, j) * 0.5 * (v.u(i - 1, j) + v.u(i, j)) * g.hy / vol;
        convect(fe, up, d, e);
        convect(fw, up, d, w);
        if (j + 1 < g.ny) {
          const double fn =
              node_density(r, i, j + 1) * 0.5 * (v.v(i - 1, j + 1) + v.v(i, j + 1)) * g.hx / vol;
          convect(fn, up, d, n);
          n -= ay;
        } else {
          d += ay;  // odd reflection across the top wall
        }
        if (j > 0) {
          const double fs = -node_density(r, i, j) * 0.5 * (v.v(i - 1, j) + v.v(i, j)) * g.hx / vol;
          convect(fs, up, d, so);
          so -= ay;
        } else {
          d += ay;
        }
        e -= ax;
        w -= ax;
        a.diag[k] = d;
        if (i + 1 < g.nx) a.east[k] = e;
        if (i > 1) a.west[k] = w;
        if (j + 1 < g.ny) a.north[k] = n;
        if (j > 0) a.south[k] = so;
        b[k] = sb * sa * v.u(i, j) / dt;
        x[k] = v.u(i, j);
      }
    }
    const SolveStats st = solve_bicgstab(a, b, x, opt);
    require_converged(st, "momentum predictor (x)");
    out.iterations += st.iterations;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) out.v_star.u(i, j) = x[static_cast<std::size_t>(j) * n1 + (i - 1)];
  }

  // y-velocity on interior horizontal faces, lattice nx x (ny-1).
  {
    const int n1 = g.nx;
    StencilMatrix a(n1, g.ny - 1);
    std::vector<double> b(a.size()), x(a.size());
    for (int j = 1; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t k = static_cast<std::size_t>(j - 1) * n1 + i;
        const double sa = std::sqrt(fa.v(i, j)), sb = std::sqrt(fb.v(i, j));
        double d = sb * sb / dt + 2.0 * ax + 2.0 * ay;
        double e = 0.0, w = 0.0, n = 0.0, so = 0.0;
        const double fn = r(i, j) * 0.5 * (v.v(i, j) + v.v(i, j + 1)) * g.hx / vol;
        const double fs = -r(i, j - 1) * 0.5 * (v.v(i, j - 1) + v.v(i, j)) * g.hx / vol;
        convect(fn, up, d, n);
        convect(fs, up, d, so);
        if (i + 1 < g.nx) {
          const double fe =
              node_density(r, i + 1, j) * 0.5 * (v.u(i + 1, j - 1) + v.u(i + 1, j)) * g.hy / vol;
          convect(fe, up, d, e);
          e -= ax;
        } else {
          d += ax;
        }
        if (i > 0) {
          const double fw = -node_density(r, i, j) * 0.5 * (v.u(i, j - 1) + v.u(i, j)) * g.hy / vol;
          convect(fw, up, d, w);
          w -= ax;
        } else {
          d += ax;
        }
        n -= ay;
        so -= ay;
        a.diag[k] = d;
        if (i + 1 < g.nx) a.east[k] = e;
        if (i > 0) a.west[k] = w;
        if (j + 1 < g.ny) a.north[k] = n;
        if (j > 1) a.south[k] = so;
        b[k] = sb * sa * v.v(i, j) / dt;
        x[k] = v.v(i, j);
      }
    }
    const SolveStats st = solve_bicgstab(a, b, x, opt);
    require_converged(st, "momentum predictor (y)");
    out.iterations += st.iterations;
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) out.v_star.v(i, j) = x[static_cast<std::size_t>(j - 1) * n1 + i];
  }
  return out;
}

ProjectionResult pressure_projection(const VectorField& v_star, const DensityField& rho, double dt,
                                     const SchemeParams& sp) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "pressure_projection needs dt > 0");
  const Grid& g = v_star.grid();
  require_same_grid(g, rho.grid(), "pressure_projection");
  if (!v_star.all_finite()) throw Error(ErrorCode::kInvalidArgument, "v* is not finite");
  if (v_star.max_wall_value() != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "v* has nonzero wall faces");
  }
  const VectorField f = face_density(rho, sp.eps_vac);

  // -div(1/rho~ grad phi) = -div(v*)/dt, pure Neumann.
  StencilMatrix a(g.nx, g.ny);
  const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      double d = 0.0;
      if (i > 0) { a.west[k] = -ax / f.u(i, j); d -= a.west[k]; }
      if (i + 1 < g.nx) { a.east[k] = -ax / f.u(i + 1, j); d -= a.east[k]; }
      if (j > 0) { a.south[k] = -ay / f.v(i, j); d -= a.south[k]; }
      if (j + 1 < g.ny) { a.north[k] = -ay / f.v(i, j + 1); d -= a.north[k]; }
      a.diag[k] = d;
    }
  }
  const ScalarField div = divergence(v_star);
  std::vector<double> b(g.cells()), x(g.cells(), 0.0);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = -div.values()[k] / dt;

  const double target = sp.div_tol * std::max(v_star.max_abs(), 1e-300) / g.hmin();
  SolverOptions opt;
  opt.singular = true;
  opt.rel_tol = 1e-15;
  opt.abs_tol = target / dt;
  opt.max_iters = sp.max_iters;
  const SolveStats st = solve_pcg(a, b, x, opt);

  ProjectionResult out;
  out.iterations = st.iterations;
  out.p = ScalarField(g);
  std::copy(x.begin(), x.end(), out.p.values().begin());
  out.v = v_star;
  const VectorField gp = gradient(out.p);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) out.v.u(i, j) -= dt / f.u(i, j) * gp.u(i, j);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.v.v(i, j) -= dt / f.v(i, j) * gp.v(i, j);
  out.div_max = divergence(out.v).max_abs();
  if (!st.converged || out.div_max > 1e-8) {
    std::ostringstream os;
    os << "pressure projection did not converge: " << st.iterations << " iterations, max|div v| "
       << out.div_max;
    throw Error(ErrorCode::kNotConverged, os.str());
  }
  return out;
}

double choose_dt(const SolutionState& s, const SchemeParams& sp, double t_limit) {
  const double h = s.v.grid().hmin();
  const double vmax = s.v.max_abs();
  double dt = sp.cfl * h;
  if (vmax > 0.0) dt = std::min(dt, sp.cfl * h / vmax);
  const double rest = t_limit - s.t;
  if (rest < dt) dt = rest;
  return dt;
}

StepInfo step_with_dt(SolutionState& s, double dt, const SchemeParams& sp) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step needs dt > 0");
  StepInfo info;
  info.dt = dt;
  info.energy_before = solver_energy(s.rho, s.v, sp.eps_vac);

  AdvectionStats ast;
  DensityField rho_next = advect_density(s.rho, s.v, dt, &ast);
  info.advect_substeps = ast.substeps;
  info.clipped = ast.clipped;
  PredictorResult pred = momentum_predictor(s, dt, sp, &rho_next);
  info.predictor_iters = pred.iterations;
  ProjectionResult proj = pressure_projection(pred.v_star, rho_next, dt, sp);
  info.poisson_iters = proj.iterations;
  info.div_max = proj.div_max;

  s.rho = std::move(rho_next);
  s.v = std::move(proj.v);
  s.p = std::move(proj.p);
  s.t += dt;
  info.energy_after = solver_energy(s.rho, s.v, sp.eps_vac);
  return info;
}

StepInfo step(SolutionState& s, const SchemeParams& sp, double t_limit) {
  const double dt = choose_dt(s, sp, t_limit);
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "no time left to step");
  return step_with_dt(s, dt, sp);
}

}  // namespace pflow
