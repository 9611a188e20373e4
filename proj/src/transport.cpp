#include "pflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pflow/grid.hpp"

namespace pflow {
namespace {

bool inside(const PatchShape& s, double x, double y) {
  if (s.kind == PatchShape::Kind::kDisk) {
    const double dx = x - s.cx, dy = y - s.cy;
    return dx * dx + dy * dy <= s.r * s.r;
  }
  return x >= s.x0 && x <= s.x1 && y >= s.y0 && y <= s.y1;
}

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// One forward-Euler stage of the limited upwind scheme: out = in - tau*div(F).
void euler_stage(const ScalarField& in, const VectorField& v, double tau,
                 ScalarField& out) {
  const Grid& g = in.grid();
  const int nx = g.nx, ny = g.ny;
  auto at = [&](int i, int j) { return in(i, j); };
  // Limited slopes in index units; one-sided (hence zero) next to walls.
  std::vector<double> sx(g.cells(), 0.0), sy(g.cells(), 0.0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double c = at(i, j);
      const double w = i > 0 ? at(i - 1, j) : c;
      const double e = i + 1 < nx ? at(i + 1, j) : c;
      const double s = j > 0 ? at(i, j - 1) : c;
      const double n = j + 1 < ny ? at(i, j + 1) : c;
      sx[g.index(i, j)] = minmod(c - w, e - c);
      sy[g.index(i, j)] = minmod(c - s, n - c);
    }
  }
  out = in;
  for (int j = 0; j < ny; ++j) {
    for (int i = 1; i < nx; ++i) {
      const double vel = v.u(i, j);
      if (vel == 0.0) continue;
      const double face = vel > 0.0 ? at(i - 1, j) + 0.5 * sx[g.index(i - 1, j)]
                                    : at(i, j) - 0.5 * sx[g.index(i, j)];
      const double flux = tau * vel * face / g.hx;
      out(i - 1, j) -= flux;
      out(i, j) += flux;
    }
  }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double vel = v.v(i, j);
      if (vel == 0.0) continue;
      const double face = vel > 0.0 ? at(i, j - 1) + 0.5 * sy[g.index(i, j - 1)]
                                    : at(i, j) - 0.5 * sy[g.index(i, j)];
      const double flux = tau * vel * face / g.hy;
      out(i, j - 1) -= flux;
      out(i, j) += flux;
    }
  }
}

double clip(ScalarField& f, double hi) {
  double moved = 0.0;
  for (double& x : f.values()) {
    if (x < 0.0) {
      moved -= x;
      x = 0.0;
    } else if (x > hi) {
      moved += x - hi;
      x = hi;
    }
  }
  return moved;
}

}  // namespace

std::vector<PatchShape> parse_shapes(const std::string& text) {
  std::vector<PatchShape> out;
  std::string item;
  std::istringstream all(text);
  while (std::getline(all, item, ';')) {
    std::istringstream is(item);
    std::string kind;
    if (!(is >> kind)) continue;
    PatchShape s;
    bool ok = false;
    if (kind == "disk") {
      s.kind = PatchShape::Kind::kDisk;
      ok = static_cast<bool>(is >> s.cx >> s.cy >> s.r >> s.level);
    } else if (kind == "rect") {
      s.kind = PatchShape::Kind::kRect;
      ok = static_cast<bool>(is >> s.x0 >> s.y0 >> s.x1 >> s.y1 >> s.level);
    }
    std::string extra;
    if (!ok || (is >> extra)) {
      throw Error(ErrorCode::kConfig, "cannot parse shape '" + item + "'");
    }
    out.push_back(s);
  }
  return out;
}

std::string format_shapes(const std::vector<PatchShape>& shapes) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const PatchShape& s = shapes[k];
    if (k) os << " ; ";
    if (s.kind == PatchShape::Kind::kDisk) {
      os << "disk " << s.cx << ' ' << s.cy << ' ' << s.r << ' ' << s.level;
    } else {
      os << "rect " << s.x0 << ' ' << s.y0 << ' ' << s.x1 << ' ' << s.y1 << ' ' << s.level;
    }
  }
  return os.str();
}

DensityField make_patch(const PatchSpec& spec, const Grid& g, double rho_star) {
  if (!(rho_star > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rho_star must be positive");
  auto check_level = [&](double level) {
    if (!(level >= 0.0 && level <= rho_star)) {
      std::ostringstream os;
      os << "patch level " << level << " outside [0, " << rho_star << "]";
      throw Error(ErrorCode::kInvalidArgument, os.str());
    }
  };
  check_level(spec.background);
  for (const PatchShape& s : spec.shapes) {
    check_level(s.level);
    bool ok;
    if (s.kind == PatchShape::Kind::kDisk) {
      ok = s.r > 0.0 && s.cx - s.r >= 0.0 && s.cx + s.r <= g.lx && s.cy - s.r >= 0.0 &&
           s.cy + s.r <= g.ly;
    } else {
      ok = s.x0 < s.x1 && s.y0 < s.y1 && s.x0 >= 0.0 && s.y0 >= 0.0 && s.x1 <= g.lx &&
           s.y1 <= g.ly;
    }
    if (!ok) throw Error(ErrorCode::kInvalidArgument, "patch shape leaves the domain: " +
                                                          format_shapes({s}));
  }
  DensityField d{ScalarField(g, spec.background), rho_star};
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      for (const PatchShape& s : spec.shapes) {
        if (inside(s, g.xc(i), g.yc(j))) d.rho(i, j) = s.level;
      }
    }
  }
  if (d.rho.max() == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "initial density is identically zero");
  }
  return d;
}

DensityField advect_density(const DensityField& rho, const VectorField& v, double dt,
                            AdvectionStats* stats) {
  const Grid& g = rho.grid();
  require_same_grid(g, v.grid(), "advect_density");
  if (!(dt >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative time step");
  const double vmax = v.max_abs();
  const double cfl = dt * vmax / g.hmin();
  if (cfl > 0.9) {
    std::ostringstream os;
    os << "advect_density: CFL number " << cfl << " exceeds 0.9";
    throw Error(ErrorCode::kCflViolation, os.str());
  }
  if (stats) *stats = {};
  if (dt == 0.0 || vmax == 0.0) return rho;
  const double div = divergence(v).max_abs();
  if (div > 1e-8) {
    std::ostringstream os;
    os << "advect_density: velocity divergence " << div << " exceeds 1e-8";
    throw Error(ErrorCode::kNotDivergenceFree, os.str());
  }

  // Largest outflow Courant sum over cells.
  double courant = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double out = (std::max(v.u(i + 1, j), 0.0) - std::min(v.u(i, j), 0.0)) / g.hx +
                         (std::max(v.v(i, j + 1), 0.0) - std::min(v.v(i, j), 0.0)) / g.hy;
      courant = std::max(courant, dt * out);
    }
  }
  const int sub = std::max(1, static_cast<int>(std::ceil(courant / 0.5)));
  const double tau = dt / sub;

  DensityField out = rho;
  ScalarField stage(g), next(g);
  double clipped = 0.0;
  for (int s = 0; s < sub; ++s) {
    euler_stage(out.rho, v, tau, stage);
    clipped += clip(stage, rho.rho_star);
    euler_stage(stage, v, tau, next);
    auto a = out.rho.values();
    auto b = next.values();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = 0.5 * (a[k] + b[k]);
    clipped += clip(out.rho, rho.rho_star);
  }
  if (stats) {
    stats->substeps = sub;
    stats->clipped = clipped;
  }
  return out;
}

double lp_norm(const ScalarField& f, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "lp_norm needs p >= 1");
  if (std::isinf(p)) return f.max_abs();
  double s = 0.0;
  for (double x : f.values()) s += std::pow(std::abs(x), p);
  return std::pow(s * f.grid().cell_area(), 1.0 / p);
}

}  // namespace pflow
