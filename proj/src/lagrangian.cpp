#include "pflow/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pflow/grid.hpp"

namespace pflow {
namespace {

// Index and weight of the lower neighbor for position s (in index units) on a
// lattice of n points, clamped so that idx + 1 < n.
inline void locate(double s, int n, int& idx, double& w) {
  if (s <= 0.0) { idx = 0; w = 0.0; return; }
  if (s >= n - 1) { idx = n - 2; w = 1.0; return; }
  idx = static_cast<int>(s);
  if (idx > n - 2) idx = n - 2;
  w = s - idx;
}

bool clamp_position(const Grid& g, Vec2& x) {
  bool moved = false;
  if (x.x < 0.0) { x.x = 0.0; moved = true; }
  if (x.x > g.lx) { x.x = g.lx; moved = true; }
  if (x.y < 0.0) { x.y = 0.0; moved = true; }
  if (x.y > g.ly) { x.y = g.ly; moved = true; }
  return moved;
}

void check_history(const VelocityHistory& h, double t_end) {
  if (h.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty velocity history");
  if (t_end < h.t_begin() || t_end > h.t_end() * (1.0 + 1e-14) + 1e-300) {
    std::ostringstream os;
    os << "velocity history [" << h.t_begin() << ", " << h.t_end() << "] does not cover t = "
       << t_end;
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
}

void check_clamping(const FlowMap& fm, bool strict) {
  if (strict && fm.clamp_fraction() > 1e-3) {
    std::ostringstream os;
    os << "flow map clamped " << fm.clamp_events << " of " << fm.particle_steps
       << " particle-steps (> 0.1%)";
    throw Error(ErrorCode::kInconsistent, os.str());
  }
}

// Feeds consecutive frame pairs to advance_flow up to t_end.
template <class FrameAt>
FlowMap integrate_frames(const Grid& seeds, const std::vector<double>& times, FrameAt frame,
                         double t_end) {
  FlowMap fm = identity_flow(seeds, times.front());
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    if (fm.t >= t_end) break;
    const double t0 = times[k], t1 = times[k + 1];
    const VectorField v0 = frame(k);
    if (t1 <= t_end) {
      advance_flow(fm, v0, frame(k + 1), t1 - t0);
      fm.t = t1;
    } else {
      const double s = (t_end - t0) / (t1 - t0);
      VectorField vm = frame(k + 1);
      vm -= v0;
      vm *= s;
      vm += v0;
      advance_flow(fm, v0, vm, t_end - t0);
      fm.t = t_end;
    }
  }
  return fm;
}

}  // namespace

double FlowMap::max_det_error() const {
  double m = 0.0;
  for (const Mat2& d : D) m = std::max(m, std::abs((Mat2::identity() + d).det() - 1.0));
  return m;
}

FlowMap identity_flow(const Grid& seeds, double t0) {
  FlowMap fm;
  fm.seeds = seeds;
  fm.t = t0;
  fm.X.resize(seeds.cells());
  fm.D.assign(seeds.cells(), Mat2{});
  for (int j = 0; j < seeds.ny; ++j)
    for (int i = 0; i < seeds.nx; ++i) fm.X[seeds.index(i, j)] = {seeds.xc(i), seeds.yc(j)};
  return fm;
}

Vec2 sample_velocity(const VectorField& v, Vec2 x) {
  const Grid& g = v.grid();
  clamp_position(g, x);
  Vec2 out;
  {
    // u at (i hx, (j + 1/2) hy), ghost rows j = -1 and j = ny by odd reflection.
    int i, j;
    double a, b;
    locate(x.x / g.hx, g.nx + 1, i, a);
    const double sy = x.y / g.hy - 0.5;
    j = static_cast<int>(std::floor(sy));
    j = std::clamp(j, -1, g.ny - 1);
    b = sy - j;
    auto at = [&](int ii, int jj) {
      if (jj < 0) return -v.u(ii, 0);
      if (jj >= g.ny) return -v.u(ii, g.ny - 1);
      return v.u(ii, jj);
    };
    out.x = (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
            a * b * at(i + 1, j + 1);
  }
  {
    int i, j;
    double a, b;
    locate(x.y / g.hy, g.ny + 1, j, b);
    const double sx = x.x / g.hx - 0.5;
    i = static_cast<int>(std::floor(sx));
    i = std::clamp(i, -1, g.nx - 1);
    a = sx - i;
    auto at = [&](int ii, int jj) {
      if (ii < 0) return -v.v(0, jj);
      if (ii >= g.nx) return -v.v(g.nx - 1, jj);
      return v.v(ii, jj);
    };
    out.y = (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
            a * b * at(i + 1, j + 1);
  }
  return out;
}

double sample_scalar(const ScalarField& f, Vec2 x) {
  const Grid& g = f.grid();
  int i, j;
  double a, b;
  locate(x.x / g.hx - 0.5, g.nx, i, a);
  locate(x.y / g.hy - 0.5, g.ny, j, b);
  return (1 - a) * (1 - b) * f(i, j) + a * (1 - b) * f(i + 1, j) + (1 - a) * b * f(i, j + 1) +
         a * b * f(i + 1, j + 1);
}

Mat2 sample_matrix(const MatrixField& m, Vec2 x) {
  const Grid& g = m.grid();
  int i, j;
  double a, b;
  locate(x.x / g.hx - 0.5, g.nx, i, a);
  locate(x.y / g.hy - 0.5, g.ny, j, b);
  return (1 - a) * (1 - b) * m(i, j) + a * (1 - b) * m(i + 1, j) + (1 - a) * b * m(i, j + 1) +
         a * b * m(i + 1, j + 1);
}

void advance_flow(FlowMap& fm, const VectorField& v0, const VectorField& v1, double dt) {
  const Grid& g = v0.grid();
  require_same_grid(g, v1.grid(), "advance_flow");
  const MatrixField g0 = velocity_gradient(v0);
  const MatrixField g1 = velocity_gradient(v1);
  VectorField vm = v0;
  vm += v1;
  vm *= 0.5;
  for (std::size_t k = 0; k < fm.X.size(); ++k) {
    const Vec2 x0 = fm.X[k];
    Vec2 xm = x0 + (0.5 * dt) * sample_velocity(v0, x0);
    clamp_position(g, xm);
    Vec2 x1 = x0 + dt * sample_velocity(vm, xm);
    if (clamp_position(g, x1)) ++fm.clamp_events;
    ++fm.particle_steps;

    const Mat2 m0 = Mat2::identity() + fm.D[k];
    const Mat2 k0 = sample_matrix(g0, x0) * m0;
    const Mat2 mp = m0 + dt * k0;
    const Mat2 k1 = sample_matrix(g1, x1) * mp;
    fm.D[k] = fm.D[k] + (0.5 * dt) * (k0 + k1);
    fm.X[k] = x1;
  }
  fm.t += dt;
}

void VelocityHistory::add(double t, const VectorField& v) {
  if (!times_.empty()) {
    if (!(t > times_.back())) {
      throw Error(ErrorCode::kInvalidArgument, "velocity history times must increase");
    }
    require_same_grid(frames_.front().grid(), v.grid(), "VelocityHistory::add");
  }
  times_.push_back(t);
  frames_.push_back(v);
}

namespace {

std::vector<double> history_times(const VelocityHistory& h) {
  std::vector<double> t(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) t[k] = h.time(k);
  return t;
}

}  // namespace

FlowMap integrate_flow(const VelocityHistory& h, const Grid& seeds, double t_end, bool strict) {
  check_history(h, t_end);
  FlowMap fm = integrate_frames(seeds, history_times(h),
                                [&](std::size_t k) { return h.frame(k); }, t_end);
  check_clamping(fm, strict);
  return fm;
}

VectorField blend(const VectorField& a, const VectorField& b, double s) {
  if (s == 1.0) return a;
  if (s == 2.0) return b;
  VectorField out = a;
  out *= 2.0 - s;
  VectorField other = b;
  other *= s - 1.0;
  out += other;
  return out;
}

FlowMap intermediate_flow(const VelocityHistory& h1, const VelocityHistory& h2, double s,
                          const Grid& seeds, double t_end, bool strict) {
  if (!(s >= 1.0 && s <= 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "intermediate_flow needs s in [1, 2]");
  }
  check_history(h1, t_end);
  check_history(h2, t_end);
  if (h1.size() != h2.size()) {
    throw Error(ErrorCode::kInconsistent, "intermediate_flow: histories have different lengths");
  }
  for (std::size_t k = 0; k < h1.size(); ++k) {
    if (h1.time(k) != h2.time(k)) {
      throw Error(ErrorCode::kInconsistent, "intermediate_flow: histories are not synchronized");
    }
  }
  FlowMap fm = integrate_frames(
      seeds, history_times(h1), [&](std::size_t k) { return blend(h1.frame(k), h2.frame(k), s); },
      t_end);
  check_clamping(fm, strict);
  return fm;
}

FlowMap inverse_flow(const VelocityHistory& h, const Grid& seeds, double t_end) {
  check_history(h, t_end);
  // Reverse time: tau = t_end - t, velocity -v.
  std::vector<double> times;
  std::vector<std::size_t> idx;
  for (std::size_t k = h.size(); k-- > 0;) {
    if (h.time(k) <= t_end) {
      times.push_back(t_end - h.time(k));
      idx.push_back(k);
    }
  }
  // Include t_end itself when it falls strictly between frames.
  VectorField at_end;
  bool partial = false;
  if (times.empty() || times.front() != 0.0) {
    std::size_t k = 0;
    while (k + 1 < h.size() && h.time(k + 1) < t_end) ++k;
    const double s = (t_end - h.time(k)) / (h.time(k + 1) - h.time(k));
    at_end = h.frame(k + 1);
    at_end -= h.frame(k);
    at_end *= s;
    at_end += h.frame(k);
    times.insert(times.begin(), 0.0);
    partial = true;
  }
  const double span = t_end - h.t_begin();
  FlowMap fm = integrate_frames(
      seeds, times,
      [&](std::size_t k) {
        VectorField v = (partial && k == 0) ? at_end : h.frame(idx[partial ? k - 1 : k]);
        v *= -1.0;
        return v;
      },
      span);
  fm.t = h.t_begin();
  return fm;
}

Mat2 cofactor(const Mat2& m) { return {m.d, -m.b, -m.c, m.a}; }

MatrixField cofactor_matrix(const FlowMap& fm) {
  MatrixField out(fm.seeds);
  auto dst = out.values();
  for (std::size_t k = 0; k < fm.D.size(); ++k) dst[k] = cofactor(Mat2::identity() + fm.D[k]);
  return out;
}

MatrixField delta_A_2d(const FlowMap& fm1, const FlowMap& fm2) {
  if (!(fm1.seeds == fm2.seeds)) {
    throw Error(ErrorCode::kDimensionMismatch, "delta_A_2d: flow maps use different seeds");
  }
  if (std::abs(fm1.t - fm2.t) > 1e-12 * std::max(1.0, std::abs(fm1.t))) {
    throw Error(ErrorCode::kInconsistent, "delta_A_2d: flow maps are at different times");
  }
  MatrixField out(fm1.seeds);
  auto dst = out.values();
  for (std::size_t k = 0; k < fm1.D.size(); ++k) {
    // E = D1 - D2 = -int grad_y du with du = u2 - u1; the cofactor of E.
    const Mat2 e = fm1.D[k] - fm2.D[k];
    dst[k] = {e.d, -e.b, -e.c, e.a};
  }
  return out;
}

ScalarField pull_back(const ScalarField& f, const FlowMap& fm) {
  ScalarField out(fm.seeds);
  auto dst = out.values();
  for (std::size_t k = 0; k < fm.X.size(); ++k) dst[k] = sample_scalar(f, fm.X[k]);
  return out;
}

CellVectorField lagrangian_velocity(const VectorField& v, const FlowMap& fm) {
  CellVectorField out(fm.seeds);
  auto dst = out.values();
  for (std::size_t k = 0; k < fm.X.size(); ++k) dst[k] = sample_velocity(v, fm.X[k]);
  return out;
}

MatrixField lagrangian_gradient(const VectorField& v, const FlowMap& fm) {
  const MatrixField gx = velocity_gradient(v);
  MatrixField out(fm.seeds);
  auto dst = out.values();
  for (std::size_t k = 0; k < fm.X.size(); ++k) {
    dst[k] = sample_matrix(gx, fm.X[k]) * (Mat2::identity() + fm.D[k]);
  }
  return out;
}

double lagrangian_density_residual(const DensityField& rho_t, const FlowMap& fm,
                                   const DensityField& rho0) {
  require_same_grid(fm.seeds, rho0.grid(), "lagrangian_density_residual");
  const ScalarField pulled = pull_back(rho_t.rho, fm);
  double s = 0.0;
  auto a = pulled.values();
  auto b = rho0.rho.values();
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s * fm.seeds.cell_area();
}

std::vector<LagrangianSample> eulerian_to_lagrangian_velocity(const VelocityHistory& h,
                                                              const Grid& seeds) {
  if (h.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty velocity history");
  std::vector<LagrangianSample> out;
  FlowMap fm = identity_flow(seeds, h.t_begin());
  out.push_back({fm.t, lagrangian_velocity(h.frame(0), fm)});
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    advance_flow(fm, h.frame(k), h.frame(k + 1), h.time(k + 1) - h.time(k));
    fm.t = h.time(k + 1);
    out.push_back({fm.t, lagrangian_velocity(h.frame(k + 1), fm)});
  }
  return out;
}

}  // namespace pflow
