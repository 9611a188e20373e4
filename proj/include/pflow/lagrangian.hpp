#pragma once

// Flow maps X(t, y) for particles seeded at cell centers, together with the
// accumulated gradient D(t, y) = int_0^t grad_y u, u(t, y) = v(t, X(t, y)).

#include <vector>

#include "pflow/fields.hpp"
#include "pflow/transport.hpp"

namespace pflow {

struct FlowMap {
  Grid seeds;
  double t = 0.0;
  std::vector<Vec2> X;
  std::vector<Mat2> D;
  long clamp_events = 0;
  long particle_steps = 0;

  double clamp_fraction() const {
    return particle_steps ? static_cast<double>(clamp_events) / particle_steps : 0.0;
  }
  // max over particles of |det(Id + D) - 1|
  double max_det_error() const;
};

// X = y, D = 0 at time t0.
FlowMap identity_flow(const Grid& seeds, double t0 = 0.0);

// Bilinear interpolation of the MAC components; tangential ghosts by odd
// reflection, positions outside the domain are clamped.
Vec2 sample_velocity(const VectorField& v, Vec2 x);
// Bilinear interpolation of cell-centered data, constant beyond the outermost
// centers.
double sample_scalar(const ScalarField& f, Vec2 x);
Mat2 sample_matrix(const MatrixField& m, Vec2 x);

// One step from fm.t to fm.t + dt with the velocity linear in time between
// v0 (at fm.t) and v1 (at fm.t + dt). Positions: RK2 midpoint. D: explicit
// trapezoid rule on grad_y u = (grad_x v)(X) (Id + D).
void advance_flow(FlowMap& fm, const VectorField& v0, const VectorField& v1, double dt);

// Stored velocity frames at increasing times.
class VelocityHistory {
 public:
  void add(double t, const VectorField& v);
  std::size_t size() const { return times_.size(); }
  double time(std::size_t k) const { return times_[k]; }
  const VectorField& frame(std::size_t k) const { return frames_[k]; }
  double t_begin() const { return times_.empty() ? 0.0 : times_.front(); }
  double t_end() const { return times_.empty() ? 0.0 : times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<VectorField> frames_;
};

// Integrates from the first frame to t_end (a partial last step is linearly
// interpolated). Throws kInvalidArgument if the history does not cover t_end
// and kInconsistent if more than 0.1% of particle-steps were clamped and
// strict is set.
FlowMap integrate_flow(const VelocityHistory& h, const Grid& seeds, double t_end,
                       bool strict = true);

// Flow of (2 - s) v1 + (s - 1) v2; the two histories must share time stamps.
// s = 1 and s = 2 reproduce integrate_flow on v1 and v2 bitwise.
FlowMap intermediate_flow(const VelocityHistory& h1, const VelocityHistory& h2, double s,
                          const Grid& seeds, double t_end, bool strict = true);

// (2 - s) a + (s - 1) b, exactly a at s = 1 and exactly b at s = 2.
VectorField blend(const VectorField& a, const VectorField& b, double s);

// Backward trajectories from t_end to the first frame: the sampled inverse map
// Y(t_end, x) for x at the cell centers.
FlowMap inverse_flow(const VelocityHistory& h, const Grid& seeds, double t_end);

// A_u = cof(Id + D)^T = [[d, -b], [-c, a]] for Id + D = [[a, b], [c, d]].
Mat2 cofactor(const Mat2& m);
MatrixField cofactor_matrix(const FlowMap& fm);

// A(fm1) - A(fm2) from the closed 2D formula: the cofactor is affine in D,
// so the difference is the cofactor part of D1 - D2 = -int grad_y(u2 - u1).
MatrixField delta_A_2d(const FlowMap& fm1, const FlowMap& fm2);

// f~(y) = f(X(t, y)).
ScalarField pull_back(const ScalarField& f, const FlowMap& fm);

// u(t, y) = v(t, X(t, y)).
CellVectorField lagrangian_velocity(const VectorField& v, const FlowMap& fm);

// grad_y u = (grad_x v)(X) (Id + D).
MatrixField lagrangian_gradient(const VectorField& v, const FlowMap& fm);

// ||rho(t, X(t, .)) - rho0||_1.
double lagrangian_density_residual(const DensityField& rho_t, const FlowMap& fm,
                                   const DensityField& rho0);

struct LagrangianSample {
  double t = 0.0;
  CellVectorField u;
};

// Particle velocities at every frame of the history.
std::vector<LagrangianSample> eulerian_to_lagrangian_velocity(const VelocityHistory& h,
                                                              const Grid& seeds);

}  // namespace pflow
