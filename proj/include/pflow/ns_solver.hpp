#pragma once

// Variable-density incompressible Navier-Stokes on the MAC grid.
//
// One step (first-order Lie splitting):
//   1. rho^{n+1} = advect_density(rho^n, v^n, dt)
//   2. predictor  s_b (s_b v* - s_a v^n)/dt + C v* - mu Lap v* = 0
//      with s = sqrt(rho~) on faces (s_a from rho^n, s_b from rho^{n+1}),
//      rho~ = max(rho, eps_vac rho*), and C the skew-symmetric convective
//      operator (optionally with first-order upwind dissipation) built from
//      the mass flux rho~^{n+1} v^n.
//   3. projection div(dt/rho~ grad phi) = div v*, v^{n+1} = v* - dt/rho~ grad phi,
//      P^{n+1} = phi (zero mean).
// Testing 2 with v* and using that 3 is a rho~-orthogonal projection gives
// solver_energy(n+1) <= solver_energy(n) for every dt.

#include <functional>
#include <limits>
#include <string>

#include "pflow/fields.hpp"
#include "pflow/linear_solvers.hpp"
#include "pflow/transport.hpp"

namespace pflow {

struct SchemeParams {
  double eps_vac = 1e-3;  // density floor as a fraction of rho*
  double cfl = 0.5;
  double tol = 1e-10;     // relative tolerance of the momentum solves
  double div_tol = 1e-12; // max|div v| after projection, relative to max|v*|/hmin
  int max_iters = 20000;
  bool upwind = false;    // add first-order upwind dissipation to the convection

  // Throws kInvalidArgument listing the offending fields.
  void validate() const;
};

struct VelocitySpec {
  enum class Kind { kZero, kSin2, kVortex, kStokesEigenmode };
  Kind kind = Kind::kSin2;
  double amplitude = 0.1;
  int kx = 1, ky = 1;               // sin2 mode numbers
  double cx = 0.5, cy = 0.5;        // vortex center
  double radius = 0.3;              // vortex support radius
};

const char* to_string(VelocitySpec::Kind k);
VelocitySpec::Kind velocity_kind_from_string(const std::string& s);

// v = (d_y psi, -d_x psi) with psi sampled at grid nodes: discretely
// divergence free. Throws kInvalidArgument if psi is not constant along the
// boundary (nonzero wall-normal velocity).
VectorField velocity_from_stream_function(const Grid& g,
                                          const std::function<double(double, double)>& psi);

// sin2:   psi = A sin^2(kx pi x/lx) sin^2(ky pi y/ly)
// vortex: psi = A (1 - r^2/R^2)^3 for r < R
// stokes_eigenmode: first Stokes eigenfunction, scaled so max face speed = A.
VectorField make_initial_velocity(const VelocitySpec& spec, const Grid& g);

struct SolutionState {
  double t = 0.0;
  DensityField rho;
  VectorField v;
  ScalarField p;
  double mu = 0.05;
};

SolutionState make_state(const DensityField& rho, const VectorField& v, double mu);

// rho~ averaged to faces (wall-normal faces hold the adjacent cell value).
VectorField face_density(const DensityField& rho, double eps_vac);

// 1/2 sum_f rho~_f |v_f|^2 hx hy: the quantity the scheme dissipates exactly.
double solver_energy(const DensityField& rho, const VectorField& v, double eps_vac);

struct PredictorResult {
  VectorField v_star;
  int iterations = 0;
};

// Momentum predictor; rho_next defaults to s.rho (density frozen over the step).
PredictorResult momentum_predictor(const SolutionState& s, double dt, const SchemeParams& sp,
                                   const DensityField* rho_next = nullptr);

struct ProjectionResult {
  VectorField v;
  ScalarField p;
  int iterations = 0;
  double div_max = 0.0;
};

ProjectionResult pressure_projection(const VectorField& v_star, const DensityField& rho, double dt,
                                     const SchemeParams& sp);

// CFL time step: cfl*min(hmin/max|v|, hmin), clipped to t_limit - t.
double choose_dt(const SolutionState& s, const SchemeParams& sp,
                 double t_limit = std::numeric_limits<double>::infinity());

struct StepInfo {
  double dt = 0.0;
  int predictor_iters = 0;
  int poisson_iters = 0;
  int advect_substeps = 0;
  double clipped = 0.0;        // bound-clip correction of the advection
  double energy_before = 0.0;  // solver_energy
  double energy_after = 0.0;
  double div_max = 0.0;
};

// Advances s by the given dt (> 0). Throws on solver failure; the state is
// left untouched in that case.
StepInfo step_with_dt(SolutionState& s, double dt, const SchemeParams& sp);

// Advances s by choose_dt(s, sp, t_limit).
StepInfo step(SolutionState& s, const SchemeParams& sp,
              double t_limit = std::numeric_limits<double>::infinity());

}  // namespace pflow
