#pragma once

// Norms, decay fits and the paired-run stability functionals.

#include <limits>
#include <string>
#include <vector>

#include "pflow/divergence_solver.hpp"
#include "pflow/fields.hpp"
#include "pflow/io.hpp"
#include "pflow/lagrangian.hpp"
#include "pflow/ns_solver.hpp"
#include "pflow/transport.hpp"

namespace pflow {

// int rho |v|^2 with v averaged from faces to cell centers.
double kinetic_energy(const ScalarField& rho, const VectorField& v);
inline double kinetic_energy(const DensityField& rho, const VectorField& v) {
  return kinetic_energy(rho.rho, v);
}

// ||grad v||_2 with the face-difference stencil of laplacian_dirichlet, so
// that <-laplacian_dirichlet(v, 1), v> = h1_seminorm(v)^2.
double h1_seminorm(const VectorField& v);

double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& v);       // face quadrature
double l2_norm(const CellVectorField& v);
double l2_norm(const MatrixField& m);       // Frobenius

struct NegativeNorm {
  double value = 0.0;
  bool lower_bound = false;  // dictionary bound (p != 2)
};

// p = 2: sqrt(int drho psi) with (Id - Lap_N) psi = drho. Otherwise the best
// value over a fixed dictionary of W^1_{p'}-normalized test functions (constant,
// cos(k pi x/lx) cos(l pi y/ly) for k, l <= 4, and Gaussian bumps of width
// 0.1 L centered on a 4x4 lattice), flagged as a lower bound.
NegativeNorm neg_sobolev_norm(const ScalarField& drho, double p);
double neg_sobolev_dictionary(const ScalarField& drho, double p);

struct XNorm {
  double value = 0.0;
  bool infinite = false;  // drho0 != 0 somewhere with rho_ref = 0
};

// || drho0 / sqrt(rho_ref) ||_4 over the cells where rho_ref > 0.
XNorm x_norm(const ScalarField& drho0, const ScalarField& rho_ref);

struct IntermediateData {
  DensityField rho;  // (rho1 + rho2)/2
  VectorField v;     // v2
  double x_norm = 0.0;  // || (rho2 - rho1)/2 / sqrt(rho1 + rho2) ||_4
  double bound = 0.0;   // ||rho1 - rho2||_2^{1/2}
  bool holds = true;
};

IntermediateData intermediate_data(const DensityField& rho01, const DensityField& rho02,
                                   const VectorField& v02);

struct DecayFit {
  double rate = 0.0;       // -slope of log(channel)
  double amplitude = 0.0;  // exp(intercept)
  double residual = 0.0;   // RMS of the log residuals
  int samples = 0;
};

// Least squares on log(channel) over samples with t0 <= t <= t1. Throws
// kInvalidArgument for fewer than 10 samples or nonpositive values.
DecayFit fit_decay_rate(const TimeSeries& ts, const std::string& channel, double t0, double t1);
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& y);

// (rho*)^{3/2} ||sqrt(rho0) v0||_2 ||grad v0||_2 / mu^2.
double smallness_indicator(const DensityField& rho0, const VectorField& v0, double mu);

// Trapezoid rule for int_{t0}^{t1} exp(2 beta t) y(t) dt (y given at samples).
double weighted_integral(const std::vector<double>& t, const std::vector<double>& y, double beta,
                         double t0 = -std::numeric_limits<double>::infinity(),
                         double t1 = std::numeric_limits<double>::infinity(),
                         bool times_t = false);

// Slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Lagrangian view of one ensemble member at the current time.
struct MemberView {
  const SolutionState* state = nullptr;
  const FlowMap* flow = nullptr;
  CellVectorField u;     // v(t, X(t, y))
  MatrixField grad_u;    // grad_y u
};

MemberView make_member_view(const SolutionState& s, const FlowMap& fm);

// Two members of an ensemble advanced with identical time steps, with the
// channels needed by the stability functionals. Differences are member 2
// minus member 1.
struct PairedRun {
  std::string name;
  int first = 0;
  int second = 1;
  double mu = 0.0;
  DensityField rho01, rho02;
  VectorField v01, v02;
  int cadence = 10;        // steps between W^{-1}_2 samples
  // Per step: t, du_weighted (||min(sqrt rho01, sqrt rho02) du||), du_l2,
  // grad_du, dv_l2, grad_dv, drho_l2.
  TimeSeries steps;
  // Every cadence steps: t, drho_neg, a1, a2, iphi.
  TimeSeries samples;
  // At the decomposition times: t, f_l2, solver_residual, z_residual, w_l2,
  // z_l2, grad_w_bar, grad_du.
  TimeSeries decompositions;
  long step_count = 0;
  double clamp_fraction = 0.0;
};

PairedRun make_paired_run(const std::string& name, int first, int second,
                          const SolutionState& s1, const SolutionState& s2, int cadence);

// Records the per-step channels; the W^{-1}_2 sample when step_count is a
// multiple of the cadence (and when force_sample is set).
void observe_pair(PairedRun& pair, const MemberView& m1, const MemberView& m2,
                  bool force_sample = false);

// Runs decompose_difference for the current state and records it.
Decomposition observe_decomposition(PairedRun& pair, const MemberView& m1, const MemberView& m2);

struct StabilityReport {
  std::string name;
  double beta = 0.0;
  int cadence = 10;
  double sup_weighted_du = 0.0;      // sup e^{beta t} ||min(sqrt rho0^1, sqrt rho0^2) du||_2
  double grad_du_weighted = 0.0;     // (int e^{2 beta t} ||grad du||^2)^{1/2}
  double grad_dv_weighted = 0.0;     // same for the Eulerian dv
  double sup_weighted_du_half = 0.0; // the three above at beta/2
  double grad_du_weighted_half = 0.0;
  double grad_dv_weighted_half = 0.0;
  double sup_drho_neg = 0.0;         // sup_t ||drho(t)||_{W^{-1}_2}
  double drho0_neg = 0.0;
  double data_functional = 0.0;      // ||sqrt(rho0^1) dv0||_2 + ||drho0||_2^{1/2}
  double dv0_weighted = 0.0;
  double drho0_l2 = 0.0;
  double x_norm = 0.0;
  bool x_norm_infinite = false;
  double a1_max = 0.0;
  double a2_max = 0.0;
  double iphi_max = 0.0;
  int decompositions = 0;
  double decomposition_residual_max = 0.0;
  double decomposition_gap_max = 0.0;     // max ||div(A1 z)||_2 / (1 + ||grad du||_2)
  double w_l2_max = 0.0;
  double lhs = 0.0;    // sup_weighted_du + grad_du_weighted
  double ratio = 0.0;  // lhs / data_functional
  double clamp_fraction = 0.0;

  static std::vector<std::string> keys();
  std::vector<double> values() const;
  std::string csv_header() const;
  std::string csv_row() const;
  std::string text() const;  // "key = value" lines
};

StabilityReport stability_functionals(const PairedRun& pair, double beta);

}  // namespace pflow
