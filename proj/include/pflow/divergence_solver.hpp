#pragma once

// Right inverse of the divergence with zero boundary values.
//
// solve_divergence returns the minimum-||grad b|| solution of div b = f,
// b = 0 on the boundary, i.e. the velocity of the Stokes problem
//   -Lap b + grad q = 0,  div b = f,
// solved by conjugate gradients on the pressure Schur complement
// S = G^T L^{-1} G (L the no-slip vector Laplacian, G the MAC gradient).

#include <limits>

#include "pflow/fields.hpp"

namespace pflow {

struct StokesOptions {
  double tol = 1e-10;      // max|div b - f| relative to max(|f|) (or to |g| scale)
  double inner_tol = 1e-12;
  int max_outer = 2000;
};

struct StokesSolution {
  VectorField v;
  ScalarField q;
  int outer_iterations = 0;
  int inner_iterations = 0;
};

// -Lap v + grad q = g, div v = f, v = 0 on the boundary (f must have zero mean).
StokesSolution solve_stokes(const VectorField& g, const ScalarField& f,
                            const StokesOptions& opt = {});

struct EigenmodeResult {
  VectorField v;   // unit L2 norm
  double lambda = 0.0;
  int iterations = 0;
};

// Smallest eigenpair of the Stokes operator by inverse iteration.
EigenmodeResult stokes_eigenmode(const Grid& g, double tol = 1e-8, int max_iters = 200);

struct DivergenceProblem {
  ScalarField f;
  // Optional factored form f = div(A d) used only for the reported constants.
  const MatrixField* A = nullptr;
  const VectorField* d = nullptr;
};

struct DivergenceSolution {
  VectorField b;
  double residual_l2 = 0.0;   // ||div b - f||_2
  double residual_max = 0.0;
  int outer_iterations = 0;
  double removed_mean = 0.0;  // mean subtracted from f
  // ||b||/||A d|| and ||grad b||/||A^T grad d||; NaN without a factored form.
  double constant_l2 = std::numeric_limits<double>::quiet_NaN();
  double constant_grad = std::numeric_limits<double>::quiet_NaN();
};

// Throws kInvalidArgument when |mean f| * |Omega| > 1e-10 ||f||_1 and
// kNotConverged when the saddle solve stalls.
DivergenceSolution solve_divergence(const DivergenceProblem& prob, const StokesOptions& opt = {});

struct Decomposition {
  CellVectorField w;      // (A1)^{-1} w_bar at the particles
  CellVectorField z;      // du - w
  VectorField w_bar;      // div w_bar = div(dA u2)
  double solver_residual = 0.0;  // ||div w_bar - f||_2
  double z_residual = 0.0;       // ||div(A1 z)||_2, discrete consistency gap
  double f_l2 = 0.0;
  double w_l2 = 0.0;
  double z_l2 = 0.0;
  double grad_w_bar_l2 = 0.0;
};

// du = u2 - u1 split into w + z with div(A1 w) = div(dA u2), dA = A1 - A2.
Decomposition decompose_difference(const MatrixField& a1, const MatrixField& a2,
                                   const CellVectorField& u1, const CellVectorField& u2,
                                   const StokesOptions& opt = {});

}  // namespace pflow
