#pragma once

// Krylov solvers for 5-point operators on structured lattices, preconditioned
// by a (modified) incomplete LU factorization in natural ordering.

#include <span>
#include <string>
#include <vector>

namespace pflow {

// y_k = diag_k x_k + west_k x_{k-1} + east_k x_{k+1} + south_k x_{k-n1}
//       + north_k x_{k+n1},  k = j*n1 + i.
// Coefficients that would reach outside the lattice must be zero.
struct StencilMatrix {
  int n1 = 0;
  int n2 = 0;
  std::vector<double> diag, west, east, south, north;

  StencilMatrix() = default;
  StencilMatrix(int n1_, int n2_);

  std::size_t size() const { return diag.size(); }
  void multiply(std::span<const double> x, std::span<double> y) const;
  bool is_symmetric(double tol = 0.0) const;
};

struct SolverOptions {
  double rel_tol = 1e-10;   // ||r||_2 <= rel_tol * ||b||_2
  double abs_tol = 0.0;     // or max|r| <= abs_tol (when > 0)
  int max_iters = 20000;
  bool singular = false;    // pure-Neumann operator: work on zero-mean vectors
  double modification = 0.97;  // MIC(0) weight; 0 gives plain ILU(0)
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // final ||r||_2 / ||b||_2
  bool converged = false;
};

class IncompleteFactorization {
 public:
  IncompleteFactorization(const StencilMatrix& a, double modification);
  // z = M^{-1} r
  void apply(std::span<const double> r, std::span<double> z) const;

 private:
  const StencilMatrix* a_;
  std::vector<double> pivot_;
};

// Preconditioned CG for symmetric positive (semi)definite operators.
SolveStats solve_pcg(const StencilMatrix& a, std::span<const double> b,
                     std::span<double> x, const SolverOptions& opt);

// Preconditioned BiCGSTAB for general nonsingular operators.
SolveStats solve_bicgstab(const StencilMatrix& a, std::span<const double> b,
                          std::span<double> x, const SolverOptions& opt);

// Throws kNotConverged naming the solve, its iteration count and residual.
void require_converged(const SolveStats& s, const std::string& what);

}  // namespace pflow
