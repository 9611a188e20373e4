#pragma once

// Discrete differential operators on the MAC grid.
//
// Inner products use midpoint quadrature with weight hx*hy per cell and per
// face. With those weights gradient and divergence are exact negative
// adjoints for fields whose wall-normal faces vanish, and the no-slip vector
// Laplacian is symmetric.

#include "pflow/fields.hpp"

namespace pflow {

ScalarField divergence(const VectorField& v);

// Face-centered differences; wall faces are set to zero.
VectorField gradient(const ScalarField& p);

// Componentwise 5-point Laplacian scaled by mu. Tangential wall values come
// from odd reflection (zero wall value); wall-normal faces of the result are 0.
VectorField laplacian_dirichlet(const VectorField& v, double mu);

// div(grad p) with no-flux walls.
ScalarField laplacian_neumann(const ScalarField& p);

// Cell-centered Laplacian with homogeneous Dirichlet walls via odd reflection.
ScalarField laplacian_dirichlet_scalar(const ScalarField& p);

double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);

// Cell-centered velocity gradient [[du/dx, du/dy], [dv/dx, dv/dy]].
// The trace equals the discrete divergence cell by cell.
MatrixField velocity_gradient(const VectorField& v);

// Face-to-center average of a MAC field.
CellVectorField to_cell_centers(const VectorField& v);

// Center-to-face average; wall-normal faces are zero.
VectorField to_faces(const CellVectorField& c);

struct DomainConstants {
  double poincare_constant = 0.0;  // C_P = 1/sqrt(lambda1)
  double lambda1 = 0.0;            // smallest Dirichlet eigenvalue
  double diameter = 0.0;           // sqrt(lx^2 + ly^2)
  int iterations = 0;
};

// Inverse power iteration on the cell-centered Dirichlet Laplacian, relative
// eigenvalue tolerance 1e-8, at most 10^4 iterations (kNotConverged otherwise).
DomainConstants poincare_constant(const Grid& g);

}  // namespace pflow
