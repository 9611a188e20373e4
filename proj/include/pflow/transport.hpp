#pragma once

// Density patches and bound-preserving advection.

#include <string>
#include <vector>

#include "pflow/fields.hpp"

namespace pflow {

struct PatchShape {
  enum class Kind { kDisk, kRect };
  Kind kind = Kind::kDisk;
  double cx = 0.0, cy = 0.0, r = 0.0;               // disk
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;    // rectangle
  double level = 1.0;
};

struct PatchSpec {
  double background = 0.0;
  std::vector<PatchShape> shapes;
};

// "disk cx cy r level ; rect x0 y0 x1 y1 level ; ..."
std::vector<PatchShape> parse_shapes(const std::string& text);
std::string format_shapes(const std::vector<PatchShape>& shapes);

// Density together with its admissible upper bound rho*.
struct DensityField {
  ScalarField rho;
  double rho_star = 1.0;

  const Grid& grid() const { return rho.grid(); }
  double mass() const { return rho.sum() * rho.grid().cell_area(); }
};

// Cell value = level of the last shape containing the cell center, else the
// background. Throws kInvalidArgument for shapes leaving the domain, levels
// outside [0, rho*] or an identically zero result.
DensityField make_patch(const PatchSpec& spec, const Grid& g, double rho_star);

struct AdvectionStats {
  int substeps = 0;
  double clipped = 0.0;  // total |correction| applied by the bound clip
};

// Unsplit MUSCL (minmod) finite volumes with SSP-RK2 in time. The step is
// subdivided so the outflow Courant number of every cell stays <= 1/2.
// Throws kCflViolation when dt*max|v|/hmin > 0.9 and kNotDivergenceFree when
// max|div v| exceeds 1e-8.
DensityField advect_density(const DensityField& rho, const VectorField& v, double dt,
                            AdvectionStats* stats = nullptr);

// Midpoint-quadrature L_p norm of |f|; p = infinity gives max|f|.
double lp_norm(const ScalarField& f, double p);

}  // namespace pflow
