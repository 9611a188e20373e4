#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "pflow/fields.hpp"

namespace pflow::testing {

inline constexpr double kPi = std::numbers::pi;

using Fn2 = std::function<double(double, double)>;

inline VectorField sample_faces(const Grid& g, const Fn2& fu, const Fn2& fv) {
  VectorField v(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) v.u(i, j) = fu(i * g.hx, g.yc(j));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) v.v(i, j) = fv(g.xc(i), j * g.hy);
  return v;
}

inline ScalarField sample_cells(const Grid& g, const Fn2& f) {
  ScalarField s(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s(i, j) = f(g.xc(i), g.yc(j));
  return s;
}

inline ScalarField random_cells(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ScalarField s(g);
  for (double& x : s.values()) x = dist(rng);
  return s;
}

// Random MAC field with zero wall-normal faces.
inline VectorField random_faces(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  VectorField v(g);
  for (double& x : v.u_values()) x = dist(rng);
  for (double& x : v.v_values()) x = dist(rng);
  v.zero_walls();
  return v;
}

// Observed convergence order from errors at h and h/2.
inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace pflow::testing
