#include "pflow/fields.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace pflow {

Grid make_grid(int nx, int ny, double lx, double ly) {
  if (nx < 8 || ny < 8) {
    std::ostringstream os;
    os << "grid needs at least 8 cells per direction, got " << nx << "x" << ny;
    throw Error(ErrorCode::kInvalidArgument, os.str());
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw Error(ErrorCode::kInvalidArgument, "domain lengths must be positive");
  }
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.lx = lx;
  g.ly = ly;
  g.hx = lx / nx;
  g.hy = ly / ny;
  return g;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream os;
    os << what << ": grid mismatch (" << a.nx << "x" << a.ny << " vs " << b.nx
       << "x" << b.ny << ")";
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

Mat2 inverse(const Mat2& m) {
  const double det = m.det();
  if (det == 0.0 || !std::isfinite(det)) {
    throw Error(ErrorCode::kInvalidArgument, "singular 2x2 matrix");
  }
  const double s = 1.0 / det;
  return {s * m.d, -s * m.b, -s * m.c, s * m.a};
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField +=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField -=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double ScalarField::sum() const {
  double s = 0.0;
  for (double x : data_) s += x;
  return s;
}

double ScalarField::min() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double ScalarField::max() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

VectorField& VectorField::operator+=(const VectorField& o) {
  require_same_grid(grid_, o.grid_, "VectorField +=");
  for (std::size_t k = 0; k < u_.size(); ++k) u_[k] += o.u_[k];
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  require_same_grid(grid_, o.grid_, "VectorField -=");
  for (std::size_t k = 0; k < u_.size(); ++k) u_[k] -= o.u_[k];
  for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
  return *this;
}

VectorField& VectorField::operator*=(double s) {
  for (double& x : u_) x *= s;
  for (double& x : v_) x *= s;
  return *this;
}

double VectorField::max_abs() const {
  double m = 0.0;
  for (double x : u_) m = std::max(m, std::abs(x));
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

bool VectorField::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(u_.begin(), u_.end(), finite) &&
         std::all_of(v_.begin(), v_.end(), finite);
}

double VectorField::max_wall_value() const {
  double m = 0.0;
  for (int j = 0; j < grid_.ny; ++j) {
    m = std::max({m, std::abs(u(0, j)), std::abs(u(grid_.nx, j))});
  }
  for (int i = 0; i < grid_.nx; ++i) {
    m = std::max({m, std::abs(v(i, 0)), std::abs(v(i, grid_.ny))});
  }
  return m;
}

void VectorField::zero_walls() {
  for (int j = 0; j < grid_.ny; ++j) {
    u(0, j) = 0.0;
    u(grid_.nx, j) = 0.0;
  }
  for (int i = 0; i < grid_.nx; ++i) {
    v(i, 0) = 0.0;
    v(i, grid_.ny) = 0.0;
  }
}

}  // namespace pflow
