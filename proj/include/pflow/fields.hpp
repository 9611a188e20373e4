#pragma once

// Grid and field containers on a uniform MAC (staggered) rectangle.
//
// Cell (i, j) covers [i*hx, (i+1)*hx] x [j*hy, (j+1)*hy]. Scalars live at cell
// centers, the x-velocity on vertical faces (i = 0..nx, j = 0..ny-1) and the
// y-velocity on horizontal faces (i = 0..nx-1, j = 0..ny). All storage is
// row-major with i fastest.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pflow/error.hpp"

namespace pflow {

struct Grid {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  double hx = 0.0;
  double hy = 0.0;

  double cell_area() const { return hx * hy; }
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }
  double hmin() const { return hx < hy ? hx : hy; }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nx + i;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

// Throws kInvalidArgument when nx, ny < 8 or lx, ly <= 0.
Grid make_grid(int nx, int ny, double lx, double ly);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend Vec2 operator*(double s, const Vec2& a) { return {s * a.x, s * a.y}; }
  double norm2() const { return x * x + y * y; }
};

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  double frobenius2() const { return a * a + b * b + c * c + d * d; }
  Mat2 transpose() const { return {a, c, b, d}; }

  friend Mat2 operator+(const Mat2& p, const Mat2& q) {
    return {p.a + q.a, p.b + q.b, p.c + q.c, p.d + q.d};
  }
  friend Mat2 operator-(const Mat2& p, const Mat2& q) {
    return {p.a - q.a, p.b - q.b, p.c - q.c, p.d - q.d};
  }
  friend Mat2 operator*(double s, const Mat2& p) {
    return {s * p.a, s * p.b, s * p.c, s * p.d};
  }
  friend Mat2 operator*(const Mat2& p, const Mat2& q) {
    return {p.a * q.a + p.b * q.c, p.a * q.b + p.b * q.d,
            p.c * q.a + p.d * q.c, p.c * q.b + p.d * q.d};
  }
  friend Vec2 operator*(const Mat2& p, const Vec2& v) {
    return {p.a * v.x + p.b * v.y, p.c * v.x + p.d * v.y};
  }
};

// Throws kInvalidArgument for a singular matrix.
Mat2 inverse(const Mat2& m);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0)
      : grid_(g), data_(g.cells(), value) {}

  const Grid& grid() const { return grid_; }
  double& operator()(int i, int j) { return data_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return data_[grid_.index(i, j)]; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::size_t size() const { return data_.size(); }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  double sum() const;
  double min() const;
  double max() const;
  double max_abs() const;
  bool all_finite() const;

 private:
  Grid grid_;
  std::vector<double> data_;
};

// MAC velocity: x-component on vertical faces, y-component on horizontal faces.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Grid& g)
      : grid_(g),
        u_(static_cast<std::size_t>(g.nx + 1) * g.ny, 0.0),
        v_(static_cast<std::size_t>(g.nx) * (g.ny + 1), 0.0) {}

  const Grid& grid() const { return grid_; }
  double& u(int i, int j) { return u_[static_cast<std::size_t>(j) * (grid_.nx + 1) + i]; }
  double u(int i, int j) const { return u_[static_cast<std::size_t>(j) * (grid_.nx + 1) + i]; }
  double& v(int i, int j) { return v_[static_cast<std::size_t>(j) * grid_.nx + i]; }
  double v(int i, int j) const { return v_[static_cast<std::size_t>(j) * grid_.nx + i]; }
  std::span<double> u_values() { return u_; }
  std::span<const double> u_values() const { return u_; }
  std::span<double> v_values() { return v_; }
  std::span<const double> v_values() const { return v_; }

  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(double s);
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }

  // Largest face speed |u| or |v|.
  double max_abs() const;
  bool all_finite() const;
  // Largest magnitude over the wall-normal faces (zero for a no-slip field).
  double max_wall_value() const;
  void zero_walls();

 private:
  Grid grid_;
  std::vector<double> u_;
  std::vector<double> v_;
};

// Cell-centered 2-vector field (Lagrangian particle quantities).
class CellVectorField {
 public:
  CellVectorField() = default;
  explicit CellVectorField(const Grid& g) : grid_(g), data_(g.cells()) {}

  const Grid& grid() const { return grid_; }
  Vec2& operator()(int i, int j) { return data_[grid_.index(i, j)]; }
  const Vec2& operator()(int i, int j) const { return data_[grid_.index(i, j)]; }
  std::span<Vec2> values() { return data_; }
  std::span<const Vec2> values() const { return data_; }

 private:
  Grid grid_;
  std::vector<Vec2> data_;
};

// One 2x2 matrix per cell / particle.
class MatrixField {
 public:
  MatrixField() = default;
  explicit MatrixField(const Grid& g, const Mat2& value = {})
      : grid_(g), data_(g.cells(), value) {}

  const Grid& grid() const { return grid_; }
  Mat2& operator()(int i, int j) { return data_[grid_.index(i, j)]; }
  const Mat2& operator()(int i, int j) const { return data_[grid_.index(i, j)]; }
  std::span<Mat2> values() { return data_; }
  std::span<const Mat2> values() const { return data_; }

 private:
  Grid grid_;
  std::vector<Mat2> data_;
};

}  // namespace pflow
