#pragma once

// Time series and field snapshots.
//
// Snapshot layout (little endian): 8-byte magic "PFLOW01\0", u32 kind, u32 nx,
// u32 ny, f64 lx, f64 ly, f64 time, then the row-major f64 payload. The
// payload has nx*ny values for cell data, (nx+1)*ny for vector-x and
// nx*(ny+1) for vector-y.

#include <cstdint>
#include <string>
#include <vector>

#include "pflow/fields.hpp"

namespace pflow {

class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<std::string> names);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  bool has(const std::string& name) const;
  std::size_t index_of(const std::string& name) const;  // throws kInvalidArgument

  void add(std::vector<double> row);
  const std::vector<double>& row(std::size_t k) const { return rows_[k]; }
  double at(std::size_t k, const std::string& name) const { return rows_[k][index_of(name)]; }
  std::vector<double> column(const std::string& name) const;

  // Header line with channel names, then one "%.17g" row per sample.
  std::string to_csv() const;
  static TimeSeries from_csv(const std::string& text);
  void write_csv(const std::string& path) const;
  static TimeSeries read_csv(const std::string& path);

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> rows_;
};

enum class SnapshotKind : std::uint32_t {
  kScalar = 0,
  kVectorX = 1,
  kVectorY = 2,
  kPositionX = 3,
  kPositionY = 4,
  kD11 = 5,
  kD12 = 6,
  kD21 = 7,
  kD22 = 8,
};

struct Snapshot {
  SnapshotKind kind = SnapshotKind::kScalar;
  std::uint32_t nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0, time = 0.0;
  std::vector<double> data;
};

void write_snapshot(const std::string& path, const Snapshot& s);
Snapshot read_snapshot(const std::string& path);

Snapshot scalar_snapshot(const ScalarField& f, double time);
Snapshot vector_snapshot(const VectorField& v, bool x_component, double time);
ScalarField snapshot_to_scalar(const Snapshot& s);

// Plain-text export: "i,j,value" rows (staggered arrays keep their own
// index ranges).
void write_snapshot_csv(const std::string& path, const Snapshot& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
void ensure_directory(const std::string& path);

std::string format_double(double x);  // "%.17g"

}  // namespace pflow
