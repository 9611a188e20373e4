#include "pflow/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pflow {
namespace {

constexpr char kMagic[8] = {'P', 'F', 'L', 'O', 'W', '0', '1', '\0'};

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

template <class T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::string& path) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorCode::kIo, "truncated snapshot " + path);
  }
  return value;
}

std::size_t payload_size(SnapshotKind kind, std::uint32_t nx, std::uint32_t ny) {
  switch (kind) {
    case SnapshotKind::kVectorX: return static_cast<std::size_t>(nx + 1) * ny;
    case SnapshotKind::kVectorY: return static_cast<std::size_t>(nx) * (ny + 1);
    default: return static_cast<std::size_t>(nx) * ny;
  }
}

}  // namespace

TimeSeries::TimeSeries(std::vector<std::string> names) : names_(std::move(names)) {}

bool TimeSeries::has(const std::string& name) const {
  for (const auto& n : names_)
    if (n == name) return true;
  return false;
}

std::size_t TimeSeries::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names_.size(); ++k)
    if (names_[k] == name) return k;
  throw Error(ErrorCode::kInvalidArgument, "unknown channel '" + name + "'");
}

void TimeSeries::add(std::vector<double> row) {
  if (row.size() != names_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "time series row has the wrong width");
  }
  rows_.push_back(std::move(row));
}

std::vector<double> TimeSeries::column(const std::string& name) const {
  const std::size_t c = index_of(name);
  std::vector<double> out(rows_.size());
  for (std::size_t k = 0; k < rows_.size(); ++k) out[k] = rows_[k][c];
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string TimeSeries::to_csv() const {
  std::string out;
  for (std::size_t k = 0; k < names_.size(); ++k) {
    if (k) out += ',';
    out += names_[k];
  }
  out += '\n';
  for (const auto& r : rows_) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out += ',';
      out += format_double(r[k]);
    }
    out += '\n';
  }
  return out;
}

TimeSeries TimeSeries::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kIo, "empty time series CSV");
  std::vector<std::string> names;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) names.push_back(cell);
  }
  TimeSeries ts(names);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        // stod rejects "inf"/"nan" spellings from some printf variants.
        if (cell == "inf") row.push_back(HUGE_VAL);
        else if (cell == "-inf") row.push_back(-HUGE_VAL);
        else if (cell == "nan" || cell == "-nan") row.push_back(std::nan(""));
        else throw Error(ErrorCode::kIo, "bad number '" + cell + "' in time series CSV");
      }
    }
    ts.add(std::move(row));
  }
  return ts;
}

void TimeSeries::write_csv(const std::string& path) const { write_text_file(path, to_csv()); }

TimeSeries TimeSeries::read_csv(const std::string& path) { return from_csv(read_text_file(path)); }

void write_snapshot(const std::string& path, const Snapshot& s) {
  if (s.data.size() != payload_size(s.kind, s.nx, s.ny)) {
    throw Error(ErrorCode::kDimensionMismatch, "snapshot payload size does not match header");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path);
  os.write(kMagic, sizeof kMagic);
  put(os, static_cast<std::uint32_t>(s.kind));
  put(os, s.nx);
  put(os, s.ny);
  put(os, s.lx);
  put(os, s.ly);
  put(os, s.time);
  os.write(reinterpret_cast<const char*>(s.data.data()),
           static_cast<std::streamsize>(s.data.size() * sizeof(double)));
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kIo, "bad snapshot magic in " + path);
  }
  Snapshot s;
  const auto kind = get<std::uint32_t>(is, path);
  if (kind > 8) throw Error(ErrorCode::kIo, "unknown snapshot kind in " + path);
  s.kind = static_cast<SnapshotKind>(kind);
  s.nx = get<std::uint32_t>(is, path);
  s.ny = get<std::uint32_t>(is, path);
  s.lx = get<double>(is, path);
  s.ly = get<double>(is, path);
  s.time = get<double>(is, path);
  s.data.resize(payload_size(s.kind, s.nx, s.ny));
  if (!is.read(reinterpret_cast<char*>(s.data.data()),
               static_cast<std::streamsize>(s.data.size() * sizeof(double)))) {
    throw Error(ErrorCode::kIo, "truncated snapshot " + path);
  }
  return s;
}

Snapshot scalar_snapshot(const ScalarField& f, double time) {
  const Grid& g = f.grid();
  Snapshot s{SnapshotKind::kScalar, static_cast<std::uint32_t>(g.nx),
             static_cast<std::uint32_t>(g.ny), g.lx, g.ly, time, {}};
  s.data.assign(f.values().begin(), f.values().end());
  return s;
}

Snapshot vector_snapshot(const VectorField& v, bool x_component, double time) {
  const Grid& g = v.grid();
  Snapshot s{x_component ? SnapshotKind::kVectorX : SnapshotKind::kVectorY,
             static_cast<std::uint32_t>(g.nx), static_cast<std::uint32_t>(g.ny), g.lx, g.ly, time,
             {}};
  auto src = x_component ? v.u_values() : v.v_values();
  s.data.assign(src.begin(), src.end());
  return s;
}

ScalarField snapshot_to_scalar(const Snapshot& s) {
  if (payload_size(s.kind, s.nx, s.ny) != static_cast<std::size_t>(s.nx) * s.ny) {
    throw Error(ErrorCode::kInvalidArgument, "snapshot does not hold cell data");
  }
  ScalarField f(make_grid(static_cast<int>(s.nx), static_cast<int>(s.ny), s.lx, s.ly));
  std::copy(s.data.begin(), s.data.end(), f.values().begin());
  return f;
}

void write_snapshot_csv(const std::string& path, const Snapshot& s) {
  std::uint32_t width = s.nx;
  if (s.kind == SnapshotKind::kVectorX) width = s.nx + 1;
  std::string out = "i,j,value\n";
  for (std::size_t k = 0; k < s.data.size(); ++k) {
    out += std::to_string(k % width) + ',' + std::to_string(k / width) + ',' +
           format_double(s.data[k]) + '\n';
  }
  write_text_file(path, out);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path);
  os << text;
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path);
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + path + ": " + ec.message());
}

}  // namespace pflow
