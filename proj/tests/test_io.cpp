#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "pflow/io.hpp"
#include "test_helpers.hpp"

using namespace pflow;
using namespace pflow::testing;

namespace {

std::string temp_dir() {
  const auto p = std::filesystem::temp_directory_path() / "pflow_io_test";
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("time series CSV round trip is exact") {
  TimeSeries ts({"t", "energy", "flag"});
  ts.add({0.0, 1.0 / 3.0, 0.0});
  ts.add({0.1, 2.5e-300, std::numeric_limits<double>::infinity()});
  ts.add({0.2, -7.125, std::nan("")});
  const TimeSeries back = TimeSeries::from_csv(ts.to_csv());
  REQUIRE(back.size() == 3);
  CHECK(back.names() == ts.names());
  CHECK(back.at(0, "energy") == 1.0 / 3.0);
  CHECK(back.at(1, "energy") == 2.5e-300);
  CHECK(std::isinf(back.at(1, "flag")));
  CHECK(std::isnan(back.at(2, "flag")));
  CHECK(back.to_csv() == ts.to_csv());
  CHECK_THROWS_AS(ts.add({1.0}), Error);
  CHECK_THROWS_AS(ts.column("missing"), Error);
  CHECK_THROWS_AS(TimeSeries::from_csv("a,b\n1,x\n"), Error);
}

TEST_CASE("snapshot round trip") {
  const std::string dir = temp_dir();
  const Grid g = make_grid(12, 9, 1.5, 1.0);
  std::mt19937_64 rng(4);
  const ScalarField f = random_cells(g, rng);
  write_snapshot(dir + "/rho.bin", scalar_snapshot(f, 0.75));
  const Snapshot s = read_snapshot(dir + "/rho.bin");
  CHECK(s.kind == SnapshotKind::kScalar);
  CHECK(s.nx == 12);
  CHECK(s.ny == 9);
  CHECK(s.lx == 1.5);
  CHECK(s.time == 0.75);
  const ScalarField back = snapshot_to_scalar(s);
  CHECK((back - f).max_abs() == 0.0);

  const VectorField v = random_faces(g, rng);
  write_snapshot(dir + "/u.bin", vector_snapshot(v, true, 0.0));
  const Snapshot su = read_snapshot(dir + "/u.bin");
  CHECK(su.kind == SnapshotKind::kVectorX);
  CHECK(su.data.size() == 13u * 9u);
  CHECK(su.data[5] == v.u_values()[5]);
  CHECK_THROWS_AS(snapshot_to_scalar(su), Error);

  write_snapshot_csv(dir + "/rho.csv", s);
  const std::string text = read_text_file(dir + "/rho.csv");
  CHECK(text.rfind("i,j,value\n", 0) == 0);

  write_text_file(dir + "/bad.bin", "NOTASNAPSHOT");
  CHECK_THROWS_AS(read_snapshot(dir + "/bad.bin"), Error);
  const std::string full = read_text_file(dir + "/rho.bin");
  write_text_file(dir + "/short.bin", full.substr(0, full.size() - 8));
  try {
    read_snapshot(dir + "/short.bin");
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
  CHECK_THROWS_AS(read_snapshot(dir + "/missing.bin"), Error);
}
