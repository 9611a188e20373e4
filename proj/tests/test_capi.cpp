#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "pflow/pflow.h"

namespace {

const char* kSmall =
    "grid.nx = 16\n"
    "grid.ny = 16\n"
    "time.T = 0.2\n"
    "time.decompositions = 2\n";

std::string config_text(const pflow_config* c) {
  size_t need = 0;
  REQUIRE(pflow_config_format(c, nullptr, 0, &need) == PFLOW_OK);
  std::string s(need, '\0');
  REQUIRE(pflow_config_format(c, s.data(), s.size(), nullptr) == PFLOW_OK);
  s.resize(need - 1);
  return s;
}

struct Logged {
  int lines = 0;
};

void count_line(const char*, void* user) { ++static_cast<Logged*>(user)->lines; }

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strlen(pflow_version()) > 0);
  CHECK(std::string(pflow_status_string(PFLOW_OK)) == "ok");
  CHECK(std::string(pflow_status_string(PFLOW_ERR_CONFIG)) == "configuration error");
  CHECK(std::string(pflow_status_string(12345)) == "unknown status");
}

TEST_CASE("config handles") {
  pflow_config* c = nullptr;
  REQUIRE(pflow_config_default(&c) == PFLOW_OK);
  char buf[64];
  size_t need = 0;
  REQUIRE(pflow_config_get(c, "grid.nx", buf, sizeof buf, &need) == PFLOW_OK);
  CHECK(std::string(buf) == "128");
  CHECK(need == 4);

  CHECK(pflow_config_set(c, "grid.nx", "32") == PFLOW_OK);
  REQUIRE(pflow_config_get(c, "grid.nx", buf, sizeof buf, nullptr) == PFLOW_OK);
  CHECK(std::string(buf) == "32");

  CHECK(pflow_config_set(c, "grid.nx", "x") == PFLOW_ERR_CONFIG);
  CHECK(std::string(pflow_last_error()).find("grid.nx") != std::string::npos);
  CHECK(pflow_config_get(c, "no.such", buf, sizeof buf, nullptr) == PFLOW_ERR_CONFIG);

  char tiny[2];
  CHECK(pflow_config_get(c, "grid.nx", tiny, sizeof tiny, &need) == PFLOW_ERR_INVALID_ARGUMENT);
  CHECK(need == 3);
  CHECK(tiny[1] == '\0');

  pflow_config* d = nullptr;
  REQUIRE(pflow_config_parse(config_text(c).c_str(), &d) == PFLOW_OK);
  CHECK(config_text(d) == config_text(c));
  pflow_config_free(d);
  pflow_config_free(c);
  pflow_config_free(nullptr);

  pflow_config* bad = nullptr;
  CHECK(pflow_config_parse("grid.nx = 2\nbogus = 1\n", &bad) == PFLOW_ERR_CONFIG);
  CHECK(bad == nullptr);
  const std::string msg = pflow_last_error();
  CHECK(msg.find("bogus") != std::string::npos);
  CHECK(msg.find("grid.nx") != std::string::npos);
  CHECK(pflow_config_load("/nonexistent/pflow.cfg", &bad) == PFLOW_ERR_IO);
  CHECK(pflow_config_parse(nullptr, &bad) == PFLOW_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run, inspect and verify through the C interface") {
  const std::string dir =
      (std::filesystem::temp_directory_path() / "pflow_capi_test" / "pair").string();
  std::filesystem::remove_all(dir);

  pflow_config* c = nullptr;
  REQUIRE(pflow_config_parse(kSmall, &c) == PFLOW_OK);
  pflow_result* r = nullptr;
  Logged log;
  CHECK(pflow_run(c, 42, nullptr, 1, nullptr, nullptr, &r) == PFLOW_ERR_INVALID_ARGUMENT);
  CHECK(pflow_run(c, PFLOW_SCENARIO_PAIR, nullptr, 0, nullptr, nullptr, &r) == PFLOW_ERR_INVALID_ARGUMENT);
  REQUIRE(pflow_run(c, PFLOW_SCENARIO_PAIR, dir.c_str(), 1, count_line, &log, &r) == PFLOW_OK);
  pflow_config_free(c);
  CHECK(log.lines > 0);

  int count = 0;
  REQUIRE(pflow_result_check_count(r, &count) == PFLOW_OK);
  CHECK(count > 5);
  char name[128];
  double lhs = -1.0, rhs = -1.0;
  int passed = -1;
  REQUIRE(pflow_result_check(r, 0, name, sizeof name, &lhs, &rhs, &passed) == PFLOW_OK);
  CHECK(std::strlen(name) > 0);
  CHECK((passed == 0 || passed == 1));
  CHECK(pflow_result_check(r, count, name, sizeof name, &lhs, &rhs, &passed) == PFLOW_ERR_INVALID_ARGUMENT);

  double v = -1.0;
  REQUIRE(pflow_result_value(r, "1_2:lhs", &v) == PFLOW_OK);
  CHECK(v == 0.0);
  REQUIRE(pflow_result_value(r, "beta", &v) == PFLOW_OK);
  CHECK(v > 0.0);
  CHECK(pflow_result_value(r, "nope", &v) == PFLOW_ERR_INVALID_ARGUMENT);

  size_t need = 0;
  REQUIRE(pflow_result_report_csv(r, nullptr, 0, &need) == PFLOW_OK);
  std::string csv(need, '\0');
  REQUIRE(pflow_result_report_csv(r, csv.data(), csv.size(), nullptr) == PFLOW_OK);
  CHECK(csv.rfind("name,inequality,lhs,rhs,pass", 0) == 0);

  int run_passed = -1;
  REQUIRE(pflow_result_passed(r, &run_passed) == PFLOW_OK);
  pflow_result_free(r);

  int verified = -1;
  REQUIRE(pflow_verify(dir.c_str(), &verified, nullptr, 0, &need) == PFLOW_OK);
  std::string text(need, '\0');
  REQUIRE(pflow_verify(dir.c_str(), &verified, text.data(), text.size(), nullptr) == PFLOW_OK);
  CHECK(text.find("stored report reproduced") != std::string::npos);
  CHECK(verified == run_passed);

  CHECK(pflow_verify("/nonexistent/run", &verified, nullptr, 0, nullptr) != PFLOW_OK);
}

TEST_CASE("Poincare constant") {
  double cp = 0.0, l1 = 0.0;
  REQUIRE(pflow_poincare(32, 32, 1.0, 1.0, &cp, &l1) == PFLOW_OK);
  // Discrete Dirichlet eigenvalue of the 5-point Laplacian on the unit square.
  const double h = 1.0 / 32.0;
  const double s = std::sin(M_PI * h / 2.0);
  CHECK(l1 == doctest::Approx(8.0 * s * s / (h * h)).epsilon(1e-8));
  CHECK(cp == doctest::Approx(1.0 / std::sqrt(l1)).epsilon(1e-14));
  CHECK(pflow_poincare(1, 32, 1.0, 1.0, &cp, &l1) != PFLOW_OK);
  CHECK(pflow_poincare(32, 32, 1.0, 1.0, nullptr, &l1) == PFLOW_ERR_INVALID_ARGUMENT);
}
