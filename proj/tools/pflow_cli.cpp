// Command line front end; talks to the library only through pflow.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pflow/pflow.h"

namespace {

constexpr const char* kOutputRootEnv = "PFLOW_OUTPUT_ROOT";

int report_error(int status) {
  std::cerr << "error (" << pflow_status_string(status) << "): " << pflow_last_error() << "\n";
  return 2;
}

std::string fetch(int (*get)(const pflow_result*, char*, size_t, size_t*), const pflow_result* r) {
  size_t need = 0;
  if (get(r, nullptr, 0, &need) != PFLOW_OK) return {};
  std::string s(need, '\0');
  get(r, s.data(), s.size(), nullptr);
  s.resize(need ? need - 1 : 0);
  return s;
}

std::string default_out_dir(const std::string& sub, const std::string& config) {
  const char* root = std::getenv(kOutputRootEnv);
  const std::filesystem::path base = root && *root ? root : "pflow_runs";
  return (base / (sub + "-" + std::filesystem::path(config).stem().string())).string();
}

void log_line(const char* msg, void*) { std::cerr << msg << "\n"; }

struct RunArgs {
  std::string config;
  std::string out;
  int threads = 1;
  std::string seed;
  std::vector<std::string> sets;
  bool quiet = false;
};

int run_command(const std::string& sub, int scenario, const RunArgs& a) {
  pflow_config* cfg = nullptr;
  int st = pflow_config_load(a.config.c_str(), &cfg);
  if (st != PFLOW_OK) return report_error(st);
  for (const std::string& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      pflow_config_free(cfg);
      return 2;
    }
    st = pflow_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != PFLOW_OK) {
      pflow_config_free(cfg);
      return report_error(st);
    }
  }
  if (!a.seed.empty()) {
    st = pflow_config_set(cfg, "seed", a.seed.c_str());
    if (st != PFLOW_OK) {
      pflow_config_free(cfg);
      return report_error(st);
    }
  }
  std::string out = a.out;
  if (out.empty()) {
    char buf[4096];
    if (pflow_config_get(cfg, "output.dir", buf, sizeof buf, nullptr) == PFLOW_OK && buf[0]) out = buf;
  }
  if (out.empty()) out = default_out_dir(sub, a.config);

  pflow_result* res = nullptr;
  st = pflow_run(cfg, scenario, out.c_str(), a.threads, a.quiet ? nullptr : log_line, nullptr, &res);
  pflow_config_free(cfg);
  if (st != PFLOW_OK) return report_error(st);
  std::cout << fetch(pflow_result_report, res);
  std::cout << "artifacts: " << out << "\n";
  int passed = 0;
  pflow_result_passed(res, &passed);
  pflow_result_free(res);
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pflow: variable-density Navier-Stokes with density patches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pflow_version());

  struct Sub {
    const char* name;
    const char* help;
    int scenario;
  };
  const Sub subs[] = {
      {"run", "single run", PFLOW_SCENARIO_SINGLE},
      {"pair", "paired run", PFLOW_SCENARIO_PAIR},
      {"triple", "paired runs through the intermediate solution", PFLOW_SCENARIO_TRIPLE},
      {"sweep", "perturbation sweep", PFLOW_SCENARIO_SWEEP},
  };
  std::vector<RunArgs> args(4);
  std::vector<CLI::App*> run_apps;
  for (int k = 0; k < 4; ++k) {
    CLI::App* s = app.add_subcommand(subs[k].name, subs[k].help);
    RunArgs& a = args[static_cast<std::size_t>(k)];
    s->add_option("--config", a.config, "configuration file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", a.out,
                  std::string("output directory (default: $") + kOutputRootEnv + "/<command>-<config>)");
    s->add_option("--threads", a.threads, "worker threads for concurrent members")->check(CLI::PositiveNumber);
    s->add_option("--seed", a.seed, "random seed (overrides the config)");
    s->add_option("--set", a.sets, "override a config key, key=value");
    s->add_flag("--quiet", a.quiet, "no progress output");
    run_apps.push_back(s);
  }

  std::string eig_config;
  int nx = 128, ny = 128;
  double lx = 1.0, ly = 1.0;
  CLI::App* eig = app.add_subcommand("eig", "Poincare constant of the grid");
  eig->add_option("--config", eig_config, "take the grid from a configuration file")
      ->check(CLI::ExistingFile);
  eig->add_option("--nx", nx);
  eig->add_option("--ny", ny);
  eig->add_option("--lx", lx);
  eig->add_option("--ly", ly);

  std::string verify_dir;
  CLI::App* verify = app.add_subcommand("verify", "re-check the reports of a run directory");
  verify->add_option("dir", verify_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  for (int k = 0; k < 4; ++k) {
    if (run_apps[static_cast<std::size_t>(k)]->parsed()) {
      return run_command(subs[k].name, subs[k].scenario, args[static_cast<std::size_t>(k)]);
    }
  }

  if (eig->parsed()) {
    double mu = 0.05, rho_star = 1.0;
    if (!eig_config.empty()) {
      pflow_config* cfg = nullptr;
      const int st = pflow_config_load(eig_config.c_str(), &cfg);
      if (st != PFLOW_OK) return report_error(st);
      char buf[256];
      pflow_config_get(cfg, "grid.nx", buf, sizeof buf, nullptr);
      nx = std::atoi(buf);
      pflow_config_get(cfg, "grid.ny", buf, sizeof buf, nullptr);
      ny = std::atoi(buf);
      pflow_config_get(cfg, "grid.lx", buf, sizeof buf, nullptr);
      lx = std::atof(buf);
      pflow_config_get(cfg, "grid.ly", buf, sizeof buf, nullptr);
      ly = std::atof(buf);
      pflow_config_get(cfg, "fluid.mu", buf, sizeof buf, nullptr);
      mu = std::atof(buf);
      pflow_config_get(cfg, "fluid.rho_star", buf, sizeof buf, nullptr);
      rho_star = std::atof(buf);
      pflow_config_free(cfg);
    }
    double cp = 0.0, lambda1 = 0.0;
    const int st = pflow_poincare(nx, ny, lx, ly, &cp, &lambda1);
    if (st != PFLOW_OK) return report_error(st);
    std::printf("grid = %dx%d on [0, %.17g] x [0, %.17g]\n", nx, ny, lx, ly);
    std::printf("lambda1 = %.17g\nC_P = %.17g\n", lambda1, cp);
    std::printf("beta1 = 2 mu / (rho* C_P^2) = %.17g (mu = %.17g, rho* = %.17g)\n",
                2.0 * mu / (rho_star * cp * cp), mu, rho_star);
    return 0;
  }

  if (verify->parsed()) {
    int passed = 0;
    size_t need = 0;
    std::string text(1 << 20, '\0');
    int st = pflow_verify(verify_dir.c_str(), &passed, text.data(), text.size(), &need);
    if (st != PFLOW_OK && need > text.size()) {
      text.assign(need, '\0');
      st = pflow_verify(verify_dir.c_str(), &passed, text.data(), text.size(), &need);
    }
    if (st != PFLOW_OK) return report_error(st);
    text.resize(need ? need - 1 : 0);
    std::cout << text;
    return passed ? 0 : 1;
  }
  return 0;
}
