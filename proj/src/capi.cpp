#include <cstring>
#include <map>
#include <memory>
#include <string>

#include "pflow/harness.hpp"
#include "pflow/pflow.h"

struct pflow_config {
  pflow::ExperimentConfig cfg;
};

struct pflow_result {
  pflow::Report report;
  std::map<std::string, double> values;
};

namespace {

thread_local std::string g_last_error;

int fail(int status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

template <typename F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const pflow::Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PFLOW_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PFLOW_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PFLOW_ERR_INTERNAL, "unknown error");
  }
}

int copy_out(const std::string& s, char* buf, std::size_t size, std::size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf || size == 0) return PFLOW_OK;
  if (size < s.size() + 1) {
    std::memcpy(buf, s.data(), size - 1);
    buf[size - 1] = '\0';
    return fail(PFLOW_ERR_INVALID_ARGUMENT, "buffer too small");
  }
  std::memcpy(buf, s.data(), s.size());
  buf[s.size()] = '\0';
  return PFLOW_OK;
}

void add_stability(std::map<std::string, double>& out, const pflow::StabilityReport& s) {
  const auto keys = pflow::StabilityReport::keys();
  const auto vals = s.values();
  for (std::size_t k = 0; k < keys.size(); ++k) out[s.name + ":" + keys[k]] = vals[k];
}

}  // namespace

extern "C" {

const char* pflow_version(void) { return "1.0.0"; }

const char* pflow_status_string(int status) {
  switch (status) {
    case PFLOW_OK: return "ok";
    case PFLOW_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PFLOW_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case PFLOW_ERR_NOT_CONVERGED: return "solver did not converge";
    case PFLOW_ERR_CFL_VIOLATION: return "CFL violation";
    case PFLOW_ERR_NOT_DIVERGENCE_FREE: return "velocity not divergence free";
    case PFLOW_ERR_CONFIG: return "configuration error";
    case PFLOW_ERR_IO: return "I/O error";
    case PFLOW_ERR_INCONSISTENT: return "inconsistent data";
    case PFLOW_ERR_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

const char* pflow_last_error(void) { return g_last_error.c_str(); }

int pflow_config_default(pflow_config** out) {
  if (!out) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null output handle");
  return guarded([&] {
    *out = new pflow_config{};
    return PFLOW_OK;
  });
}

int pflow_config_parse(const char* text, pflow_config** out) {
  if (!text || !out) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new pflow_config{pflow::parse_config(text)};
    return PFLOW_OK;
  });
}

int pflow_config_load(const char* path, pflow_config** out) {
  if (!path || !out) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new pflow_config{pflow::load_config(path)};
    return PFLOW_OK;
  });
}

int pflow_config_set(pflow_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    pflow::set_config_value(cfg->cfg, key, value);
    return PFLOW_OK;
  });
}

int pflow_config_get(const pflow_config* cfg, const char* key, char* buf, size_t size,
                     size_t* needed) {
  if (!cfg || !key) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string text = pflow::format_config(cfg->cfg);
    const std::string prefix = std::string(key) + " = ";
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t end = text.find('\n', pos);
      const std::string line = text.substr(pos, end - pos);
      if (line.rfind(prefix, 0) == 0) return copy_out(line.substr(prefix.size()), buf, size, needed);
      pos = end == std::string::npos ? text.size() : end + 1;
    }
    return fail(PFLOW_ERR_CONFIG, std::string("unknown key '") + key + "'");
  });
}

int pflow_config_format(const pflow_config* cfg, char* buf, size_t size, size_t* needed) {
  if (!cfg) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return copy_out(pflow::format_config(cfg->cfg), buf, size, needed); });
}

void pflow_config_free(pflow_config* cfg) { delete cfg; }

int pflow_run(const pflow_config* cfg, int scenario, const char* out_dir, int threads,
              pflow_log_fn log, void* user, pflow_result** out) {
  if (!cfg || !out) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  if (threads < 1) return fail(PFLOW_ERR_INVALID_ARGUMENT, "threads must be >= 1");
  if (scenario < PFLOW_SCENARIO_FROM_CONFIG || scenario > PFLOW_SCENARIO_SWEEP) {
    return fail(PFLOW_ERR_INVALID_ARGUMENT, "unknown scenario");
  }
  return guarded([&] {
    pflow::ExperimentConfig c = cfg->cfg;
    using S = pflow::ExperimentConfig::Scenario;
    if (scenario != PFLOW_SCENARIO_FROM_CONFIG) c.scenario = static_cast<S>(scenario);
    pflow::RunOptions opt;
    opt.out_dir = out_dir ? out_dir : "";
    opt.threads = threads;
    if (log) opt.log = [log, user](const std::string& m) { log(m.c_str(), user); };
    auto res = std::make_unique<pflow_result>();
    if (c.scenario == S::kSingle) {
      const pflow::SingleResult r = pflow::run_single(c, opt);
      res->report = r.report;
      res->values["t_end"] = r.scales.t_end;
      res->values["beta1"] = r.scales.beta1;
      res->values["poincare_constant"] = r.scales.domain.poincare_constant;
      res->values["lagrangian_residual"] = r.lagrangian_residual;
    } else {
      pflow::EnsembleResult r;
      if (c.scenario == S::kPair) r = pflow::run_pair(c, opt);
      else if (c.scenario == S::kTriple) r = pflow::run_intermediate_triple(c, opt);
      else r = pflow::run_sweep(c, opt);
      res->report = r.report;
      res->values["beta"] = r.beta;
      res->values["t_end"] = r.scales.t_end;
      res->values["beta1"] = r.scales.beta1;
      res->values["poincare_constant"] = r.scales.domain.poincare_constant;
      for (const auto& p : r.pairs) add_stability(res->values, p.stability);
      for (const auto& [k, v] : r.slopes) res->values["slope:" + k] = v;
    }
    *out = res.release();
    return PFLOW_OK;
  });
}

int pflow_result_passed(const pflow_result* res, int* passed) {
  if (!res || !passed) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  *passed = res->report.passed() ? 1 : 0;
  return PFLOW_OK;
}

int pflow_result_report(const pflow_result* res, char* buf, size_t size, size_t* needed) {
  if (!res) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return copy_out(res->report.text(), buf, size, needed); });
}

int pflow_result_report_csv(const pflow_result* res, char* buf, size_t size, size_t* needed) {
  if (!res) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return copy_out(res->report.csv(), buf, size, needed); });
}

int pflow_result_check_count(const pflow_result* res, int* count) {
  if (!res || !count) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  *count = static_cast<int>(res->report.checks.size());
  return PFLOW_OK;
}

int pflow_result_check(const pflow_result* res, int k, char* name, size_t name_size, double* lhs,
                       double* rhs, int* passed) {
  if (!res) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  if (k < 0 || k >= static_cast<int>(res->report.checks.size())) {
    return fail(PFLOW_ERR_INVALID_ARGUMENT, "check index out of range");
  }
  const pflow::Check& c = res->report.checks[static_cast<std::size_t>(k)];
  if (lhs) *lhs = c.lhs;
  if (rhs) *rhs = c.rhs;
  if (passed) *passed = c.pass ? 1 : 0;
  return guarded([&] { return copy_out(c.name, name, name_size, nullptr); });
}

int pflow_result_value(const pflow_result* res, const char* key, double* value) {
  if (!res || !key || !value) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  const auto it = res->values.find(key);
  if (it == res->values.end()) return fail(PFLOW_ERR_INVALID_ARGUMENT, std::string("no value '") + key + "'");
  *value = it->second;
  return PFLOW_OK;
}

void pflow_result_free(pflow_result* res) { delete res; }

int pflow_verify(const char* dir, int* passed, char* buf, size_t size, size_t* needed) {
  if (!dir || !passed) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const pflow::VerifyResult v = pflow::verify_directory(dir);
    *passed = v.passed() ? 1 : 0;
    std::string text = v.recomputed.text();
    text += v.consistent ? "stored report reproduced\n" : "stored report NOT reproduced:\n";
    for (const auto& m : v.mismatches) text += "  " + m + "\n";
    return copy_out(text, buf, size, needed);
  });
}

int pflow_poincare(int nx, int ny, double lx, double ly, double* cp, double* lambda1) {
  if (!cp || !lambda1) return fail(PFLOW_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const pflow::DomainConstants d = pflow::poincare_constant(pflow::make_grid(nx, ny, lx, ly));
    *cp = d.poincare_constant;
    *lambda1 = d.lambda1;
    return PFLOW_OK;
  });
}

}  // extern "C"
