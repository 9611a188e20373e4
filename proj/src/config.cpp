#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "pflow/harness.hpp"

namespace pflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct BadValue {
  std::string message;
};

double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw BadValue{"expected a number, got '" + s + "'"};
  }
  if (pos != s.size() || !std::isfinite(v)) throw BadValue{"expected a number, got '" + s + "'"};
  return v;
}

double to_double_or_auto(const std::string& s) {
  return s == "auto" ? 0.0 : to_double(s);
}

long long to_integer(const std::string& s) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw BadValue{"expected an integer, got '" + s + "'"};
  }
  if (pos != s.size()) throw BadValue{"expected an integer, got '" + s + "'"};
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw BadValue{"integer out of range: '" + s + "'"};
  }
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw BadValue{"expected true or false, got '" + s + "'"};
}

std::vector<double> to_list(const std::string& s) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream is(t);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double(tok));
  return out;
}

std::string fmt(double x) { return format_double(x); }

std::string fmt_auto(double x) { return x > 0.0 ? format_double(x) : "auto"; }

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += format_double(v[k]);
  }
  return out;
}

std::vector<PatchShape> to_shapes(const std::string& s) {
  try {
    return parse_shapes(s);
  } catch (const Error& e) {
    throw BadValue{e.what()};
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

void add_density_keys(std::vector<Key>& keys, const std::string& prefix,
                      PatchSpec ExperimentConfig::*m) {
  keys.push_back({prefix + ".background",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).background = to_double(v); },
                  [m](const ExperimentConfig& c) { return fmt((c.*m).background); }});
  keys.push_back({prefix + ".shapes",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).shapes = to_shapes(v); },
                  [m](const ExperimentConfig& c) { return format_shapes((c.*m).shapes); }});
}

void add_velocity_keys(std::vector<Key>& keys, const std::string& prefix,
                       VelocitySpec ExperimentConfig::*m, double ExperimentConfig::*noise) {
  keys.push_back({prefix + ".kind",
                  [m](ExperimentConfig& c, const std::string& v) {
                    try {
                      (c.*m).kind = velocity_kind_from_string(v);
                    } catch (const Error& e) {
                      throw BadValue{e.what()};
                    }
                  },
                  [m](const ExperimentConfig& c) { return std::string(to_string((c.*m).kind)); }});
  keys.push_back({prefix + ".amplitude",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).amplitude = to_double(v); },
                  [m](const ExperimentConfig& c) { return fmt((c.*m).amplitude); }});
  keys.push_back({prefix + ".kx",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).kx = to_int(v); },
                  [m](const ExperimentConfig& c) { return std::to_string((c.*m).kx); }});
  keys.push_back({prefix + ".ky",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).ky = to_int(v); },
                  [m](const ExperimentConfig& c) { return std::to_string((c.*m).ky); }});
  keys.push_back({prefix + ".cx",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).cx = to_double(v); },
                  [m](const ExperimentConfig& c) { return fmt((c.*m).cx); }});
  keys.push_back({prefix + ".cy",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).cy = to_double(v); },
                  [m](const ExperimentConfig& c) { return fmt((c.*m).cy); }});
  keys.push_back({prefix + ".radius",
                  [m](ExperimentConfig& c, const std::string& v) { (c.*m).radius = to_double(v); },
                  [m](const ExperimentConfig& c) { return fmt((c.*m).radius); }});
  keys.push_back({prefix + ".noise",
                  [noise](ExperimentConfig& c, const std::string& v) { c.*noise = to_double(v); },
                  [noise](const ExperimentConfig& c) { return fmt(c.*noise); }});
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    using C = ExperimentConfig;
    k.push_back({"scenario",
                 [](C& c, const std::string& v) {
                   try {
                     c.scenario = scenario_from_string(v);
                   } catch (const Error& e) {
                     throw BadValue{e.what()};
                   }
                 },
                 [](const C& c) { return std::string(to_string(c.scenario)); }});
    k.push_back({"grid.nx", [](C& c, const std::string& v) { c.nx = to_int(v); },
                 [](const C& c) { return std::to_string(c.nx); }});
    k.push_back({"grid.ny", [](C& c, const std::string& v) { c.ny = to_int(v); },
                 [](const C& c) { return std::to_string(c.ny); }});
    k.push_back({"grid.lx", [](C& c, const std::string& v) { c.lx = to_double(v); },
                 [](const C& c) { return fmt(c.lx); }});
    k.push_back({"grid.ly", [](C& c, const std::string& v) { c.ly = to_double(v); },
                 [](const C& c) { return fmt(c.ly); }});
    k.push_back({"fluid.mu", [](C& c, const std::string& v) { c.mu = to_double(v); },
                 [](const C& c) { return fmt(c.mu); }});
    k.push_back({"fluid.rho_star", [](C& c, const std::string& v) { c.rho_star = to_double(v); },
                 [](const C& c) { return fmt(c.rho_star); }});
    add_density_keys(k, "density", &C::density);
    add_density_keys(k, "density2", &C::density2);
    add_velocity_keys(k, "velocity", &C::velocity, &C::velocity_noise);
    add_velocity_keys(k, "velocity2", &C::velocity2, &C::velocity2_noise);
    k.push_back({"scheme.eps_vac", [](C& c, const std::string& v) { c.scheme.eps_vac = to_double(v); },
                 [](const C& c) { return fmt(c.scheme.eps_vac); }});
    k.push_back({"scheme.cfl", [](C& c, const std::string& v) { c.scheme.cfl = to_double(v); },
                 [](const C& c) { return fmt(c.scheme.cfl); }});
    k.push_back({"scheme.tol", [](C& c, const std::string& v) { c.scheme.tol = to_double(v); },
                 [](const C& c) { return fmt(c.scheme.tol); }});
    k.push_back({"scheme.div_tol", [](C& c, const std::string& v) { c.scheme.div_tol = to_double(v); },
                 [](const C& c) { return fmt(c.scheme.div_tol); }});
    k.push_back({"scheme.max_iters", [](C& c, const std::string& v) { c.scheme.max_iters = to_int(v); },
                 [](const C& c) { return std::to_string(c.scheme.max_iters); }});
    k.push_back({"scheme.upwind", [](C& c, const std::string& v) { c.scheme.upwind = to_bool(v); },
                 [](const C& c) { return std::string(c.scheme.upwind ? "true" : "false"); }});
    k.push_back({"time.T", [](C& c, const std::string& v) { c.T = to_double_or_auto(v); },
                 [](const C& c) { return fmt_auto(c.T); }});
    k.push_back({"time.end_factor", [](C& c, const std::string& v) { c.end_factor = to_double_or_auto(v); },
                 [](const C& c) { return fmt_auto(c.end_factor); }});
    k.push_back({"time.cadence", [](C& c, const std::string& v) { c.cadence = to_int(v); },
                 [](const C& c) { return std::to_string(c.cadence); }});
    k.push_back({"time.snapshots", [](C& c, const std::string& v) { c.snapshots = to_list(v); },
                 [](const C& c) { return fmt_list(c.snapshots); }});
    k.push_back({"time.decompositions", [](C& c, const std::string& v) { c.decompositions = to_int(v); },
                 [](const C& c) { return std::to_string(c.decompositions); }});
    k.push_back({"stability.beta", [](C& c, const std::string& v) { c.beta = to_double_or_auto(v); },
                 [](const C& c) { return fmt_auto(c.beta); }});
    k.push_back({"sweep.kind",
                 [](C& c, const std::string& v) {
                   if (v == "density") c.sweep_kind = C::SweepKind::kDensity;
                   else if (v == "velocity") c.sweep_kind = C::SweepKind::kVelocity;
                   else throw BadValue{"expected density or velocity, got '" + v + "'"};
                 },
                 [](const C& c) {
                   return std::string(c.sweep_kind == C::SweepKind::kDensity ? "density" : "velocity");
                 }});
    k.push_back({"sweep.amplitudes", [](C& c, const std::string& v) { c.amplitudes = to_list(v); },
                 [](const C& c) { return fmt_list(c.amplitudes); }});
    k.push_back({"sweep.shape",
                 [](C& c, const std::string& v) {
                   const auto s = to_shapes(v);
                   if (s.size() != 1) throw BadValue{"sweep.shape needs exactly one shape"};
                   c.sweep_shape = format_shapes(s);
                 },
                 [](const C& c) { return format_shapes(parse_shapes(c.sweep_shape)); }});
    k.push_back({"sweep.mode_kx", [](C& c, const std::string& v) { c.mode_kx = to_int(v); },
                 [](const C& c) { return std::to_string(c.mode_kx); }});
    k.push_back({"sweep.mode_ky", [](C& c, const std::string& v) { c.mode_ky = to_int(v); },
                 [](const C& c) { return std::to_string(c.mode_ky); }});
    k.push_back({"sweep.mode_amplitude", [](C& c, const std::string& v) { c.mode_amplitude = to_double(v); },
                 [](const C& c) { return fmt(c.mode_amplitude); }});
    k.push_back({"output.dir", [](C& c, const std::string& v) { c.output_dir = v; },
                 [](const C& c) { return c.output_dir; }});
    k.push_back({"seed",
                 [](C& c, const std::string& v) {
                   const long long s = to_integer(v);
                   if (s < 0) throw BadValue{"seed must be nonnegative"};
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const C& c) { return std::to_string(c.seed); }});
    return k;
  }();
  return keys;
}

const Key* find_key(const std::string& name) {
  for (const Key& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void check_velocity(const VelocitySpec& v, const Grid& g, const std::string& prefix,
                    std::vector<std::string>& errors) {
  if (v.kind == VelocitySpec::Kind::kSin2 && (v.kx < 1 || v.ky < 1)) {
    errors.push_back(prefix + ".kx/ky must be >= 1");
    return;
  }
  if (v.kind == VelocitySpec::Kind::kVortex && !(v.radius > 0.0)) {
    errors.push_back(prefix + ".radius must be > 0");
    return;
  }
  // The eigenmode is expensive to build; its parameters are checked by kind alone.
  if (v.kind == VelocitySpec::Kind::kStokesEigenmode) return;
  try {
    (void)make_initial_velocity(v, g);
  } catch (const Error& e) {
    errors.push_back(prefix + ": " + e.what());
  }
}

void check_density(const PatchSpec& p, const Grid& g, double rho_star, const std::string& prefix,
                   std::vector<std::string>& errors) {
  try {
    (void)make_patch(p, g, rho_star);
  } catch (const Error& e) {
    errors.push_back(prefix + ": " + e.what());
  }
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  if (c.nx < 8 || c.ny < 8) errors.push_back("grid.nx and grid.ny must be >= 8");
  if (!(c.lx > 0.0) || !(c.ly > 0.0)) errors.push_back("grid.lx and grid.ly must be > 0");
  if (!(c.mu > 0.0)) errors.push_back("fluid.mu must be > 0");
  if (!(c.rho_star > 0.0)) errors.push_back("fluid.rho_star must be > 0");
  try {
    c.scheme.validate();
  } catch (const Error& e) {
    errors.push_back(std::string("scheme: ") + e.what());
  }
  if (c.T < 0.0) errors.push_back("time.T must be > 0 or auto");
  if (c.end_factor < 0.0) errors.push_back("time.end_factor must be > 0 or auto");
  if (c.cadence < 1) errors.push_back("time.cadence must be >= 1");
  if (c.decompositions < 0) errors.push_back("time.decompositions must be >= 0");
  for (std::size_t k = 0; k < c.snapshots.size(); ++k) {
    if (c.snapshots[k] < 0.0 || (k && c.snapshots[k] <= c.snapshots[k - 1])) {
      errors.push_back("time.snapshots must be nonnegative and increasing");
      break;
    }
  }
  if (c.beta < 0.0) errors.push_back("stability.beta must be > 0 or auto");
  if (c.velocity_noise < 0.0 || c.velocity2_noise < 0.0) {
    errors.push_back("velocity noise must be >= 0");
  }

  const bool grid_ok = c.nx >= 8 && c.ny >= 8 && c.lx > 0.0 && c.ly > 0.0 && c.rho_star > 0.0;
  if (grid_ok) {
    const Grid g = c.grid();
    check_density(c.density, g, c.rho_star, "density", errors);
    check_velocity(c.velocity, g, "velocity", errors);
    const bool two = c.scenario == ExperimentConfig::Scenario::kPair ||
                     c.scenario == ExperimentConfig::Scenario::kTriple;
    if (two) {
      check_density(c.density2, g, c.rho_star, "density2", errors);
      check_velocity(c.velocity2, g, "velocity2", errors);
    }
    if (c.scenario == ExperimentConfig::Scenario::kSweep) {
      if (c.sweep_kind == ExperimentConfig::SweepKind::kDensity) {
        try {
          PatchSpec p;
          p.shapes = parse_shapes(c.sweep_shape);
          (void)make_patch(p, g, c.rho_star);
        } catch (const Error& e) {
          errors.push_back(std::string("sweep.shape: ") + e.what());
        }
      } else {
        VelocitySpec mode;
        mode.kind = VelocitySpec::Kind::kSin2;
        mode.kx = c.mode_kx;
        mode.ky = c.mode_ky;
        mode.amplitude = c.mode_amplitude;
        check_velocity(mode, g, "sweep.mode", errors);
        if (!(c.mode_amplitude > 0.0)) errors.push_back("sweep.mode_amplitude must be > 0");
      }
    }
  }

  if (c.scenario == ExperimentConfig::Scenario::kSweep) {
    const auto& a = c.amplitudes;
    if (a.size() < 4) errors.push_back("sweep.amplitudes needs at least 4 values");
    bool positive_sorted = true;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (!(a[k] > 0.0) || (k && a[k] <= a[k - 1])) positive_sorted = false;
    }
    if (!positive_sorted) errors.push_back("sweep.amplitudes must be positive and increasing");
    if (positive_sorted && !a.empty() && a.back() < 10.0 * a.front() * (1.0 - 1e-12)) {
      errors.push_back("sweep.amplitudes must span at least one decade");
    }
  }
  return errors;
}

std::string join_errors(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration:";
  for (const auto& e : errors) msg += "\n  " + e;
  return msg;
}

}  // namespace

const char* to_string(ExperimentConfig::Scenario s) {
  switch (s) {
    case ExperimentConfig::Scenario::kSingle: return "single";
    case ExperimentConfig::Scenario::kPair: return "pair";
    case ExperimentConfig::Scenario::kTriple: return "intermediate_triple";
    case ExperimentConfig::Scenario::kSweep: return "sweep";
  }
  return "single";
}

ExperimentConfig::Scenario scenario_from_string(const std::string& s) {
  if (s == "single" || s == "run") return ExperimentConfig::Scenario::kSingle;
  if (s == "pair") return ExperimentConfig::Scenario::kPair;
  if (s == "intermediate_triple" || s == "triple") return ExperimentConfig::Scenario::kTriple;
  if (s == "sweep") return ExperimentConfig::Scenario::kSweep;
  throw Error(ErrorCode::kConfig, "unknown scenario '" + s + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : key_table()) out.push_back(k.name);
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) {
      errors.push_back(where + "expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* k = find_key(key);
    if (!k) {
      errors.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    try {
      k->set(c, value);
    } catch (const BadValue& b) {
      errors.push_back(where + key + ": " + b.message);
    }
  }
  // The second member defaults to the first.
  if (!seen.count("density2.background") && !seen.count("density2.shapes")) c.density2 = c.density;
  bool any_v2 = false;
  for (const Key& k : key_table()) {
    if (k.name.rfind("velocity2.", 0) == 0 && k.name != "velocity2.noise" && seen.count(k.name)) {
      any_v2 = true;
    }
  }
  if (!any_v2) c.velocity2 = c.velocity;

  for (auto& e : validate(c)) errors.push_back(std::move(e));
  if (!errors.empty()) throw Error(ErrorCode::kConfig, join_errors(errors));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

std::string format_config(const ExperimentConfig& c) {
  std::string out;
  for (const Key& k : key_table()) out += k.name + " = " + k.get(c) + "\n";
  return out;
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw Error(ErrorCode::kConfig, "unknown key '" + key + "'");
  ExperimentConfig next = c;
  try {
    k->set(next, trim(value));
  } catch (const BadValue& b) {
    throw Error(ErrorCode::kConfig, key + ": " + b.message);
  }
  const auto errors = validate(next);
  if (!errors.empty()) throw Error(ErrorCode::kConfig, join_errors(errors));
  c = std::move(next);
}

}  // namespace pflow
