#pragma once

// Experiment configuration, scenario orchestration and verification reports.
//
// Scenarios run their members in lockstep: every member advances with the
// same dt (the minimum of the members' CFL steps), so paired differences are
// taken at identical times. Flow maps are advanced online.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pflow/grid.hpp"
#include "pflow/io.hpp"
#include "pflow/lagrangian.hpp"
#include "pflow/metrics.hpp"
#include "pflow/ns_solver.hpp"
#include "pflow/transport.hpp"

namespace pflow {

// Disk of radius 0.2 centered at (0.5, 0.5) at level 1 in vacuum.
inline PatchSpec desk_patch() {
  PatchShape disk;
  disk.cx = 0.5;
  disk.cy = 0.5;
  disk.r = 0.2;
  disk.level = 1.0;
  return PatchSpec{0.0, {disk}};
}

struct ExperimentConfig {
  enum class Scenario { kSingle, kPair, kTriple, kSweep };
  enum class SweepKind { kDensity, kVelocity };

  Scenario scenario = Scenario::kSingle;
  int nx = 128, ny = 128;
  double lx = 1.0, ly = 1.0;
  double mu = 0.05;
  double rho_star = 1.0;
  PatchSpec density = desk_patch();   // member 1
  PatchSpec density2 = desk_patch();  // member 2 (pair, triple)
  VelocitySpec velocity;      // member 1
  VelocitySpec velocity2;     // member 2
  double velocity_noise = 0.0;   // seeded random perturbation of member 1 (max face speed)
  double velocity2_noise = 0.0;
  SchemeParams scheme;
  double T = 0.0;             // 0: ln(1000)/beta1
  double end_factor = 0.0;    // run to end_factor*T; 0: 2 for single, 1 otherwise
  int cadence = 10;
  std::vector<double> snapshots;
  int decompositions = 10;
  double beta = 0.0;          // 0: a quarter of the fitted energy rate of member 1
  SweepKind sweep_kind = SweepKind::kDensity;
  std::vector<double> amplitudes{0.05, 0.1, 0.2, 0.5};
  std::string sweep_shape = "disk 0.25 0.25 0.1 1";
  int mode_kx = 1, mode_ky = 1;
  double mode_amplitude = 0.1;
  std::string output_dir;
  std::uint64_t seed = 0;

  Grid grid() const { return make_grid(nx, ny, lx, ly); }
};

const char* to_string(ExperimentConfig::Scenario s);
ExperimentConfig::Scenario scenario_from_string(const std::string& s);

// "key = value" lines, '#' comments. Unknown keys, malformed values and
// violated constraints are all collected and reported in one kConfig error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Every key with its effective value; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& c);
// Sets one key on an existing configuration (same validation as parsing).
void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

struct Check {
  std::string name;
  std::string inequality;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
};

struct Report {
  std::string title;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  void add(const std::string& name, const std::string& inequality, double lhs, double rhs,
           bool pass);
  bool passed() const;
  std::string text() const;
  std::string csv() const;
  static Report from_csv(const std::string& text);
};

struct RunOptions {
  std::string out_dir;   // empty: nothing written
  int threads = 1;
  std::function<void(const std::string&)> log;
};

struct MemberInit {
  std::string name;
  DensityField rho;
  VectorField v;
};

// Initial data of all members of the configured scenario, in member order.
std::vector<MemberInit> build_members(const ExperimentConfig& c);

struct Timescales {
  DomainConstants domain;
  double beta1 = 0.0;  // 2 mu / (rho* C_P^2)
  double T = 0.0;
  double t_end = 0.0;
};

Timescales resolve_timescales(const ExperimentConfig& c);

// Per-step channels of one member: t, dt, energy (int rho|v|^2),
// solver_energy, grad_v, mass, rho_min, rho_max, rho_l2, rho_l4, div_max,
// predictor_iters, poisson_iters, advect_substeps, clipped, vt_rho
// (||sqrt(rho) v_t||^2), lap_v (||Lap v||^2), grad_p (||grad P||^2), grad_vt
// (||grad v_t||^2), vt (||v_t||^2), grad_v_inf, det_error, clamp_fraction.
std::vector<std::string> member_channels();

struct SingleResult {
  Timescales scales;
  TimeSeries series;
  FlowMap flow;
  double lagrangian_residual = 0.0;
  DensityField rho0;
  SolutionState final_state;
  Report report;
};

struct PairOutcome {
  PairedRun pair;
  StabilityReport stability;
  FlowMap flow1, flow2;
};

struct EnsembleResult {
  Timescales scales;
  double beta = 0.0;
  std::vector<std::string> member_names;
  std::vector<TimeSeries> series;
  std::vector<PairOutcome> pairs;
  Report report;
  // Sweep only: table of per-amplitude functionals and fitted slopes.
  TimeSeries sweep_table;
  std::map<std::string, double> slopes;
};

SingleResult run_single(const ExperimentConfig& c, const RunOptions& opt = {});
EnsembleResult run_pair(const ExperimentConfig& c, const RunOptions& opt = {});
EnsembleResult run_intermediate_triple(const ExperimentConfig& c, const RunOptions& opt = {});
EnsembleResult run_sweep(const ExperimentConfig& c, const RunOptions& opt = {});

// Report checks recomputed from stored channels (shared by the runs and verify).
Report single_report(const ExperimentConfig& c, const Timescales& s, const TimeSeries& series);

struct VerifyResult {
  bool consistent = true;  // recomputed report matches the stored one
  Report stored;
  Report recomputed;
  std::vector<std::string> mismatches;
  bool passed() const { return consistent && recomputed.passed(); }
};

// Re-checks a run directory from config.txt, the stored CSV channels and
// report.csv.
VerifyResult verify_directory(const std::string& dir);

// Runs the configured scenario and writes its artifacts. Returns the report.
Report run_scenario(const ExperimentConfig& c, const RunOptions& opt = {});

}  // namespace pflow
