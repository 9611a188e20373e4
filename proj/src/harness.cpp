#include "pflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "pflow/divergence_solver.hpp"
#include "pflow/grid.hpp"

namespace pflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

std::string fmt(double x) { return format_double(x); }

// Runs f(0..n-1) on up to `threads` workers. The exception of the lowest
// failing index is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  if (threads <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) f(k);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < n; k = next++) {
      try {
        f(k);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(threads, n); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

VectorField noise_field(const Grid& g, double amplitude, std::uint64_t seed) {
  if (amplitude == 0.0) return VectorField(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double c[4][4];
  for (auto& row : c) {
    for (double& x : row) x = dist(rng);
  }
  VectorField v = velocity_from_stream_function(g, [&](double x, double y) {
    double psi = 0.0;
    for (int k = 0; k < 4; ++k) {
      for (int l = 0; l < 4; ++l) {
        psi += c[k][l] * std::sin((k + 1) * kPi * x / g.lx) * std::sin((l + 1) * kPi * y / g.ly);
      }
    }
    return psi;
  });
  const double m = v.max_abs();
  return m > 0.0 ? (amplitude / m) * v : v;
}

struct PairSpec {
  std::string name;
  int first = 0;
  int second = 1;
};

std::vector<PairSpec> pair_specs(const ExperimentConfig& c) {
  using S = ExperimentConfig::Scenario;
  switch (c.scenario) {
    case S::kSingle: return {};
    case S::kPair: return {{"1_2", 0, 1}};
    case S::kTriple: return {{"1_I", 0, 2}, {"2_I", 1, 2}, {"1_2", 0, 1}};
    case S::kSweep: {
      std::vector<PairSpec> out;
      for (std::size_t k = 0; k < c.amplitudes.size(); ++k) {
        out.push_back({"base_amp" + std::to_string(k), 0, static_cast<int>(k) + 1});
      }
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Per-member channels.

struct Member {
  std::string name;
  SolutionState state;
  FlowMap flow;
  DensityField rho0;
  TimeSeries series;
  std::size_t next_snapshot = 0;
};

double grad_inf(const VectorField& v) {
  const MatrixField gv = velocity_gradient(v);
  double m = 0.0;
  for (const Mat2& a : gv.values()) m = std::max(m, a.frobenius2());
  return std::sqrt(m);
}

void record_row(Member& m, const StepInfo& info, const VectorField& v_prev, const SchemeParams& sp) {
  const SolutionState& s = m.state;
  const Grid& g = s.rho.grid();
  double vt_rho = 0.0, grad_vt = 0.0, vt = 0.0;
  if (info.dt > 0.0) {
    const VectorField d = (1.0 / info.dt) * (s.v - v_prev);
    vt_rho = kinetic_energy(s.rho, d);
    const double gd = h1_seminorm(d);
    grad_vt = gd * gd;
    const double l = l2_norm(d);
    vt = l * l;
  }
  const double lap = l2_norm(laplacian_dirichlet(s.v, 1.0));
  const double gp = s.p.size() ? l2_norm(gradient(s.p)) : 0.0;
  const double gv = h1_seminorm(s.v);
  (void)g;
  m.series.add({s.t,
                info.dt,
                kinetic_energy(s.rho, s.v),
                solver_energy(s.rho, s.v, sp.eps_vac),
                gv,
                s.rho.mass(),
                s.rho.rho.min(),
                s.rho.rho.max(),
                lp_norm(s.rho.rho, 2.0),
                lp_norm(s.rho.rho, 4.0),
                info.dt > 0.0 ? info.div_max : divergence(s.v).max_abs(),
                static_cast<double>(info.predictor_iters),
                static_cast<double>(info.poisson_iters),
                static_cast<double>(info.advect_substeps),
                info.clipped,
                vt_rho,
                lap * lap,
                gp * gp,
                grad_vt,
                vt,
                grad_inf(s.v),
                m.flow.max_det_error(),
                m.flow.clamp_fraction(),
                lagrangian_density_residual(s.rho, m.flow, m.rho0)});
}

// ---------------------------------------------------------------------------
// Output helpers.

std::string path_join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_member_snapshot(const std::string& dir, const Member& m, const std::string& tag) {
  const std::string snap = path_join(dir, "snapshots");
  ensure_directory(snap);
  const std::string base = path_join(snap, m.name + "_" + tag);
  const double t = m.state.t;
  write_snapshot(base + "_rho.bin", scalar_snapshot(m.state.rho.rho, t));
  write_snapshot(base + "_u.bin", vector_snapshot(m.state.v, true, t));
  write_snapshot(base + "_v.bin", vector_snapshot(m.state.v, false, t));
}

void write_flow_snapshot(const std::string& dir, const Member& m) {
  const std::string snap = path_join(dir, "snapshots");
  ensure_directory(snap);
  const Grid& g = m.flow.seeds;
  auto make = [&](SnapshotKind kind, auto&& get) {
    Snapshot s;
    s.kind = kind;
    s.nx = static_cast<std::uint32_t>(g.nx);
    s.ny = static_cast<std::uint32_t>(g.ny);
    s.lx = g.lx;
    s.ly = g.ly;
    s.time = m.flow.t;
    s.data.resize(g.cells());
    for (std::size_t k = 0; k < g.cells(); ++k) s.data[k] = get(k);
    return s;
  };
  const std::string base = path_join(snap, m.name + "_flow");
  write_snapshot(base + "_X.bin", make(SnapshotKind::kPositionX, [&](std::size_t k) { return m.flow.X[k].x; }));
  write_snapshot(base + "_Y.bin", make(SnapshotKind::kPositionY, [&](std::size_t k) { return m.flow.X[k].y; }));
  write_snapshot(base + "_D11.bin", make(SnapshotKind::kD11, [&](std::size_t k) { return m.flow.D[k].a; }));
  write_snapshot(base + "_D12.bin", make(SnapshotKind::kD12, [&](std::size_t k) { return m.flow.D[k].b; }));
  write_snapshot(base + "_D21.bin", make(SnapshotKind::kD21, [&](std::size_t k) { return m.flow.D[k].c; }));
  write_snapshot(base + "_D22.bin", make(SnapshotKind::kD22, [&](std::size_t k) { return m.flow.D[k].d; }));
}

void write_pair_csvs(const std::string& dir, const PairedRun& p) {
  p.steps.write_csv(path_join(dir, "pair_" + p.name + "_steps.csv"));
  p.samples.write_csv(path_join(dir, "pair_" + p.name + "_samples.csv"));
  p.decompositions.write_csv(path_join(dir, "pair_" + p.name + "_decompositions.csv"));
}

void log(const RunOptions& opt, const std::string& msg) {
  if (opt.log) opt.log(msg);
}

// ---------------------------------------------------------------------------
// Lockstep engine.

struct Engine {
  std::vector<Member> members;
  std::vector<PairedRun> pairs;
};

Engine run_engine(const ExperimentConfig& c, const Timescales& scales,
                  const std::vector<MemberInit>& inits, const RunOptions& opt) {
  Engine e;
  const SchemeParams& sp = c.scheme;
  const Grid g = c.grid();
  for (const MemberInit& in : inits) {
    Member m;
    m.name = in.name;
    m.state = make_state(in.rho, in.v, c.mu);
    m.flow = identity_flow(g);
    m.rho0 = in.rho;
    m.series = TimeSeries(member_channels());
    e.members.push_back(std::move(m));
  }
  const int nm = static_cast<int>(e.members.size());
  for (const PairSpec& ps : pair_specs(c)) {
    e.pairs.push_back(make_paired_run(ps.name, ps.first, ps.second, e.members[ps.first].state,
                                      e.members[ps.second].state, c.cadence));
  }
  const bool write = !opt.out_dir.empty();
  const double t_end = scales.t_end;

  std::vector<double> decomposition_times;
  for (int k = 0; k < c.decompositions; ++k) decomposition_times.push_back(k * t_end / c.decompositions);
  std::size_t next_decomposition = 0;

  auto snapshots = [&](bool final) {
    if (!write) return;
    for (Member& m : e.members) {
      while (m.next_snapshot < c.snapshots.size() &&
             m.state.t >= c.snapshots[m.next_snapshot] - 1e-12 * std::max(1.0, t_end)) {
        write_member_snapshot(opt.out_dir, m, std::to_string(m.next_snapshot));
        ++m.next_snapshot;
      }
      if (final) {
        write_member_snapshot(opt.out_dir, m, "final");
        write_flow_snapshot(opt.out_dir, m);
      }
    }
  };

  auto observe = [&](bool final) {
    if (e.pairs.empty()) return;
    std::vector<MemberView> views(static_cast<std::size_t>(nm));
    parallel_for(nm, opt.threads, [&](int k) {
      views[k] = make_member_view(e.members[k].state, e.members[k].flow);
    });
    const double t = e.members[0].state.t;
    const bool decompose = next_decomposition < decomposition_times.size() &&
                           t >= decomposition_times[next_decomposition] - 1e-12 * std::max(1.0, t_end);
    if (decompose) {
      while (next_decomposition < decomposition_times.size() &&
             t >= decomposition_times[next_decomposition] - 1e-12 * std::max(1.0, t_end)) {
        ++next_decomposition;
      }
    }
    const int np = static_cast<int>(e.pairs.size());
    parallel_for(np, opt.threads, [&](int k) {
      PairedRun& p = e.pairs[k];
      observe_pair(p, views[p.first], views[p.second], final);
      if (decompose) observe_decomposition(p, views[p.first], views[p.second]);
    });
  };

  auto flush = [&] {
    if (!write) return;
    const bool single = c.scenario == ExperimentConfig::Scenario::kSingle;
    for (const Member& m : e.members) {
      m.series.write_csv(path_join(opt.out_dir, single ? "timeseries.csv" : "member_" + m.name + ".csv"));
    }
    for (const PairedRun& p : e.pairs) write_pair_csvs(opt.out_dir, p);
  };

  try {
    for (Member& m : e.members) record_row(m, StepInfo{}, m.state.v, sp);
    observe(false);
    snapshots(false);
    long n = 0;
    while (e.members[0].state.t < t_end * (1.0 - 1e-12)) {
      double dt = kInf;
      for (const Member& m : e.members) dt = std::min(dt, choose_dt(m.state, sp, t_end));
      parallel_for(nm, opt.threads, [&](int k) {
        Member& m = e.members[k];
        const VectorField v_old = m.state.v;
        const StepInfo info = step_with_dt(m.state, dt, sp);
        advance_flow(m.flow, v_old, m.state.v, dt);
        record_row(m, info, v_old, sp);
      });
      ++n;
      const bool final = e.members[0].state.t >= t_end * (1.0 - 1e-12);
      observe(final);
      snapshots(final);
      if (n % 100 == 0 || final) {
        std::ostringstream os;
        os << "step " << n << " t = " << e.members[0].state.t << " / " << t_end
           << " dt = " << dt;
        log(opt, os.str());
      }
    }
    if (e.members[0].state.t == 0.0) snapshots(true);
  } catch (...) {
    flush();
    throw;
  }
  flush();
  return e;
}

// ---------------------------------------------------------------------------
// Checks.

double max_relative_increase(const std::vector<double>& y) {
  double worst = 0.0;
  for (std::size_t k = 1; k < y.size(); ++k) {
    const double inc = y[k] - y[k - 1];
    if (inc <= 0.0) continue;
    worst = std::max(worst, y[k - 1] > 0.0 ? inc / y[k - 1] : kInf);
  }
  return worst;
}

void member_checks(Report& r, const std::string& prefix, const ExperimentConfig& c,
                   const Timescales& s, const TimeSeries& ts, bool full) {
  const auto t = ts.column("t");
  const auto energy = ts.column("energy");
  const auto solver = ts.column("solver_energy");
  const std::size_t n = t.size();

  const double inc = max_relative_increase(solver);
  r.add(prefix + "energy_monotone", "E_h(t_{n+1}) <= E_h(t_n) (1 + 1e-10) for every step", inc,
        1e-10, inc <= 1e-10);

  double worst = 0.0;
  if (energy[0] > 0.0) {
    for (std::size_t k = 5; k < n; ++k) {
      worst = std::max(worst, energy[k] / (energy[0] * std::exp(-s.beta1 * t[k])));
    }
  }
  r.add(prefix + "energy_decay_bound",
        "int rho|v|^2 (t) <= 1.05 int rho0|v0|^2 exp(-beta1 t), beta1 = " + fmt(s.beta1) +
            ", first 5 steps excluded",
        worst, 1.05, worst <= 1.05);

  const auto rmin = ts.column("rho_min");
  const auto rmax = ts.column("rho_max");
  double viol = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    viol = std::max({viol, -rmin[k], rmax[k] - c.rho_star});
  }
  r.add(prefix + "density_bounds", "0 <= rho <= rho* = " + fmt(c.rho_star) + " at every step",
        viol, 0.0, viol <= 0.0);

  const auto mass = ts.column("mass");
  const double drift = mass[0] > 0.0 ? std::abs(mass[n - 1] - mass[0]) / mass[0] : 0.0;
  const double allowed = 1e-10 * std::max(1.0, static_cast<double>(n - 1) / 1000.0);
  r.add(prefix + "mass_drift", "|m(t) - m(0)| / m(0) <= 1e-10 per 1000 steps", drift, allowed,
        drift <= allowed);

  const double lp = std::max(max_relative_increase(ts.column("rho_l2")),
                             max_relative_increase(ts.column("rho_l4")));
  r.add(prefix + "lp_monotone", "||rho||_p non-increasing (p = 2, 4), relative slack 1e-12", lp,
        1e-12, lp <= 1e-12);

  double div = 0.0;
  for (double d : ts.column("div_max")) div = std::max(div, d);
  r.add(prefix + "divergence", "max |div v| <= 1e-8 after every projection", div, 1e-8, div <= 1e-8);

  if (!full) return;

  const bool moving = energy[0] > 0.0;
  const double t_end = t.back();
  if (moving) {
    const double t0 = 0.1 * t_end;
    const DecayFit fe = fit_decay_rate(ts, "energy", t0, t_end);
    const DecayFit fg = fit_decay_rate(ts, "grad_v", t0, t_end);
    r.add(prefix + "grad_rate", "fitted decay rate of ||grad v||_2 on [" + fmt(t0) + ", " +
              fmt(t_end) + "] > 0", fg.rate, 0.0, fg.rate > 0.0);
    r.add(prefix + "energy_rate", "fitted decay rate of int rho|v|^2 >= beta1", fe.rate, s.beta1,
          fe.rate >= s.beta1);
    r.notes.push_back(prefix + "fitted rates: energy " + fmt(fe.rate) + ", grad_v " + fmt(fg.rate) +
                      " (half the energy rate: " + fmt(0.5 * fe.rate) + ")");
  } else {
    r.add(prefix + "grad_rate", "zero velocity: no decay to fit", 0.0, 0.0, true);
    r.add(prefix + "energy_rate", "zero velocity: no decay to fit", 0.0, 0.0, true);
  }

  const double beta = s.beta1 / 4.0;
  const double T = s.T;
  auto tail_fraction = [&](const std::vector<double>& y, double b, bool times_t) {
    const double total = weighted_integral(t, y, b, -kInf, kInf, times_t);
    const double tail = weighted_integral(t, y, b, T, kInf, times_t);
    return total > 0.0 ? tail / total : 0.0;
  };
  const auto vt_rho = ts.column("vt_rho");
  const auto lap = ts.column("lap_v");
  const auto gp = ts.column("grad_p");
  const auto gvt = ts.column("grad_vt");
  const auto vt = ts.column("vt");
  const auto ginf = ts.column("grad_v_inf");
  std::vector<double> y2a(n), y3(n);
  for (std::size_t k = 0; k < n; ++k) {
    y2a[k] = vt_rho[k] + lap[k] + gp[k];
    y3[k] = gvt[k] + vt[k];
  }
  const std::string window = " over [T, 2T] / over [0, 2T], beta = beta1/4 = " + fmt(beta);
  const double f2a = tail_fraction(y2a, beta, false);
  r.add(prefix + "saturation_2a",
        "int e^{2 beta t} (||sqrt(rho) v_t||^2 + ||Lap v||^2 + ||grad P||^2)" + window + " < 0.01",
        f2a, 0.01, f2a < 0.01);
  const double f3 = tail_fraction(y3, beta, true);
  r.add(prefix + "saturation_3", "int t e^{2 beta t} (||grad v_t||^2 + ||v_t||^2)" + window + " < 0.01",
        f3, 0.01, f3 < 0.01);
  double sup_all = 0.0, sup_tail = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = t[k] * std::exp(2.0 * beta * t[k]) * vt_rho[k];
    sup_all = std::max(sup_all, w);
    if (t[k] >= T) sup_tail = std::max(sup_tail, w);
  }
  const double f3s = sup_all > 0.0 ? sup_tail / sup_all : 0.0;
  r.add(prefix + "saturation_3_sup",
        "sup t e^{2 beta t} ||sqrt(rho) v_t||^2 over [T, 2T] / over [0, 2T] < 0.01", f3s, 0.01,
        f3s < 0.01);
  const double f210 = tail_fraction(ginf, 0.5 * beta, false);
  r.add(prefix + "saturation_2_10", "int e^{beta t} ||grad v||_inf" + window + " < 0.01", f210, 0.01,
        f210 < 0.01);

  const auto lag = ts.column("lag_residual");
  const auto det = ts.column("det_error");
  r.notes.push_back(prefix + "Lagrangian constancy residual ||rho(t, X) - rho0||_1 at t_end: " +
                    fmt(lag.back()) + "; max |det(Id + D) - 1|: " + fmt(det.back()));
  const double rho_min0 = rmin[0];
  if (rho_min0 <= 0.0) {
    r.notes.push_back(prefix + "initial density has vacuum: density perturbations outside supp rho0 "
                      "have infinite X-norm");
  }
}

const char* title_of(const ExperimentConfig& c) {
  switch (c.scenario) {
    case ExperimentConfig::Scenario::kSingle: return "single run";
    case ExperimentConfig::Scenario::kPair: return "paired run";
    case ExperimentConfig::Scenario::kTriple: return "intermediate triple";
    case ExperimentConfig::Scenario::kSweep: return "perturbation sweep";
  }
  return "";
}

struct Analysis {
  double beta = 0.0;
  std::vector<StabilityReport> stability;
  Report report;
  TimeSeries table;
  std::map<std::string, double> slopes;
};

bool finite_nonnegative(const StabilityReport& s) {
  const auto keys = StabilityReport::keys();
  const auto vals = s.values();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (keys[k] == "x_norm" && s.x_norm_infinite) continue;
    if (!std::isfinite(vals[k]) || vals[k] < 0.0) return false;
  }
  return true;
}

Analysis analyze_ensemble(const ExperimentConfig& c, const Timescales& s,
                          const std::vector<MemberInit>& inits, const std::vector<TimeSeries>& series,
                          const std::vector<PairedRun>& pairs) {
  Analysis a;
  a.report.title = title_of(c);
  for (std::size_t k = 0; k < series.size(); ++k) {
    member_checks(a.report, inits[k].name + ":", c, s, series[k], false);
  }

  // Weight rate.
  double fitted = 0.0;
  bool have_fit = false;
  if (series[0].at(0, "energy") > 0.0) {
    try {
      fitted = fit_decay_rate(series[0], "energy", 0.0, s.t_end).rate;
      have_fit = fitted > 0.0;
    } catch (const Error&) {
      have_fit = false;
    }
  }
  if (c.beta > 0.0) {
    a.beta = c.beta;
    if (have_fit) {
      a.report.add("beta_admissible", "beta <= fitted energy rate / 4 of " + inits[0].name, a.beta,
                   fitted / 4.0, a.beta <= fitted / 4.0 * (1.0 + 1e-12));
    }
  } else {
    a.beta = have_fit ? fitted / 4.0 : s.beta1 / 4.0;
  }
  a.report.notes.push_back("beta = " + fmt(a.beta) +
                           (c.beta > 0.0 ? " (configured)"
                                         : have_fit ? " (a quarter of the fitted energy rate " + fmt(fitted) + ")"
                                                    : " (beta1/4: no energy decay to fit)"));

  for (const PairedRun& p : pairs) {
    const StabilityReport sr = stability_functionals(p, a.beta);
    a.stability.push_back(sr);
    const std::string pre = "pair " + p.name + ":";
    a.report.add(pre + "finite", "stability report entries finite and nonnegative", finite_nonnegative(sr) ? 0.0 : 1.0,
                 0.0, finite_nonnegative(sr));
    if (sr.decompositions > 0) {
      a.report.add(pre + "decomposition_residual", "max ||div w_bar - div(dA u2)||_2 <= 1e-8 over " +
                       std::to_string(sr.decompositions) + " sampled times",
                   sr.decomposition_residual_max, 1e-8, sr.decomposition_residual_max <= 1e-8);
      a.report.add(pre + "decomposition_gap",
                   "max ||div(A1 z)||_2 / (1 + ||grad du||_2) <= 1e-6 over sampled times",
                   sr.decomposition_gap_max, 1e-6, sr.decomposition_gap_max <= 1e-6);
    }
    if (sr.x_norm_infinite) {
      a.report.notes.push_back(pre + "X-norm of drho0 relative to rho0 of the second member is infinite "
                               "(support condition fails); compare through the intermediate_triple scenario");
    }
  }

  if (c.scenario == ExperimentConfig::Scenario::kTriple) {
    const StabilityReport& p1 = a.stability[0];
    const StabilityReport& p2 = a.stability[1];
    const StabilityReport& direct = a.stability[2];
    a.report.add("triple:x_norm_1_I", "||drho0||_X of pair (1, I) finite", p1.x_norm, kInf,
                 !p1.x_norm_infinite);
    a.report.add("triple:x_norm_2_I", "||drho0||_X of pair (2, I) finite", p2.x_norm, kInf,
                 !p2.x_norm_infinite);
    const IntermediateData idata = [&] {
      IntermediateData d;
      d.holds = true;
      try {
        d = intermediate_data(inits[0].rho, inits[1].rho, inits[1].v);
      } catch (const Error&) {
        d.holds = false;
      }
      return d;
    }();
    if (!idata.holds) {
      // Recompute the two sides for the report.
      const auto r1 = inits[0].rho.rho.values(), r2 = inits[1].rho.rho.values();
      double acc = 0.0;
      for (std::size_t k = 0; k < r1.size(); ++k) {
        const double sum = r1[k] + r2[k];
        if (sum > 0.0) acc += std::pow(0.5 * (r2[k] - r1[k]), 4) / (sum * sum);
      }
      const double xn = std::pow(acc * inits[0].rho.grid().cell_area(), 0.25);
      const double bound = std::sqrt(l2_norm(inits[0].rho.rho - inits[1].rho.rho));
      a.report.add("triple:dvr", "||(rho2 - rho1)/2 / sqrt(rho1 + rho2)||_4 <= ||rho1 - rho2||_2^{1/2}",
                   xn, bound, false);
    } else {
      a.report.add("triple:dvr", "||(rho2 - rho1)/2 / sqrt(rho1 + rho2)||_4 <= ||rho1 - rho2||_2^{1/2}",
                   idata.x_norm, idata.bound, true);
    }
    const double combined = p1.lhs + p2.lhs;
    a.report.add("triple:triangle", "LHS(1, 2) <= 1.05 (LHS(1, I) + LHS(2, I))", direct.lhs,
                 1.05 * combined, direct.lhs <= 1.05 * combined);
    if (direct.x_norm_infinite) {
      a.report.notes.push_back("direct pair (1, 2) has infinite X-norm; the partial pairs carry the estimate");
    }
  }

  if (c.scenario == ExperimentConfig::Scenario::kSweep) {
    a.table = TimeSeries({"amplitude", "drho0_l2", "dv0_weighted", "data_functional", "sup_drho_neg",
                          "grad_dv_weighted", "grad_du_weighted", "sup_weighted_du", "lhs", "ratio",
                          "x_norm"});
    std::vector<double> drho0, dv0, data, neg, gdv, lhs, ratio;
    for (std::size_t k = 0; k < a.stability.size(); ++k) {
      const StabilityReport& sr = a.stability[k];
      a.table.add({c.amplitudes[k], sr.drho0_l2, sr.dv0_weighted, sr.data_functional, sr.sup_drho_neg,
                   sr.grad_dv_weighted, sr.grad_du_weighted, sr.sup_weighted_du, sr.lhs, sr.ratio,
                   sr.x_norm});
      drho0.push_back(sr.drho0_l2);
      dv0.push_back(sr.dv0_weighted);
      data.push_back(sr.data_functional);
      neg.push_back(sr.sup_drho_neg);
      gdv.push_back(sr.grad_dv_weighted);
      lhs.push_back(sr.lhs);
      ratio.push_back(sr.ratio);
    }
    auto slope = [&](const std::string& name, const std::vector<double>& x, const std::vector<double>& y) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = loglog_slope(x, y);
      } catch (const Error&) {
      }
      a.slopes[name] = v;
      return v;
    };
    slope("lhs_vs_data", data, lhs);
    slope("grad_dv_vs_data", data, gdv);
    if (c.sweep_kind == ExperimentConfig::SweepKind::kDensity) {
      const double s1 = slope("drho_neg_vs_drho0", drho0, neg);
      const double s2 = slope("grad_dv_vs_drho0", drho0, gdv);
      slope("lhs_vs_drho0", drho0, lhs);
      a.report.add("sweep:slope_drho_neg", "log-log slope of sup_t ||drho||_{W^-1_2} against ||drho0||_2 >= 0.45",
                   s1, 0.45, s1 >= 0.45);
      a.report.add("sweep:slope_grad_dv",
                   "log-log slope of (int e^{2 beta t} ||grad dv||^2)^{1/2} against ||drho0||_2 >= 0.45", s2,
                   0.45, s2 >= 0.45);
    } else {
      const double s1 = slope("lhs_vs_dv0", dv0, lhs);
      const double s2 = slope("grad_dv_vs_dv0", dv0, gdv);
      const double s3 = slope("drho_neg_vs_dv0", dv0, neg);
      a.report.add("sweep:slope_lhs", "|slope of LHS against ||sqrt(rho0) dv0||_2 - 1| <= 0.1",
                   std::abs(s1 - 1.0), 0.1, std::abs(s1 - 1.0) <= 0.1);
      a.report.add("sweep:slope_grad_dv",
                   "|slope of (int e^{2 beta t} ||grad dv||^2)^{1/2} against ||sqrt(rho0) dv0||_2 - 1| <= 0.1",
                   std::abs(s2 - 1.0), 0.1, std::abs(s2 - 1.0) <= 0.1);
      a.report.add("sweep:slope_drho_neg",
                   "|slope of sup_t ||drho||_{W^-1_2} against ||sqrt(rho0) dv0||_2 - 1| <= 0.1",
                   std::abs(s3 - 1.0), 0.1, std::abs(s3 - 1.0) <= 0.1);
    }
    std::vector<double> sorted = ratio;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[(sorted.size() - 1) / 2] + sorted[sorted.size() / 2]);
    double spread = 0.0;
    for (double r : ratio) spread = std::max(spread, median > 0.0 ? std::abs(r / median - 1.0) : kInf);
    a.report.add("sweep:ratio_stable", "max |ratio / median(ratio) - 1| <= 0.3, ratio = LHS / data functional",
                 spread, 0.3, spread <= 0.3);
    for (const auto& [name, v] : a.slopes) a.report.notes.push_back("slope " + name + " = " + fmt(v));
  }
  return a;
}

std::string csv_escape(const std::string& s) {
  std::string out = s;
  std::replace(out.begin(), out.end(), ',', ';');
  std::replace(out.begin(), out.end(), '\n', ' ');
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string stability_csv(const std::vector<StabilityReport>& reports) {
  if (reports.empty()) return "";
  std::string out = reports[0].csv_header() + "\n";
  for (const auto& r : reports) out += r.csv_row() + "\n";
  return out;
}

void write_report(const std::string& dir, const Report& r) {
  write_text_file(path_join(dir, "report.txt"), r.text());
  write_text_file(path_join(dir, "report.csv"), r.csv());
}

PairedRun reload_pair(const ExperimentConfig& c, const std::string& dir, const PairSpec& ps,
                      const std::vector<MemberInit>& inits, const std::vector<TimeSeries>& series) {
  PairedRun p = make_paired_run(ps.name, ps.first, ps.second,
                                make_state(inits[ps.first].rho, inits[ps.first].v, c.mu),
                                make_state(inits[ps.second].rho, inits[ps.second].v, c.mu), c.cadence);
  p.steps = TimeSeries::read_csv(path_join(dir, "pair_" + ps.name + "_steps.csv"));
  p.samples = TimeSeries::read_csv(path_join(dir, "pair_" + ps.name + "_samples.csv"));
  p.decompositions = TimeSeries::read_csv(path_join(dir, "pair_" + ps.name + "_decompositions.csv"));
  p.step_count = static_cast<long>(p.steps.size());
  double clamp = 0.0;
  for (int k : {ps.first, ps.second}) {
    for (double x : series[k].column("clamp_fraction")) clamp = std::max(clamp, x);
  }
  p.clamp_fraction = clamp;
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

void Report::add(const std::string& name, const std::string& inequality, double lhs, double rhs,
                 bool pass) {
  checks.push_back({name, inequality, lhs, rhs, pass});
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string Report::text() const {
  std::ostringstream os;
  os << title << "\n";
  for (const Check& c : checks) {
    os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.inequality << "\n"
       << "       lhs = " << fmt(c.lhs) << ", rhs = " << fmt(c.rhs) << "\n";
  }
  for (const std::string& n : notes) os << "note: " << n << "\n";
  os << "overall: " << (passed() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string Report::csv() const {
  std::string out = "name,inequality,lhs,rhs,pass\n";
  for (const Check& c : checks) {
    out += csv_escape(c.name) + "," + csv_escape(c.inequality) + "," + fmt(c.lhs) + "," + fmt(c.rhs) +
           "," + (c.pass ? "1" : "0") + "\n";
  }
  return out;
}

Report Report::from_csv(const std::string& text) {
  Report r;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "name,inequality,lhs,rhs,pass") {
    throw Error(ErrorCode::kIo, "report CSV: unexpected header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw Error(ErrorCode::kIo, "report CSV: malformed row '" + line + "'");
    Check c;
    c.name = f[0];
    c.inequality = f[1];
    try {
      c.lhs = std::stod(f[2]);
      c.rhs = std::stod(f[3]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIo, "report CSV: bad number in '" + line + "'");
    }
    c.pass = f[4] == "1";
    r.checks.push_back(c);
  }
  return r;
}

std::vector<std::string> member_channels() {
  return {"t",          "dt",          "energy",     "solver_energy",   "grad_v",          "mass",
          "rho_min",    "rho_max",     "rho_l2",     "rho_l4",          "div_max",         "predictor_iters",
          "poisson_iters", "advect_substeps", "clipped", "vt_rho",     "lap_v",           "grad_p",
          "grad_vt",    "vt",          "grad_v_inf", "det_error",       "clamp_fraction",  "lag_residual"};
}

std::vector<MemberInit> build_members(const ExperimentConfig& c) {
  using S = ExperimentConfig::Scenario;
  const Grid g = c.grid();
  std::vector<MemberInit> out;
  MemberInit m1;
  m1.rho = make_patch(c.density, g, c.rho_star);
  m1.v = make_initial_velocity(c.velocity, g) + noise_field(g, c.velocity_noise, c.seed);
  if (c.scenario == S::kSingle || c.scenario == S::kSweep) {
    m1.name = "base";
    out.push_back(m1);
  }
  if (c.scenario == S::kPair || c.scenario == S::kTriple) {
    m1.name = "member1";
    MemberInit m2;
    m2.name = "member2";
    m2.rho = make_patch(c.density2, g, c.rho_star);
    m2.v = make_initial_velocity(c.velocity2, g) + noise_field(g, c.velocity2_noise, c.seed + 1);
    out.push_back(m1);
    out.push_back(m2);
    if (c.scenario == S::kTriple) {
      const IntermediateData d = intermediate_data(m1.rho, m2.rho, m2.v);
      out.push_back({"intermediate", d.rho, d.v});
    }
  }
  if (c.scenario == S::kSweep) {
    PatchSpec shape;
    shape.shapes = parse_shapes(c.sweep_shape);
    VelocitySpec mode;
    mode.kind = VelocitySpec::Kind::kSin2;
    mode.kx = c.mode_kx;
    mode.ky = c.mode_ky;
    mode.amplitude = c.mode_amplitude;
    for (std::size_t k = 0; k < c.amplitudes.size(); ++k) {
      const double a = c.amplitudes[k];
      MemberInit m;
      m.name = "amp" + std::to_string(k);
      m.rho = m1.rho;
      m.v = m1.v;
      if (c.sweep_kind == ExperimentConfig::SweepKind::kDensity) {
        const DensityField chi = make_patch(shape, g, c.rho_star);
        m.rho.rho += a * chi.rho;
        if (m.rho.rho.max() > c.rho_star) {
          throw Error(ErrorCode::kConfig, "sweep amplitude " + fmt(a) + " pushes the density above rho*");
        }
      } else {
        m.v += a * make_initial_velocity(mode, g);
      }
      out.push_back(std::move(m));
    }
  }
  return out;
}

Timescales resolve_timescales(const ExperimentConfig& c) {
  Timescales s;
  s.domain = poincare_constant(c.grid());
  const double cp = s.domain.poincare_constant;
  s.beta1 = 2.0 * c.mu / (c.rho_star * cp * cp);
  s.T = c.T > 0.0 ? c.T : std::log(1000.0) / s.beta1;
  const double factor =
      c.end_factor > 0.0 ? c.end_factor : (c.scenario == ExperimentConfig::Scenario::kSingle ? 2.0 : 1.0);
  s.t_end = factor * s.T;
  return s;
}

Report single_report(const ExperimentConfig& c, const Timescales& s, const TimeSeries& series) {
  Report r;
  r.title = title_of(c);
  member_checks(r, "", c, s, series, true);
  r.notes.push_back("C_P = " + fmt(s.domain.poincare_constant) + ", beta1 = " + fmt(s.beta1) +
                    ", T = " + fmt(s.T) + ", t_end = " + fmt(s.t_end));
  return r;
}

SingleResult run_single(const ExperimentConfig& c_in, const RunOptions& opt) {
  ExperimentConfig c = c_in;
  c.scenario = ExperimentConfig::Scenario::kSingle;
  if (!opt.out_dir.empty()) {
    ensure_directory(opt.out_dir);
    write_text_file(path_join(opt.out_dir, "config.txt"), format_config(c));
  }
  SingleResult res;
  res.scales = resolve_timescales(c);
  const auto inits = build_members(c);
  Engine e = run_engine(c, res.scales, inits, opt);
  Member& m = e.members[0];
  res.series = m.series;
  res.flow = m.flow;
  res.rho0 = m.rho0;
  res.lagrangian_residual = m.series.row(m.series.size() - 1).back();
  res.final_state = m.state;
  res.report = single_report(c, res.scales, res.series);
  if (!opt.out_dir.empty()) {
    write_report(opt.out_dir, res.report);
  }
  return res;
}

namespace {

EnsembleResult run_ensemble(const ExperimentConfig& c, const RunOptions& opt) {
  if (!opt.out_dir.empty()) {
    ensure_directory(opt.out_dir);
    write_text_file(path_join(opt.out_dir, "config.txt"), format_config(c));
  }
  EnsembleResult res;
  res.scales = resolve_timescales(c);
  const auto inits = build_members(c);
  Engine e = run_engine(c, res.scales, inits, opt);
  for (const Member& m : e.members) {
    res.member_names.push_back(m.name);
    res.series.push_back(m.series);
  }
  const Analysis a = analyze_ensemble(c, res.scales, inits, res.series, e.pairs);
  res.beta = a.beta;
  for (std::size_t k = 0; k < e.pairs.size(); ++k) {
    PairOutcome po;
    po.pair = e.pairs[k];
    po.stability = a.stability[k];
    po.flow1 = e.members[e.pairs[k].first].flow;
    po.flow2 = e.members[e.pairs[k].second].flow;
    res.pairs.push_back(std::move(po));
  }
  res.report = a.report;
  res.sweep_table = a.table;
  res.slopes = a.slopes;
  if (!opt.out_dir.empty()) {
    for (const StabilityReport& sr : a.stability) {
      write_text_file(path_join(opt.out_dir, "stability_" + sr.name + ".txt"), sr.text());
    }
    write_text_file(path_join(opt.out_dir, "stability.csv"), stability_csv(a.stability));
    if (c.scenario == ExperimentConfig::Scenario::kSweep) {
      a.table.write_csv(path_join(opt.out_dir, "sweep.csv"));
    }
    write_report(opt.out_dir, res.report);
  }
  return res;
}

}  // namespace

EnsembleResult run_pair(const ExperimentConfig& c_in, const RunOptions& opt) {
  ExperimentConfig c = c_in;
  c.scenario = ExperimentConfig::Scenario::kPair;
  return run_ensemble(c, opt);
}

EnsembleResult run_intermediate_triple(const ExperimentConfig& c_in, const RunOptions& opt) {
  ExperimentConfig c = c_in;
  c.scenario = ExperimentConfig::Scenario::kTriple;
  return run_ensemble(c, opt);
}

EnsembleResult run_sweep(const ExperimentConfig& c_in, const RunOptions& opt) {
  ExperimentConfig c = c_in;
  c.scenario = ExperimentConfig::Scenario::kSweep;
  // Re-run validation for the sweep preconditions.
  c = parse_config(format_config(c));
  return run_ensemble(c, opt);
}

Report run_scenario(const ExperimentConfig& c, const RunOptions& opt) {
  switch (c.scenario) {
    case ExperimentConfig::Scenario::kSingle: return run_single(c, opt).report;
    case ExperimentConfig::Scenario::kPair: return run_pair(c, opt).report;
    case ExperimentConfig::Scenario::kTriple: return run_intermediate_triple(c, opt).report;
    case ExperimentConfig::Scenario::kSweep: return run_sweep(c, opt).report;
  }
  return {};
}

VerifyResult verify_directory(const std::string& dir) {
  VerifyResult v;
  const ExperimentConfig c = load_config(path_join(dir, "config.txt"));
  v.stored = Report::from_csv(read_text_file(path_join(dir, "report.csv")));
  const Timescales s = resolve_timescales(c);
  if (c.scenario == ExperimentConfig::Scenario::kSingle) {
    v.recomputed = single_report(c, s, TimeSeries::read_csv(path_join(dir, "timeseries.csv")));
  } else {
    const auto inits = build_members(c);
    std::vector<TimeSeries> series;
    for (const MemberInit& m : inits) {
      series.push_back(TimeSeries::read_csv(path_join(dir, "member_" + m.name + ".csv")));
    }
    std::vector<PairedRun> pairs;
    for (const PairSpec& ps : pair_specs(c)) pairs.push_back(reload_pair(c, dir, ps, inits, series));
    v.recomputed = analyze_ensemble(c, s, inits, series, pairs).report;
  }
  if (v.stored.checks.size() != v.recomputed.checks.size()) {
    v.mismatches.push_back("stored report has " + std::to_string(v.stored.checks.size()) +
                           " checks, recomputed " + std::to_string(v.recomputed.checks.size()));
  }
  const std::size_t n = std::min(v.stored.checks.size(), v.recomputed.checks.size());
  auto close = [](double a, double b) {
    if (a == b) return true;
    if (std::isnan(a) && std::isnan(b)) return true;
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
  };
  for (std::size_t k = 0; k < n; ++k) {
    const Check& a = v.stored.checks[k];
    const Check& b = v.recomputed.checks[k];
    if (a.name != csv_escape(b.name) || a.pass != b.pass || !close(a.lhs, b.lhs) || !close(a.rhs, b.rhs)) {
      v.mismatches.push_back(a.name + ": stored (" + fmt(a.lhs) + ", " + fmt(a.rhs) + ", " +
                             (a.pass ? "pass" : "fail") + ") recomputed (" + fmt(b.lhs) + ", " + fmt(b.rhs) +
                             ", " + (b.pass ? "pass" : "fail") + ")");
    }
  }
  v.consistent = v.mismatches.empty();
  return v;
}

}  // namespace pflow
