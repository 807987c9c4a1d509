#ifndef MCSBD_EXPERIMENTS_HPP_
#define MCSBD_EXPERIMENTS_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mcsbd/io.hpp"
#include "mcsbd/model.hpp"
#include "mcsbd/precond.hpp"
#include "mcsbd/recover.hpp"
#include "mcsbd/rounding.hpp"
#include "mcsbd/sphere.hpp"

namespace mcsbd::harness {

enum class ExperimentKind { convergence, vary_theta, phase_pn, geometry_probe, single_solve, solve_2d };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::vary_theta: return "vary-theta";
    case ExperimentKind::phase_pn: return "phase-pn";
    case ExperimentKind::geometry_probe: return "geometry";
    case ExperimentKind::single_solve: return "solve";
    case ExperimentKind::solve_2d: return "solve2d";
  }
  return "?";
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::phase_pn;
  std::vector<std::size_t> n_list{100};
  std::vector<std::size_t> p_list{50};
  std::vector<double> theta_list{0.25};
  std::vector<LossSpec> losses{LossSpec::huber()};
  std::size_t trials = 15;
  std::uint64_t seed = 0;
  double threshold = kSuccessThreshold;
  std::filesystem::path out_dir = "out";

  // Phase 1 uses the line search for every loss (a Riemannian subgradient
  // method for l1); l1 skips rounding unless asked.
  std::size_t phase1_iters = 100;
  Linesearch linesearch{};
  bool round_l1 = false;
  RoundingConfig rounding{};

  // Geometry probes.
  std::size_t probe_samples = 1000;
  std::size_t sharpness_samples = 1000;
  std::size_t coverage_draws = 10000;

  std::size_t threads = 0;  // 0: MCSBD_THREADS, else hardware concurrency
  bool record_time = false;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (n_list.empty() || p_list.empty() || theta_list.empty() || losses.empty()) {
      throw ConfigError("experiment grids must be non-empty");
    }
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("success threshold must lie in (0, 1]");
    for (auto n : n_list) {
      if (n < 2) throw ConfigError("every n must be >= 2");
    }
    for (auto p : p_list) {
      if (p < 1) throw ConfigError("every p must be >= 1");
    }
    for (double t : theta_list) {
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("every theta must lie in (0, 1]");
    }
    for (const auto& l : losses) l.validate();
    RgdConfig<1> probe;
    probe.step = linesearch;
    probe.validate();
    rounding.validate();
  }
};

// ---------------------------------------------------------------------------
// Deterministic parallel map: slot i is always written by task i, so output
// order never depends on scheduling. The first failing task (lowest index)
// is rethrown after all workers join.
// ---------------------------------------------------------------------------

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MCSBD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename T>
double median(std::vector<T> values) {
  if (values.empty()) return std::nan("");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double hi = static_cast<double>(values[mid]);
  if (values.size() % 2) return hi;
  const double lo = static_cast<double>(*std::max_element(values.begin(), values.begin() + mid));
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Single-instance pipeline: Phase 1 on the sphere, then optional rounding.
// ---------------------------------------------------------------------------

struct PipelineConfig {
  LossSpec loss{};
  std::size_t phase1_iters = 100;
  StepMode step = Linesearch{};
  bool round = true;
  RoundingConfig rounding{};
};

/// The per-loss pipeline used by every 1D experiment.
inline PipelineConfig pipeline_for(const ExperimentSpec& spec, const LossSpec& loss) {
  PipelineConfig cfg;
  cfg.loss = loss;
  cfg.phase1_iters = spec.phase1_iters;
  cfg.rounding = spec.rounding;
  cfg.step = spec.linesearch;
  if (loss.kind == LossKind::l1) cfg.round = spec.round_l1;
  return cfg;
}

template <std::size_t Rank>
struct PipelineResult {
  SolverState<Rank> phase1;
  std::optional<RoundingResult<Rank>> phase2;
  Field<Rank> q_star;
};

template <std::size_t Rank>
PipelineResult<Rank> solve_preconditioned(const PreconditionedSet<Rank>& pre, const PipelineConfig& cfg,
                                          const InitMode<Rank>& init, const std::type_identity_t<DistanceFn<Rank>>& dist = {}) {
  RgdConfig<Rank> rgd;
  rgd.loss = cfg.loss;
  rgd.max_iters = cfg.phase1_iters;
  rgd.step = cfg.step;
  rgd.init = init;
  PipelineResult<Rank> out;
  out.phase1 = rgd_solve(pre, rgd, dist);
  if (cfg.round) {
    out.phase2 = lp_round(pre, out.phase1.q, cfg.rounding, dist);
    out.q_star = out.phase2->q;
  } else {
    out.q_star = out.phase1.q;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeds: every cell/trial seed is a hash of its coordinates, so adding cells
// never reshuffles existing ones. The loss is deliberately left out: all
// losses in a cell see the same instance and the same initial point.
// ---------------------------------------------------------------------------

inline std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t p, double theta, std::size_t trial) {
  return hash_combine({master, static_cast<std::uint64_t>(Stream::trial), n, p, hash_word(theta), trial});
}

struct TrialOutcome {
  std::size_t n = 0;
  std::size_t p = 0;
  double theta = 0.0;
  std::string loss;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double rho_acc = 0.0;
  double kernel_dist = 0.0;  // signed-shift distance of the recovered kernel
  double phase1_dist = 0.0;  // rotated distance before rounding
  bool success = false;
  std::size_t phase1_iters = 0;
  StopReason phase1_stop = StopReason::running;
  std::size_t phase2_iters = 0;
  double wall_s = 0.0;
};

struct ConvergenceRow {
  std::string phase;  // "rgd" or "round"
  std::size_t iter = 0;
  double dist = 0.0;
  double objective = 0.0;
};

/// One seeded trial; optionally captures the per-iterate distance trace.
inline TrialOutcome run_trial(const ExperimentSpec& spec, std::size_t n, std::size_t p, double theta,
                              const LossSpec& loss, std::size_t trial,
                              std::vector<ConvergenceRow>* trace = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  TrialOutcome out;
  out.n = n;
  out.p = p;
  out.theta = theta;
  out.loss = to_string(loss.kind);
  out.trial = trial;
  out.seed = trial_seed(spec.seed, n, p, theta, trial);

  const auto truth = synthesize<1>({n}, p, theta, out.seed);
  const auto pre = compute_preconditioner(forward(truth), theta);
  const auto cfg = pipeline_for(spec, loss);
  DistanceFn<1> dist;
  if (trace) dist = [&](const SignalVec& q) { return rotated_distance(truth.kernel, pre, q); };
  const auto res = solve_preconditioned<1>(pre, cfg, InitRandom<1>{out.seed}, dist);

  out.phase1_iters = res.phase1.iter;
  out.phase1_stop = res.phase1.stop;
  out.phase1_dist = rotated_distance(truth.kernel, pre, res.phase1.q);
  if (res.phase2) out.phase2_iters = res.phase2->iters;
  const auto score = score_recovery(truth, pre, res.q_star, spec.threshold);
  out.rho_acc = score.rho_acc;
  out.kernel_dist = score.shift_dist;
  out.success = score.success;

  if (trace) {
    // Rows are post-step iterates: iteration k is the point after k steps.
    for (const auto& r : res.phase1.trace) {
      if (r.iter > 0) trace->push_back({"rgd", r.iter, r.dist.value_or(std::nan("")), r.loss});
    }
    if (res.phase2) {
      for (const auto& r : res.phase2->trace) {
        if (r.iter > 0) trace->push_back({"round", r.iter, r.dist.value_or(std::nan("")), r.zeta});
      }
    }
  }
  out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

/// "# key=value" comment lines recording every parameter that shapes the
/// output. The thread count is deliberately absent.
inline void write_csv_preamble(std::ostream& os, const ExperimentSpec& spec) {
  std::string thetas, losses;
  for (std::size_t i = 0; i < spec.theta_list.size(); ++i) thetas += (i ? " " : "") + format_double(spec.theta_list[i]);
  for (std::size_t i = 0; i < spec.losses.size(); ++i) {
    losses += (i ? " " : "") + to_string(spec.losses[i].kind);
    if (spec.losses[i].kind == LossKind::huber) losses += "(mu=" + format_double(spec.losses[i].mu) + ")";
  }
  os << "# kind=" << to_string(spec.kind) << '\n'
     << "# seed=" << spec.seed << '\n'
     << "# n=" << join_sizes(spec.n_list) << '\n'
     << "# p=" << join_sizes(spec.p_list) << '\n'
     << "# theta=" << thetas << '\n'
     << "# losses=" << losses << '\n'
     << "# trials=" << spec.trials << '\n'
     << "# threshold=" << format_double(spec.threshold) << '\n'
     << "# phase1_iters=" << spec.phase1_iters << '\n'
     << "# linesearch=tau0:" << format_double(spec.linesearch.tau0) << " eta:" << format_double(spec.linesearch.eta)
     << " beta:" << format_double(spec.linesearch.beta) << " max_backtracks:" << spec.linesearch.max_backtracks << '\n'
     << "# l1_rounded=" << (spec.round_l1 ? "yes" : "no") << '\n'
     << "# rounding=tau0:" << format_double(spec.rounding.tau0) << " eta:" << format_double(spec.rounding.eta)
     << " max_iters:" << spec.rounding.max_iters << " tol:" << format_double(spec.rounding.tol) << '\n';
}

inline std::ofstream open_csv(const ExperimentSpec& spec, const std::string& name) {
  return io::detail::open_out(spec.out_dir / name, false);
}

// ---------------------------------------------------------------------------
// Convergence traces
// ---------------------------------------------------------------------------

struct ConvergenceReport {
  struct Block {
    std::size_t n, p;
    double theta;
    std::string loss;
    std::size_t trial;
    std::vector<ConvergenceRow> rows;
  };
  std::vector<Block> blocks;
};

inline ConvergenceReport run_convergence(const ExperimentSpec& spec) {
  spec.validate();
  struct Job {
    std::size_t n, p;
    double theta;
    std::size_t loss, trial;
  };
  std::vector<Job> jobs;
  for (auto n : spec.n_list)
    for (auto p : spec.p_list)
      for (double theta : spec.theta_list)
        for (std::size_t l = 0; l < spec.losses.size(); ++l)
          for (std::size_t t = 0; t < spec.trials; ++t) jobs.push_back({n, p, theta, l, t});

  ConvergenceReport report;
  report.blocks.resize(jobs.size());
  parallel_for(jobs.size(), resolve_threads(spec.threads), [&](std::size_t j) {
    const auto& job = jobs[j];
    auto& block = report.blocks[j];
    block = {job.n, job.p, job.theta, to_string(spec.losses[job.loss].kind), job.trial, {}};
    run_trial(spec, job.n, job.p, job.theta, spec.losses[job.loss], job.trial, &block.rows);
  });
  return report;
}

inline void write_convergence_csv(std::ostream& os, const ExperimentSpec& spec, const ConvergenceReport& report) {
  write_csv_preamble(os, spec);
  os << "n,p,theta,loss,trial,phase,iter,dist,objective\n";
  for (const auto& b : report.blocks) {
    for (const auto& r : b.rows) {
      os << b.n << ',' << b.p << ',' << format_double(b.theta) << ',' << b.loss << ',' << b.trial << ',' << r.phase
         << ',' << r.iter << ',' << format_double(r.dist) << ',' << format_double(r.objective) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Success grids (vary-theta and phase-pn share the cell runner)
// ---------------------------------------------------------------------------

struct CellResult {
  std::size_t n = 0;
  std::size_t p = 0;
  double theta = 0.0;
  std::string loss;
  std::size_t successes = 0;
  std::size_t trials = 0;
  double median_dist = 0.0;
  double median_wall_s = 0.0;

  double fraction() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

struct GridReport {
  std::vector<CellResult> cells;     // sorted by (n, p, theta, loss order)
  std::vector<TrialOutcome> trials;  // sorted by cell, then trial
};

inline GridReport run_grid(const ExperimentSpec& spec) {
  spec.validate();
  struct Job {
    std::size_t cell, n, p;
    double theta;
    std::size_t loss, trial;
  };
  std::vector<Job> jobs;
  GridReport report;
  for (auto n : spec.n_list)
    for (auto p : spec.p_list)
      for (double theta : spec.theta_list)
        for (std::size_t l = 0; l < spec.losses.size(); ++l) {
          const std::size_t cell = report.cells.size();
          report.cells.push_back({n, p, theta, to_string(spec.losses[l].kind), 0, spec.trials, 0.0, 0.0});
          for (std::size_t t = 0; t < spec.trials; ++t) jobs.push_back({cell, n, p, theta, l, t});
        }

  report.trials.resize(jobs.size());
  parallel_for(jobs.size(), resolve_threads(spec.threads), [&](std::size_t j) {
    const auto& job = jobs[j];
    report.trials[j] = run_trial(spec, job.n, job.p, job.theta, spec.losses[job.loss], job.trial);
  });

  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    std::vector<double> dists, walls;
    auto& cell = report.cells[c];
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].cell != c) continue;
      cell.successes += report.trials[j].success ? 1 : 0;
      dists.push_back(report.trials[j].kernel_dist);
      walls.push_back(report.trials[j].wall_s);
    }
    cell.median_dist = median(dists);
    cell.median_wall_s = median(walls);
  }
  return report;
}

inline GridReport run_vary_theta(ExperimentSpec spec) {
  spec.kind = ExperimentKind::vary_theta;
  return run_grid(spec);
}

inline GridReport run_phase_pn(ExperimentSpec spec) {
  spec.kind = ExperimentKind::phase_pn;
  return run_grid(spec);
}

inline void write_cells_csv(std::ostream& os, const ExperimentSpec& spec, const GridReport& report) {
  write_csv_preamble(os, spec);
  os << "n,p,theta,loss,successes,trials,success_fraction,median_dist" << (spec.record_time ? ",median_wall_s" : "")
     << '\n';
  for (const auto& c : report.cells) {
    os << c.n << ',' << c.p << ',' << format_double(c.theta) << ',' << c.loss << ',' << c.successes << ',' << c.trials
       << ',' << format_double(c.fraction()) << ',' << format_double(c.median_dist);
    if (spec.record_time) os << ',' << format_double(c.median_wall_s);
    os << '\n';
  }
}

inline void write_trials_csv(std::ostream& os, const ExperimentSpec& spec, const GridReport& report) {
  write_csv_preamble(os, spec);
  os << "n,p,theta,loss,trial,seed,rho_acc,success,kernel_dist,phase1_dist,phase1_iters,phase1_stop,phase2_iters"
     << (spec.record_time ? ",wall_s" : "") << '\n';
  for (const auto& t : report.trials) {
    os << t.n << ',' << t.p << ',' << format_double(t.theta) << ',' << t.loss << ',' << t.trial << ',' << t.seed << ','
       << format_double(t.rho_acc) << ',' << (t.success ? 1 : 0) << ',' << format_double(t.kernel_dist) << ','
       << format_double(t.phase1_dist) << ',' << t.phase1_iters << ',' << to_string(t.phase1_stop) << ','
       << t.phase2_iters;
    if (spec.record_time) os << ',' << format_double(t.wall_s);
    os << '\n';
  }
}

/// Success fraction per (loss, theta, n) row with one column per p.
inline void write_matrix_csv(std::ostream& os, const ExperimentSpec& spec, const GridReport& report) {
  write_csv_preamble(os, spec);
  os << "loss,theta,n";
  for (auto p : spec.p_list) os << ",p" << p;
  os << '\n';
  std::map<std::tuple<std::size_t, std::size_t, double, std::string>, const CellResult*> index;
  for (const auto& c : report.cells) index[{c.n, c.p, c.theta, c.loss}] = &c;
  for (const auto& loss : spec.losses) {
    const auto name = to_string(loss.kind);
    for (double theta : spec.theta_list) {
      for (auto n : spec.n_list) {
        os << name << ',' << format_double(theta) << ',' << n;
        for (auto p : spec.p_list) os << ',' << format_double(index.at({n, p, theta, name})->fraction());
        os << '\n';
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Geometry probes on the orthogonal (identity-kernel) model
// ---------------------------------------------------------------------------

struct GeometryRow {
  std::size_t n = 0;
  std::size_t p = 0;
  double theta = 0.0;
  double mu = 0.0;
  double xi = 0.0;
  std::size_t samples = 0;
  double regularity_frac = 0.0;
  std::size_t implicit_pairs = 0;
  double implicit_frac = 0.0;
  double sharpness_min = 0.0;
  double sharpness_mean = 0.0;
  std::size_t coverage_draws = 0;
  double coverage_frac = 0.0;
};

/// Fraction of uniform-sphere draws in R^n that fall into some S_xi^{i+-}.
inline double init_coverage(std::size_t n, double xi, std::size_t draws, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t hits = 0;
  SignalVec q(Shape<1>{n});
  for (std::size_t s = 0; s < draws; ++s) {
    for (double& v : q) v = gauss(rng);
    if (region_of(q, xi)) ++hits;
  }
  return draws ? static_cast<double>(hits) / static_cast<double>(draws) : 0.0;
}

inline GeometryRow geometry_cell(const ExperimentSpec& spec, std::size_t n, std::size_t p, double theta) {
  double mu = kDefaultMu;
  for (const auto& l : spec.losses) {
    if (l.kind == LossKind::huber) {
      mu = l.mu;
      break;
    }
  }
  const auto loss = LossSpec::huber(mu);
  const std::uint64_t seed = trial_seed(spec.seed, n, p, theta, 0);
  const auto signals = sample_bg_signals<1>({n}, p, theta, seed);
  const auto simple = precondition_with_filter(ObservationSet<1>(signals), SignalVec::delta({n}));

  GeometryRow row;
  row.n = n;
  row.p = p;
  row.theta = theta;
  row.mu = mu;
  row.xi = coverage_margin(n);
  row.samples = spec.probe_samples;

  Rng rng = make_rng(seed, Stream::probe);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t regular = 0, implicit_ok = 0;
  for (std::size_t s = 0; s < spec.probe_samples; ++s) {
    const std::size_t i = pick(rng);
    const auto q = sample_region_point(n, row.xi, mu, i, rng);
    if (regularity_margin(simple, q, i, loss) > 0.0) ++regular;
    for (double m : implicit_regularization_margins(simple, q, i, loss)) {
      ++row.implicit_pairs;
      if (m > 0.0) ++implicit_ok;
    }
  }
  if (row.samples) row.regularity_frac = static_cast<double>(regular) / static_cast<double>(row.samples);
  if (row.implicit_pairs) row.implicit_frac = static_cast<double>(implicit_ok) / static_cast<double>(row.implicit_pairs);

  // Rounding warm start close to e_i: ||r_{-i}|| / r_i = 1/20.
  const std::size_t i = pick(rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SignalVec w(Shape<1>{n});
  for (double& v : w) v = gauss(rng);
  w[i] = 0.0;
  SignalVec r = SignalVec::basis({n}, i) + w * (0.05 / norm(w));
  r = normalized(r);
  const auto sharp = sharpness_probe(simple, r, SignalVec::basis({n}, i), spec.sharpness_samples, rng);
  row.sharpness_min = sharp.min_ratio;
  row.sharpness_mean = sharp.mean_ratio;

  row.coverage_draws = spec.coverage_draws;
  row.coverage_frac = init_coverage(n, row.xi, spec.coverage_draws, rng);
  return row;
}

inline std::vector<GeometryRow> run_geometry_probe(ExperimentSpec spec) {
  spec.kind = ExperimentKind::geometry_probe;
  spec.validate();
  struct Job {
    std::size_t n, p;
    double theta;
  };
  std::vector<Job> jobs;
  for (auto n : spec.n_list)
    for (auto p : spec.p_list)
      for (double theta : spec.theta_list) jobs.push_back({n, p, theta});
  std::vector<GeometryRow> rows(jobs.size());
  parallel_for(jobs.size(), resolve_threads(spec.threads),
               [&](std::size_t j) { rows[j] = geometry_cell(spec, jobs[j].n, jobs[j].p, jobs[j].theta); });
  return rows;
}

inline void write_geometry_csv(std::ostream& os, const ExperimentSpec& spec, const std::vector<GeometryRow>& rows) {
  write_csv_preamble(os, spec);
  os << "n,p,theta,mu,xi,samples,regularity_frac,implicit_pairs,implicit_frac,sharpness_min,sharpness_mean,"
        "coverage_draws,coverage_frac\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.p << ',' << format_double(r.theta) << ',' << format_double(r.mu) << ','
       << format_double(r.xi) << ',' << r.samples << ',' << format_double(r.regularity_frac) << ','
       << r.implicit_pairs << ',' << format_double(r.implicit_frac) << ',' << format_double(r.sharpness_min) << ','
       << format_double(r.sharpness_mean) << ',' << r.coverage_draws << ',' << format_double(r.coverage_frac)
       << '\n';
  }
}

}  // namespace mcsbd::harness

#endif  // MCSBD_EXPERIMENTS_HPP_
