// mcsbd: command-line front end for solving and for the experiment harness.
//
// Exit status: 0 success, 1 configuration/usage error, 2 runtime failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcsbd/mcsbd.hpp"

namespace {

using namespace mcsbd;
namespace fs = std::filesystem;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct SolveArgs {
  std::string input;
  std::string truth;
  std::string out = "result";
  std::string loss = "huber";
  double mu = kDefaultMu;
  double theta = 0.25;
  std::size_t iters = 100;
  std::string init = "random";
  std::uint64_t seed = 0;
  bool no_round = false;
  bool trace = false;
};

struct Solve2dArgs {
  std::string input;
  std::string out = "result2d";
  std::string loss = "huber";
  double mu = kDefaultMu;
  double theta = 0.05;
  std::size_t iters = 10000;
  std::uint64_t seed = 0;
  bool synthetic = false;
  std::size_t n1 = 32, n2 = 32, p = 100, patch = 8;
  double sigma = 1.0;
};

struct SynthArgs {
  std::size_t n = 100, p = 50;
  double theta = 0.25;
  std::uint64_t seed = 0;
  std::string out = "data";
  bool csv = false;
};

struct GridArgs {
  std::vector<std::size_t> n, p;
  std::vector<double> theta;
  std::vector<std::string> losses;
  double mu = kDefaultMu;
  std::size_t trials = 15;
  std::uint64_t seed = 0;
  double threshold = kSuccessThreshold;
  std::size_t iters = 100;
  std::size_t max_iters = 0;
  std::size_t threads = 0;
  std::string out = "out";
  bool time = false;
  bool round_l1 = false;
  std::size_t samples = 1000;
  std::size_t draws = 10000;
};

harness::ExperimentSpec to_spec(const GridArgs& a, harness::ExperimentKind kind) {
  harness::ExperimentSpec spec;
  spec.kind = kind;
  spec.n_list = a.n;
  spec.p_list = a.p;
  spec.theta_list = a.theta;
  spec.losses.clear();
  for (const auto& name : a.losses) spec.losses.push_back({parse_loss_kind(name), a.mu});
  spec.trials = a.trials;
  spec.seed = a.seed;
  spec.threshold = a.threshold;
  spec.phase1_iters = a.iters;
  if (a.max_iters > 0) {
    spec.phase1_iters = a.max_iters;
    spec.rounding.max_iters = a.max_iters;
  }
  spec.threads = a.threads;
  spec.out_dir = a.out;
  spec.record_time = a.time;
  spec.round_l1 = a.round_l1;
  spec.probe_samples = a.samples;
  spec.sharpness_samples = a.samples;
  spec.coverage_draws = a.draws;
  spec.validate();
  return spec;
}

void add_grid_options(CLI::App* cmd, GridArgs& a) {
  cmd->add_option("--n", a.n, "signal lengths (comma separated)")->delimiter(',')->capture_default_str();
  cmd->add_option("--p", a.p, "channel counts (comma separated)")->delimiter(',')->capture_default_str();
  cmd->add_option("--theta", a.theta, "sparsity levels (comma separated)")->delimiter(',')->capture_default_str();
  cmd->add_option("--loss", a.losses, "losses: l1, huber, l4 (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--mu", a.mu, "Huber smoothing")->capture_default_str();
  cmd->add_option("--trials", a.trials, "trials per cell")->capture_default_str();
  cmd->add_option("--seed", a.seed, "master seed")->capture_default_str();
  cmd->add_option("--threads", a.threads, "worker threads (0: MCSBD_THREADS or all cores)")->capture_default_str();
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
}

void add_solver_options(CLI::App* cmd, GridArgs& a) {
  cmd->add_option("--threshold", a.threshold, "rho_acc success threshold")->capture_default_str();
  cmd->add_option("--iters", a.iters, "Phase-1 iteration budget")->capture_default_str();
  cmd->add_flag("--round-l1", a.round_l1, "also round the l1 Phase-1 output");
  cmd->add_flag("--time", a.time, "record wall time (output no longer bit-reproducible)");
}

ObservationSet<1> load_obs(const std::string& path) { return io::load_observations(path); }

int run_solve(const SolveArgs& a) {
  const LossSpec loss{parse_loss_kind(a.loss), a.mu};
  loss.validate();
  if (a.init != "random" && a.init != "data")
    throw ConfigError("unknown init '" + a.init + "' (expected random or data)");
  const auto obs = load_obs(a.input);
  const auto pre = compute_preconditioner(obs, a.theta);

  harness::PipelineConfig cfg;
  cfg.loss = loss;
  cfg.phase1_iters = a.iters;
  cfg.round = !a.no_round;
  InitMode<1> init = InitRandom<1>{a.seed};
  if (a.init == "data") init = InitDataDriven{0, 0};

  std::optional<GroundTruth<1>> truth;
  if (!a.truth.empty()) truth = io::read_ground_truth(a.truth);
  DistanceFn<1> dist;
  if (truth && a.trace) dist = [&](const SignalVec& q) { return rotated_distance(truth->kernel, pre, q); };
  const auto res = harness::solve_preconditioned<1>(pre, cfg, init, dist);

  const fs::path out = a.out;
  io::SolveSummary summary;
  summary.loss = to_string(loss.kind);
  summary.mu = loss.mu;
  summary.theta = a.theta;
  summary.phase1_iters = res.phase1.iter;
  summary.phase1_stop = to_string(res.phase1.stop);
  if (res.phase2) summary.phase2_iters = res.phase2->iters;
  summary.final_zeta = lp_objective(pre, res.q_star);

  const auto rec = reconstruct(pre, res.q_star);
  if (truth) {
    const auto score = score_recovery(*truth, pre, res.q_star);
    summary.rho_acc = score.rho_acc;
    summary.shift_dist = score.shift_dist;
    summary.success = score.success;
  }
  io::write_json(out / "metrics.json", io::to_json(summary));
  io::write_signal_set(out / "kernel.bin", {rec.a_star});
  io::write_signal_set(out / "signals.bin", rec.x_star);
  io::write_signal_set(out / "q.bin", {res.q_star});
  if (a.trace) {
    std::ofstream t1(out / "trace_rgd.csv");
    write_trace_csv(t1, res.phase1.trace);
    if (res.phase2) {
      std::ofstream t2(out / "trace_round.csv");
      write_rounding_csv(t2, res.phase2->trace);
    }
  }
  std::cout << io::to_json(summary).dump() << '\n';
  return 0;
}

int run_solve2d(const Solve2dArgs& a) {
  const LossSpec loss{parse_loss_kind(a.loss), a.mu};
  loss.validate();
  std::optional<GroundTruth<2>> truth;
  ObservationSet<2> frames;
  if (a.synthetic) {
    const auto psf = gaussian_psf(a.n1, a.n2, a.patch, a.sigma);
    truth = synthesize2d(psf, a.p, a.theta, a.seed);
    frames = forward(*truth);
  } else {
    if (a.input.empty()) throw ConfigError("solve2d needs --input or --synthetic");
    frames = ObservationSet<2>(io::load_frames(a.input));
  }
  const auto pre = precondition2d(frames, a.theta);
  harness::PipelineConfig cfg;
  cfg.loss = loss;
  cfg.phase1_iters = a.iters;
  const auto res = harness::solve_preconditioned<2>(pre, cfg, InitRandom<2>{a.seed});
  const auto rec = reconstruct2d(pre, res.q_star);

  const fs::path out = a.out;
  io::SolveSummary summary;
  summary.loss = to_string(loss.kind);
  summary.mu = loss.mu;
  summary.theta = a.theta;
  summary.phase1_iters = res.phase1.iter;
  summary.phase1_stop = to_string(res.phase1.stop);
  if (res.phase2) summary.phase2_iters = res.phase2->iters;
  summary.final_zeta = lp_objective(pre, res.q_star);
  if (truth) {
    const auto score = score_recovery(*truth, pre, res.q_star);
    summary.rho_acc = score.rho_acc;
    summary.shift_dist = score.shift_dist;
    summary.success = score.success;
  }
  io::write_json(out / "metrics.json", io::to_json(summary));
  io::write_frames(out / "kernel.bin", {rec.a_star});
  io::write_frames(out / "signals.bin", rec.x_star);
  std::cout << io::to_json(summary).dump() << '\n';
  return 0;
}

int run_synth(const SynthArgs& a) {
  const auto truth = synthesize<1>({a.n}, a.p, a.theta, a.seed);
  const auto obs = forward(truth);
  const fs::path out = a.out;
  io::write_observations(out / "obs.bin", obs);
  io::write_ground_truth(out / "truth.bin", truth);
  if (a.csv) {
    io::write_channels_csv(out / "obs.csv", obs.channels);
    io::write_channels_csv(out / "kernel.csv", {truth.kernel}, {"a"});
  }
  return 0;
}

template <typename Writer>
void emit(const harness::ExperimentSpec& spec, const std::string& name, Writer&& writer) {
  auto os = harness::open_csv(spec, name);
  writer(os);
  if (!os) throw IoError("write failed: " + (spec.out_dir / name).string());
  std::cout << (spec.out_dir / name).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel sparse blind deconvolution on the sphere"};
  app.set_config("--config", "", "TOML-style config file (flags override it)");
  app.require_subcommand(1);

  SolveArgs solve;
  auto* cmd_solve = app.add_subcommand("solve", "recover kernel and signals from 1D observations");
  cmd_solve->add_option("--input", solve.input, "observations (.bin or .csv)")->required();
  cmd_solve->add_option("--truth", solve.truth, "ground truth file for scoring");
  cmd_solve->add_option("--out", solve.out, "output directory")->capture_default_str();
  cmd_solve->add_option("--loss", solve.loss, "l1, huber or l4")->capture_default_str();
  cmd_solve->add_option("--mu", solve.mu, "Huber smoothing")->capture_default_str();
  cmd_solve->add_option("--theta", solve.theta, "sparsity level used by the preconditioner")->capture_default_str();
  cmd_solve->add_option("--iters", solve.iters, "Phase-1 iteration budget")->capture_default_str();
  cmd_solve->add_option("--init", solve.init, "random or data")->capture_default_str();
  cmd_solve->add_option("--seed", solve.seed, "seed for the random initialization")->capture_default_str();
  cmd_solve->add_flag("--no-round", solve.no_round, "skip Phase-2 rounding");
  cmd_solve->add_flag("--trace", solve.trace, "write per-iteration traces");

  Solve2dArgs solve2d;
  auto* cmd_2d = app.add_subcommand("solve2d", "recover a PSF and point sources from a frame stack");
  cmd_2d->add_option("--input", solve2d.input, "frame stack (.bin or .csv)");
  cmd_2d->add_flag("--synthetic", solve2d.synthetic, "generate a Gaussian-PSF instance instead of reading one");
  cmd_2d->add_option("--out", solve2d.out, "output directory")->capture_default_str();
  cmd_2d->add_option("--loss", solve2d.loss, "l1, huber or l4")->capture_default_str();
  cmd_2d->add_option("--mu", solve2d.mu, "Huber smoothing")->capture_default_str();
  cmd_2d->add_option("--theta", solve2d.theta, "sparsity level")->capture_default_str();
  cmd_2d->add_option("--iters", solve2d.iters, "Phase-1 iteration budget")->capture_default_str();
  cmd_2d->add_option("--seed", solve2d.seed, "seed")->capture_default_str();
  cmd_2d->add_option("--n1", solve2d.n1, "synthetic grid rows")->capture_default_str();
  cmd_2d->add_option("--n2", solve2d.n2, "synthetic grid columns")->capture_default_str();
  cmd_2d->add_option("--p", solve2d.p, "synthetic frame count")->capture_default_str();
  cmd_2d->add_option("--patch", solve2d.patch, "synthetic PSF support")->capture_default_str();
  cmd_2d->add_option("--sigma", solve2d.sigma, "synthetic PSF width")->capture_default_str();

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "write a synthetic 1D instance");
  cmd_synth->add_option("--n", synth.n, "signal length")->capture_default_str();
  cmd_synth->add_option("--p", synth.p, "channels")->capture_default_str();
  cmd_synth->add_option("--theta", synth.theta, "sparsity level")->capture_default_str();
  cmd_synth->add_option("--seed", synth.seed, "seed")->capture_default_str();
  cmd_synth->add_option("--out", synth.out, "output directory")->capture_default_str();
  cmd_synth->add_flag("--csv", synth.csv, "also write CSV copies");

  GridArgs conv{{200}, {50}, {0.25}, {"huber", "l4", "l1"}};
  conv.trials = 1;
  auto* cmd_conv = app.add_subcommand("convergence", "distance-to-truth traces per loss and phase");
  add_grid_options(cmd_conv, conv);
  add_solver_options(cmd_conv, conv);
  cmd_conv->add_option("--max-iters", conv.max_iters, "cap both phases at this many iterations");

  GridArgs vary{{200}, {50}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {"huber", "l4"}};
  auto* cmd_vary = app.add_subcommand("vary-theta", "success rate against sparsity");
  add_grid_options(cmd_vary, vary);
  add_solver_options(cmd_vary, vary);

  GridArgs pn{{50, 100, 200}, {5, 10, 25, 50}, {0.25}, {"huber", "l4"}};
  auto* cmd_pn = app.add_subcommand("phase-pn", "success rate over a (p, n) grid");
  add_grid_options(cmd_pn, pn);
  add_solver_options(cmd_pn, pn);

  GridArgs geo{{16}, {10, 2000}, {0.25}, {"huber"}};
  geo.trials = 1;
  auto* cmd_geo = app.add_subcommand("geometry", "regularity, implicit-regularization, sharpness and coverage probes");
  add_grid_options(cmd_geo, geo);
  cmd_geo->add_option("--samples", geo.samples, "sampled points per cell")->capture_default_str();
  cmd_geo->add_option("--draws", geo.draws, "uniform draws for the coverage estimate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const auto active = app.get_subcommands();
    std::cerr << (active.empty() ? app.help() : active.front()->help());
    return kExitConfig;
  }

  try {
    if (cmd_solve->parsed()) return run_solve(solve);
    if (cmd_2d->parsed()) return run_solve2d(solve2d);
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_conv->parsed()) {
      const auto spec = to_spec(conv, harness::ExperimentKind::convergence);
      const auto report = harness::run_convergence(spec);
      emit(spec, "convergence.csv", [&](std::ostream& os) { harness::write_convergence_csv(os, spec, report); });
    } else if (cmd_vary->parsed() || cmd_pn->parsed()) {
      const bool is_pn = cmd_pn->parsed();
      const auto spec = to_spec(is_pn ? pn : vary,
                                is_pn ? harness::ExperimentKind::phase_pn : harness::ExperimentKind::vary_theta);
      const auto report = harness::run_grid(spec);
      const std::string stem = is_pn ? "phase_pn" : "vary_theta";
      emit(spec, stem + ".csv", [&](std::ostream& os) { harness::write_cells_csv(os, spec, report); });
      emit(spec, stem + "_trials.csv", [&](std::ostream& os) { harness::write_trials_csv(os, spec, report); });
      if (is_pn) {
        emit(spec, stem + "_matrix.csv", [&](std::ostream& os) { harness::write_matrix_csv(os, spec, report); });
      }
    } else if (cmd_geo->parsed()) {
      const auto spec = to_spec(geo, harness::ExperimentKind::geometry_probe);
      const auto rows = harness::run_geometry_probe(spec);
      emit(spec, "geometry.csv", [&](std::ostream& os) { harness::write_geometry_csv(os, spec, rows); });
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
