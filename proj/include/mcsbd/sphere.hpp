#ifndef MCSBD_SPHERE_HPP_
#define MCSBD_SPHERE_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <type_traits>
#include <variant>
#include <vector>

#include "mcsbd/circulant.hpp"
#include "mcsbd/losses.hpp"
#include "mcsbd/precond.hpp"
#include "mcsbd/rng.hpp"

namespace mcsbd {

inline constexpr double kUnitTolerance = 1e-9;

/// Constant stepsize tau.
struct FixedStep {
  double tau = 1e-2;
};

/// Backtracking (Armijo) line search: shrink tau by beta until
/// phi(q_new) < phi(q) - tau * eta * ||grad||^2. Restarts at tau0 every
/// iteration.
struct Linesearch {
  double tau0 = 1.0;
  double eta = 0.8;   // in (0.5, 1)
  double beta = 0.5;  // in (0, 1)
  int max_backtracks = 50;
};

/// tau_k = tau0 * rate^k, the usual choice for subgradient steps.
struct GeometricStep {
  double tau0 = 1e-1;
  double rate = 0.9;
};

using StepMode = std::variant<Linesearch, FixedStep, GeometricStep>;

template <std::size_t Rank>
struct InitRandom {
  std::uint64_t seed = 0;
};

/// q0 = retract(C_{ybar_channel}^T e_row).
struct InitDataDriven {
  std::size_t channel = 0;
  std::size_t row = 0;
};

template <std::size_t Rank>
struct InitExplicit {
  Field<Rank> q0;
};

template <std::size_t Rank>
using InitMode = std::variant<InitRandom<Rank>, InitDataDriven, InitExplicit<Rank>>;

template <std::size_t Rank>
struct RgdConfig {
  LossSpec loss{};
  std::size_t max_iters = 10000;
  double tol_grad = 1e-8;
  StepMode step = Linesearch{};
  InitMode<Rank> init = InitRandom<Rank>{};

  void validate() const {
    loss.validate();
    if (!(tol_grad >= 0.0)) throw ConfigError("tol_grad must be >= 0");
    if (const auto* ls = std::get_if<Linesearch>(&step)) {
      if (!(ls->tau0 > 0.0)) throw ConfigError("linesearch tau0 must be > 0");
      if (!(ls->eta > 0.5 && ls->eta < 1.0)) throw ConfigError("linesearch eta must lie in (0.5, 1)");
      if (!(ls->beta > 0.0 && ls->beta < 1.0)) throw ConfigError("linesearch beta must lie in (0, 1)");
      if (ls->max_backtracks < 1) throw ConfigError("linesearch needs at least one backtrack");
    } else if (const auto* fs = std::get_if<FixedStep>(&step)) {
      if (!(fs->tau > 0.0)) throw ConfigError("fixed stepsize must be > 0");
    } else if (const auto* gs = std::get_if<GeometricStep>(&step)) {
      if (!(gs->tau0 > 0.0)) throw ConfigError("geometric tau0 must be > 0");
      if (!(gs->rate > 0.0 && gs->rate <= 1.0)) throw ConfigError("geometric rate must lie in (0, 1]");
    }
  }
};

struct TraceRecord {
  std::size_t iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double tau = 0.0;  // step taken from this iterate (0 when none)
  std::optional<double> dist;
};

enum class StopReason { running, tol_grad, max_iters, stall };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::running: return "running";
    case StopReason::tol_grad: return "tol_grad";
    case StopReason::max_iters: return "max_iters";
    case StopReason::stall: return "stall";
  }
  return "?";
}

template <std::size_t Rank>
struct SolverState {
  Field<Rank> q;
  std::size_t iter = 0;
  double tau = 0.0;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::running;
};

/// Optional distance-to-truth hook for traces; never needed to solve.
template <std::size_t Rank>
using DistanceFn = std::function<double(const Field<Rank>&)>;

/// grad = g - <q, g> q, the projection onto the tangent space at q.
template <std::size_t Rank>
Field<Rank> tangent_project(const Field<Rank>& q, const Field<Rank>& g) {
  Field<Rank>::require_same_shape(q, g, "tangent_project");
  if (std::abs(norm(q) - 1.0) > kUnitTolerance) {
    throw ContractViolation("tangent_project: base point is not on the unit sphere");
  }
  const double c = dot(q, g);
  Field<Rank> out = g;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * q[i];
  return out;
}

/// Metric projection onto the sphere, v / ||v||.
template <std::size_t Rank>
Field<Rank> retract(const Field<Rank>& v) {
  const double nrm = norm(v);
  if (!(nrm > 0.0)) throw DegenerateStepError("retraction of a zero vector");
  return v / nrm;
}

template <std::size_t Rank>
Field<Rank> init_random(const Shape<Rank>& shape, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::init);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field<Rank> q(shape);
  for (double& v : q) v = gauss(rng);
  return retract(q);
}

inline SignalVec init_random(std::size_t n, std::uint64_t seed) { return init_random<1>({n}, seed); }

/// retract(C_{ybar_i}^T e_j) = retract(s_j[reverse(ybar_i)]); j is a flat index.
template <std::size_t Rank>
Field<Rank> init_data_driven(const PreconditionedSet<Rank>& pre, std::size_t channel, std::size_t row) {
  if (channel >= pre.p()) throw ConfigError("data-driven init: channel index out of range");
  if (row >= pre.n()) throw ConfigError("data-driven init: row index out of range");
  const auto idx = unravel<Rank>(row, pre.shape());
  std::array<std::int64_t, Rank> offset{};
  for (std::size_t d = 0; d < Rank; ++d) offset[d] = static_cast<std::int64_t>(idx[d]);
  return retract(cyclic_shift<Rank>(cyclic_reverse(pre.channels_bar[channel]), offset));
}

template <std::size_t Rank>
Field<Rank> initial_point(const PreconditionedSet<Rank>& pre, const InitMode<Rank>& init) {
  if (const auto* r = std::get_if<InitRandom<Rank>>(&init)) return init_random<Rank>(pre.shape(), r->seed);
  if (const auto* d = std::get_if<InitDataDriven>(&init)) return init_data_driven(pre, d->channel, d->row);
  const auto& q0 = std::get<InitExplicit<Rank>>(init).q0;
  Field<Rank>::require_same_shape(q0, pre.filter_v, "explicit init");
  return retract(q0);
}

/*
 * One Riemannian (sub)gradient step
 *   q+ = retract(q - tau * P_{q-perp} grad phi(q)).
 * Stops (without moving) when ||grad|| <= tol_grad; a line search that
 * cannot satisfy the Armijo condition within max_backtracks marks the state
 * as stalled and leaves q unchanged.
 */
template <std::size_t Rank>
SolverState<Rank> rgd_step(SolverState<Rank> state, const PreconditionedSet<Rank>& pre, const RgdConfig<Rank>& cfg,
                           const std::type_identity_t<DistanceFn<Rank>>& dist = {}) {
  const auto eval = loss_value_and_grad(pre, state.q, cfg.loss);
  const auto riem = tangent_project(state.q, eval.grad);
  const double gnorm = norm(riem);

  TraceRecord rec;
  rec.iter = state.iter;
  rec.loss = eval.value;
  rec.grad_norm = gnorm;
  if (dist) rec.dist = dist(state.q);

  if (gnorm <= cfg.tol_grad) {
    state.stop = StopReason::tol_grad;
    state.tau = 0.0;
    state.trace.push_back(rec);
    return state;
  }

  auto candidate = [&](double tau) {
    Field<Rank> moved = state.q;
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] -= tau * riem[i];
    return retract(moved);
  };

  Field<Rank> next;
  double tau = 0.0;
  if (const auto* ls = std::get_if<Linesearch>(&cfg.step)) {
    tau = ls->tau0;
    const double decrease = ls->eta * gnorm * gnorm;
    bool accepted = false;
    for (int tries = 0; tries <= ls->max_backtracks; ++tries) {
      next = candidate(tau);
      if (loss_value(pre, next, cfg.loss) < eval.value - tau * decrease) {
        accepted = true;
        break;
      }
      tau *= ls->beta;
    }
    if (!accepted) {
      state.stop = StopReason::stall;
      state.tau = 0.0;
      state.trace.push_back(rec);
      return state;
    }
  } else if (const auto* fs = std::get_if<FixedStep>(&cfg.step)) {
    tau = fs->tau;
    next = candidate(tau);
  } else {
    const auto& gs = std::get<GeometricStep>(cfg.step);
    tau = gs.tau0 * std::pow(gs.rate, static_cast<double>(state.iter));
    next = candidate(tau);
  }

  rec.tau = tau;
  state.trace.push_back(rec);
  state.q = std::move(next);
  state.tau = tau;
  ++state.iter;
  return state;
}

/// Runs rgd_step until tol_grad, max_iters or a line-search stall. The
/// trace holds one record per visited iterate, including the final one.
template <std::size_t Rank>
SolverState<Rank> rgd_solve(const PreconditionedSet<Rank>& pre, const RgdConfig<Rank>& cfg,
                            const std::type_identity_t<DistanceFn<Rank>>& dist = {}) {
  cfg.validate();
  SolverState<Rank> state;
  state.q = initial_point(pre, cfg.init);
  while (state.stop == StopReason::running) {
    if (state.iter >= cfg.max_iters) {
      state.stop = StopReason::max_iters;
      const auto eval = loss_value_and_grad(pre, state.q, cfg.loss);
      TraceRecord rec;
      rec.iter = state.iter;
      rec.loss = eval.value;
      rec.grad_norm = norm(tangent_project(state.q, eval.grad));
      if (dist) rec.dist = dist(state.q);
      state.trace.push_back(rec);
      break;
    }
    state = rgd_step(std::move(state), pre, cfg, dist);
  }
  return state;
}

/// CSV export: iter,loss,grad_norm,tau[,dist_to_truth].
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
  const bool with_dist = !trace.empty() && trace.front().dist.has_value();
  os << "iter,loss,grad_norm,tau" << (with_dist ? ",dist_to_truth" : "") << "\n";
  os.precision(17);
  for (const auto& r : trace) {
    os << r.iter << ',' << r.loss << ',' << r.grad_norm << ',' << r.tau;
    if (with_dist) os << ',' << r.dist.value_or(std::nan(""));
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Landscape probes on the orthogonal model f(q) = (1/np) sum_i H_mu(C_{x_i} q).
// They take a PreconditionedSet built with filter delta on the sparse signals.
// ---------------------------------------------------------------------------

/// Region S_xi^{i+/-}: |q_i| / ||q_{-i}||_inf >= sqrt(1 + xi), sign of q_i.
struct RegionLabel {
  std::size_t index = 0;
  bool positive = true;
};

inline std::optional<RegionLabel> region_of(const SignalVec& q, double xi) {
  const std::size_t top = argmax_abs(q);
  double rest = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (j != top) rest = std::max(rest, std::abs(q[j]));
  }
  const double lead = std::abs(q[top]);
  if (lead == 0.0) return std::nullopt;
  if (rest > 0.0 && lead / rest < std::sqrt(1.0 + xi)) return std::nullopt;
  return RegionLabel{top, q[top] > 0.0};
}

/// xi = 1 / (5 log n), the region margin used for initialization coverage.
inline double coverage_margin(std::size_t n) { return 1.0 / (5.0 * std::log(static_cast<double>(n))); }

/*
 * Uniform sample from S_xi^{target+} restricted to sqrt(1 - q_t^2) >= mu:
 * rejection from the uniform sphere, then the coordinate permutation and
 * sign flip that move the dominant entry to `target` (both preserve the
 * uniform measure).
 */
inline SignalVec sample_region_point(std::size_t n, double xi, double mu, std::size_t target, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    SignalVec q(Shape<1>{n});
    for (double& v : q) v = gauss(rng);
    q = retract(q);
    const auto region = region_of(q, xi);
    if (!region) continue;
    std::swap(q[region->index], q[target]);
    if (q[target] < 0.0) q *= -1.0;
    if (std::sqrt(std::max(0.0, 1.0 - q[target] * q[target])) < mu) continue;
    return q;
  }
}

/// <grad f(q), q_i q - e_i>; positive means the negative gradient points
/// toward e_i.
inline double regularity_margin(const PreconditionedSet<1>& simple, const SignalVec& q, std::size_t i,
                                const LossSpec& loss) {
  const auto riem = tangent_project(q, loss_euclid_grad(simple, q, loss));
  SignalVec dir = q * q[i];
  dir[i] -= 1.0;
  return dot(riem, dir);
}

/// <grad f(q), e_j / q_j - e_i / q_i> for every j != i with q_j^2 >= q_i^2 / 3.
inline std::vector<double> implicit_regularization_margins(const PreconditionedSet<1>& simple, const SignalVec& q,
                                                           std::size_t i, const LossSpec& loss) {
  const auto riem = tangent_project(q, loss_euclid_grad(simple, q, loss));
  std::vector<double> out;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (j == i || q[j] * q[j] < q[i] * q[i] / 3.0) continue;
    out.push_back(riem[j] / q[j] - riem[i] / q[i]);
  }
  return out;
}

}  // namespace mcsbd

#endif  // MCSBD_SPHERE_HPP_
