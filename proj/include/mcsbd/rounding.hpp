#ifndef MCSBD_ROUNDING_HPP_
#define MCSBD_ROUNDING_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "mcsbd/losses.hpp"
#include "mcsbd/precond.hpp"
#include "mcsbd/sphere.hpp"

namespace mcsbd {

/*
 * Projected subgradient schedule tau_k = tau0 * eta^k. The defaults sum to
 * tau0 / (1 - eta) ~ 3.3, enough travel for warm starts within O(mu) of a
 * target, while still decaying below float resolution in ~1000 iterations.
 */
struct RoundingConfig {
  double tau0 = 0.1;
  double eta = 0.97;
  std::size_t max_iters = 2000;
  double tol = 1e-12;  // stop once tau_k * ||P_{r-perp} g|| drops below this

  void validate() const {
    if (!(tau0 > 0.0)) throw ConfigError("rounding tau0 must be > 0");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("rounding eta must lie in (0, 1)");
    if (!(tol >= 0.0)) throw ConfigError("rounding tol must be >= 0");
  }
};

struct RoundingRecord {
  std::size_t iter = 0;
  double zeta = 0.0;
  double tau = 0.0;
  double step_norm = 0.0;
  std::optional<double> dist;
};

template <std::size_t Rank>
struct RoundingResult {
  Field<Rank> q;
  std::vector<RoundingRecord> trace;
  std::vector<double> best_zeta;  // running minimum of zeta over the trace
  std::size_t iters = 0;
};

/// zeta(q) = (1/(N p)) sum_i ||ybar_i * q||_1.
template <std::size_t Rank>
double lp_objective(const PreconditionedSet<Rank>& pre, const Field<Rank>& q) {
  return loss_value(pre, q, LossSpec::l1());
}

/// (1/(N p)) sum_i reverse(ybar_i) * sign(ybar_i * q), sign(0) = 0. Same code
/// path as the l1 loss gradient.
template <std::size_t Rank>
Field<Rank> lp_subgradient(const PreconditionedSet<Rank>& pre, const Field<Rank>& q) {
  return loss_euclid_grad(pre, q, LossSpec::l1());
}

/*
 * Phase-2 rounding: min zeta(q) s.t. <r, q> = 1, started at q0 = r, via
 *   q_{k+1} = r + (I - r r^T)(q_k - tau_k g_k).
 * The update lives in r-perp, so every iterate stays on the affine
 * constraint. Returns the last iterate; the running best zeta is recorded.
 */
template <std::size_t Rank>
RoundingResult<Rank> lp_round(const PreconditionedSet<Rank>& pre, const Field<Rank>& r, const RoundingConfig& cfg,
                              const std::type_identity_t<DistanceFn<Rank>>& dist = {}) {
  cfg.validate();
  Field<Rank>::require_same_shape(r, pre.filter_v, "lp_round");
  if (std::abs(norm(r) - 1.0) > kUnitTolerance) throw ContractViolation("lp_round: warm start must be unit norm");

  RoundingResult<Rank> out;
  Field<Rank> q = r;
  double tau = cfg.tau0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0;; ++k) {
    const auto eval = loss_value_and_grad(pre, q, LossSpec::l1());
    const double along = dot(r, eval.grad);
    Field<Rank> pg = eval.grad;
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] -= along * r[i];
    const double step = tau * norm(pg);

    RoundingRecord rec{k, eval.value, tau, step, std::nullopt};
    if (dist) rec.dist = dist(q);
    best = std::min(best, eval.value);
    out.trace.push_back(rec);
    out.best_zeta.push_back(best);

    if (k >= cfg.max_iters || step < cfg.tol) {
      out.iters = k;
      break;
    }
    Field<Rank> moved = q;
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] -= tau * pg[i];
    const double off = dot(r, moved) - 1.0;
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] -= off * r[i];
    q = std::move(moved);
    tau *= cfg.eta;
  }
  out.q = std::move(q);
  return out;
}

/// CSV export: iter,zeta,tau,step_norm[,dist].
inline void write_rounding_csv(std::ostream& os, const std::vector<RoundingRecord>& trace) {
  const bool with_dist = !trace.empty() && trace.front().dist.has_value();
  os << "iter,zeta,tau,step_norm" << (with_dist ? ",dist" : "") << "\n";
  os.precision(17);
  for (const auto& r : trace) {
    os << r.iter << ',' << r.zeta << ',' << r.tau << ',' << r.step_norm;
    if (with_dist) os << ',' << r.dist.value_or(std::nan(""));
    os << '\n';
  }
}

struct SharpnessStats {
  std::size_t samples = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
};

/*
 * Samples feasible points q = q_t + t w (w a random unit vector in r-perp,
 * t log-uniform in [1e-3, 1]) around the feasible target q_t = target /
 * <r, target> and reports (zeta(q) - zeta(q_t)) / ||q - q_t||. A strictly
 * positive minimum is the empirical sharpness of the rounding problem.
 */
template <std::size_t Rank>
SharpnessStats sharpness_probe(const PreconditionedSet<Rank>& pre, const Field<Rank>& r, const Field<Rank>& target,
                               std::size_t samples, Rng& rng) {
  Field<Rank>::require_same_shape(r, target, "sharpness_probe");
  const double rn = norm(r);
  if (!(rn > 0.0)) throw DegenerateInputError("sharpness_probe: zero warm start");
  const double along = dot(r, target);
  if (std::abs(along) < 1e-12 * rn * norm(target)) {
    throw DegenerateInputError("sharpness_probe: target is orthogonal to r");
  }
  const Field<Rank> anchor = target / along;
  const double zeta_star = lp_objective(pre, anchor);
  const Field<Rank> r_unit = r / rn;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-3.0, 0.0);
  SharpnessStats stats;
  double sum = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Field<Rank> w(r.shape());
    for (double& v : w) v = gauss(rng);
    w -= r_unit * dot(r_unit, w);
    const double wn = norm(w);
    if (!(wn > 0.0)) continue;
    const double t = std::pow(10.0, expo(rng));
    const Field<Rank> q = anchor + w * (t / wn);
    const double ratio = (lp_objective(pre, q) - zeta_star) / t;
    stats.min_ratio = std::min(stats.min_ratio, ratio);
    stats.max_ratio = std::max(stats.max_ratio, ratio);
    sum += ratio;
    ++stats.samples;
  }
  stats.mean_ratio = stats.samples ? sum / static_cast<double>(stats.samples) : 0.0;
  return stats;
}

}  // namespace mcsbd

#endif  // MCSBD_ROUNDING_HPP_
