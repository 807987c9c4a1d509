#ifndef MCSBD_LOSSES_HPP_
#define MCSBD_LOSSES_HPP_

#include <cmath>
#include <string>
#include <string_view>

#include "mcsbd/fft.hpp"
#include "mcsbd/precond.hpp"

namespace mcsbd {

enum class LossKind { l1, huber, l4 };

inline constexpr double kDefaultMu = 1e-2;

/// Entries of an l1 product below this fraction of the channel max count as zero.
inline constexpr double kSignSnap = 1e-13;

struct LossSpec {
  LossKind kind = LossKind::huber;
  double mu = kDefaultMu;  // huber only

  static LossSpec l1() { return {LossKind::l1, kDefaultMu}; }
  static LossSpec huber(double mu = kDefaultMu) { return {LossKind::huber, mu}; }
  static LossSpec l4() { return {LossKind::l4, kDefaultMu}; }

  void validate() const {
    if (kind == LossKind::huber && !(mu > 0.0 && std::isfinite(mu))) {
      throw ConfigError("huber smoothing mu must be > 0");
    }
  }
};

inline std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::l1: return "l1";
    case LossKind::huber: return "huber";
    case LossKind::l4: return "l4";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "l1") return LossKind::l1;
  if (name == "huber") return LossKind::huber;
  if (name == "l4") return LossKind::l4;
  throw ConfigError("unknown loss '" + std::string(name) + "' (expected l1, huber or l4)");
}

/// sign with sign(0) = 0.
inline double sign(double z) noexcept { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

/*
 * h_mu(z) = |z| for |z| >= mu, z^2/(2 mu) + mu/2 otherwise. The quadratic
 * branch is evaluated as |z| + (mu - |z|)^2 / (2 mu), which never rounds
 * below |z| nor above |z| + mu/2.
 */
inline double huber_scalar(double z, double mu) {
  if (!(mu > 0.0)) throw ConfigError("huber smoothing mu must be > 0");
  const double a = std::abs(z);
  if (a >= mu) return a;
  const double gap = mu - a;
  return a + 0.5 * gap * (gap / mu);
}

inline double huber_grad_scalar(double z, double mu) {
  if (!(mu > 0.0)) throw ConfigError("huber smoothing mu must be > 0");
  return std::abs(z) >= mu ? sign(z) : z / mu;
}

namespace detail {

// psi and psi' for one entry; l4 follows the minimization convention
// psi(z) = -z^4/4 so that psi'(z) = -z^3 matches the gradient table.
inline double psi(LossKind kind, double z, double mu) {
  switch (kind) {
    case LossKind::l1: return std::abs(z);
    case LossKind::huber: return huber_scalar(z, mu);
    case LossKind::l4: {
      const double z2 = z * z;
      return -0.25 * z2 * z2;
    }
  }
  return 0.0;
}

inline double psi_prime(LossKind kind, double z, double mu) {
  switch (kind) {
    case LossKind::l1: return sign(z);
    case LossKind::huber: return huber_grad_scalar(z, mu);
    case LossKind::l4: return -z * z * z;
  }
  return 0.0;
}

}  // namespace detail

template <std::size_t Rank>
struct LossEval {
  double value = 0.0;
  Field<Rank> grad;
};

/*
 * phi(q) = (1/(N p)) sum_i sum_j psi((ybar_i * q)_j) and its Euclidean
 * (sub)gradient (1/(N p)) sum_i reverse(ybar_i) * psi'(ybar_i * q).
 * Channels are streamed one at a time in fixed order; correlations are
 * accumulated in the spectral domain and inverted once.
 */
template <std::size_t Rank>
LossEval<Rank> loss_value_and_grad(const PreconditionedSet<Rank>& pre, const Field<Rank>& q,
                                   const LossSpec& spec, bool with_grad = true) {
  spec.validate();
  Field<Rank>::require_same_shape(pre.filter_v, q, "loss");
  const auto q_hat = rfft(q);
  const double scale = 1.0 / (static_cast<double>(pre.n()) * static_cast<double>(pre.p()));
  HalfSpectrum<Rank> grad_hat{q.shape(), std::vector<Complex>(q_hat.size())};
  double value = 0.0;
  for (std::size_t i = 0; i < pre.p(); ++i) {
    auto z = irfft(multiply(pre.spectra[i], q_hat));
    // FFT products carry roundoff where the exact product vanishes; snap
    // those entries so sign(0) = 0 survives for l1 subgradients.
    const double snap = spec.kind == LossKind::l1 ? kSignSnap * norm_inf(z) : 0.0;
    double channel_sum = 0.0;
    for (double& v : z) {
      if (std::abs(v) <= snap) v = 0.0;
      channel_sum += detail::psi(spec.kind, v, spec.mu);
      if (with_grad) v = detail::psi_prime(spec.kind, v, spec.mu);
    }
    value += channel_sum;
    if (with_grad) {
      const auto w_hat = rfft(z);
      for (std::size_t k = 0; k < w_hat.size(); ++k) grad_hat.data[k] += std::conj(pre.spectra[i][k]) * w_hat[k];
    }
  }
  LossEval<Rank> out;
  out.value = value * scale;
  if (with_grad) out.grad = irfft(grad_hat) * scale;
  return out;
}

template <std::size_t Rank>
double loss_value(const PreconditionedSet<Rank>& pre, const Field<Rank>& q, const LossSpec& spec) {
  return loss_value_and_grad(pre, q, spec, /*with_grad=*/false).value;
}

template <std::size_t Rank>
Field<Rank> loss_euclid_grad(const PreconditionedSet<Rank>& pre, const Field<Rank>& q, const LossSpec& spec) {
  return loss_value_and_grad(pre, q, spec).grad;
}

/// Sum of h_mu over all entries of z (the H_mu penalty, unscaled).
template <std::size_t Rank>
double huber_penalty(const Field<Rank>& z, double mu) {
  double acc = 0.0;
  for (double v : z) acc += huber_scalar(v, mu);
  return acc;
}

}  // namespace mcsbd

#endif  // MCSBD_LOSSES_HPP_
