#ifndef MCSBD_RECOVER_HPP_
#define MCSBD_RECOVER_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "mcsbd/circulant.hpp"
#include "mcsbd/model.hpp"
#include "mcsbd/precond.hpp"

namespace mcsbd {

inline constexpr double kSuccessThreshold = 0.95;

template <std::size_t Rank>
struct Reconstruction {
  Field<Rank> a_star;
  std::vector<Field<Rank>> x_star;
};

template <std::size_t Rank>
struct RecoveryResult {
  Field<Rank> a_star;
  std::vector<Field<Rank>> x_star;
  double rho_acc = 0.0;
  double shift_dist = 0.0;
  bool success = false;
};

/*
 * a* = F^{-1}[ (F(v * q))^{-1} ] and x_i* = ybar_i * q. For any q with
 * invertible v * q, a* * x_i* reproduces y_i; only at a target q is x_i*
 * sparse, and then a* equals the kernel up to signed scaled shift.
 */
template <std::size_t Rank>
Reconstruction<Rank> reconstruct(const PreconditionedSet<Rank>& pre, const Field<Rank>& q_star,
                                 double zero_tol = kDefaultZeroTol) {
  Field<Rank>::require_same_shape(pre.filter_v, q_star, "reconstruct");
  const auto vq = circ_conv(pre.filter_v, q_star);
  const auto diag = diagnose_kernel(vq, zero_tol);
  if (!diag.invertible) throw NonInvertibleError("estimate v * q has a zero spectral bin");
  auto spec = rfft(vq);
  for (auto& c : spec.data) c = 1.0 / c;
  Reconstruction<Rank> out;
  out.a_star = irfft(spec);
  const auto q_hat = rfft(q_star);
  out.x_star.reserve(pre.p());
  for (std::size_t i = 0; i < pre.p(); ++i) out.x_star.push_back(irfft(multiply(pre.spectra[i], q_hat)));
  return out;
}

/// a * v * q: the iterate mapped into the rotated (orthogonal) coordinates.
template <std::size_t Rank>
Field<Rank> rotated_iterate(const Field<Rank>& kernel, const PreconditionedSet<Rank>& pre, const Field<Rank>& q) {
  return irfft(multiply(multiply(rfft(kernel), rfft(pre.filter_v)), rfft(q)));
}

/// rho_acc = ||C_a P q||_inf / ||C_a P q||, in [0, 1]; 1 exactly at signed
/// scaled basis vectors.
template <std::size_t Rank>
double rho_acc(const Field<Rank>& kernel, const PreconditionedSet<Rank>& pre, const Field<Rank>& q) {
  const auto w = rotated_iterate(kernel, pre, q);
  const double l2 = norm(w);
  if (!(l2 > 0.0)) throw DegenerateInputError("rho_acc: C_a P q vanishes");
  return std::min(1.0, norm_inf(w) / l2);
}

template <std::size_t Rank>
double rho_acc(const GroundTruth<Rank>& truth, const PreconditionedSet<Rank>& pre, const Field<Rank>& q) {
  return rho_acc(truth.kernel, pre, q);
}

/*
 * Distance from w/||w|| to the nearest signed standard basis vector,
 * min_{l, sigma} || w/||w|| - sigma e_l ||. Evaluated as
 * sqrt(sum_{k != l} u_k^2 + (1 - |u_l|)^2) with 1 - |u_l| = sum_{k != l}
 * u_k^2 / (1 + |u_l|) so it stays accurate down to ~1e-16.
 */
template <std::size_t Rank>
double distance_to_signed_basis(const Field<Rank>& w) {
  const double l2 = norm(w);
  if (!(l2 > 0.0)) throw DegenerateInputError("distance to basis of a zero vector");
  const std::size_t top = argmax_abs(w);
  double off = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k == top) continue;
    const double u = w[k] / l2;
    off += u * u;
  }
  const double lead = std::abs(w[top]) / l2;
  const double gap = off / (1.0 + lead);
  return std::sqrt(off + gap * gap);
}

/// Distance of q to the nearest target solution, measured in rotated
/// coordinates (the signed-shift quotient of C_a P q).
template <std::size_t Rank>
double rotated_distance(const Field<Rank>& kernel, const PreconditionedSet<Rank>& pre, const Field<Rank>& q) {
  return distance_to_signed_basis(rotated_iterate(kernel, pre, q));
}

/*
 * min over shifts l and signs sigma of || sigma a_hat/||a_hat|| - s_l[a_true/||a_true||] ||.
 * The best shift comes from one circular correlation (argmax |corr|); the
 * distance itself is then evaluated explicitly. Result lies in [0, 2].
 */
template <std::size_t Rank>
double signed_shift_dist(const Field<Rank>& a_hat, const Field<Rank>& a_true, ConvPath path = ConvPath::fft) {
  Field<Rank>::require_same_shape(a_hat, a_true, "signed_shift_dist");
  const auto u = normalized(a_hat);
  const auto t = normalized(a_true);
  // corr[l] = sum_m t_m u_{m+l} = <u, s_l[t]>
  const auto corr = circ_corr(t, u, path);
  const std::size_t best = argmax_abs(corr);
  const double sigma = corr[best] < 0.0 ? -1.0 : 1.0;
  const auto idx = unravel<Rank>(best, t.shape());
  std::array<std::int64_t, Rank> offset{};
  for (std::size_t d = 0; d < Rank; ++d) offset[d] = static_cast<std::int64_t>(idx[d]);
  const auto shifted = cyclic_shift<Rank>(t, offset);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = sigma * u[i] - shifted[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// Brute-force reference: every shift and sign evaluated explicitly.
template <std::size_t Rank>
double signed_shift_dist_naive(const Field<Rank>& a_hat, const Field<Rank>& a_true) {
  const auto u = normalized(a_hat);
  const auto t = normalized(a_true);
  double best = 2.0;
  for (std::size_t l = 0; l < t.size(); ++l) {
    const auto idx = unravel<Rank>(l, t.shape());
    std::array<std::int64_t, Rank> offset{};
    for (std::size_t d = 0; d < Rank; ++d) offset[d] = static_cast<std::int64_t>(idx[d]);
    const auto shifted = cyclic_shift<Rank>(t, offset);
    for (double sigma : {1.0, -1.0}) {
      double acc = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = sigma * u[i] - shifted[i];
        acc += d * d;
      }
      best = std::min(best, std::sqrt(acc));
    }
  }
  return best;
}

/// The target q with C_a P q = e_at (flat index), i.e. q = F^{-1}(1/(a_hat v_hat)) shifted.
template <std::size_t Rank>
Field<Rank> target_solution(const Field<Rank>& kernel, const PreconditionedSet<Rank>& pre, std::size_t at = 0) {
  auto spec = multiply(rfft(kernel), rfft(pre.filter_v));
  for (auto& c : spec.data) {
    if (std::abs(c) == 0.0) throw NonInvertibleError("target_solution: C_a P is singular");
    c = 1.0 / c;
  }
  const auto base = irfft(spec);
  const auto idx = unravel<Rank>(at, kernel.shape());
  std::array<std::int64_t, Rank> offset{};
  for (std::size_t d = 0; d < Rank; ++d) offset[d] = static_cast<std::int64_t>(idx[d]);
  return cyclic_shift<Rank>(base, offset);
}

/// Scores q* against the ground truth.
template <std::size_t Rank>
RecoveryResult<Rank> score_recovery(const GroundTruth<Rank>& truth, const PreconditionedSet<Rank>& pre,
                                    const Field<Rank>& q_star, double threshold = kSuccessThreshold) {
  auto rec = reconstruct(pre, q_star);
  RecoveryResult<Rank> out;
  out.rho_acc = rho_acc(truth.kernel, pre, q_star);
  out.shift_dist = signed_shift_dist(rec.a_star, truth.kernel);
  out.success = out.rho_acc >= threshold;
  out.a_star = std::move(rec.a_star);
  out.x_star = std::move(rec.x_star);
  return out;
}

}  // namespace mcsbd

#endif  // MCSBD_RECOVER_HPP_
