#ifndef MCSBD_PRECOND_HPP_
#define MCSBD_PRECOND_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mcsbd/fft.hpp"
#include "mcsbd/model.hpp"

namespace mcsbd {

/*
 * Observations after whitening by the circulant preconditioner P = C_v:
 * channels_bar[i] = y_i * v, with the half spectra of channels_bar cached
 * for the O(pN log N) loss and gradient evaluations. Every solver consumes
 * this type; the data is preconditioned exactly once.
 */
template <std::size_t Rank>
struct PreconditionedSet {
  Field<Rank> filter_v;
  std::vector<Field<Rank>> channels_bar;
  std::vector<HalfSpectrum<Rank>> spectra;
  double theta_used = 0.0;

  std::size_t p() const noexcept { return channels_bar.size(); }
  std::size_t n() const { return filter_v.size(); }
  const Shape<Rank>& shape() const { return filter_v.shape(); }
};

namespace detail {

template <std::size_t Rank>
std::string bin_label(std::size_t half_index, const Shape<Rank>& shape) {
  Shape<Rank> half_shape = shape;
  half_shape[Rank - 1] = shape[Rank - 1] / 2 + 1;
  const auto idx = unravel<Rank>(half_index, half_shape);
  std::string out = "(";
  for (std::size_t d = 0; d < Rank; ++d) out += (d ? "," : "") + std::to_string(idx[d]);
  return out + ")";
}

template <std::size_t Rank>
PreconditionedSet<Rank> apply_filter_spectrum(const ObservationSet<Rank>& obs,
                                              const std::vector<HalfSpectrum<Rank>>& y_hat,
                                              const HalfSpectrum<Rank>& v_hat, double theta) {
  PreconditionedSet<Rank> pre;
  pre.filter_v = irfft(v_hat);
  pre.theta_used = theta;
  pre.channels_bar.reserve(obs.p());
  pre.spectra.reserve(obs.p());
  for (std::size_t i = 0; i < obs.p(); ++i) {
    pre.channels_bar.push_back(irfft(multiply(y_hat[i], v_hat)));
    // Cache the spectrum of the stored channel itself so the two never drift.
    pre.spectra.push_back(rfft(pre.channels_bar.back()));
  }
  return pre;
}

}  // namespace detail

/*
 * v = F^{-1}( ( (1/(theta N p)) sum_i |y_hat_i|^2 )^{-1/2} ), N = samples per
 * channel. The per-bin sum runs over the sorted channel powers so v is
 * bit-identical under any permutation of the channels.
 *
 * theta only rescales v (and therefore every q) uniformly; a misspecified
 * theta cannot move any minimizer over the sphere.
 */
template <std::size_t Rank>
PreconditionedSet<Rank> compute_preconditioner(const ObservationSet<Rank>& obs, double theta) {
  obs.validate();
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("preconditioner theta must be > 0");
  const auto& shape = obs.shape();
  const std::size_t bins = HalfSpectrum<Rank>::bins(shape);
  std::vector<HalfSpectrum<Rank>> y_hat;
  y_hat.reserve(obs.p());
  for (const auto& y : obs.channels) y_hat.push_back(rfft(y));

  const double scale = 1.0 / (theta * static_cast<double>(obs.n()) * static_cast<double>(obs.p()));
  HalfSpectrum<Rank> v_hat{shape, std::vector<Complex>(bins)};
  std::vector<double> powers(obs.p());
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t i = 0; i < obs.p(); ++i) powers[i] = std::norm(y_hat[i].data[k]);
    std::sort(powers.begin(), powers.end());
    double aggregate = 0.0;
    for (double w : powers) aggregate += w;
    if (!(aggregate > 0.0)) {
      throw DegenerateInputError("aggregate power spectrum vanishes at bin " + detail::bin_label(k, shape));
    }
    v_hat.data[k] = Complex(1.0 / std::sqrt(scale * aggregate), 0.0);
  }
  return detail::apply_filter_spectrum(obs, y_hat, v_hat, theta);
}

/// Preconditioned set for an explicit filter (v = delta gives the raw data).
template <std::size_t Rank>
PreconditionedSet<Rank> precondition_with_filter(const ObservationSet<Rank>& obs, const Field<Rank>& v,
                                                 double theta_used = 0.0) {
  obs.validate();
  Field<Rank>::require_same_shape(obs.channels.front(), v, "precondition_with_filter");
  std::vector<HalfSpectrum<Rank>> y_hat;
  for (const auto& y : obs.channels) y_hat.push_back(rfft(y));
  return detail::apply_filter_spectrum(obs, y_hat, rfft(v), theta_used);
}

/// Largest deviation between stored channels and y_i * v recomputed naively
/// through the FFT route. Used as a consistency check.
template <std::size_t Rank>
double preconditioning_residual(const ObservationSet<Rank>& obs, const PreconditionedSet<Rank>& pre) {
  double worst = 0.0;
  for (std::size_t i = 0; i < obs.p(); ++i) {
    const auto again = circ_conv(obs.channels[i], pre.filter_v);
    for (std::size_t j = 0; j < again.size(); ++j) {
      worst = std::max(worst, std::abs(again[j] - pre.channels_bar[i][j]));
    }
    const auto spec = rfft(pre.channels_bar[i]);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      worst = std::max(worst, std::abs(spec[k] - pre.spectra[i][k]));
    }
  }
  return worst;
}

/*
 * ||R Q^{-1} - I||_2 for R = C_a C_v and Q = C_a (C_a^T C_a)^{-1/2}. All
 * factors are circulant, so this is max_k | v_hat_k |a_hat_k| - 1 |.
 * Diagnostic only: needs the true kernel.
 */
template <std::size_t Rank>
double orthogonality_defect(const Field<Rank>& kernel, const PreconditionedSet<Rank>& pre) {
  Field<Rank>::require_same_shape(kernel, pre.filter_v, "orthogonality_defect");
  const auto diag = diagnose_kernel(kernel);
  if (!diag.invertible) throw NonInvertibleError("orthogonality defect needs an invertible kernel");
  const auto a_hat = rfft(kernel);
  const auto v_hat = rfft(pre.filter_v);
  double worst = 0.0;
  for (std::size_t k = 0; k < a_hat.size(); ++k) {
    worst = std::max(worst, std::abs(v_hat[k] * std::abs(a_hat[k]) - 1.0));
  }
  return worst;
}

template <std::size_t Rank>
double orthogonality_defect(const GroundTruth<Rank>& truth, const PreconditionedSet<Rank>& pre) {
  return orthogonality_defect(truth.kernel, pre);
}

}  // namespace mcsbd

#endif  // MCSBD_PRECOND_HPP_
