#ifndef MCSBD_MODEL_HPP_
#define MCSBD_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "mcsbd/circulant.hpp"
#include "mcsbd/fft.hpp"
#include "mcsbd/field.hpp"
#include "mcsbd/rng.hpp"

namespace mcsbd {

/// p observed channels of identical shape.
template <std::size_t Rank>
struct ObservationSet {
  std::vector<Field<Rank>> channels;

  ObservationSet() = default;
  explicit ObservationSet(std::vector<Field<Rank>> ch) : channels(std::move(ch)) { validate(); }

  std::size_t p() const noexcept { return channels.size(); }
  const Shape<Rank>& shape() const { return channels.front().shape(); }
  /// Number of samples per channel (n in 1D, n1*n2 for grids).
  std::size_t n() const { return channels.front().size(); }

  void validate() const {
    if (channels.empty()) throw DimensionError("observation set needs at least one channel");
    for (const auto& c : channels) {
      if (c.shape() != channels.front().shape()) throw DimensionError("observation channels differ in shape");
    }
  }
};

/// Signal model for the sparse inputs.
enum class SignalModel { bernoulli_gaussian, bernoulli_rademacher };

/// Synthetic instance: unit-norm kernel plus the sparse inputs it blurs.
template <std::size_t Rank>
struct GroundTruth {
  Field<Rank> kernel;
  std::vector<Field<Rank>> signals;
  double theta = 0.0;
  std::uint64_t seed = 0;
};

struct KernelDiagnostics {
  double kappa = 1.0;      // max |a_hat| / min |a_hat|, +inf when singular
  double sigma_min = 0.0;  // min |a_hat|
  double sigma_max = 0.0;
  bool invertible = false;
};

inline constexpr double kDefaultZeroTol = 1e-10;

/// Kernel drawn uniformly from the unit sphere (normalized Gaussian vector).
template <std::size_t Rank>
Field<Rank> sample_kernel(const Shape<Rank>& shape, std::uint64_t seed) {
  if (element_count(shape) < 2) throw ConfigError("sample_kernel needs at least 2 entries");
  Rng rng = make_rng(seed, Stream::kernel);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Field<Rank> a(shape);
  for (double& v : a) v = gauss(rng);
  return normalized(a);
}

inline SignalVec sample_kernel(std::size_t n, std::uint64_t seed) { return sample_kernel<1>({n}, seed); }

/// User-supplied kernel, scaled to unit norm.
template <std::size_t Rank>
Field<Rank> user_kernel(const Field<Rank>& a) {
  if (a.size() < 2) throw ConfigError("kernel needs at least 2 entries");
  return normalized(a);
}

/*
 * p i.i.d. sparse signals: each entry is zero with probability 1 - theta and
 * otherwise a standard normal draw (or a random sign under the Rademacher
 * model). Channel i uses its own stream derived from (seed, i).
 */
template <std::size_t Rank>
std::vector<Field<Rank>> sample_bg_signals(const Shape<Rank>& shape, std::size_t p, double theta,
                                           std::uint64_t seed,
                                           SignalModel model = SignalModel::bernoulli_gaussian) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  if (p == 0) throw ConfigError("need at least one channel");
  std::vector<Field<Rank>> out;
  out.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    Rng rng = make_rng(seed, Stream::signals, i);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Field<Rank> x(shape);
    for (double& v : x) {
      const bool active = unif(rng) < theta;
      if (!active) continue;
      if (model == SignalModel::bernoulli_gaussian) {
        v = gauss(rng);
      } else {
        v = unif(rng) < 0.5 ? -1.0 : 1.0;
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

inline std::vector<SignalVec> sample_bg_signals(std::size_t n, std::size_t p, double theta, std::uint64_t seed) {
  return sample_bg_signals<1>({n}, p, theta, seed);
}

template <std::size_t Rank>
GroundTruth<Rank> synthesize(const Shape<Rank>& shape, std::size_t p, double theta, std::uint64_t seed,
                             SignalModel model = SignalModel::bernoulli_gaussian) {
  GroundTruth<Rank> truth;
  truth.kernel = sample_kernel<Rank>(shape, seed);
  truth.signals = sample_bg_signals<Rank>(shape, p, theta, seed, model);
  truth.theta = theta;
  truth.seed = seed;
  return truth;
}

/// Measurement model y_i = a * x_i.
template <std::size_t Rank>
ObservationSet<Rank> forward(const GroundTruth<Rank>& truth) {
  if (truth.signals.empty()) throw DimensionError("ground truth has no signals");
  const auto a_hat = rfft(truth.kernel);
  std::vector<Field<Rank>> ys;
  ys.reserve(truth.signals.size());
  for (const auto& x : truth.signals) {
    Field<Rank>::require_same_shape(truth.kernel, x, "forward");
    ys.push_back(irfft(multiply(a_hat, rfft(x))));
  }
  return ObservationSet<Rank>(std::move(ys));
}

/// Spectral diagnostics; invertible iff min |a_hat| > zero_tol * max |a_hat|.
template <std::size_t Rank>
KernelDiagnostics diagnose_kernel(const Field<Rank>& a, double zero_tol = kDefaultZeroTol) {
  if (norm_inf(a) == 0.0) throw DegenerateInputError("all-zero kernel");
  const auto spec = rfft(a);
  KernelDiagnostics d;
  d.sigma_min = std::numeric_limits<double>::infinity();
  for (const auto& c : spec.data) {
    const double m = std::abs(c);
    d.sigma_min = std::min(d.sigma_min, m);
    d.sigma_max = std::max(d.sigma_max, m);
  }
  d.invertible = d.sigma_min > zero_tol * d.sigma_max;
  d.kappa = d.sigma_min > 0.0 ? d.sigma_max / d.sigma_min : std::numeric_limits<double>::infinity();
  return d;
}

/// h = F^{-1}(a_hat^{-1}), so that a * h = delta.
template <std::size_t Rank>
Field<Rank> inverse_kernel(const Field<Rank>& a, double zero_tol = kDefaultZeroTol) {
  const auto diag = diagnose_kernel(a, zero_tol);
  if (!diag.invertible) {
    throw NonInvertibleError("kernel is not invertible (kappa = " + std::to_string(diag.kappa) + ")");
  }
  auto spec = rfft(a);
  for (auto& c : spec.data) c = 1.0 / c;
  return irfft(spec);
}

}  // namespace mcsbd

#endif  // MCSBD_MODEL_HPP_
