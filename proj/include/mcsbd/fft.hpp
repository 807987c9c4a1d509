#ifndef MCSBD_FFT_HPP_
#define MCSBD_FFT_HPP_

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "mcsbd/field.hpp"

namespace mcsbd {

using Complex = std::complex<double>;

/*
 * DFT conventions used everywhere in the library: the forward transform is
 * unnormalized (x_hat_k = sum_j x_j exp(-2 pi i jk/n), so ||F|| = sqrt(n))
 * and the inverse carries the 1/n factor. Spectral formulas for the
 * preconditioner and the inverse kernel depend on this choice.
 */

/// Full-length complex spectrum of a real field, same shape as the field.
template <std::size_t Rank>
struct Spectrum {
  Shape<Rank> shape{};
  std::vector<Complex> data;

  Complex& operator[](std::size_t i) { return data[i]; }
  Complex operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
};

/*
 * Non-redundant half of a real field's spectrum (last axis truncated to
 * n/2+1 bins). This is the working representation for every hot loop; the
 * full Spectrum is only materialized on request.
 */
template <std::size_t Rank>
struct HalfSpectrum {
  Shape<Rank> shape{};  // shape of the real-domain field
  std::vector<Complex> data;

  static std::size_t bins(const Shape<Rank>& real_shape) {
    std::size_t count = real_shape[Rank - 1] / 2 + 1;
    for (std::size_t d = 0; d + 1 < Rank; ++d) count *= real_shape[d];
    return count;
  }

  Complex& operator[](std::size_t i) { return data[i]; }
  Complex operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
};

namespace detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
  auto* raw = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1)));
  if (!raw) throw std::bad_alloc();
  return FftwBuffer<T>(raw);
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};

enum class PlanKind { r2c, c2r };

/*
 * Plans are created once per (kind, shape) with FFTW_ESTIMATE and reused
 * through the new-array execute interface, always on fftw_malloc'd buffers
 * so alignment matches the planning buffers. The FFTW planner is not
 * re-entrant; creation is serialized here, execution is thread-safe.
 */
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  template <std::size_t Rank>
  fftw_plan get(PlanKind kind, const Shape<Rank>& shape) {
    std::vector<int> key{static_cast<int>(kind), static_cast<int>(Rank)};
    for (auto e : shape) key.push_back(static_cast<int>(e));
    std::lock_guard lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second.get();

    int dims[Rank];
    for (std::size_t d = 0; d < Rank; ++d) dims[d] = static_cast<int>(shape[d]);
    const std::size_t real_count = element_count(shape);
    const std::size_t half_count = HalfSpectrum<Rank>::bins(shape);
    auto real = fftw_buffer<double>(real_count);
    auto cplx = fftw_buffer<fftw_complex>(half_count);
    fftw_plan plan = nullptr;
    if (kind == PlanKind::r2c) {
      plan = fftw_plan_dft_r2c(static_cast<int>(Rank), dims, real.get(), cplx.get(), FFTW_ESTIMATE);
    } else {
      plan = fftw_plan_dft_c2r(static_cast<int>(Rank), dims, cplx.get(), real.get(),
                               FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
    }
    if (!plan) throw Error("FFTW failed to create a plan for shape " + shape_string(shape));
    auto [pos, inserted] = plans_.emplace(std::move(key), std::unique_ptr<fftw_plan_s, PlanDeleter>(plan));
    return pos->second.get();
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::vector<int>, std::unique_ptr<fftw_plan_s, PlanDeleter>> plans_;
};

}  // namespace detail

/// Forward real-to-half-complex transform.
template <std::size_t Rank>
HalfSpectrum<Rank> rfft(const Field<Rank>& x) {
  const auto& shape = x.shape();
  const std::size_t n = x.size();
  const std::size_t bins = HalfSpectrum<Rank>::bins(shape);
  fftw_plan plan = detail::PlanCache::instance().get<Rank>(detail::PlanKind::r2c, shape);
  auto in = detail::fftw_buffer<double>(n);
  auto out = detail::fftw_buffer<fftw_complex>(bins);
  std::memcpy(in.get(), x.values().data(), n * sizeof(double));
  fftw_execute_dft_r2c(plan, in.get(), out.get());
  HalfSpectrum<Rank> spec{shape, std::vector<Complex>(bins)};
  for (std::size_t k = 0; k < bins; ++k) spec.data[k] = Complex(out[k][0], out[k][1]);
  return spec;
}

/// Inverse of rfft, including the 1/N normalization.
template <std::size_t Rank>
Field<Rank> irfft(const HalfSpectrum<Rank>& spec) {
  const auto& shape = spec.shape;
  const std::size_t n = element_count(shape);
  const std::size_t bins = HalfSpectrum<Rank>::bins(shape);
  if (spec.data.size() != bins) throw DimensionError("half spectrum has the wrong number of bins");
  fftw_plan plan = detail::PlanCache::instance().get<Rank>(detail::PlanKind::c2r, shape);
  auto in = detail::fftw_buffer<fftw_complex>(bins);
  auto out = detail::fftw_buffer<double>(n);
  std::memcpy(in.get(), spec.data.data(), bins * sizeof(fftw_complex));
  fftw_execute_dft_c2r(plan, in.get(), out.get());
  std::vector<double> values(out.get(), out.get() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : values) v *= scale;
  return Field<Rank>(shape, std::move(values));
}

namespace detail {

// Maps a full-spectrum multi-index to its half-spectrum slot, reporting
// whether the value must be conjugated (Hermitian symmetry of real input).
template <std::size_t Rank>
std::pair<std::size_t, bool> half_slot(std::array<std::size_t, Rank> k, const Shape<Rank>& shape) {
  const std::size_t last = shape[Rank - 1];
  const std::size_t half_last = last / 2 + 1;
  bool conj = false;
  if (k[Rank - 1] >= half_last) {
    conj = true;
    for (std::size_t d = 0; d < Rank; ++d) k[d] = (shape[d] - k[d]) % shape[d];
  }
  std::size_t flat = 0;
  for (std::size_t d = 0; d + 1 < Rank; ++d) flat = flat * shape[d] + k[d];
  flat = flat * half_last + k[Rank - 1];
  return {flat, conj};
}

}  // namespace detail

/// Full-length unnormalized DFT of a real field.
template <std::size_t Rank>
Spectrum<Rank> fft(const Field<Rank>& x) {
  const auto half = rfft(x);
  Spectrum<Rank> full{x.shape(), std::vector<Complex>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [slot, conj] = detail::half_slot<Rank>(unravel<Rank>(i, x.shape()), x.shape());
    full.data[i] = conj ? std::conj(half.data[slot]) : half.data[slot];
  }
  return full;
}

/// Drops the redundant half of a (Hermitian) full spectrum.
template <std::size_t Rank>
HalfSpectrum<Rank> to_half(const Spectrum<Rank>& full) {
  if (full.data.size() != element_count(full.shape)) throw DimensionError("spectrum size/shape mismatch");
  HalfSpectrum<Rank> half{full.shape, std::vector<Complex>(HalfSpectrum<Rank>::bins(full.shape))};
  for (std::size_t i = 0; i < full.data.size(); ++i) {
    auto idx = unravel<Rank>(i, full.shape);
    if (idx[Rank - 1] > full.shape[Rank - 1] / 2) continue;
    auto [slot, conj] = detail::half_slot<Rank>(idx, full.shape);
    half.data[slot] = full.data[i];
  }
  return half;
}

/// Inverse DFT back to a real field. The input is taken to be Hermitian
/// (the spectrum of a real signal); any anti-Hermitian part is discarded.
template <std::size_t Rank>
Field<Rank> ifft(const Spectrum<Rank>& spec) {
  return irfft(to_half(spec));
}

/// Pointwise spectral product, optionally conjugating the left factor.
template <std::size_t Rank>
HalfSpectrum<Rank> multiply(const HalfSpectrum<Rank>& a, const HalfSpectrum<Rank>& b, bool conj_a = false) {
  if (a.shape != b.shape) throw DimensionError("spectral product: shape mismatch");
  HalfSpectrum<Rank> out{a.shape, std::vector<Complex>(a.data.size())};
  if (conj_a) {
    for (std::size_t k = 0; k < a.data.size(); ++k) out.data[k] = std::conj(a.data[k]) * b.data[k];
  } else {
    for (std::size_t k = 0; k < a.data.size(); ++k) out.data[k] = a.data[k] * b.data[k];
  }
  return out;
}

}  // namespace mcsbd

#endif  // MCSBD_FFT_HPP_
