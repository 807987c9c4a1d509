#ifndef MCSBD_CIRCULANT_HPP_
#define MCSBD_CIRCULANT_HPP_

#include <array>
#include <cstdint>

#include "mcsbd/fft.hpp"
#include "mcsbd/field.hpp"

namespace mcsbd {

/// Evaluation route for circulant products. `naive` is the O(N^2) direct
/// modular sum and stays available as the reference for the FFT route.
enum class ConvPath { fft, naive };

namespace detail {

inline std::size_t wrap(std::int64_t i, std::size_t n) {
  const auto m = static_cast<std::int64_t>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

template <std::size_t Rank>
Field<Rank> naive_conv(const Field<Rank>& u, const Field<Rank>& v) {
  const auto& shape = u.shape();
  Field<Rank> out(shape);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto ii = unravel<Rank>(i, shape);
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const auto jj = unravel<Rank>(j, shape);
      std::array<std::size_t, Rank> diff{};
      for (std::size_t d = 0; d < Rank; ++d) {
        diff[d] = (ii[d] + shape[d] - jj[d]) % shape[d];
      }
      acc += u[j] * v[ravel<Rank>(diff, shape)];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace detail

/// (u * v)_i = sum_j u_j v_{(i-j) mod n}, per axis for grids.
template <std::size_t Rank>
Field<Rank> circ_conv(const Field<Rank>& u, const Field<Rank>& v, ConvPath path = ConvPath::fft) {
  Field<Rank>::require_same_shape(u, v, "circ_conv");
  if (path == ConvPath::naive) return detail::naive_conv(u, v);
  return irfft(multiply(rfft(u), rfft(v)));
}

/// Cyclic shift s_l[v]_i = v_{(i-l) mod n}; any integer offset per axis.
template <std::size_t Rank>
Field<Rank> cyclic_shift(const Field<Rank>& v, const std::array<std::int64_t, Rank>& offset) {
  const auto& shape = v.shape();
  Field<Rank> out(shape);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto idx = unravel<Rank>(i, shape);
    for (std::size_t d = 0; d < Rank; ++d) {
      idx[d] = detail::wrap(static_cast<std::int64_t>(idx[d]) + offset[d], shape[d]);
    }
    out[ravel<Rank>(idx, shape)] = v[i];
  }
  return out;
}

inline SignalVec cyclic_shift(const SignalVec& v, std::int64_t offset) {
  return cyclic_shift<1>(v, {offset});
}

/*
 * Cyclic reversal: v_check_i = v_{(-i) mod n} on every axis, so the entry at
 * the origin stays put ([v1, vn, ..., v2] in 1D). For grids this is the flip
 * used to turn convolution into correlation.
 */
template <std::size_t Rank>
Field<Rank> cyclic_reverse(const Field<Rank>& v) {
  const auto& shape = v.shape();
  Field<Rank> out(shape);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto idx = unravel<Rank>(i, shape);
    for (std::size_t d = 0; d < Rank; ++d) idx[d] = (shape[d] - idx[d]) % shape[d];
    out[ravel<Rank>(idx, shape)] = v[i];
  }
  return out;
}

/// Correlation C_v^T u = reverse(v) * u.
template <std::size_t Rank>
Field<Rank> circ_corr(const Field<Rank>& v, const Field<Rank>& u, ConvPath path = ConvPath::fft) {
  Field<Rank>::require_same_shape(v, u, "circ_corr");
  if (path == ConvPath::naive) return detail::naive_conv(cyclic_reverse(v), u);
  return irfft(multiply(rfft(v), rfft(u), /*conj_a=*/true));
}

inline SignalGrid conv2d(const SignalGrid& a, const SignalGrid& b, ConvPath path = ConvPath::fft) {
  return circ_conv<2>(a, b, path);
}

inline SignalGrid corr2d(const SignalGrid& a, const SignalGrid& b, ConvPath path = ConvPath::fft) {
  return circ_corr<2>(a, b, path);
}

inline SignalGrid flip2d(const SignalGrid& z) { return cyclic_reverse<2>(z); }

}  // namespace mcsbd

#endif  // MCSBD_CIRCULANT_HPP_
