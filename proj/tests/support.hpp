#ifndef MCSBD_TESTS_SUPPORT_HPP_
#define MCSBD_TESTS_SUPPORT_HPP_

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "mcsbd/mcsbd.hpp"

namespace testing_support {

using namespace mcsbd;

inline SignalVec random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  SignalVec v(Shape<1>{n});
  for (double& x : v) x = g(rng);
  return v;
}

inline SignalGrid random_grid(std::size_t n1, std::size_t n2, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  SignalGrid v(Shape<2>{n1, n2});
  for (double& x : v) x = g(rng);
  return v;
}

inline SignalVec unit_random(std::size_t n, std::mt19937_64& rng) { return normalized(random_vec(n, rng)); }

/// Explicit O(n^2) DFT, unnormalized forward.
inline std::vector<std::complex<double>> dft(const SignalVec& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc{};
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * j % n) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// Dense n x n circulant with columns the cyclic shifts of v (C_v u = v * u).
inline std::vector<std::vector<double>> circulant(const SignalVec& v) {
  const std::size_t n = v.size();
  std::vector<std::vector<double>> c(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i][j] = v[(i + n - j) % n];
  return c;
}

inline SignalVec matvec(const std::vector<std::vector<double>>& m, const SignalVec& u) {
  SignalVec out(Shape<1>{m.size()});
  for (std::size_t i = 0; i < m.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) acc += m[i][j] * u[j];
    out[i] = acc;
  }
  return out;
}

inline SignalVec matvec_t(const std::vector<std::vector<double>>& m, const SignalVec& u) {
  SignalVec out(Shape<1>{m.front().size()});
  for (std::size_t j = 0; j < out.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc += m[i][j] * u[i];
    out[j] = acc;
  }
  return out;
}

template <std::size_t Rank>
double max_abs_diff(const Field<Rank>& a, const Field<Rank>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Observations whose preconditioned copy uses the identity filter.
inline PreconditionedSet<1> raw_set(const std::vector<SignalVec>& channels) {
  return precondition_with_filter(ObservationSet<1>(channels), SignalVec::delta({channels.front().size()}));
}

}  // namespace testing_support

#endif  // MCSBD_TESTS_SUPPORT_HPP_
