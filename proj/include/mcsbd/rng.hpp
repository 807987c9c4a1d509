#ifndef MCSBD_RNG_HPP_
#define MCSBD_RNG_HPP_

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mcsbd {

using Rng = std::mt19937_64;

/*
 * Stream-splitting rule. Every random quantity is drawn from its own
 * generator, seeded with derive_seed(master, stream, index...):
 *
 *   kernel            derive_seed(seed, Stream::kernel)
 *   signal channel i  derive_seed(seed, Stream::signals, i)
 *   initialization    derive_seed(seed, Stream::init)
 *   probes            derive_seed(seed, Stream::probe, ...)
 *
 * so channels can be generated in any order or in parallel and an
 * experiment grid can grow without reshuffling existing cells.
 */
enum class Stream : std::uint64_t { kernel = 1, signals = 2, init = 3, probe = 4, trial = 5 };

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC908ull;
  for (auto w : words) h = splitmix64(h ^ splitmix64(w));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return hash_combine({master, static_cast<std::uint64_t>(stream), index});
}

/// Bit pattern of a double, so real-valued cell coordinates hash exactly.
inline std::uint64_t hash_word(double x) { return std::bit_cast<std::uint64_t>(x); }

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

}  // namespace mcsbd

#endif  // MCSBD_RNG_HPP_
