#ifndef MCSBD_SOLVER2D_HPP_
#define MCSBD_SOLVER2D_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "mcsbd/model.hpp"
#include "mcsbd/precond.hpp"
#include "mcsbd/recover.hpp"
#include "mcsbd/rounding.hpp"
#include "mcsbd/sphere.hpp"

namespace mcsbd {

// The grid pipeline reuses the rank-generic 1D machinery: every operator in
// the losses, sphere and rounding layers works on Field<2> with the
// Frobenius inner product.

using GridObservations = ObservationSet<2>;
using GridPreconditioned = PreconditionedSet<2>;
using GridSolverState = SolverState<2>;
using GridSolverConfig = RgdConfig<2>;

inline GridPreconditioned precondition2d(const GridObservations& frames, double theta) {
  return compute_preconditioner(frames, theta);
}

inline GridSolverState rgd2d_solve(const GridPreconditioned& pre, const GridSolverConfig& cfg,
                                   const DistanceFn<2>& dist = {}) {
  return rgd_solve(pre, cfg, dist);
}

inline SignalGrid lp_round2d(const GridPreconditioned& pre, const SignalGrid& u, const RoundingConfig& cfg) {
  return lp_round(pre, u, cfg).q;
}

inline Reconstruction<2> reconstruct2d(const GridPreconditioned& pre, const SignalGrid& z_star) {
  return reconstruct(pre, z_star);
}

/*
 * Isotropic Gaussian PSF sampled on a patch x patch window around the
 * origin of an n1 x n2 torus, renormalized to unit Frobenius norm. Throws
 * when the result is not invertible on the torus.
 */
inline SignalGrid gaussian_psf(std::size_t n1, std::size_t n2, std::size_t patch, double sigma) {
  if (patch == 0 || patch > n1 || patch > n2) throw ConfigError("psf patch must fit in the grid");
  if (!(sigma > 0.0)) throw ConfigError("psf sigma must be > 0");
  SignalGrid a(Shape<2>{n1, n2});
  // Peak on the origin pixel: an even patch centred between pixels would be
  // symmetric about a half-integer and vanish exactly at the Nyquist bin.
  const std::int64_t lo = -static_cast<std::int64_t>(patch / 2);
  for (std::size_t u = 0; u < patch; ++u) {
    for (std::size_t v = 0; v < patch; ++v) {
      const auto du = lo + static_cast<std::int64_t>(u);
      const auto dv = lo + static_cast<std::int64_t>(v);
      const double w = std::exp(-static_cast<double>(du * du + dv * dv) / (2.0 * sigma * sigma));
      const auto r = detail::wrap(du, n1);
      const auto c = detail::wrap(dv, n2);
      a(r, c) = w;
    }
  }
  a = normalized(a);
  if (!diagnose_kernel(a).invertible) throw NonInvertibleError("psf is not invertible on this grid");
  return a;
}

/// p frames of BG(theta) point sources on an n1 x n2 grid blurred by `psf`.
inline GroundTruth<2> synthesize2d(const SignalGrid& psf, std::size_t p, double theta, std::uint64_t seed) {
  GroundTruth<2> truth;
  truth.kernel = user_kernel(psf);
  truth.signals = sample_bg_signals<2>(psf.shape(), p, theta, seed);
  truth.theta = theta;
  truth.seed = seed;
  return truth;
}

/// Views each length-n channel as an n x 1 grid.
inline SignalGrid embed_column(const SignalVec& v) {
  return SignalGrid(Shape<2>{v.size(), 1}, std::vector<double>(v.begin(), v.end()));
}

inline SignalVec extract_column(const SignalGrid& g) {
  if (g.extent(1) != 1) throw DimensionError("expected an n x 1 grid, got " + shape_string(g.shape()));
  return SignalVec(std::vector<double>(g.begin(), g.end()));
}

inline GridObservations embed_columns(const ObservationSet<1>& obs) {
  std::vector<SignalGrid> frames;
  frames.reserve(obs.p());
  for (const auto& y : obs.channels) frames.push_back(embed_column(y));
  return GridObservations(std::move(frames));
}

}  // namespace mcsbd

#endif  // MCSBD_SOLVER2D_HPP_
