#pragma once

#include <cstdint>

#include "pmra/signal.hpp"

namespace pmra {

/// Noisy projected observations y_i = Π(R_{l_i} θ) + ξ_i. The latent shifts
/// are not retained.
struct ObservationBatch {
  int q = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  RowMatrix samples;  // n rows of length q

  int n() const noexcept { return static_cast<int>(samples.rows()); }
};

/// (Π v)[j] = v[j] + v[-j], j = 1..q; returned 0-based (entry j-1).
Vector project(const Vector& v);
Vector project(const Signal& s);

/// X_l = Π(R_l θ).
Vector projected_orbit_sample(const Signal& s, int shift);

/// All noiseless projected samples, row l = X_l.
Matrix projected_orbit(const Signal& s);

/// Draws n observations. Sample i consumes the stream keyed by
/// derive_seed(seed, i): one integer for the shift, then q Box-Muller
/// deviates for the noise. Identical arguments give identical batches.
ObservationBatch generate(const Signal& s, int n, double sigma, std::uint64_t seed);

}  // namespace pmra
