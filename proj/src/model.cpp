#include "pmra/model.hpp"

#include <stdexcept>

#include "pmra/rng.hpp"

namespace pmra {

Vector project(const Vector& v) {
  const int p = static_cast<int>(v.size());
  check_grid_size(p);
  const int q = (p - 1) / 2;
  Vector out(q);
  for (int j = 1; j <= q; ++j) {
    out[j - 1] = v[j] + v[p - j];
  }
  return out;
}

Vector project(const Signal& s) { return project(s.values()); }

Vector projected_orbit_sample(const Signal& s, int shift) {
  const int q = s.q();
  Vector out(q);
  for (int j = 1; j <= q; ++j) {
    out[j - 1] = s[j - shift] + s[-j - shift];
  }
  return out;
}

Matrix projected_orbit(const Signal& s) {
  Matrix out(s.p(), s.q());
  for (int l = 0; l < s.p(); ++l) {
    out.row(l) = projected_orbit_sample(s, l).transpose();
  }
  return out;
}

ObservationBatch generate(const Signal& s, int n, double sigma, std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("generate: sample count must be >= 1");
  }
  if (!(sigma >= 0.0)) {
    throw std::invalid_argument("generate: sigma must be >= 0");
  }
  const Matrix orbit = projected_orbit(s);
  const int q = s.q();
  ObservationBatch batch{q, sigma, seed, RowMatrix(n, q)};
  for (int i = 0; i < n; ++i) {
    Stream stream(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const auto shift = static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(s.p())));
    for (int j = 0; j < q; ++j) {
      batch.samples(i, j) = orbit(shift, j) + sigma * stream.gaussian();
    }
  }
  return batch;
}

}  // namespace pmra
