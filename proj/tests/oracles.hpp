#pragma once

// Naive reference implementations. Each one is written from the defining
// formula with plain loops and shares no code with the library routines it
// checks.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pmra/moments.hpp"
#include "pmra/signal.hpp"

namespace oracle {

using pmra::Matrix;
using pmra::Vector;

inline int wrap(long a, int p) {
  long r = a % p;
  return static_cast<int>(r < 0 ? r + p : r);
}

inline std::vector<std::complex<double>> dft(const Vector& x) {
  const int p = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(p);
  for (int k = 0; k < p; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < p; ++n) {
      const double angle = -2.0 * std::numbers::pi * k * n / p;
      acc += x[n] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc / std::sqrt(static_cast<double>(p));
  }
  return out;
}

/// output[m] = input[m - shift], after optionally reflecting m -> -m.
inline Vector transform(const Vector& x, int shift, bool reflected) {
  const int p = static_cast<int>(x.size());
  Vector out(p);
  for (int m = 0; m < p; ++m) {
    const int src = wrap(m - shift, p);
    out[m] = reflected ? x[wrap(-src, p)] : x[src];
  }
  return out;
}

/// Exhaustive min over 2p elements of ||a - g b||.
inline double orbit_distance(const Vector& a, const Vector& b) {
  const int p = static_cast<int>(a.size());
  double best = INFINITY;
  for (int reflect = 0; reflect < 2; ++reflect) {
    for (int l = 0; l < p; ++l) {
      best = std::min(best, (a - transform(b, l, reflect == 1)).norm());
    }
  }
  return best;
}

/// X_l[j] = θ[j - l] + θ[-j - l], j = 1..q.
inline Vector projected_sample(const Vector& theta, int l) {
  const int p = static_cast<int>(theta.size());
  const int q = (p - 1) / 2;
  Vector out(q);
  for (int j = 1; j <= q; ++j) out[j - 1] = theta[wrap(j - l, p)] + theta[wrap(-j - l, p)];
  return out;
}

struct Moments {
  Vector t1;
  Matrix t2;
  std::vector<double> t3;  // (a*q + b)*q + c
  int q = 0;
  double at(int a, int b, int c) const { return t3[(static_cast<std::size_t>(a) * q + b) * q + c]; }
};

inline Moments average_powers(const std::vector<Vector>& samples) {
  const int q = static_cast<int>(samples.front().size());
  Moments m;
  m.q = q;
  m.t1 = Vector::Zero(q);
  m.t2 = Matrix::Zero(q, q);
  m.t3.assign(static_cast<std::size_t>(q) * q * q, 0.0);
  for (const Vector& y : samples) {
    for (int a = 0; a < q; ++a) {
      m.t1[a] += y[a];
      for (int b = 0; b < q; ++b) {
        m.t2(a, b) += y[a] * y[b];
        for (int c = 0; c < q; ++c) m.t3[(static_cast<std::size_t>(a) * q + b) * q + c] += y[a] * y[b] * y[c];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  m.t1 *= inv;
  m.t2 *= inv;
  for (double& v : m.t3) v *= inv;
  return m;
}

inline Moments population(const Vector& theta) {
  std::vector<Vector> samples;
  for (int l = 0; l < theta.size(); ++l) samples.push_back(projected_sample(theta, l));
  return average_powers(samples);
}

/// C_l[k] = 2 Re(θ̂[k] e^{-2πikl/p}), enumerated directly.
inline std::vector<Vector> cosine_coefficients(const Vector& theta) {
  const int p = static_cast<int>(theta.size());
  const int q = (p - 1) / 2;
  const auto hat = dft(theta);
  std::vector<Vector> out;
  for (int l = 0; l < p; ++l) {
    Vector c(q);
    for (int k = 1; k <= q; ++k) {
      const double angle = -2.0 * std::numbers::pi * k * l / p;
      c[k - 1] = 2.0 * (hat[k] * std::complex<double>(std::cos(angle), std::sin(angle))).real();
    }
    out.push_back(c);
  }
  return out;
}

/// Magnitudes and phases r_k, φ_k for k = 1..q (index k-1).
struct Polar {
  double mean = 0.0;
  Vector r, phi;
};

inline Polar polar(const Vector& theta) {
  const int p = static_cast<int>(theta.size());
  const int q = (p - 1) / 2;
  const auto hat = dft(theta);
  Polar out;
  out.mean = hat[0].real();
  out.r.resize(q);
  out.phi.resize(q);
  for (int k = 1; k <= q; ++k) {
    out.r[k - 1] = std::abs(hat[k]);
    out.phi[k - 1] = std::arg(hat[k]);
  }
  return out;
}

/// Distance between two angles on the circle.
inline double angle_gap(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * std::numbers::pi));
}

inline Vector gaussian_vector(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(p);
  for (int i = 0; i < p; ++i) v[i] = normal(rng);
  return v;
}

/// Unit-norm Gaussian signal with every |θ̂[k]| above floor.
inline Vector generic_unit_signal(int p, std::mt19937_64& rng, double floor = 0.01) {
  for (;;) {
    Vector v = gaussian_vector(p, rng);
    v /= v.norm();
    if (polar(v).r.minCoeff() > floor) return v;
  }
}

}  // namespace oracle
