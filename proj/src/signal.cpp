#include "pmra/signal.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pmra {

void check_grid_size(int p) {
  if (p < 7 || p % 2 == 0) {
    throw std::invalid_argument("grid size must be odd and >= 7, got " + std::to_string(p));
  }
}

Signal::Signal(Vector values) : values_(std::move(values)) {
  check_grid_size(static_cast<int>(values_.size()));
  if (!values_.allFinite()) {
    throw std::invalid_argument("signal values must be finite");
  }
}

Signal Signal::zeros(int p) {
  check_grid_size(p);
  return Signal(Vector::Zero(p));
}

Signal Signal::constant(int p, double c) {
  check_grid_size(p);
  return Signal(Vector::Constant(p, c));
}

DihedralElement compose(const DihedralElement& g, const DihedralElement& h, int p) {
  // J R_c = R_{-c} J
  const int shift = g.reflected ? mod(g.shift - h.shift, p) : mod(g.shift + h.shift, p);
  return {shift, g.reflected != h.reflected};
}

std::vector<DihedralElement> dihedral_group(int p) {
  std::vector<DihedralElement> out;
  out.reserve(2 * static_cast<std::size_t>(p));
  for (int reflected = 0; reflected < 2; ++reflected) {
    for (int l = 0; l < p; ++l) {
      out.push_back({l, reflected == 1});
    }
  }
  return out;
}

namespace {

// Twiddle table w[m] = e^{-2πi m/p}; indexing by (k*n) mod p keeps the
// phases exact to one rounding.
std::vector<std::complex<double>> twiddles(int p) {
  std::vector<std::complex<double>> w(p);
  for (int m = 0; m < p; ++m) {
    const double angle = -2.0 * std::numbers::pi * m / p;
    w[m] = {std::cos(angle), std::sin(angle)};
  }
  return w;
}

}  // namespace

ComplexVector dft(const Vector& x) {
  const int p = static_cast<int>(x.size());
  const auto w = twiddles(p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  ComplexVector out(p);
  for (int k = 0; k < p; ++k) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < p; ++n) {
      acc += x[n] * w[(static_cast<long>(k) * n) % p];
    }
    out[k] = acc * scale;
  }
  return out;
}

ComplexVector dft(const Signal& s) { return dft(s.values()); }

ComplexVector idft(const ComplexVector& xhat) {
  const int p = static_cast<int>(xhat.size());
  const auto w = twiddles(p);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p));
  ComplexVector out(p);
  for (int n = 0; n < p; ++n) {
    std::complex<double> acc = 0.0;
    for (int k = 0; k < p; ++k) {
      acc += xhat[k] * std::conj(w[(static_cast<long>(k) * n) % p]);
    }
    out[n] = acc * scale;
  }
  return out;
}

Signal apply(const DihedralElement& g, const Signal& s) {
  const int p = s.p();
  Vector out(p);
  for (int m = 0; m < p; ++m) {
    // (R_l J^b θ)[m] = (J^b θ)[m - l]
    const int src = m - g.shift;
    out[m] = g.reflected ? s[-src] : s[src];
  }
  return Signal(std::move(out));
}

std::vector<Signal> orbit(const Signal& s) {
  std::vector<Signal> out;
  out.reserve(2 * static_cast<std::size_t>(s.p()));
  for (const auto& g : dihedral_group(s.p())) {
    out.push_back(apply(g, s));
  }
  return out;
}

Alignment align(const Signal& a, const Signal& b) {
  if (a.p() != b.p()) {
    throw std::invalid_argument("orbit distance: dimension mismatch");
  }
  Alignment best{std::numeric_limits<double>::infinity(), {}};
  for (const auto& g : dihedral_group(b.p())) {
    const double d = (a.values() - apply(g, b).values()).norm();
    if (d < best.distance) {
      best = {d, g};
    }
  }
  return best;
}

double orbit_distance(const Signal& a, const Signal& b) { return align(a, b).distance; }

double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(angle, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

double wrap_pi(double angle) {
  double r = wrap_two_pi(angle);
  if (r > std::numbers::pi) r -= 2.0 * std::numbers::pi;
  return r;
}

SpectralForm SpectralForm::from_signal(const Signal& s) {
  const auto spectrum = dft(s);
  SpectralForm out;
  out.p = s.p();
  out.mean = spectrum[0].real();
  const int q = s.q();
  out.magnitudes.resize(q);
  out.phases.resize(q);
  for (int k = 1; k <= q; ++k) {
    out.magnitudes[k - 1] = std::abs(spectrum[k]);
    out.phases[k - 1] = wrap_two_pi(std::arg(spectrum[k]));
  }
  return out;
}

Signal SpectralForm::to_signal() const {
  check_grid_size(p);
  const int q = (p - 1) / 2;
  if (magnitudes.size() != q || phases.size() != q) {
    throw std::invalid_argument("spectral form: expected q magnitudes and phases");
  }
  ComplexVector spectrum(p);
  spectrum[0] = mean;
  for (int k = 1; k <= q; ++k) {
    const auto coefficient = std::polar(magnitudes[k - 1], phases[k - 1]);
    spectrum[k] = coefficient;
    spectrum[p - k] = std::conj(coefficient);
  }
  const ComplexVector values = idft(spectrum);
  const double scale = std::max(values.norm(), 1.0);
  if (values.imag().norm() > 1e-10 * scale) {
    throw std::runtime_error("spectral form does not invert to a real signal");
  }
  return Signal(values.real());
}

}  // namespace pmra
