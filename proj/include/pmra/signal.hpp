#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace pmra {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Least nonnegative residue of a modulo p.
constexpr int mod(int a, int p) noexcept {
  const int r = a % p;
  return r < 0 ? r + p : r;
}

/// Throws std::invalid_argument unless p is odd and at least 7.
void check_grid_size(int p);

/// Real signal on the odd cyclic grid Z/p. Position m holds residue m; the
/// negative representative -j lives at position p - j.
class Signal {
 public:
  explicit Signal(Vector values);

  static Signal zeros(int p);
  static Signal constant(int p, double c);

  int p() const noexcept { return static_cast<int>(values_.size()); }
  int q() const noexcept { return (p() - 1) / 2; }

  const Vector& values() const noexcept { return values_; }

  /// Value at residue m (any integer, reduced mod p).
  double operator[](int m) const noexcept { return values_[mod(m, p())]; }

  double norm() const { return values_.norm(); }

 private:
  Vector values_;
};

/// Element R_shift J^reflected of the dihedral group D_2p: reflect first,
/// then shift.
struct DihedralElement {
  int shift = 0;
  bool reflected = false;

  friend bool operator==(const DihedralElement&, const DihedralElement&) = default;
};

/// Group product g*h, so that apply(compose(g, h, p), s) == apply(g, apply(h, s)).
DihedralElement compose(const DihedralElement& g, const DihedralElement& h, int p);

/// All 2p group elements; shifts 0..p-1 unreflected first, then reflected.
std::vector<DihedralElement> dihedral_group(int p);

/// Unitary DFT: x̂[k] = p^{-1/2} Σ_n x[n] e^{-2πikn/p}.
ComplexVector dft(const Vector& x);
ComplexVector dft(const Signal& s);

/// Inverse unitary DFT.
ComplexVector idft(const ComplexVector& xhat);

Signal apply(const DihedralElement& g, const Signal& s);

/// The 2p transforms {R_l θ, R_l J θ}, in dihedral_group order. Not deduplicated.
std::vector<Signal> orbit(const Signal& s);

/// min over g in D_2p of ||a - g·b||_2.
double orbit_distance(const Signal& a, const Signal& b);

/// Orbit distance together with the minimizing element.
struct Alignment {
  double distance = 0.0;
  DihedralElement element;
};
Alignment align(const Signal& a, const Signal& b);

/// Polar Fourier data: θ̂[0] and θ̂[k] = r_k e^{iφ_k}, k = 1..q.
struct SpectralForm {
  int p = 0;
  double mean = 0.0;
  Vector magnitudes;  // r_1..r_q
  Vector phases;      // φ_1..φ_q in [0, 2π)

  static SpectralForm from_signal(const Signal& s);

  /// Assembles the conjugate-symmetric spectrum and inverts it. Throws
  /// std::runtime_error if the imaginary residue exceeds 1e-10 relative.
  Signal to_signal() const;
};

/// Reduces an angle into [0, 2π).
double wrap_two_pi(double angle);

/// Reduces an angle into (-π, π].
double wrap_pi(double angle);

}  // namespace pmra
