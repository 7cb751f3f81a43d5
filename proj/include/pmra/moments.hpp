#pragma once

#include <span>
#include <vector>

#include "pmra/model.hpp"
#include "pmra/signal.hpp"

namespace pmra {

/// Dense q×q×q tensor, index (a, b, c) stored at (a*q + b)*q + c.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int dim, double fill = 0.0)
      : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, fill) {}

  int dim() const noexcept { return dim_; }

  double& operator()(int a, int b, int c) noexcept { return data_[index(a, b, c)]; }
  double operator()(int a, int b, int c) const noexcept { return data_[index(a, b, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double frobenius_norm() const;

  /// Largest deviation from full permutation symmetry.
  double asymmetry() const;

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double s);

  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }

 private:
  std::size_t index(int a, int b, int c) const noexcept {
    return (static_cast<std::size_t>(a) * dim_ + b) * dim_ + c;
  }

  int dim_ = 0;
  std::vector<double> data_;
};

/// out(a,b,c) = Σ B(a,i) B(b,j) B(c,k) t(i,j,k).
Tensor3 multilinear(const Matrix& b, const Tensor3& t);

enum class MomentKind { population, raw_empirical, debiased_empirical };

/// First three moments in projected coordinates.
struct MomentSet {
  int q = 0;
  Vector t1;
  Matrix t2;
  Tensor3 t3;
  MomentKind kind = MomentKind::population;
};

/// Fourier-cosine moments; the first moment stays in projected coordinates.
struct CosineMomentSet {
  int q = 0;
  Vector t1_projected;
  Matrix m2;
  Tensor3 m3;
};

/// The q×q matrix A[j][k] = 2cos(2πjk/p) and its inverse.
class CosineMatrix {
 public:
  explicit CosineMatrix(int p);

  int p() const noexcept { return p_; }
  int q() const noexcept { return (p_ - 1) / 2; }
  const Matrix& a() const noexcept { return a_; }
  const Matrix& a_inv() const noexcept { return a_inv_; }

 private:
  int p_;
  Matrix a_;
  Matrix a_inv_;
};

/// Throws std::invalid_argument for even or too-small p.
CosineMatrix cosine_matrix(int p);

/// Exact averages of X_l^{⊗d} over all p shifts.
MomentSet population_moments(const Signal& s);

/// Single-pass moment sums. Partial accumulators merge associatively, so
/// batches can be split across workers.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int q);

  void add(std::span<const double> y);
  void merge(const MomentAccumulator& other);

  long count() const noexcept { return count_; }

  /// Raw empirical moments (sums divided by the count).
  MomentSet finish() const;

 private:
  int q_;
  long count_ = 0;
  Vector s1_;
  Matrix s2_;                 // upper triangle only
  std::vector<double> s3_;    // packed a <= b <= c
};

MomentSet empirical_moments(const ObservationBatch& batch);
MomentSet empirical_moments(const RowMatrix& samples);

/// Gaussian debiasing of raw empirical moments for noise level sigma.
MomentSet debias(const MomentSet& raw, double sigma);

/// Central second and third moments about t1, via the central-moment expansion.
struct CenteredMoments {
  Matrix c2;
  Tensor3 c3;
};
CenteredMoments center(const MomentSet& m);

/// p^{d/2} (A^{-1})^{⊗d} applied to the centered moments. Population input
/// must have t1 proportional to the all-ones vector.
CosineMomentSet to_cosine(const MomentSet& m, const CosineMatrix& cm);

/// Σ_d ||model^(d) - target^(d)||_F^2 / ||target^(d)||_F^2 over d = 1, 2, 3.
/// A zero-norm target block is normalized by 1 instead.
double block_normalized_loss(const MomentSet& model, const MomentSet& target);

/// C_l[k] = 2 Re{θ̂[k] e^{-2πikl/p}}; row l, column k-1.
Matrix cosine_coefficients(const Signal& s);

/// Direct averages of C_l^{⊗d} over all shifts; t1_projected is T^(1)(θ).
CosineMomentSet population_cosine_moments(const Signal& s);

}  // namespace pmra
