#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmra/lm.hpp"
#include "pmra/model.hpp"
#include "pmra/moments.hpp"
#include "pmra/signal.hpp"

namespace pmra {

struct EMConfig {
  int starts = 5;
  int max_iters = 2000;
  double rel_tol = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  Signal estimate = Signal::zeros(7);
  /// Final loss of the winning start. For EM this is the negative marginal
  /// log-likelihood, so lower is better for every method.
  double objective = 0.0;
  int iterations = 0;
  int start_index = 0;
  Vector initial_point;  // starting point of the winning start
  /// Per-iteration trace of the winning start: objective values for the
  /// moment fits, marginal log-likelihood for EM.
  std::vector<double> trace;
  /// Same traces for every start, in start order.
  std::vector<std::vector<double>> start_traces;
  std::vector<std::string> diagnostics;
};

/// Unit-norm Gaussian starting points, start s drawn from derive_seed(seed, s).
std::vector<Vector> random_unit_starts(int p, int count, std::uint64_t seed);

// --- expectation-maximization -------------------------------------------------

struct EStep {
  RowMatrix weights;             // n × p posterior shift probabilities
  double log_likelihood = 0.0;   // Σ_i log((1/p) Σ_l N(y_i; Π R_l θ, σ² I))
};

EStep em_e_step(const ObservationBatch& batch, const Vector& theta, double sigma);

/// Normal equations of the M-step, both sides divided by n.
struct NormalEquations {
  Matrix matrix;  // p × p
  Vector rhs;     // p
};

NormalEquations em_normal_equations(const ObservationBatch& batch, const RowMatrix& weights, int p);

/// Multi-start EM; the start with the largest final marginal log-likelihood
/// wins (ties go to the lowest start index).
FitResult em_fit(const ObservationBatch& batch, double sigma, const EMConfig& cfg);
FitResult em_fit(const ObservationBatch& batch, double sigma, const EMConfig& cfg,
                 std::span<const Vector> starts);

// --- moment least squares ---------------------------------------------------

/// Stacked residual of Σ_d ||T^(d)(ϑ) - T̃^(d)||² / ||T̃^(d)||².
class TMomentObjective {
 public:
  explicit TMomentObjective(const MomentSet& target);

  Vector residual(const Vector& theta) const;
  double operator()(const Vector& theta) const { return residual(theta).squaredNorm(); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  MomentSet target_;
  double scale1_ = 1.0, scale2_ = 1.0, scale3_ = 1.0;
  std::vector<std::string> warnings_;
};

/// Projected first-moment block plus Fourier-cosine second and third blocks.
class MMomentObjective {
 public:
  MMomentObjective(const MomentSet& target, const CosineMatrix& cm);

  Vector residual(const Vector& theta) const;
  double operator()(const Vector& theta) const { return residual(theta).squaredNorm(); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const CosineMomentSet& target() const noexcept { return target_; }

 private:
  CosineMomentSet target_;
  double scale1_ = 1.0, scale2_ = 1.0, scale3_ = 1.0;
  std::vector<std::string> warnings_;
};

FitResult fit_T(const MomentSet& moments, const OptConfig& cfg);
FitResult fit_T(const MomentSet& moments, const OptConfig& cfg, std::span<const Vector> starts);

FitResult fit_M(const MomentSet& moments, const CosineMatrix& cm, const OptConfig& cfg);
FitResult fit_M(const MomentSet& moments, const CosineMatrix& cm, const OptConfig& cfg,
                std::span<const Vector> starts);

}  // namespace pmra
