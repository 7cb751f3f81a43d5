#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pmra/signal.hpp"

namespace pmra {

enum class JacobianScheme { forward_difference, central_difference };

/// Solver and multi-start settings shared by the moment estimators.
struct OptConfig {
  int starts = 20;
  int max_iters = 300;
  int max_fun_evals = 3000;
  double fun_tol = 1e-10;
  double step_tol = 1e-10;
  std::uint64_t seed = 0;
  JacobianScheme jacobian = JacobianScheme::forward_difference;

  void validate() const;
};

using ResidualFn = std::function<Vector(const Vector&)>;

enum class LMStatus { zero_residual, fun_tol, step_tol, max_iters, max_fun_evals, stalled };

std::string to_string(LMStatus status);

struct LMResult {
  Vector x;
  double objective = 0.0;  // ||r(x)||^2
  int iterations = 0;      // accepted steps
  int fun_evals = 0;
  LMStatus status = LMStatus::max_iters;
  std::vector<double> trace;  // objective after each accepted step, starting at x0
};

/// Damped Gauss-Newton with additive damping λI, λ_0 = 1e-3·max diag(JᵀJ),
/// ×10 on a rejected step and ÷10 on an accepted one. Jacobians by finite
/// differences with step sqrt(eps)·(1 + |x_i|). Throws std::domain_error if
/// the residual at x0 is not finite.
LMResult levenberg_marquardt(const ResidualFn& residual, const Vector& x0, const OptConfig& cfg);

}  // namespace pmra
