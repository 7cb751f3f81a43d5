#include "pmra/lm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmra {

void OptConfig::validate() const {
  if (starts < 1 || max_iters < 0 || max_fun_evals < 1) {
    throw std::invalid_argument("OptConfig: starts >= 1 and nonnegative budgets required");
  }
  if (!(fun_tol > 0.0) || !(step_tol > 0.0)) {
    throw std::invalid_argument("OptConfig: tolerances must be positive");
  }
}

std::string to_string(LMStatus status) {
  switch (status) {
    case LMStatus::zero_residual: return "zero_residual";
    case LMStatus::fun_tol: return "fun_tol";
    case LMStatus::step_tol: return "step_tol";
    case LMStatus::max_iters: return "max_iters";
    case LMStatus::max_fun_evals: return "max_fun_evals";
    case LMStatus::stalled: return "stalled";
  }
  return "unknown";
}

LMResult levenberg_marquardt(const ResidualFn& residual, const Vector& x0, const OptConfig& cfg) {
  const Eigen::Index dim = x0.size();
  LMResult out;
  out.x = x0;

  Vector r = residual(out.x);
  out.fun_evals = 1;
  if (!r.allFinite()) {
    throw std::domain_error("levenberg_marquardt: residual not finite at the initial point");
  }
  out.objective = r.squaredNorm();
  out.trace.push_back(out.objective);
  if (out.objective == 0.0) {
    out.status = LMStatus::zero_residual;
    return out;
  }

  const int jacobian_cost = cfg.jacobian == JacobianScheme::central_difference ? 2 * static_cast<int>(dim)
                                                                                 : static_cast<int>(dim);
  const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());

  Matrix jac(r.size(), dim);
  auto evaluate_jacobian = [&]() {
    Vector probe = out.x;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double h = root_eps * (1.0 + std::abs(out.x[i]));
      probe[i] = out.x[i] + h;
      const Vector forward = residual(probe);
      if (cfg.jacobian == JacobianScheme::central_difference) {
        probe[i] = out.x[i] - h;
        jac.col(i) = (forward - residual(probe)) / (2.0 * h);
      } else {
        jac.col(i) = (forward - r) / h;
      }
      probe[i] = out.x[i];
    }
    out.fun_evals += jacobian_cost;
  };

  if (out.fun_evals + jacobian_cost > cfg.max_fun_evals) {
    out.status = LMStatus::max_fun_evals;
    return out;
  }
  evaluate_jacobian();
  Matrix jtj = jac.transpose() * jac;
  Vector gradient = jac.transpose() * r;
  double lambda = 1e-3 * jtj.diagonal().maxCoeff();
  if (!(lambda > 0.0)) lambda = 1e-3;

  while (true) {
    if (out.iterations >= cfg.max_iters) {
      out.status = LMStatus::max_iters;
      return out;
    }
    if (out.fun_evals + 1 > cfg.max_fun_evals) {
      out.status = LMStatus::max_fun_evals;
      return out;
    }
    Matrix damped = jtj;
    damped.diagonal().array() += lambda;
    const Vector step = damped.ldlt().solve(-gradient);
    const Vector candidate = out.x + step;
    const Vector r_new = residual(candidate);
    ++out.fun_evals;
    const double f_new = r_new.allFinite() ? r_new.squaredNorm() : std::numeric_limits<double>::infinity();

    if (f_new < out.objective) {
      const double decrease = (out.objective - f_new) / out.objective;
      out.x = candidate;
      r = r_new;
      out.objective = f_new;
      ++out.iterations;
      out.trace.push_back(f_new);
      lambda = std::max(lambda / 10.0, 1e-300);
      if (f_new == 0.0) {
        out.status = LMStatus::zero_residual;
        return out;
      }
      if (decrease < cfg.fun_tol) {
        out.status = LMStatus::fun_tol;
        return out;
      }
      if (step.norm() < cfg.step_tol * (out.x.norm() + cfg.step_tol)) {
        out.status = LMStatus::step_tol;
        return out;
      }
      if (out.fun_evals + jacobian_cost > cfg.max_fun_evals) {
        out.status = LMStatus::max_fun_evals;
        return out;
      }
      evaluate_jacobian();
      jtj = jac.transpose() * jac;
      gradient = jac.transpose() * r;
    } else {
      if (step.norm() < cfg.step_tol * (out.x.norm() + cfg.step_tol)) {
        out.status = LMStatus::step_tol;
        return out;
      }
      lambda *= 10.0;
      if (!std::isfinite(lambda) || lambda > 1e300) {
        out.status = LMStatus::stalled;
        return out;
      }
    }
  }
}

}  // namespace pmra
