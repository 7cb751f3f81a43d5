#include "pmra/recovery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pmra {

bool RecoveryTrace::degenerate() const {
  return std::any_of(degenerate_flags.begin(), degenerate_flags.end(), [](bool f) { return f; });
}

double recover_mean(const MomentSet& m) {
  const double p = 2.0 * m.q + 1.0;
  return 0.5 * std::sqrt(p) * m.t1.mean();
}

Vector recover_magnitudes(const CosineMomentSet& cm, const RecoveryOptions& options) {
  const double floor = -options.negative_tolerance * cm.m2.norm();
  Vector r(cm.q);
  for (int k = 0; k < cm.q; ++k) {
    const double diag = cm.m2(k, k);
    if (diag < floor) {
      std::ostringstream msg;
      msg << "second cosine moment has negative diagonal " << diag << " at frequency " << k + 1;
      throw RecoveryError(msg.str());
    }
    r[k] = std::sqrt(std::max(diag, 0.0) / 2.0);
  }
  return r;
}

namespace {

// Clamps into [-1, 1] and tracks the excursion.
double clamp_cosine(double value, RecoveryTrace& trace, const RecoveryOptions& options,
                    const char* name, int index) {
  const double excess = std::abs(value) - 1.0;
  if (excess > 0.0) {
    trace.max_clamp = std::max(trace.max_clamp, excess);
    if (excess > options.clamp_warning) {
      std::ostringstream msg;
      msg << name << index << " clamped from " << value;
      trace.warnings.push_back(msg.str());
    }
  }
  return std::clamp(value, -1.0, 1.0);
}

}  // namespace

RecoveryTrace extract_cosines(const CosineMomentSet& cm, const Vector& r, const RecoveryOptions& options) {
  const int q = cm.q;
  if (q < 3) {
    throw std::invalid_argument("recovery requires p >= 7");
  }
  const double floor = std::max(options.r_min, options.r_min_relative * r.maxCoeff());
  for (int k = 0; k < q; ++k) {
    if (!(r[k] > floor)) {
      std::ostringstream msg;
      msg << "Fourier magnitude at frequency " << k + 1 << " is " << r[k] << ", below the floor "
          << floor;
      throw RecoveryError(msg.str());
    }
  }

  RecoveryTrace trace;
  trace.q = q;
  trace.magnitudes = r;
  trace.c.resize(q);
  trace.beta.resize(q);
  trace.d.resize(std::max(q - 3, 0));
  trace.degenerate_flags.assign(q, false);

  // 1-based frequency accessors
  auto rr = [&](int k) { return r[k - 1]; };
  auto m3 = [&](int a, int b, int c) { return cm.m3(a - 1, b - 1, c - 1); };

  for (int j = 1; j < q; ++j) {
    trace.c[j - 1] =
        clamp_cosine(m3(1, j, j + 1) / (2.0 * rr(1) * rr(j) * rr(j + 1)), trace, options, "c", j);
  }
  trace.c[q - 1] = clamp_cosine(m3(1, q, q) / (2.0 * rr(1) * rr(q) * rr(q)), trace, options, "c", q);
  for (int j = 2; j <= q - 2; ++j) {
    trace.d[j - 2] =
        clamp_cosine(m3(2, j, j + 2) / (2.0 * rr(2) * rr(j) * rr(j + 2)), trace, options, "d", j);
  }
  trace.d_star = clamp_cosine(m3(2, q - 1, q) / (2.0 * rr(2) * rr(q - 1) * rr(q)), trace, options,
                              "d_star", 0);

  for (int j = 0; j < q; ++j) {
    trace.beta[j] = std::acos(trace.c[j]);
    if (std::min(trace.beta[j], std::numbers::pi - trace.beta[j]) < options.angle_tolerance) {
      trace.degenerate_flags[j] = true;
    }
  }
  return trace;
}

namespace {

// |cos(-eps_1 β_1 + eps_j β_j + eps_{j+1} β_{j+1}) - target|, 1-based j.
double relation_residual(const RecoveryTrace& t, int e1, int j, int ej, int ej1, double target) {
  const double angle = -e1 * t.beta[0] + ej * t.beta[j - 1] + ej1 * t.beta[j];
  return std::abs(std::cos(angle) - target);
}

void record_step(RecoveryTrace& trace, const RecoveryOptions& options, BranchStep step) {
  if (step.runner_up_residual - step.winning_residual < options.separation_tolerance) {
    for (int k = step.first_index; k <= step.last_index; ++k) {
      trace.degenerate_flags[k - 1] = true;
    }
  }
  trace.steps.push_back(step);
}

}  // namespace

std::vector<int> resolve_sign_branch(RecoveryTrace& trace, const RecoveryOptions& options) {
  const int q = trace.q;
  std::vector<int> eps(q, 1);
  trace.steps.clear();
  trace.quadruple_decisions = 0;
  trace.binary_decisions = 0;

  // Initial pair (eps_2, eps_3): from d_2 when q >= 4, from the endpoint when q = 3.
  {
    const double target = q == 3 ? trace.d_star : trace.d[0];
    std::array<double, 4> residuals{};
    constexpr std::array<std::array<int, 2>, 4> pairs{{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      residuals[i] = relation_residual(trace, 1, 2, pairs[i][0], pairs[i][1], target);
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(residuals.begin(), residuals.end()) - residuals.begin());
    double runner_up = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      if (i != best) runner_up = std::min(runner_up, residuals[i]);
    }
    eps[1] = pairs[best][0];
    eps[2] = pairs[best][1];
    ++trace.quadruple_decisions;
    record_step(trace, options, {2, 3, 4, residuals[best], runner_up});
  }

  // One new sign per relation; the last one uses the endpoint cosine.
  for (int m = 4; m <= q; ++m) {
    const double target = m == q ? trace.d_star : trace.d[m - 3];
    const double plus = relation_residual(trace, 1, m - 1, eps[m - 2], 1, target);
    const double minus = relation_residual(trace, 1, m - 1, eps[m - 2], -1, target);
    eps[m - 1] = plus <= minus ? 1 : -1;
    ++trace.binary_decisions;
    record_step(trace, options, {m, m, 2, std::min(plus, minus), std::max(plus, minus)});
  }

  trace.eps = eps;
  return eps;
}

Vector consistency_residuals(const RecoveryTrace& trace, std::span<const int> eps) {
  const int q = trace.q;
  if (static_cast<int>(eps.size()) != q) {
    throw std::invalid_argument("consistency_residuals: branch length mismatch");
  }
  Vector out(q - 2);
  for (int j = 2; j <= q - 2; ++j) {
    out[j - 2] = relation_residual(trace, eps[0], j, eps[j - 1], eps[j], trace.d[j - 2]);
  }
  out[q - 3] = relation_residual(trace, eps[0], q - 1, eps[q - 2], eps[q - 1], trace.d_star);
  return out;
}

Vector recover_anchor(const RecoveryTrace& trace) {
  const int q = trace.q;
  const int p = 2 * q + 1;
  if (static_cast<int>(trace.eps.size()) != q) {
    throw std::logic_error("recover_anchor: sign branch not resolved");
  }
  double total = trace.eps[q - 1] * trace.beta[q - 1];
  for (int t = 0; t < q - 1; ++t) {
    total += 2.0 * trace.eps[t] * trace.beta[t];
  }
  const double base = total / p;
  Vector out(p);
  for (int m = 0; m < p; ++m) {
    out[m] = wrap_two_pi(base + 2.0 * std::numbers::pi * m / p);
  }
  return out;
}

Vector propagate_phases(double anchor, const RecoveryTrace& trace) {
  const int q = trace.q;
  if (static_cast<int>(trace.eps.size()) != q) {
    throw std::logic_error("propagate_phases: sign branch not resolved");
  }
  Vector phases(q);
  double chain = 0.0;
  for (int k = 1; k <= q; ++k) {
    phases[k - 1] = wrap_two_pi(k * anchor - chain);
    chain += trace.eps[k - 1] * trace.beta[k - 1];
  }
  return phases;
}

Reconstruction reconstruct(const MomentSet& m, const RecoveryOptions& options) {
  if (m.kind == MomentKind::raw_empirical) {
    throw std::invalid_argument("reconstruct: expected population or debiased moments");
  }
  const int p = 2 * m.q + 1;
  check_grid_size(p);
  const double mean = recover_mean(m);
  const CosineMomentSet cosine = to_cosine(m, cosine_matrix(p));
  const Vector r = recover_magnitudes(cosine, options);
  RecoveryTrace trace = extract_cosines(cosine, r, options);
  trace.mean = mean;
  resolve_sign_branch(trace, options);
  trace.anchor_candidates = recover_anchor(trace);

  std::vector<Signal> candidates;
  candidates.reserve(p);
  trace.candidate_residuals.resize(p);
  for (int i = 0; i < p; ++i) {
    const SpectralForm form{p, mean, r, propagate_phases(trace.anchor_candidates[i], trace)};
    candidates.push_back(form.to_signal());
    trace.candidate_residuals[i] = block_normalized_loss(population_moments(candidates.back()), m);
  }
  Eigen::Index best = 0;
  trace.candidate_residuals.minCoeff(&best);
  trace.selected_anchor = static_cast<int>(best);
  if (trace.candidate_residuals[best] > options.residual_ceiling) {
    std::ostringstream msg;
    msg << "best candidate residual " << trace.candidate_residuals[best] << " exceeds ceiling "
        << options.residual_ceiling;
    trace.warnings.push_back(msg.str());
  }
  return {candidates[static_cast<std::size_t>(best)], std::move(trace)};
}

}  // namespace pmra
