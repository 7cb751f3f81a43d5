#include "pmra/estimators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pmra/rng.hpp"

namespace pmra {

void EMConfig::validate() const {
  if (starts < 1 || max_iters < 0) {
    throw std::invalid_argument("EMConfig: starts >= 1 required");
  }
  if (!(rel_tol > 0.0)) {
    throw std::invalid_argument("EMConfig: rel_tol must be positive");
  }
}

std::vector<Vector> random_unit_starts(int p, int count, std::uint64_t seed) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    Stream stream(derive_seed(seed, static_cast<std::uint64_t>(s)));
    Vector v(p);
    for (int i = 0; i < p; ++i) v[i] = stream.gaussian();
    out.push_back(v / v.norm());
  }
  return out;
}

// --- expectation-maximization -------------------------------------------------

EStep em_e_step(const ObservationBatch& batch, const Vector& theta, double sigma) {
  const Signal signal(theta);
  const int p = signal.p();
  const int n = batch.n();
  const RowMatrix orbit = projected_orbit(signal);  // p × q
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);

  EStep out;
  out.weights.resize(n, p);
  long double total = 0.0L;
  for (int i = 0; i < n; ++i) {
    auto row = out.weights.row(i);
    const auto y = batch.samples.row(i);
    for (int l = 0; l < p; ++l) {
      row[l] = -(y - orbit.row(l)).squaredNorm() * inv_two_var;
    }
    const double top = row.maxCoeff();
    double sum = 0.0;
    for (int l = 0; l < p; ++l) {
      row[l] = std::exp(row[l] - top);
      sum += row[l];
    }
    row /= sum;
    total += static_cast<long double>(top + std::log(sum));
  }
  const double per_sample_constant =
      -std::log(static_cast<double>(p)) - 0.5 * batch.q * std::log(2.0 * std::numbers::pi * sigma * sigma);
  out.log_likelihood = static_cast<double>(total) + n * per_sample_constant;
  return out;
}

NormalEquations em_normal_equations(const ObservationBatch& batch, const RowMatrix& weights, int p) {
  const int q = batch.q;
  const double inv_n = 1.0 / batch.n();
  const Vector shift_mass = weights.colwise().sum().transpose() * inv_n;            // p
  const Matrix weighted_sum = weights.transpose() * batch.samples * inv_n;         // p × q
  NormalEquations eq{Matrix::Zero(p, p), Vector::Zero(p)};
  for (int l = 0; l < p; ++l) {
    const double mass = shift_mass[l];
    for (int j = 1; j <= q; ++j) {
      // row j of Π R_l picks θ[j - l] and θ[-j - l]
      const int u = mod(j - l, p);
      const int v = mod(-j - l, p);
      eq.matrix(u, u) += mass;
      eq.matrix(v, v) += mass;
      eq.matrix(u, v) += mass;
      eq.matrix(v, u) += mass;
      const double y = weighted_sum(l, j - 1);
      eq.rhs[u] += y;
      eq.rhs[v] += y;
    }
  }
  return eq;
}

namespace {

struct EMRun {
  Vector theta;
  double log_likelihood = 0.0;
  int iterations = 0;
  std::vector<double> trace;
  std::vector<std::string> diagnostics;
};

EMRun run_em(const ObservationBatch& batch, double sigma, const EMConfig& cfg, const Vector& start) {
  const int p = static_cast<int>(start.size());
  EMRun run;
  run.theta = start;
  for (int t = 0; t < cfg.max_iters; ++t) {
    const EStep e = em_e_step(batch, run.theta, sigma);
    run.trace.push_back(e.log_likelihood);
    NormalEquations eq = em_normal_equations(batch, e.weights, p);
    Eigen::LLT<Matrix> llt(eq.matrix);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
      const double lambda = 1e-10 * eq.matrix.trace();
      eq.matrix.diagonal().array() += lambda;
      llt.compute(eq.matrix);
      run.diagnostics.push_back("iteration " + std::to_string(t) + ": Tikhonov fallback, lambda=" +
                                std::to_string(lambda));
    }
    const Vector next = llt.solve(eq.rhs);
    const double change = (next - run.theta).norm() / std::max(run.theta.norm(), 1e-300);
    run.theta = next;
    ++run.iterations;
    if (change < cfg.rel_tol) break;
  }
  run.log_likelihood = em_e_step(batch, run.theta, sigma).log_likelihood;
  run.trace.push_back(run.log_likelihood);
  return run;
}

}  // namespace

FitResult em_fit(const ObservationBatch& batch, double sigma, const EMConfig& cfg,
                 std::span<const Vector> starts) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("em_fit: sigma must be positive");
  }
  if (starts.empty()) {
    throw std::invalid_argument("em_fit: at least one start required");
  }
  FitResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts.size(); ++s) {
    EMRun run = run_em(batch, sigma, cfg, starts[s]);
    result.start_traces.push_back(run.trace);
    for (auto& d : run.diagnostics) result.diagnostics.push_back("start " + std::to_string(s) + ": " + d);
    if (s == 0 || run.log_likelihood > best) {
      best = run.log_likelihood;
      result.estimate = Signal(run.theta);
      result.objective = -run.log_likelihood;
      result.iterations = run.iterations;
      result.start_index = static_cast<int>(s);
      result.initial_point = starts[s];
      result.trace = std::move(run.trace);
    }
  }
  return result;
}

FitResult em_fit(const ObservationBatch& batch, double sigma, const EMConfig& cfg) {
  cfg.validate();
  const int p = 2 * batch.q + 1;
  const auto starts = random_unit_starts(p, cfg.starts, cfg.seed);
  return em_fit(batch, sigma, cfg, starts);
}

// --- moment least squares ---------------------------------------------------

namespace {

double block_scale(double norm, const char* name, std::vector<std::string>& warnings) {
  if (norm > 0.0) return norm;
  warnings.push_back(std::string("zero-norm ") + name + " block; normalizer replaced by 1");
  return 1.0;
}

void append(Vector& out, Eigen::Index& offset, std::span<const double> values, std::span<const double> ref,
            double scale) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[offset++] = (values[i] - ref[i]) / scale;
  }
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

Eigen::Index stacked_size(int q) { return q + static_cast<Eigen::Index>(q) * q + static_cast<Eigen::Index>(q) * q * q; }

}  // namespace

TMomentObjective::TMomentObjective(const MomentSet& target) : target_(target) {
  scale1_ = block_scale(target.t1.norm(), "first-moment", warnings_);
  scale2_ = block_scale(target.t2.norm(), "second-moment", warnings_);
  scale3_ = block_scale(target.t3.frobenius_norm(), "third-moment", warnings_);
}

Vector TMomentObjective::residual(const Vector& theta) const {
  const int q = target_.q;
  if (!theta.allFinite()) {
    return Vector::Constant(stacked_size(q), std::numeric_limits<double>::quiet_NaN());
  }
  const MomentSet model = population_moments(Signal(theta));
  Vector out(stacked_size(q));
  Eigen::Index offset = 0;
  append(out, offset, as_span(model.t1), as_span(target_.t1), scale1_);
  append(out, offset, as_span(model.t2), as_span(target_.t2), scale2_);
  append(out, offset, model.t3.data(), target_.t3.data(), scale3_);
  return out;
}

MMomentObjective::MMomentObjective(const MomentSet& target, const CosineMatrix& cm)
    : target_(to_cosine(target, cm)) {
  scale1_ = block_scale(target_.t1_projected.norm(), "first-moment", warnings_);
  scale2_ = block_scale(target_.m2.norm(), "second cosine moment", warnings_);
  scale3_ = block_scale(target_.m3.frobenius_norm(), "third cosine moment", warnings_);
}

Vector MMomentObjective::residual(const Vector& theta) const {
  const int q = target_.q;
  if (!theta.allFinite()) {
    return Vector::Constant(stacked_size(q), std::numeric_limits<double>::quiet_NaN());
  }
  const CosineMomentSet model = population_cosine_moments(Signal(theta));
  Vector out(stacked_size(q));
  Eigen::Index offset = 0;
  append(out, offset, as_span(model.t1_projected), as_span(target_.t1_projected), scale1_);
  append(out, offset, as_span(model.m2), as_span(target_.m2), scale2_);
  append(out, offset, model.m3.data(), target_.m3.data(), scale3_);
  return out;
}

namespace {

FitResult multistart_lm(const ResidualFn& residual, const OptConfig& cfg, std::span<const Vector> starts,
                        const std::vector<std::string>& warnings) {
  cfg.validate();
  if (starts.empty()) {
    throw std::invalid_argument("moment fit: at least one start required");
  }
  FitResult result;
  result.diagnostics = warnings;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts.size(); ++s) {
    LMResult run = levenberg_marquardt(residual, starts[s], cfg);
    result.start_traces.push_back(run.trace);
    if (s == 0 || run.objective < best) {
      best = run.objective;
      result.estimate = Signal(run.x);
      result.objective = run.objective;
      result.iterations = run.iterations;
      result.start_index = static_cast<int>(s);
      result.initial_point = starts[s];
      result.trace = std::move(run.trace);
    }
  }
  return result;
}

}  // namespace

FitResult fit_T(const MomentSet& moments, const OptConfig& cfg, std::span<const Vector> starts) {
  if (moments.kind == MomentKind::raw_empirical) {
    throw std::invalid_argument("fit_T: expected debiased or population moments");
  }
  const TMomentObjective objective(moments);
  return multistart_lm([&](const Vector& x) { return objective.residual(x); }, cfg, starts,
                       objective.warnings());
}

FitResult fit_T(const MomentSet& moments, const OptConfig& cfg) {
  cfg.validate();
  const auto starts = random_unit_starts(2 * moments.q + 1, cfg.starts, cfg.seed);
  return fit_T(moments, cfg, starts);
}

FitResult fit_M(const MomentSet& moments, const CosineMatrix& cm, const OptConfig& cfg,
                std::span<const Vector> starts) {
  if (moments.kind == MomentKind::raw_empirical) {
    throw std::invalid_argument("fit_M: expected debiased or population moments");
  }
  const MMomentObjective objective(moments, cm);
  return multistart_lm([&](const Vector& x) { return objective.residual(x); }, cfg, starts,
                       objective.warnings());
}

FitResult fit_M(const MomentSet& moments, const CosineMatrix& cm, const OptConfig& cfg) {
  cfg.validate();
  const auto starts = random_unit_starts(cm.p(), cfg.starts, cfg.seed);
  return fit_M(moments, cm, cfg, starts);
}

}  // namespace pmra
