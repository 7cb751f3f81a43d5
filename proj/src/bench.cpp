#include "pmra/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "pmra/model.hpp"
#include "pmra/moments.hpp"
#include "pmra/recovery.hpp"
#include "pmra/rng.hpp"

namespace pmra::bench {

std::string method_name(Method m) {
  switch (m) {
    case Method::em: return "em";
    case Method::fit_T: return "fit_T";
    case Method::fit_M: return "fit_M";
    case Method::algorithm1: return "algorithm1";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::em, Method::fit_T, Method::fit_M, Method::algorithm1}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
    throw std::invalid_argument("log_spaced: need 0 < lo <= hi and count >= 1");
  }
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) {
    out[i] = std::exp(a + (b - a) * i / (count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

void ExperimentConfig::validate() const {
  check_grid_size(p);
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (sigma_grid.empty()) throw std::invalid_argument("sigma grid is empty");
  for (std::size_t i = 0; i < sigma_grid.size(); ++i) {
    if (!(sigma_grid[i] > 0.0)) throw std::invalid_argument("sigma levels must be positive");
    if (i > 0 && !(sigma_grid[i] > sigma_grid[i - 1])) {
      throw std::invalid_argument("sigma grid must be strictly increasing");
    }
  }
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  em.validate();
  opt.validate();
}

ExperimentConfig desk_preset() { return ExperimentConfig{}; }

ExperimentConfig paper_preset() {
  ExperimentConfig cfg;
  cfg.sigma_grid = log_spaced(0.05, 1.0, 20);
  cfg.trials = 100;
  return cfg;
}

std::uint64_t signal_seed(std::uint64_t master, int trial) {
  return derive_seed(master, 0x5167a1ULL, static_cast<std::uint64_t>(trial));
}

std::uint64_t batch_seed(std::uint64_t master, int sigma_index, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(sigma_index) + 1, static_cast<std::uint64_t>(trial));
}

Signal generic_signal(int p, std::uint64_t seed, double min_magnitude) {
  check_grid_size(p);
  for (std::uint64_t attempt = 0;; ++attempt) {
    Stream stream(derive_seed(seed, attempt));
    Vector v(p);
    for (int i = 0; i < p; ++i) v[i] = stream.gaussian();
    const Signal candidate(v / v.norm());
    const SpectralForm spectrum = SpectralForm::from_signal(candidate);
    if (!(spectrum.magnitudes.minCoeff() > min_magnitude)) continue;
    try {
      if (!reconstruct(population_moments(candidate)).trace.degenerate()) return candidate;
    } catch (const RecoveryError&) {
    }
  }
}

namespace {

double relative_error(const Tensor3& estimate, const Tensor3& truth) {
  return (estimate - truth).frobenius_norm() / truth.frobenius_norm();
}

double monotonicity_violation(const std::vector<std::vector<double>>& traces, bool increasing) {
  double worst = 0.0;
  for (const auto& trace : traces) {
    for (std::size_t t = 1; t < trace.size(); ++t) {
      const double change = increasing ? trace[t - 1] - trace[t] : trace[t] - trace[t - 1];
      worst = std::max(worst, change);
    }
  }
  return worst;
}

struct MethodOutcome {
  Signal estimate;
  int iterations = 0;
  double objective = 0.0;
  double trace_violation = 0.0;
};

MethodOutcome run_algorithm1(const MomentSet& moments) {
  RecoveryOptions options;
  options.r_min_relative = 1e-3;
  options.negative_tolerance = std::numeric_limits<double>::infinity();
  try {
    Reconstruction rec = reconstruct(moments, options);
    return {rec.signal, 0, rec.trace.candidate_residuals[rec.trace.selected_anchor], 0.0};
  } catch (const RecoveryError&) {
    // vanishing estimated magnitude: fall back to the mean-only signal
    const int p = 2 * moments.q + 1;
    const double mean = recover_mean(moments);
    return {Signal::constant(p, mean / std::sqrt(static_cast<double>(p))), 0,
            std::numeric_limits<double>::quiet_NaN(), 0.0};
  }
}

std::vector<TrialRecord> run_trial(const ExperimentConfig& cfg, const CosineMatrix& cm, int sigma_index,
                                   int trial) {
  const double sigma = cfg.sigma_grid[static_cast<std::size_t>(sigma_index)];
  const Signal truth = generic_signal(cfg.p, signal_seed(cfg.seed, trial));
  const std::uint64_t seed = batch_seed(cfg.seed, sigma_index, trial);
  const ObservationBatch batch = generate(truth, cfg.n, sigma, seed);
  const MomentSet moments = debias(empirical_moments(batch), sigma);

  const MomentSet truth_moments = population_moments(truth);
  const CosineMomentSet truth_cosine = population_cosine_moments(truth);
  const double d_err_t3 = relative_error(moments.t3, truth_moments.t3);
  const double d_err_m3 = relative_error(to_cosine(moments, cm).m3, truth_cosine.m3);

  std::vector<TrialRecord> out;
  for (Method method : cfg.methods) {
    const std::uint64_t method_seed = derive_seed(seed, static_cast<std::uint64_t>(method) + 101);
    const auto start = std::chrono::steady_clock::now();
    MethodOutcome outcome{truth};
    switch (method) {
      case Method::em: {
        EMConfig em = cfg.em;
        em.seed = method_seed;
        const FitResult fit = em_fit(batch, sigma, em);
        outcome = {fit.estimate, fit.iterations, fit.objective, monotonicity_violation(fit.start_traces, true)};
        break;
      }
      case Method::fit_T: {
        OptConfig opt = cfg.opt;
        opt.seed = method_seed;
        const FitResult fit = fit_T(moments, opt);
        outcome = {fit.estimate, fit.iterations, fit.objective, monotonicity_violation(fit.start_traces, false)};
        break;
      }
      case Method::fit_M: {
        OptConfig opt = cfg.opt;
        opt.seed = method_seed;
        const FitResult fit = fit_M(moments, cm, opt);
        outcome = {fit.estimate, fit.iterations, fit.objective, monotonicity_violation(fit.start_traces, false)};
        break;
      }
      case Method::algorithm1:
        outcome = run_algorithm1(moments);
        break;
    }
    const double runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    TrialRecord rec;
    rec.sigma = sigma;
    rec.sigma_index = sigma_index;
    rec.trial_index = trial;
    rec.method = method;
    rec.orbit_error = orbit_distance(outcome.estimate, truth);
    rec.runtime_seconds = runtime;
    rec.iterations = outcome.iterations;
    rec.objective = outcome.objective;
    rec.d_err_T3 = d_err_t3;
    rec.d_err_M3 = d_err_m3;
    rec.trace_violation = outcome.trace_violation;
    out.push_back(rec);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kTrialsHeader =
    "sigma,sigma_index,trial_index,method,orbit_error,iterations,objective,d_err_T3,d_err_M3,"
    "trace_violation";
constexpr const char* kRuntimeHeader = "sigma_index,trial_index,method,runtime_seconds";
constexpr const char* kTrialsSchema = "# pmra-trials v1";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return v;
}

void sort_records(std::vector<TrialRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.sigma_index, a.trial_index, a.method) < std::tie(b.sigma_index, b.trial_index, b.method);
  });
}

}  // namespace

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::ofstream probe;
  if (!cfg.output_path.empty()) {
    probe.open(cfg.output_path, std::ios::out | std::ios::trunc);
    if (!probe) {
      throw std::runtime_error("cannot write output file " + cfg.output_path.string());
    }
  }

  const CosineMatrix cm(cfg.p);
  const int levels = static_cast<int>(cfg.sigma_grid.size());
  const int jobs = levels * cfg.trials;
  std::vector<std::vector<TrialRecord>> results(static_cast<std::size_t>(jobs));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (int job = next++; job < jobs; job = next++) {
      try {
        results[static_cast<std::size_t>(job)] = run_trial(cfg, cm, job / cfg.trials, job % cfg.trials);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int workers = std::clamp(cfg.threads > 0 ? cfg.threads : hw, 1, jobs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TrialRecord> records;
  records.reserve(static_cast<std::size_t>(jobs) * cfg.methods.size());
  for (auto& r : results) records.insert(records.end(), r.begin(), r.end());
  sort_records(records);

  if (!cfg.output_path.empty()) {
    write_trials_csv(probe, records);
    probe.close();
    std::ofstream sidecar(runtime_sidecar(cfg.output_path));
    write_runtime_csv(sidecar, records);
  }
  return records;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kTrialsSchema << '\n' << kTrialsHeader << '\n';
  for (const auto& r : records) {
    out << format_double(r.sigma) << ',' << r.sigma_index << ',' << r.trial_index << ','
        << method_name(r.method) << ',' << format_double(r.orbit_error) << ',' << r.iterations << ','
        << format_double(r.objective) << ',' << format_double(r.d_err_T3) << ','
        << format_double(r.d_err_M3) << ',' << format_double(r.trace_violation) << '\n';
  }
}

void write_runtime_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kRuntimeHeader << '\n';
  for (const auto& r : records) {
    out << r.sigma_index << ',' << r.trial_index << ',' << method_name(r.method) << ','
        << format_double(r.runtime_seconds) << '\n';
  }
}

std::vector<TrialRecord> read_trials_csv(std::istream& in) {
  std::string line;
  bool header_seen = false;
  std::vector<TrialRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kTrialsHeader) throw std::runtime_error("unexpected trials CSV header: " + line);
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw std::runtime_error("malformed trials CSV row: " + line);
    TrialRecord r;
    r.sigma = parse_double(f[0]);
    r.sigma_index = std::stoi(f[1]);
    r.trial_index = std::stoi(f[2]);
    r.method = parse_method(f[3]);
    r.orbit_error = parse_double(f[4]);
    r.iterations = std::stoi(f[5]);
    r.objective = parse_double(f[6]);
    r.d_err_T3 = parse_double(f[7]);
    r.d_err_M3 = parse_double(f[8]);
    r.trace_violation = parse_double(f[9]);
    records.push_back(r);
  }
  if (!header_seen) throw std::runtime_error("trials CSV has no header");
  return records;
}

void merge_runtime_csv(std::istream& in, std::vector<TrialRecord>& records) {
  std::map<std::tuple<int, int, Method>, double> runtimes;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kRuntimeHeader) throw std::runtime_error("unexpected runtime CSV header: " + line);
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw std::runtime_error("malformed runtime CSV row: " + line);
    runtimes[{std::stoi(f[0]), std::stoi(f[1]), parse_method(f[2])}] = parse_double(f[3]);
  }
  for (auto& r : records) {
    if (auto it = runtimes.find({r.sigma_index, r.trial_index, r.method}); it != runtimes.end()) {
      r.runtime_seconds = it->second;
    }
  }
}

std::filesystem::path runtime_sidecar(const std::filesystem::path& trials_path) {
  auto sidecar = trials_path;
  sidecar += ".runtime.csv";
  return sidecar;
}

void save_records(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trials_csv(out, records);
  std::ofstream sidecar(runtime_sidecar(path));
  write_runtime_csv(sidecar, records);
}

std::vector<TrialRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  auto records = read_trials_csv(in);
  if (std::ifstream sidecar(runtime_sidecar(path)); sidecar) {
    merge_runtime_csv(sidecar, records);
  }
  return records;
}

double fit_scaling_slope(const std::vector<TrialRecord>& records, Method method, double sigma_lo,
                         double sigma_hi) {
  std::map<double, std::pair<double, int>> per_level;  // σ -> (Σ err², count)
  const double slack = 1e-12;
  for (const auto& r : records) {
    if (r.method != method) continue;
    if (r.sigma < sigma_lo * (1.0 - slack) || r.sigma > sigma_hi * (1.0 + slack)) continue;
    auto& [sum, count] = per_level[r.sigma];
    sum += r.orbit_error * r.orbit_error;
    ++count;
  }
  if (per_level.empty()) {
    throw std::invalid_argument("fit_scaling_slope: no records for " + method_name(method) + " in range");
  }
  if (per_level.size() < 3) {
    throw std::invalid_argument("fit_scaling_slope: need at least three sigma levels in range");
  }
  std::vector<double> xs, ys;
  for (const auto& [sigma, acc] : per_level) {
    xs.push_back(std::log(sigma));
    ys.push_back(std::log(acc.first / acc.second));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summarize: no records");
  std::map<std::pair<double, std::string>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) groups[{r.sigma, method_name(r.method)}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, group] : groups) {
    std::vector<double> err, runtime, iters, t3, m3;
    double sq = 0.0;
    for (const auto* r : group) {
      err.push_back(r->orbit_error);
      runtime.push_back(r->runtime_seconds);
      iters.push_back(r->iterations);
      t3.push_back(r->d_err_T3);
      m3.push_back(r->d_err_M3);
      sq += r->orbit_error * r->orbit_error;
    }
    SummaryRow row;
    row.sigma = key.first;
    row.method = parse_method(key.second);
    row.count = static_cast<int>(group.size());
    row.median_error = median(err);
    row.mse = sq / static_cast<double>(group.size());
    row.median_runtime = median(runtime);
    row.median_iterations = median(iters);
    row.median_d_err_T3 = median(t3);
    row.median_d_err_M3 = median(m3);
    rows.push_back(row);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "sigma,method,count,median_error,mse,median_runtime,median_iterations,median_d_err_T3,"
         "median_d_err_M3\n";
  for (const auto& r : rows) {
    out << format_double(r.sigma) << ',' << method_name(r.method) << ',' << r.count << ','
        << format_double(r.median_error) << ',' << format_double(r.mse) << ','
        << format_double(r.median_runtime) << ',' << format_double(r.median_iterations) << ','
        << format_double(r.median_d_err_T3) << ',' << format_double(r.median_d_err_M3) << '\n';
  }
}

}  // namespace pmra::bench
