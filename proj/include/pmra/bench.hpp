#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmra/estimators.hpp"
#include "pmra/signal.hpp"

namespace pmra::bench {

enum class Method { em, fit_T, fit_M, algorithm1 };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // throws std::invalid_argument

/// `count` points log-spaced over [lo, hi], endpoints included.
std::vector<double> log_spaced(double lo, double hi, int count);

struct ExperimentConfig {
  int p = 13;
  int n = 20000;
  std::vector<double> sigma_grid = log_spaced(0.05, 1.0, 10);
  int trials = 20;
  std::vector<Method> methods{Method::em, Method::fit_T, Method::fit_M};
  std::uint64_t seed = 1;
  std::filesystem::path output_path;  // empty: no file written
  int threads = 0;                    // 0: hardware concurrency
  EMConfig em;                        // seed field is overridden per trial
  OptConfig opt;                      // seed field is overridden per trial

  void validate() const;
};

/// Desk-scale defaults: p = 13, n = 2·10^4, ten σ levels in [0.05, 1], 20 trials.
ExperimentConfig desk_preset();
/// Full-size sweep: twenty σ levels in [0.05, 1], 100 trials.
ExperimentConfig paper_preset();

struct TrialRecord {
  double sigma = 0.0;
  int sigma_index = 0;
  int trial_index = 0;
  Method method = Method::fit_T;
  double orbit_error = 0.0;
  double runtime_seconds = 0.0;
  int iterations = 0;
  double objective = 0.0;
  double d_err_T3 = 0.0;
  double d_err_M3 = 0.0;
  /// EM: largest per-iteration drop of the log-likelihood over all starts.
  /// Least squares: largest per-step rise of the objective. Zero when monotone.
  double trace_violation = 0.0;
};

/// Rejection-sampled generic signal: i.i.d. Gaussian entries scaled to unit
/// norm, redrawn until every |θ̂[k]| exceeds min_magnitude and the
/// population recovery raises no degeneracy flag.
Signal generic_signal(int p, std::uint64_t seed, double min_magnitude = 0.02);

/// Seeds: trial signal from derive_seed(seed, trial); batch from
/// derive_seed(seed, σ index, trial).
std::uint64_t signal_seed(std::uint64_t master, int trial);
std::uint64_t batch_seed(std::uint64_t master, int sigma_index, int trial);

/// Runs every (σ, trial) job on a bounded worker pool and returns the records
/// ordered by (σ index, trial, method). Writes the trial CSV and its runtime
/// sidecar when an output path is set; the path is checked before any work.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg);

/// Trial CSV: deterministic columns only. Runtimes go to runtime_sidecar(path).
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_runtime_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trials_csv(std::istream& in);
/// Fills runtime_seconds from a runtime sidecar, matching on (σ index, trial, method).
void merge_runtime_csv(std::istream& in, std::vector<TrialRecord>& records);
std::filesystem::path runtime_sidecar(const std::filesystem::path& trials_path);

void save_records(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> load_records(const std::filesystem::path& path);

/// OLS slope of log(mean squared orbit error) against log σ, over σ levels
/// in [sigma_lo, sigma_hi]. Requires at least three levels.
double fit_scaling_slope(const std::vector<TrialRecord>& records, Method method, double sigma_lo,
                         double sigma_hi);

struct SummaryRow {
  double sigma = 0.0;
  Method method = Method::fit_T;
  int count = 0;
  double median_error = 0.0;
  double mse = 0.0;
  double median_runtime = 0.0;
  double median_iterations = 0.0;
  double median_d_err_T3 = 0.0;
  double median_d_err_M3 = 0.0;
};

/// Median of a sample; the middle order statistic for odd sizes, the mean of
/// the two middle ones for even sizes.
double median(std::vector<double> values);

/// Aggregates per (σ, method), ordered by σ and then method name.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace pmra::bench
