#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmra/moments.hpp"
#include "pmra/signal.hpp"

namespace pmra {

/// Input moments violate a hypothesis of the recovery (vanishing frequency,
/// inconsistent second moment).
class RecoveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecoveryOptions {
  /// Absolute magnitude floor below which a frequency counts as vanished.
  double r_min = 1e-8;
  /// Additional floor relative to the largest magnitude; the effective
  /// floor is max(r_min, r_min_relative * max r).
  double r_min_relative = 0.0;
  /// Diagonal of M^(2) more negative than this times ||M^(2)||_F is an error;
  /// anything above is clamped to zero.
  double negative_tolerance = 1e-6;
  /// A branch decision whose runner-up residual is within this of the winner
  /// is flagged as degenerate.
  double separation_tolerance = 1e-3;
  /// Chain angles within this of 0 or π are flagged.
  double angle_tolerance = 1e-6;
  /// Cosines outside [-1, 1] by more than this add a trace warning.
  double clamp_warning = 1e-9;
  /// Best candidate residual above this adds a trace warning.
  double residual_ceiling = 0.5;
};

/// One sign-branch decision: which signs it fixed and how well the winner
/// separated from the best loser.
struct BranchStep {
  int first_index = 0;  // 1-based sign index
  int last_index = 0;
  int candidates = 0;   // 4 for the initial pair, 2 afterwards
  double winning_residual = 0.0;
  double runner_up_residual = 0.0;
};

struct RecoveryTrace {
  int q = 0;
  double mean = 0.0;     // θ̂[0]
  Vector magnitudes;     // r_1..r_q
  Vector c;              // chain cosines c_1..c_q
  Vector beta;           // arccos(c_j) in [0, π]
  Vector d;              // consistency cosines d_2..d_{q-2}, d[j-2] = d_j
  double d_star = 0.0;
  std::vector<int> eps;  // resolved branch, eps[0] = +1
  Vector anchor_candidates;
  std::vector<bool> degenerate_flags;  // per sign index 1..q (0-based storage)
  std::vector<BranchStep> steps;
  int quadruple_decisions = 0;
  int binary_decisions = 0;
  double max_clamp = 0.0;
  int selected_anchor = -1;
  Vector candidate_residuals;
  std::vector<std::string> warnings;

  bool degenerate() const;
};

/// θ̂[0] = (√p / 2) mean(t1).
double recover_mean(const MomentSet& m);

/// r_k = sqrt(max(M^(2)_kk, 0) / 2).
Vector recover_magnitudes(const CosineMomentSet& cm, const RecoveryOptions& options = {});

/// Normalized chain and consistency cosines, clamped into [-1, 1].
RecoveryTrace extract_cosines(const CosineMomentSet& cm, const Vector& r,
                              const RecoveryOptions& options = {});

/// Sequential branch-and-prune with eps_1 = +1. Fills trace.eps, the
/// decision log and the degeneracy flags, and returns the branch.
std::vector<int> resolve_sign_branch(RecoveryTrace& trace, const RecoveryOptions& options = {});

/// |cos(-eps_1 β_1 + eps_j β_j + eps_{j+1} β_{j+1}) - d_j| for j = 2..q-2,
/// followed by the endpoint residual against d_star.
Vector consistency_residuals(const RecoveryTrace& trace, std::span<const int> eps);

/// The p admissible anchors φ_1 = (2Σ_{t<q} eps_t β_t + eps_q β_q + 2πm)/p.
Vector recover_anchor(const RecoveryTrace& trace);

/// φ_k = k·anchor - Σ_{t<k} eps_t β_t, reduced into [0, 2π).
Vector propagate_phases(double anchor, const RecoveryTrace& trace);

struct Reconstruction {
  Signal signal;
  RecoveryTrace trace;
};

/// Full constructive pipeline on population or debiased moments. Among the
/// p anchor candidates, returns the one with the smallest block-normalized
/// moment residual against the input.
Reconstruction reconstruct(const MomentSet& m, const RecoveryOptions& options = {});

}  // namespace pmra
