#pragma once

#include <optional>
#include <string>
#include <vector>

#include "distsgd/sim.hpp"

namespace distsgd::analysis {

struct BoundInputs {
  int n_nodes = 0;
  double lambda = 0.0;
  double sigma = 0.0;  // must lie in [0, 1)
  double g = 0.0;      // gradient-norm bound, usually the empirical max
  long rounds = 1;     // T
};

/// Regret bound on the time-weighted average after T rounds:
///   4 N G^2 / (lambda (T+1)) * (3 + 8 sigma sqrt(N) / (1 - sigma)).
double theorem1_bound(const BoundInputs& b);

/// Deviation bound on the network-average iterate after T rounds:
///   24 G^2 / (lambda^2 (T+1)) * (1 + 2 sigma sqrt(N) / (1 - sigma)).
double theorem2_bound(const BoundInputs& b);

enum class BoundKind { t1, t2 };

struct BoundReport {
  BoundKind which = BoundKind::t1;
  std::vector<double> empirical;  // per round; t1 takes the max over the
                                  // node-averaged and probe-node series
  std::vector<double> bound;
  std::vector<long> violations;   // 1-based rounds where empirical > bound
  double max_ratio = 0.0;
  long max_ratio_round = 0;

  /// Rows `t,empirical,bound,ratio` at full precision.
  std::string csv() const;
  /// One line: violation count, worst ratio, final bound value. The absolute
  /// bound is included so vacuous passes (sigma near 1) stay visible.
  std::string summary() const;
};

/// Pulls n/lambda/sigma/g out of a finished experiment; g can be overridden
/// when a better bound than the empirical max is known.
BoundInputs bound_inputs_from(const sim::ExperimentResult& result,
                              std::optional<double> g_override = {});

/// Compares the trial-averaged series against the bound round by round.
/// Entry t of the record holds the post-round-t state, so the t1 bound is
/// evaluated at T = t+1 (the average over iterates 1..t+1) and the t2 bound
/// at T = t (the iterate after t rounds). Throws std::invalid_argument when
/// the record lacks the needed series.
BoundReport check_trajectory(const sim::ExperimentResult& result,
                             const BoundInputs& b, BoundKind which);

struct StrategyGap {
  std::vector<double> msd_diffusion;
  std::vector<double> msd_consensus;
  std::vector<long> consensus_better_rounds;  // informational
  double final_diffusion = 0.0;
  double final_consensus = 0.0;
  std::string summary() const;
};

/// Pointwise MSD comparison of two runs that differ only in communication
/// strategy (paired seeds). Rounds where consensus beats diffusion are
/// flagged informationally, not as failures.
StrategyGap strategy_gap(const sim::ExperimentResult& diffusion,
                         const sim::ExperimentResult& consensus);

}  // namespace distsgd::analysis
