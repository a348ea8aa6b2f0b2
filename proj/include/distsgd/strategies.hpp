#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distsgd/losses.hpp"
#include "distsgd/netgraph.hpp"

namespace distsgd::strategies {

enum class Kind { tvw, uw, vss, css };
enum class Strategy { diffusion, consensus };

Kind kind_from_name(const std::string& name);
std::string to_string(Kind kind);
Strategy strategy_from_name(const std::string& name);
std::string to_string(Strategy strategy);

/// Which update to run and what step-size schedule it uses:
///   tvw      2/(lambda (t+1)), reports the time-weighted average
///   uw       1/(lambda t),     reports the uniform average
///   vss      1/(lambda t),     reports the raw iterate
///   css      constant,         reports the raw iterate
struct AlgorithmSpec {
  Kind kind = Kind::tvw;
  Strategy strategy = Strategy::diffusion;
  double css_step = 0.0;  // css only; must be > 0 there
};

double step_size(const AlgorithmSpec& spec, double lambda, long t);

struct NodeState {
  Eigen::VectorXd w;      // current iterate
  Eigen::VectorXd w_bar;  // maintained average (tvw / uw)
  Eigen::VectorXd psi;    // pre-projection scratch
  Eigen::VectorXd phi;    // post-projection scratch
};

struct NetworkState {
  std::vector<NodeState> nodes;
  long t = 1;  // round counter, 1-based

  /// All-zero iterates of the given dimension; averages start equal to the
  /// iterate (identical initialization at every node).
  static NetworkState zeros(int n_nodes, int dim);
};

/// Per-trial accounting: one oracle call per node per round, and the running
/// gradient-norm bound.
struct RoundStats {
  explicit RoundStats(int n_nodes) : oracle_calls(n_nodes, 0) {}
  std::vector<std::uint64_t> oracle_calls;
  losses::GradientBoundEstimate g_bound;
};

/// Time-weighted average w_bar_T = 2/(T(T+1)) sum_t t*w_t, maintained by
/// folding the iterate with index t_next:
///   w_bar_T = ((T-1)/(T+1)) w_bar_{T-1} + (2/(T+1)) w_T.
Eigen::VectorXd tvw_update(const Eigen::VectorXd& w_bar,
                           const Eigen::VectorXd& w_next, long t_next);

/// Running uniform mean, same folding convention.
Eigen::VectorXd uw_update(const Eigen::VectorXd& w_bar,
                          const Eigen::VectorXd& w_next, long t_next);

/// The vector the algorithm predicts and is judged with: the maintained
/// average for tvw/uw, the raw iterate for vss/css.
const Eigen::VectorXd& reporting_iterate(const AlgorithmSpec& spec,
                                         const NodeState& node);

/// Adapt-then-combine: every node takes a projected SGD step, then replaces
/// its iterate with the h(j,i)-weighted combination of the neighbors'
/// post-step iterates. All reads are from the pre-round state (synchronous
/// barrier semantics); the result does not depend on node execution order.
void diffusion_round(NetworkState& state, const netgraph::CombinationMatrix& h,
                     const losses::LossModel& model,
                     std::span<const losses::Sample> samples,
                     const AlgorithmSpec& spec, RoundStats& stats);

/// Combine-then-adapt: every node mixes the neighbors' current iterates,
/// then takes a projected gradient step from the mixed point. Gradients are
/// evaluated at the node's own pre-mix iterate.
void consensus_round(NetworkState& state, const netgraph::CombinationMatrix& h,
                     const losses::LossModel& model,
                     std::span<const losses::Sample> samples,
                     const AlgorithmSpec& spec, RoundStats& stats);

/// Dispatch on spec.strategy.
void advance_round(NetworkState& state, const netgraph::CombinationMatrix& h,
                   const losses::LossModel& model,
                   std::span<const losses::Sample> samples,
                   const AlgorithmSpec& spec, RoundStats& stats);

}  // namespace distsgd::strategies
