#include "distsgd/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace distsgd::analysis {

namespace {

void check_inputs(const BoundInputs& b) {
  if (b.n_nodes < 1) throw std::invalid_argument("bound: n_nodes must be >= 1");
  if (!(b.lambda > 0.0)) throw std::invalid_argument("bound: lambda must be > 0");
  if (!(b.sigma >= 0.0) || b.sigma >= 1.0)
    throw std::invalid_argument("bound: sigma must lie in [0, 1)");
  if (b.g < 0.0) throw std::invalid_argument("bound: g must be nonnegative");
  if (b.rounds < 1) throw std::invalid_argument("bound: rounds must be >= 1");
}

bool usable(const std::vector<double>& series) {
  if (series.empty()) return false;
  for (double x : series)
    if (std::isnan(x)) return false;
  return true;
}

}  // namespace

double theorem1_bound(const BoundInputs& b) {
  check_inputs(b);
  const double n = static_cast<double>(b.n_nodes);
  const double t = static_cast<double>(b.rounds);
  return 4.0 * n * b.g * b.g / (b.lambda * (t + 1.0)) *
         (3.0 + 8.0 * b.sigma * std::sqrt(n) / (1.0 - b.sigma));
}

double theorem2_bound(const BoundInputs& b) {
  check_inputs(b);
  const double n = static_cast<double>(b.n_nodes);
  const double t = static_cast<double>(b.rounds);
  return 24.0 * b.g * b.g / (b.lambda * b.lambda * (t + 1.0)) *
         (1.0 + 2.0 * b.sigma * std::sqrt(n) / (1.0 - b.sigma));
}

BoundInputs bound_inputs_from(const sim::ExperimentResult& result,
                              std::optional<double> g_override) {
  BoundInputs b;
  b.n_nodes = result.meta.n_nodes;
  b.lambda = result.meta.lambda;
  b.sigma = result.meta.sigma;
  b.g = g_override.value_or(result.meta.g_max);
  b.rounds = result.meta.rounds;
  return b;
}

BoundReport check_trajectory(const sim::ExperimentResult& result,
                             const BoundInputs& b, BoundKind which) {
  check_inputs(b);
  BoundReport report;
  report.which = which;

  const std::vector<double>* primary = nullptr;
  if (which == BoundKind::t1) {
    if (!usable(result.regret_mean))
      throw std::invalid_argument(
          "check_trajectory: regret series missing (run with an optimum)");
    primary = &result.regret_mean;
  } else {
    if (!usable(result.msd_avg_mean))
      throw std::invalid_argument(
          "check_trajectory: msd_avg series missing (run with an optimum)");
    primary = &result.msd_avg_mean;
  }

  const long rounds = static_cast<long>(primary->size());
  report.empirical.resize(rounds);
  report.bound.resize(rounds);
  for (long t = 1; t <= rounds; ++t) {
    double emp = (*primary)[t - 1];
    if (which == BoundKind::t1) {
      for (const auto& probe : result.regret_probe_mean)
        if (usable(probe)) emp = std::max(emp, probe[t - 1]);
    }
    BoundInputs bt = b;
    // Entry t holds the post-round state: the t1 average spans iterates
    // 1..t+1, the t2 iterate is the one after t rounds.
    bt.rounds = which == BoundKind::t1 ? t + 1 : t;
    const double bound =
        which == BoundKind::t1 ? theorem1_bound(bt) : theorem2_bound(bt);
    report.empirical[t - 1] = emp;
    report.bound[t - 1] = bound;
    const double ratio = emp / bound;
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.max_ratio_round = t;
    }
    if (emp > bound) report.violations.push_back(t);
  }
  return report;
}

std::string BoundReport::csv() const {
  std::string out = "t,empirical,bound,ratio\n";
  char buf[160];
  for (std::size_t t = 0; t < empirical.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", t + 1,
                  empirical[t], bound[t], empirical[t] / bound[t]);
    out += buf;
  }
  return out;
}

std::string BoundReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s: %zu violation(s) over %zu rounds, max empirical/bound "
                "ratio %.3e at round %ld, final bound %.6g",
                which == BoundKind::t1 ? "theorem-1 regret bound"
                                       : "theorem-2 deviation bound",
                violations.size(), empirical.size(), max_ratio,
                max_ratio_round, bound.empty() ? 0.0 : bound.back());
  return buf;
}

StrategyGap strategy_gap(const sim::ExperimentResult& diffusion,
                         const sim::ExperimentResult& consensus) {
  if (diffusion.msd_mean.size() != consensus.msd_mean.size() ||
      diffusion.msd_mean.empty())
    throw std::invalid_argument("strategy_gap: mismatched or empty series");
  StrategyGap gap;
  gap.msd_diffusion = diffusion.msd_mean;
  gap.msd_consensus = consensus.msd_mean;
  for (std::size_t t = 0; t < gap.msd_diffusion.size(); ++t)
    if (gap.msd_consensus[t] < gap.msd_diffusion[t])
      gap.consensus_better_rounds.push_back(static_cast<long>(t + 1));
  gap.final_diffusion = gap.msd_diffusion.back();
  gap.final_consensus = gap.msd_consensus.back();
  return gap;
}

std::string StrategyGap::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "final MSD: diffusion %.6g vs consensus %.6g; consensus ahead "
                "in %zu of %zu rounds",
                final_diffusion, final_consensus,
                consensus_better_rounds.size(), msd_diffusion.size());
  return buf;
}

}  // namespace distsgd::analysis
