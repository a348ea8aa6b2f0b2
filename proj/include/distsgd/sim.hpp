#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distsgd/dataio.hpp"
#include "distsgd/losses.hpp"
#include "distsgd/netgraph.hpp"
#include "distsgd/rng.hpp"
#include "distsgd/strategies.hpp"

namespace distsgd::sim {

/// Gaussian regression model: d = w0'u + v with u ~ N(0, R_i) per node and
/// v ~ N(0, noise_var). w0 has unit norm; each R_i is scaled so that the
/// node's SNR w0'R_i w0 / noise_var hits its assigned dB target.
struct SyntheticModel {
  Eigen::VectorXd w0;
  std::vector<Eigen::MatrixXd> cov;
  std::vector<Eigen::MatrixXd> chol;  // cached lower Cholesky factors
  std::vector<double> snr_db;
  double noise_var = 0.1;
};

/// Node SNR targets are a stratified uniform draw over the dB range, so the
/// range is actually covered instead of clumping.
SyntheticModel build_synthetic(int n_nodes, int dim, double noise_var,
                               std::pair<double, double> snr_db_range,
                               std::uint64_t seed);

losses::Sample draw_sample(const SyntheticModel& model, int node,
                           rng::Stream& stream);

enum class OptimumMode { none, analytic, empirical };
OptimumMode optimum_mode_from_name(const std::string& name);
std::string to_string(OptimumMode mode);

struct ExperimentConfig {
  int n_nodes = 20;
  int dim = 5;
  long rounds = 2000;
  int trials = 1;
  std::uint64_t master_seed = 1;

  netgraph::TopologyKind topology = netgraph::TopologyKind::circle;
  double edge_prob = 0.3;

  strategies::AlgorithmSpec algorithm;
  losses::LossModel loss{losses::Family::squared, 0.01, 10.0};

  // Data source: synthetic unless dataset_path is set.
  std::string dataset_path;
  dataio::Normalize normalize = dataio::Normalize::unit_norm;
  dataio::Rule partition_rule = dataio::Rule::shuffled;
  std::optional<double> positive_class;

  double noise_var = 0.1;
  double snr_db_min = -15.0;
  double snr_db_max = 10.0;

  OptimumMode optimum = OptimumMode::analytic;
  long optimum_budget = 1000000;

  std::vector<int> probe_nodes;  // empty -> {0, n/2, n-1}

  bool synthetic() const { return dataset_path.empty(); }
  std::vector<int> resolved_probes() const;
  void validate() const;  // throws std::invalid_argument
};

struct RunMeta {
  int n_nodes = 0;
  double lambda = 0.0;
  double sigma = 0.0;   // per trial; max over trials at experiment level
  double g_max = 0.0;   // final gradient-norm bound estimate
  long rounds = 0;
  int trials = 1;
  bool has_optimum = false;
  std::string notes;
};

/// Per-round series for one trial, entry t-1 describing round t:
///   nce      prequential cumulative prediction loss, measured with the
///            reporting iterate available before the round
///   msd      mean over nodes of |ref - reporting iterate|^2 after the round,
///            ref = w0 for synthetic data, w* otherwise (NaN without one)
///   msd_avg  |network-average raw iterate - w*|^2 after the round
///   regret   mean over nodes of f(reporting) - f(w*) after the round
///   g_max    running max of observed gradient norms
struct TrajectoryRecord {
  std::vector<double> nce, msd, msd_avg, regret, g_max;
  std::vector<std::vector<double>> regret_probe;
  std::vector<int> probe_nodes;
  RunMeta meta;
};

/// Heavy inputs resolved once per experiment and shared across trials.
struct ExperimentData {
  std::shared_ptr<const dataio::Dataset> dataset;  // null for synthetic runs
  std::optional<Eigen::VectorXd> w_star_empirical;
};

/// Loads and normalizes the dataset (resolving config.dim to the dataset
/// dimension) and computes the empirical optimum when requested.
ExperimentData prepare(ExperimentConfig& config);

TrajectoryRecord run_trial(const ExperimentConfig& config,
                           const ExperimentData& data, int trial_index);
TrajectoryRecord run_trial(const ExperimentConfig& config, int trial_index);

/// Pointwise mean/variance over trials (population variance, so a single
/// trial reports zero) plus the pointwise max of the gradient bound.
struct ExperimentResult {
  std::vector<double> nce_mean, nce_var, msd_mean, msd_var, regret_mean,
      regret_var, g_max;
  std::vector<double> msd_avg_mean;
  std::vector<std::vector<double>> regret_probe_mean;
  std::vector<int> probe_nodes;
  RunMeta meta;

  /// Header: t,nce_mean,nce_var,msd_mean,msd_var,regret_mean,regret_var,g_max
  std::string csv() const;
};

/// Trials run under OpenMP with `threads` workers; the reduction happens in
/// trial order afterwards, so the result is identical for every thread count.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentData& data, int threads);

/// Plain serial loop over trials, kept as the reference the parallel path is
/// tested (and benchmarked) against.
ExperimentResult run_experiment_serial(const ExperimentConfig& config);

}  // namespace distsgd::sim
