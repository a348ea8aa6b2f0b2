#include "distsgd/sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "distsgd/errors.hpp"

namespace distsgd::sim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Compensated (Neumaier) accumulator; the reduction over trials runs in a
// fixed order so results do not depend on the thread count.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace

SyntheticModel build_synthetic(int n_nodes, int dim, double noise_var,
                               std::pair<double, double> snr_db_range,
                               std::uint64_t seed) {
  if (n_nodes < 1) throw std::invalid_argument("build_synthetic: n_nodes >= 1");
  if (dim < 1) throw std::invalid_argument("build_synthetic: dim >= 1");
  if (!(noise_var > 0.0))
    throw std::invalid_argument("build_synthetic: noise_var must be positive");
  if (!std::isfinite(snr_db_range.first) || !std::isfinite(snr_db_range.second) ||
      snr_db_range.second < snr_db_range.first)
    throw std::invalid_argument("build_synthetic: bad SNR range");

  rng::Stream stream(rng::stream_key(seed, 0, rng::Purpose::model));
  SyntheticModel model;
  model.noise_var = noise_var;
  model.w0.resize(dim);
  do {
    for (int k = 0; k < dim; ++k) model.w0[k] = stream.next_gaussian();
  } while (model.w0.norm() == 0.0);
  model.w0.normalize();

  const double lo = snr_db_range.first;
  const double width = snr_db_range.second - snr_db_range.first;
  model.cov.reserve(n_nodes);
  model.chol.reserve(n_nodes);
  model.snr_db.reserve(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const double snr_db =
        lo + width * (static_cast<double>(i) + stream.next_double()) /
                 static_cast<double>(n_nodes);
    model.snr_db.push_back(snr_db);

    Eigen::MatrixXd a(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) a(r, c) = stream.next_gaussian();
    Eigen::MatrixXd cov =
        a * a.transpose() + 1e-6 * Eigen::MatrixXd::Identity(dim, dim);
    const double target = noise_var * std::pow(10.0, snr_db / 10.0);
    const double current = model.w0.dot(cov * model.w0);
    cov *= target / current;

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError("synthetic covariance is not positive definite",
                           kNaN, kNaN);
    model.chol.push_back(llt.matrixL());
    model.cov.push_back(std::move(cov));
  }
  return model;
}

losses::Sample draw_sample(const SyntheticModel& model, int node,
                           rng::Stream& stream) {
  const auto dim = model.w0.size();
  if (node < 0 || node >= static_cast<int>(model.cov.size()))
    throw std::invalid_argument("draw_sample: node out of range");
  Eigen::VectorXd z(dim);
  for (Eigen::Index k = 0; k < dim; ++k) z[k] = stream.next_gaussian();
  losses::Sample s;
  s.u = model.chol[node] * z;
  const double v = std::sqrt(model.noise_var) * stream.next_gaussian();
  s.d = model.w0.dot(s.u) + v;
  return s;
}

OptimumMode optimum_mode_from_name(const std::string& name) {
  if (name == "none") return OptimumMode::none;
  if (name == "analytic") return OptimumMode::analytic;
  if (name == "empirical") return OptimumMode::empirical;
  throw std::invalid_argument("unknown optimum mode: " + name);
}

std::string to_string(OptimumMode mode) {
  switch (mode) {
    case OptimumMode::none: return "none";
    case OptimumMode::analytic: return "analytic";
    case OptimumMode::empirical: return "empirical";
  }
  return "?";
}

std::vector<int> ExperimentConfig::resolved_probes() const {
  std::vector<int> probes = probe_nodes;
  if (probes.empty()) probes = {0, n_nodes / 2, n_nodes - 1};
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  return probes;
}

void ExperimentConfig::validate() const {
  if (n_nodes < 2) throw std::invalid_argument("config: n_nodes must be >= 2");
  if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
  if (rounds < 1) throw std::invalid_argument("config: rounds must be >= 1");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (!(loss.lambda > 0.0))
    throw std::invalid_argument("config: lambda must be positive");
  if (!(loss.radius > 0.0))
    throw std::invalid_argument("config: radius must be positive");
  if (algorithm.kind == strategies::Kind::css && !(algorithm.css_step > 0.0))
    throw std::invalid_argument("config: css requires step_size > 0");
  if (optimum == OptimumMode::analytic) {
    if (!synthetic())
      throw std::invalid_argument(
          "config: analytic optimum needs synthetic data (use optimum = "
          "empirical or none)");
    if (loss.family != losses::Family::squared)
      throw std::invalid_argument(
          "config: analytic optimum only exists for the squared loss");
  }
  if (optimum == OptimumMode::empirical && synthetic())
    throw std::invalid_argument(
        "config: empirical optimum needs a dataset (synthetic runs use "
        "analytic)");
  if (synthetic()) {
    if (!(noise_var > 0.0))
      throw std::invalid_argument("config: noise_var must be positive");
    if (snr_db_max < snr_db_min)
      throw std::invalid_argument("config: snr_db_max < snr_db_min");
  }
  for (int p : resolved_probes())
    if (p < 0 || p >= n_nodes)
      throw std::invalid_argument("config: probe node out of range");
}

ExperimentData prepare(ExperimentConfig& config) {
  ExperimentData data;
  if (!config.synthetic()) {
    auto ds = std::make_shared<dataio::Dataset>(dataio::normalize(
        dataio::parse_libsvm(config.dataset_path, config.positive_class),
        config.normalize));
    if (ds->samples.empty())
      throw std::invalid_argument("dataset is empty: " + config.dataset_path);
    config.dim = ds->dim;
    data.dataset = std::move(ds);
    if (config.optimum == OptimumMode::empirical) {
      // Whole-dataset cost (uniform node weights); the minimizer matches the
      // equal-shard global cost, so one solve serves every trial.
      losses::EmpiricalCost cost;
      cost.node_samples = {data.dataset->samples};
      cost.family = config.loss.family;
      cost.lambda = config.loss.lambda;
      data.w_star_empirical = losses::optimum(
          losses::CostEvaluator(std::move(cost)),
          {config.loss.radius, config.optimum_budget, 1e-9});
    }
  }
  config.validate();
  return data;
}

namespace {

const char* kMetricNotes =
    "nce: prequential family loss of the reporting iterate before the round; "
    "msd: reporting iterate after the round vs w0 (synthetic) or w* (dataset); "
    "msd_avg: network-average raw iterate vs w*; "
    "regret: global cost of the reporting iterate vs w*";

TrajectoryRecord run_trial_prepared(const ExperimentConfig& config,
                                    const ExperimentData& data,
                                    int trial_index) {
  const int n = config.n_nodes;
  const int dim = config.dim;
  const long rounds = config.rounds;
  const auto& spec = config.algorithm;
  const auto& loss = config.loss;
  const std::vector<int> probes = config.resolved_probes();

  const auto topo = netgraph::build_topology(
      config.topology, n, config.edge_prob,
      rng::stream_key(config.master_seed, trial_index, rng::Purpose::topology));
  const auto comb = netgraph::metropolis_matrix(topo);

  std::optional<SyntheticModel> model;
  std::optional<losses::CostEvaluator> eval;
  std::optional<Eigen::VectorXd> w_star;
  std::optional<dataio::Partition> part;

  if (config.synthetic()) {
    model = build_synthetic(
        n, dim, config.noise_var, {config.snr_db_min, config.snr_db_max},
        rng::stream_key(config.master_seed, trial_index, rng::Purpose::model));
    if (config.optimum == OptimumMode::analytic) {
      eval = losses::make_analytic_cost(
          loss.family, model->w0, model->cov,
          std::vector<double>(n, config.noise_var), loss.lambda);
      w_star = losses::optimum(*eval, {loss.radius});
    }
  } else {
    part = dataio::partition(
        *data.dataset, n, config.partition_rule, rounds,
        rng::stream_key(config.master_seed, trial_index, rng::Purpose::shuffle));
    if (config.optimum == OptimumMode::empirical) {
      losses::EmpiricalCost cost;
      cost.node_samples = {data.dataset->samples};
      cost.family = loss.family;
      cost.lambda = loss.lambda;
      eval = losses::CostEvaluator(std::move(cost));
      w_star = data.w_star_empirical;
    }
  }

  auto state = strategies::NetworkState::zeros(n, dim);
  for (const auto& node : state.nodes)
    if (node.w != state.nodes.front().w)
      throw std::logic_error("nodes must start identically initialized");
  strategies::RoundStats stats(n);

  const double f_star =
      eval && w_star ? losses::global_cost(*eval, *w_star) : kNaN;

  TrajectoryRecord rec;
  rec.nce.resize(rounds);
  rec.msd.resize(rounds);
  rec.msd_avg.resize(rounds);
  rec.regret.resize(rounds);
  rec.g_max.resize(rounds);
  rec.probe_nodes = probes;
  rec.regret_probe.assign(probes.size(), std::vector<double>(rounds));

  std::vector<losses::Sample> samples(n);
  std::vector<double> node_cost(n);
  Eigen::VectorXd w_avg(dim);
  double cumulative_error = 0.0;

  for (long t = 1; t <= rounds; ++t) {
    for (int i = 0; i < n; ++i) {
      if (config.synthetic()) {
        rng::Stream stream(rng::stream_key(config.master_seed, trial_index,
                                           rng::Purpose::sample,
                                           static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(t)));
        samples[i] = draw_sample(*model, i, stream);
      } else {
        samples[i] = data.dataset->samples[part->node_queues[i][t - 1]];
      }
    }

    // Prequential error: predict with what was available before the round.
    double round_error = 0.0;
    for (int i = 0; i < n; ++i)
      round_error += losses::prediction_loss(
          loss.family, strategies::reporting_iterate(spec, state.nodes[i]),
          samples[i]);
    cumulative_error += round_error;
    rec.nce[t - 1] = cumulative_error / (static_cast<double>(n) * t);

    strategies::advance_round(state, comb, loss, samples, spec, stats);

    const Eigen::VectorXd* msd_ref =
        config.synthetic() ? &model->w0 : (w_star ? &*w_star : nullptr);
    if (msd_ref != nullptr) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += (*msd_ref - strategies::reporting_iterate(spec, state.nodes[i]))
                   .squaredNorm();
      rec.msd[t - 1] = acc / n;
    } else {
      rec.msd[t - 1] = kNaN;
    }

    w_avg.setZero();
    for (int i = 0; i < n; ++i) w_avg += state.nodes[i].w;
    w_avg /= static_cast<double>(n);
    rec.msd_avg[t - 1] = w_star ? (w_avg - *w_star).squaredNorm() : kNaN;

    if (eval && w_star) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        node_cost[i] = losses::global_cost(
            *eval, strategies::reporting_iterate(spec, state.nodes[i]));
        acc += node_cost[i] - f_star;
      }
      rec.regret[t - 1] = acc / n;
      for (std::size_t k = 0; k < probes.size(); ++k)
        rec.regret_probe[k][t - 1] = node_cost[probes[k]] - f_star;
    } else {
      rec.regret[t - 1] = kNaN;
      for (auto& series : rec.regret_probe) series[t - 1] = kNaN;
    }

    rec.g_max[t - 1] = stats.g_bound.g_max;
  }

  for (int i = 0; i < n; ++i)
    if (stats.oracle_calls[i] != static_cast<std::uint64_t>(rounds))
      throw std::logic_error("oracle-call accounting broke: expected one call "
                             "per node per round");

  rec.meta.n_nodes = n;
  rec.meta.lambda = loss.lambda;
  rec.meta.sigma = comb.sigma;
  rec.meta.g_max = stats.g_bound.g_max;
  rec.meta.rounds = rounds;
  rec.meta.trials = 1;
  rec.meta.has_optimum = w_star.has_value();
  rec.meta.notes = kMetricNotes;
  return rec;
}

ExperimentResult reduce_records(const std::vector<TrajectoryRecord>& records) {
  const auto trials = records.size();
  const auto rounds = records.front().nce.size();
  const auto n_probes = records.front().regret_probe.size();

  ExperimentResult out;
  out.probe_nodes = records.front().probe_nodes;
  out.meta = records.front().meta;
  out.meta.trials = static_cast<int>(trials);
  for (const auto& rec : records) {
    out.meta.sigma = std::max(out.meta.sigma, rec.meta.sigma);
    out.meta.g_max = std::max(out.meta.g_max, rec.meta.g_max);
  }

  auto mean_of = [&](auto get) {
    std::vector<double> mean(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
      Accumulator acc;
      for (std::size_t k = 0; k < trials; ++k) acc.add(get(records[k])[t]);
      mean[t] = acc.value() / static_cast<double>(trials);
    }
    return mean;
  };
  auto var_of = [&](auto get, const std::vector<double>& mean) {
    std::vector<double> var(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
      Accumulator acc;
      for (std::size_t k = 0; k < trials; ++k) {
        const double d = get(records[k])[t] - mean[t];
        acc.add(d * d);
      }
      var[t] = acc.value() / static_cast<double>(trials);
    }
    return var;
  };

  out.nce_mean = mean_of([](const TrajectoryRecord& r) -> const auto& { return r.nce; });
  out.nce_var = var_of([](const TrajectoryRecord& r) -> const auto& { return r.nce; }, out.nce_mean);
  out.msd_mean = mean_of([](const TrajectoryRecord& r) -> const auto& { return r.msd; });
  out.msd_var = var_of([](const TrajectoryRecord& r) -> const auto& { return r.msd; }, out.msd_mean);
  out.regret_mean = mean_of([](const TrajectoryRecord& r) -> const auto& { return r.regret; });
  out.regret_var = var_of([](const TrajectoryRecord& r) -> const auto& { return r.regret; }, out.regret_mean);
  out.msd_avg_mean = mean_of([](const TrajectoryRecord& r) -> const auto& { return r.msd_avg; });

  out.g_max.assign(rounds, 0.0);
  for (std::size_t t = 0; t < rounds; ++t)
    for (std::size_t k = 0; k < trials; ++k)
      out.g_max[t] = std::max(out.g_max[t], records[k].g_max[t]);

  out.regret_probe_mean.resize(n_probes);
  for (std::size_t p = 0; p < n_probes; ++p)
    out.regret_probe_mean[p] = mean_of(
        [p](const TrajectoryRecord& r) -> const auto& { return r.regret_probe[p]; });
  return out;
}

}  // namespace

TrajectoryRecord run_trial(const ExperimentConfig& config,
                           const ExperimentData& data, int trial_index) {
  config.validate();
  if (trial_index < 0 || trial_index >= config.trials)
    throw std::invalid_argument("run_trial: trial index out of range");
  return run_trial_prepared(config, data, trial_index);
}

TrajectoryRecord run_trial(const ExperimentConfig& config, int trial_index) {
  ExperimentConfig resolved = config;
  const ExperimentData data = prepare(resolved);
  return run_trial(resolved, data, trial_index);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentData& data, int threads) {
  config.validate();
  const int trials = config.trials;
  std::vector<TrajectoryRecord> records(trials);

  if (threads <= 1) {
    for (int k = 0; k < trials; ++k)
      records[k] = run_trial_prepared(config, data, k);
  } else {
    std::vector<std::exception_ptr> failures(trials);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int k = 0; k < trials; ++k) {
      try {
        records[k] = run_trial_prepared(config, data, k);
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
    for (auto& failure : failures)
      if (failure) std::rethrow_exception(failure);
  }
  return reduce_records(records);
}

ExperimentResult run_experiment(const ExperimentConfig& config, int threads) {
  ExperimentConfig resolved = config;
  const ExperimentData data = prepare(resolved);
  return run_experiment(resolved, data, threads);
}

ExperimentResult run_experiment_serial(const ExperimentConfig& config) {
  ExperimentConfig resolved = config;
  const ExperimentData data = prepare(resolved);
  resolved.validate();
  std::vector<TrajectoryRecord> records(resolved.trials);
  for (int k = 0; k < resolved.trials; ++k)
    records[k] = run_trial_prepared(resolved, data, k);
  return reduce_records(records);
}

std::string ExperimentResult::csv() const {
  std::string out =
      "t,nce_mean,nce_var,msd_mean,msd_var,regret_mean,regret_var,g_max\n";
  char buf[256];
  for (std::size_t t = 0; t < nce_mean.size(); ++t) {
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t + 1,
                  nce_mean[t], nce_var[t], msd_mean[t], msd_var[t],
                  regret_mean[t], regret_var[t], g_max[t]);
    out += buf;
  }
  return out;
}

}  // namespace distsgd::sim
