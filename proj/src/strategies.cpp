#include "distsgd/strategies.hpp"

#include <stdexcept>

namespace distsgd::strategies {

Kind kind_from_name(const std::string& name) {
  if (name == "tvw") return Kind::tvw;
  if (name == "uw") return Kind::uw;
  if (name == "vss") return Kind::vss;
  if (name == "css") return Kind::css;
  throw std::invalid_argument("unknown algorithm kind: " + name);
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::tvw: return "tvw";
    case Kind::uw: return "uw";
    case Kind::vss: return "vss";
    case Kind::css: return "css";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "diffusion") return Strategy::diffusion;
  if (name == "consensus") return Strategy::consensus;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string to_string(Strategy strategy) {
  return strategy == Strategy::diffusion ? "diffusion" : "consensus";
}

double step_size(const AlgorithmSpec& spec, double lambda, long t) {
  if (t < 1) throw std::invalid_argument("step_size: t must be >= 1");
  switch (spec.kind) {
    case Kind::tvw:
      return 2.0 / (lambda * static_cast<double>(t + 1));
    case Kind::uw:
    case Kind::vss:
      return 1.0 / (lambda * static_cast<double>(t));
    case Kind::css:
      return spec.css_step;
  }
  return 0.0;
}

NetworkState NetworkState::zeros(int n_nodes, int dim) {
  NetworkState state;
  state.nodes.resize(n_nodes);
  for (auto& node : state.nodes) {
    node.w = Eigen::VectorXd::Zero(dim);
    node.w_bar = node.w;
    node.psi = node.w;
    node.phi = node.w;
  }
  state.t = 1;
  return state;
}

Eigen::VectorXd tvw_update(const Eigen::VectorXd& w_bar,
                           const Eigen::VectorXd& w_next, long t_next) {
  if (t_next < 1) throw std::invalid_argument("tvw_update: t_next must be >= 1");
  const double t = static_cast<double>(t_next);
  return ((t - 1.0) / (t + 1.0)) * w_bar + (2.0 / (t + 1.0)) * w_next;
}

Eigen::VectorXd uw_update(const Eigen::VectorXd& w_bar,
                          const Eigen::VectorXd& w_next, long t_next) {
  if (t_next < 1) throw std::invalid_argument("uw_update: t_next must be >= 1");
  const double t = static_cast<double>(t_next);
  return ((t - 1.0) / t) * w_bar + (1.0 / t) * w_next;
}

const Eigen::VectorXd& reporting_iterate(const AlgorithmSpec& spec,
                                         const NodeState& node) {
  switch (spec.kind) {
    case Kind::tvw:
    case Kind::uw:
      return node.w_bar;
    case Kind::vss:
    case Kind::css:
      return node.w;
  }
  return node.w;
}

namespace {

void check_round_inputs(const NetworkState& state,
                        const netgraph::CombinationMatrix& h,
                        std::span<const losses::Sample> samples) {
  const auto n = static_cast<Eigen::Index>(state.nodes.size());
  if (static_cast<Eigen::Index>(samples.size()) != n)
    throw std::invalid_argument("round: need exactly one sample per node");
  if (h.h.rows() != n || h.h.cols() != n)
    throw std::invalid_argument("round: combination matrix size mismatch");
}

// Folds the freshly combined iterate into the maintained average.
void apply_weighting(NetworkState& state, const AlgorithmSpec& spec) {
  const long t_next = state.t + 1;
  switch (spec.kind) {
    case Kind::tvw:
      for (auto& node : state.nodes)
        node.w_bar = tvw_update(node.w_bar, node.w, t_next);
      break;
    case Kind::uw:
      for (auto& node : state.nodes)
        node.w_bar = uw_update(node.w_bar, node.w, t_next);
      break;
    case Kind::vss:
    case Kind::css:
      break;
  }
}

}  // namespace

void diffusion_round(NetworkState& state, const netgraph::CombinationMatrix& h,
                     const losses::LossModel& model,
                     std::span<const losses::Sample> samples,
                     const AlgorithmSpec& spec, RoundStats& stats) {
  check_round_inputs(state, h, samples);
  const int n = static_cast<int>(state.nodes.size());
  const double mu = step_size(spec, model.lambda, state.t);

  for (int i = 0; i < n; ++i) {
    auto& node = state.nodes[i];
    const Eigen::VectorXd g = losses::stochastic_gradient(model, node.w, samples[i]);
    stats.g_bound.observe(g.norm());
    ++stats.oracle_calls[i];
    node.psi = node.w - mu * g;
    node.phi = losses::project(node.psi, model.radius);
  }
  // Combine reads only the pre-round phi values; weights are the (j, i)
  // column entries, so the stacked update is Phi * H.
  for (int i = 0; i < n; ++i) {
    auto& wi = state.nodes[i].w;
    wi = h.h(0, i) * state.nodes[0].phi;
    for (int j = 1; j < n; ++j) wi += h.h(j, i) * state.nodes[j].phi;
  }
  apply_weighting(state, spec);
  ++state.t;
}

void consensus_round(NetworkState& state, const netgraph::CombinationMatrix& h,
                     const losses::LossModel& model,
                     std::span<const losses::Sample> samples,
                     const AlgorithmSpec& spec, RoundStats& stats) {
  check_round_inputs(state, h, samples);
  const int n = static_cast<int>(state.nodes.size());
  const double mu = step_size(spec, model.lambda, state.t);

  // Gradients at the pre-mix iterates; parked in phi until the mix is done.
  for (int i = 0; i < n; ++i) {
    auto& node = state.nodes[i];
    const Eigen::VectorXd g = losses::stochastic_gradient(model, node.w, samples[i]);
    stats.g_bound.observe(g.norm());
    ++stats.oracle_calls[i];
    node.phi = mu * g;
  }
  for (int i = 0; i < n; ++i) {
    auto& psi = state.nodes[i].psi;
    psi = h.h(0, i) * state.nodes[0].w;
    for (int j = 1; j < n; ++j) psi += h.h(j, i) * state.nodes[j].w;
    psi -= state.nodes[i].phi;
  }
  for (int i = 0; i < n; ++i) {
    auto& node = state.nodes[i];
    node.w = losses::project(node.psi, model.radius);
    node.phi = node.w;
  }
  apply_weighting(state, spec);
  ++state.t;
}

void advance_round(NetworkState& state, const netgraph::CombinationMatrix& h,
                   const losses::LossModel& model,
                   std::span<const losses::Sample> samples,
                   const AlgorithmSpec& spec, RoundStats& stats) {
  if (spec.strategy == Strategy::diffusion)
    diffusion_round(state, h, model, samples, spec, stats);
  else
    consensus_round(state, h, model, samples, spec, stats);
}

}  // namespace distsgd::strategies
