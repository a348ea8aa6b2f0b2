// Shared test-side oracles and helpers. Everything here is independent of the
// implementation paths it checks: sigma comes from a dense eigensolver, the
// weighted averages from explicit summation, gradients from finite
// differences, and the single-node reference from a standalone SGD loop.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "distsgd/losses.hpp"
#include "distsgd/rng.hpp"
#include "distsgd/strategies.hpp"

namespace testing {

// Dense oracle for the second-largest singular value of a doubly stochastic
// matrix: largest eigenvalue of M'M with M = h - (1/N)11'.
inline double sigma_oracle(const Eigen::MatrixXd& h) {
  const auto n = h.rows();
  const Eigen::MatrixXd m =
      h - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Random doubly stochastic matrix as a convex combination of permutation
// matrices; asymmetric in general.
inline Eigen::MatrixXd birkhoff_matrix(int n, int n_perms,
                                       distsgd::rng::Stream& stream) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> weights(n_perms);
  double total = 0.0;
  for (auto& w : weights) {
    w = stream.next_double() + 1e-3;
    total += w;
  }
  std::vector<int> perm(n);
  for (int k = 0; k < n_perms; ++k) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n; i > 1; --i)
      std::swap(perm[i - 1], perm[stream.next_below(i)]);
    for (int i = 0; i < n; ++i) h(i, perm[i]) += weights[k] / total;
  }
  return h;
}

// Closed-form time-weighted average 2/(T(T+1)) sum_t t w_t, recomputed from
// scratch over the prefix.
inline Eigen::VectorXd tvw_closed_form(const std::vector<Eigen::VectorXd>& ws,
                                       std::size_t t_count) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ws.front().size());
  for (std::size_t t = 1; t <= t_count; ++t)
    acc += static_cast<double>(t) * ws[t - 1];
  const double total = static_cast<double>(t_count) *
                       static_cast<double>(t_count + 1) / 2.0;
  return acc / total;
}

inline Eigen::VectorXd uniform_closed_form(const std::vector<Eigen::VectorXd>& ws,
                                           std::size_t t_count) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(ws.front().size());
  for (std::size_t t = 1; t <= t_count; ++t) acc += ws[t - 1];
  return acc / static_cast<double>(t_count);
}

// Central finite differences of instant_loss, step 1e-6.
inline Eigen::VectorXd fd_gradient(const distsgd::losses::LossModel& model,
                                   const Eigen::VectorXd& w,
                                   const distsgd::losses::Sample& s,
                                   double step = 1e-6) {
  Eigen::VectorXd g(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    Eigen::VectorXd hi = w, lo = w;
    hi[k] += step;
    lo[k] -= step;
    g[k] = (distsgd::losses::instant_loss(model, hi, s) -
            distsgd::losses::instant_loss(model, lo, s)) /
           (2.0 * step);
  }
  return g;
}

// Standalone centralized projected SGD, written against the raw update
// formulas rather than the strategies module's round functions.
struct CentralizedTrace {
  std::vector<Eigen::VectorXd> w;      // iterate after each round
  std::vector<Eigen::VectorXd> w_bar;  // maintained average after each round
};

inline CentralizedTrace centralized_reference(
    const distsgd::losses::LossModel& model,
    const distsgd::strategies::AlgorithmSpec& spec,
    const std::vector<distsgd::losses::Sample>& samples, int dim) {
  using distsgd::strategies::Kind;
  CentralizedTrace trace;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd w_bar = w;
  for (std::size_t t = 1; t <= samples.size(); ++t) {
    double mu = 0.0;
    switch (spec.kind) {
      case Kind::tvw: mu = 2.0 / (model.lambda * static_cast<double>(t + 1)); break;
      case Kind::uw:
      case Kind::vss: mu = 1.0 / (model.lambda * static_cast<double>(t)); break;
      case Kind::css: mu = spec.css_step; break;
    }
    const Eigen::VectorXd g =
        distsgd::losses::stochastic_gradient(model, w, samples[t - 1]);
    w = distsgd::losses::project(w - mu * g, model.radius);
    const double tn = static_cast<double>(t + 1);
    if (spec.kind == Kind::tvw)
      w_bar = ((tn - 1.0) / (tn + 1.0)) * w_bar + (2.0 / (tn + 1.0)) * w;
    else if (spec.kind == Kind::uw)
      w_bar = ((tn - 1.0) / tn) * w_bar + (1.0 / tn) * w;
    trace.w.push_back(w);
    trace.w_bar.push_back(w_bar);
  }
  return trace;
}

inline Eigen::VectorXd random_vector(int dim, distsgd::rng::Stream& stream,
                                     double scale = 1.0) {
  Eigen::VectorXd v(dim);
  for (int k = 0; k < dim; ++k) v[k] = scale * stream.next_gaussian();
  return v;
}

}  // namespace testing
