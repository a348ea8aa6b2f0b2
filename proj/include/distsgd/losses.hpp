#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace distsgd::losses {

enum class Family { squared, hinge, squared_hinge };

// Names used in config files: squared|hinge|squared_hinge.
Family family_from_name(const std::string& name);
std::string to_string(Family family);

constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

/// Loss family plus ridge constant and feasible-ball radius. lambda > 0 is
/// what makes the per-node losses strongly convex; the config loader enforces
/// it, the raw struct does not (tests exercise lambda = 0 directly).
struct LossModel {
  Family family = Family::squared;
  double lambda = 0.0;
  double radius = kInfiniteRadius;
};

struct Sample {
  Eigen::VectorXd u;
  double d = 0.0;
};

/// Running max of observed stochastic gradient norms. Stands in for the norm
/// bound G of the theory, which the algorithm never needs to know.
struct GradientBoundEstimate {
  double g_max = 0.0;
  void observe(double g_norm) {
    if (g_norm > g_max) g_max = g_norm;
  }
  void merge(const GradientBoundEstimate& other) { observe(other.g_max); }
};

/// Family loss at (w, s) plus (lambda/2)|w|^2.
double instant_loss(const LossModel& model, const Eigen::VectorXd& w,
                    const Sample& s);

/// Family loss without the ridge term; this is what prequential error
/// accumulates.
double prediction_loss(Family family, const Eigen::VectorXd& w,
                       const Sample& s);

/// Subgradient of instant_loss at w. At the hinge kink (margin exactly 1) the
/// zero-loss branch is returned.
Eigen::VectorXd stochastic_gradient(const LossModel& model,
                                    const Eigen::VectorXd& w, const Sample& s);

/// Euclidean projection onto the ball of the given radius. Points already
/// inside (or an infinite radius) pass through untouched.
Eigen::VectorXd project(const Eigen::VectorXd& w, double radius);

/// Closed-form expected global cost for the gaussian regression model:
///   sum_i [(w0-w)' R_i (w0-w) + noise_var_i] + (N lambda / 2) |w|^2.
struct AnalyticCost {
  Eigen::VectorXd w0;
  Eigen::MatrixXd cov_sum;     // sum of per-node regressor covariances
  double noise_var_sum = 0.0;  // sum of per-node noise variances
  int n_nodes = 0;
  double lambda = 0.0;
};

/// Empirical global cost: sum over nodes of the node's mean instant loss.
struct EmpiricalCost {
  std::vector<std::vector<Sample>> node_samples;
  Family family = Family::squared;
  double lambda = 0.0;
};

using CostEvaluator = std::variant<AnalyticCost, EmpiricalCost>;

/// Throws std::invalid_argument unless family is squared: only the squared
/// loss has this closed form.
AnalyticCost make_analytic_cost(Family family, Eigen::VectorXd w0,
                                const std::vector<Eigen::MatrixXd>& cov,
                                const std::vector<double>& noise_vars,
                                double lambda);

double global_cost(const CostEvaluator& eval, const Eigen::VectorXd& w);

struct OptimumOptions {
  double radius = kInfiniteRadius;
  long max_iter = 1000000;
  double grad_tol = 1e-9;
};

/// Minimizer of the global cost over the feasible ball. Analytic costs are
/// solved in closed form (dense solve of the stationarity system); empirical
/// costs run full-batch projected subgradient descent with step 2/(lambda
/// (t+1)) until the subgradient norm drops below grad_tol or max_iter is hit.
Eigen::VectorXd optimum(const CostEvaluator& eval,
                        const OptimumOptions& opts = {});

}  // namespace distsgd::losses
