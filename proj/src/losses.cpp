#include "distsgd/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "distsgd/errors.hpp"

namespace distsgd::losses {

namespace {

void check_dims(const Eigen::VectorXd& w, const Sample& s) {
  if (w.size() != s.u.size())
    throw std::invalid_argument("dimension mismatch between iterate and regressor");
}

}  // namespace

Family family_from_name(const std::string& name) {
  if (name == "squared") return Family::squared;
  if (name == "hinge") return Family::hinge;
  if (name == "squared_hinge") return Family::squared_hinge;
  throw std::invalid_argument("unknown loss family: " + name);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::squared: return "squared";
    case Family::hinge: return "hinge";
    case Family::squared_hinge: return "squared_hinge";
  }
  return "?";
}

double prediction_loss(Family family, const Eigen::VectorXd& w,
                       const Sample& s) {
  check_dims(w, s);
  const double y = w.dot(s.u);
  switch (family) {
    case Family::squared: {
      const double r = s.d - y;
      return r * r;
    }
    case Family::hinge:
      return std::max(0.0, 1.0 - s.d * y);
    case Family::squared_hinge: {
      const double slack = std::max(0.0, 1.0 - s.d * y);
      return slack * slack;
    }
  }
  return 0.0;
}

double instant_loss(const LossModel& model, const Eigen::VectorXd& w,
                    const Sample& s) {
  return prediction_loss(model.family, w, s) +
         0.5 * model.lambda * w.squaredNorm();
}

Eigen::VectorXd stochastic_gradient(const LossModel& model,
                                    const Eigen::VectorXd& w, const Sample& s) {
  check_dims(w, s);
  const double y = w.dot(s.u);
  switch (model.family) {
    case Family::squared:
      return (-2.0 * (s.d - y)) * s.u + model.lambda * w;
    case Family::hinge:
      if (s.d * y < 1.0) return (-s.d) * s.u + model.lambda * w;
      return model.lambda * w;
    case Family::squared_hinge: {
      const double slack = 1.0 - s.d * y;
      if (slack > 0.0) return (-2.0 * slack * s.d) * s.u + model.lambda * w;
      return model.lambda * w;
    }
  }
  return Eigen::VectorXd::Zero(w.size());
}

Eigen::VectorXd project(const Eigen::VectorXd& w, double radius) {
  if (!std::isfinite(radius)) return w;
  const double n = w.norm();
  // Headroom of a few ulps keeps re-projection of a just-projected point an
  // exact no-op despite rescaling round-off.
  const double slack = radius * (static_cast<double>(w.size()) + 2.0) *
                       std::numeric_limits<double>::epsilon();
  if (n <= radius + slack) return w;
  return w * (radius / n);
}

AnalyticCost make_analytic_cost(Family family, Eigen::VectorXd w0,
                                const std::vector<Eigen::MatrixXd>& cov,
                                const std::vector<double>& noise_vars,
                                double lambda) {
  if (family != Family::squared)
    throw std::invalid_argument(
        "analytic cost evaluator only exists for the squared loss");
  if (cov.empty() || cov.size() != noise_vars.size())
    throw std::invalid_argument("analytic cost: covariance/noise size mismatch");
  AnalyticCost out;
  out.n_nodes = static_cast<int>(cov.size());
  out.lambda = lambda;
  out.cov_sum = Eigen::MatrixXd::Zero(w0.size(), w0.size());
  for (const auto& r : cov) {
    if (r.rows() != w0.size() || r.cols() != w0.size())
      throw std::invalid_argument("analytic cost: covariance dimension mismatch");
    out.cov_sum += r;
  }
  for (double v : noise_vars) out.noise_var_sum += v;
  out.w0 = std::move(w0);
  return out;
}

namespace {

double analytic_cost_value(const AnalyticCost& c, const Eigen::VectorXd& w) {
  const Eigen::VectorXd diff = c.w0 - w;
  return diff.dot(c.cov_sum * diff) + c.noise_var_sum +
         0.5 * c.n_nodes * c.lambda * w.squaredNorm();
}

double empirical_cost_value(const EmpiricalCost& c, const Eigen::VectorXd& w) {
  if (c.node_samples.empty())
    throw std::invalid_argument("empirical cost: no node samples");
  const LossModel model{c.family, c.lambda, kInfiniteRadius};
  double total = 0.0;
  for (const auto& shard : c.node_samples) {
    if (shard.empty())
      throw std::invalid_argument("empirical cost: empty node shard");
    double s = 0.0;
    for (const auto& sample : shard) s += instant_loss(model, w, sample);
    total += s / static_cast<double>(shard.size());
  }
  return total;
}

Eigen::VectorXd analytic_optimum(const AnalyticCost& c,
                                 const OptimumOptions& opts) {
  const auto p = c.w0.size();
  const Eigen::MatrixXd a =
      2.0 * c.cov_sum +
      c.n_nodes * c.lambda * Eigen::MatrixXd::Identity(p, p);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(
        "analytic optimum: stationarity system is singular "
        "(lambda = 0 with a singular covariance sum?)",
        std::numeric_limits<double>::quiet_NaN(),
        std::numeric_limits<double>::quiet_NaN());
  Eigen::VectorXd w = llt.solve(2.0 * (c.cov_sum * c.w0));
  if (std::isfinite(opts.radius) && w.norm() > opts.radius) {
    // Constrained case: polish with projected gradient at step 1/L.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.cov_sum);
    const double lip = 2.0 * es.eigenvalues().maxCoeff() + c.n_nodes * c.lambda;
    const double step = 1.0 / lip;
    w = project(w, opts.radius);
    for (long it = 0; it < opts.max_iter; ++it) {
      const Eigen::VectorXd grad =
          2.0 * (c.cov_sum * (w - c.w0)) + c.n_nodes * c.lambda * w;
      const Eigen::VectorXd next = project(w - step * grad, opts.radius);
      const double moved = (next - w).norm();
      w = next;
      if (moved <= 1e-14) break;
    }
  }
  return w;
}

Eigen::VectorXd empirical_optimum(const EmpiricalCost& c,
                                  const OptimumOptions& opts) {
  if (c.node_samples.empty() || c.node_samples.front().empty())
    throw std::invalid_argument("empirical optimum: no samples");
  if (!(c.lambda > 0.0))
    throw std::invalid_argument("empirical optimum requires lambda > 0");
  const auto p = c.node_samples.front().front().u.size();
  const LossModel model{c.family, c.lambda, kInfiniteRadius};
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  for (long t = 1; t <= opts.max_iter; ++t) {
    grad.setZero();
    for (const auto& shard : c.node_samples) {
      Eigen::VectorXd shard_grad = Eigen::VectorXd::Zero(p);
      for (const auto& sample : shard)
        shard_grad += stochastic_gradient(model, w, sample);
      grad += shard_grad / static_cast<double>(shard.size());
    }
    if (grad.norm() <= opts.grad_tol) break;
    const double mu = 2.0 / (c.lambda * static_cast<double>(t + 1));
    w = project(w - mu * grad, opts.radius);
  }
  return w;
}

}  // namespace

double global_cost(const CostEvaluator& eval, const Eigen::VectorXd& w) {
  return std::visit(
      [&](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AnalyticCost>)
          return analytic_cost_value(c, w);
        else
          return empirical_cost_value(c, w);
      },
      eval);
}

Eigen::VectorXd optimum(const CostEvaluator& eval, const OptimumOptions& opts) {
  return std::visit(
      [&](const auto& c) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AnalyticCost>)
          return analytic_optimum(c, opts);
        else
          return empirical_optimum(c, opts);
      },
      eval);
}

}  // namespace distsgd::losses
