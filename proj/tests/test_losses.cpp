#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "distsgd/errors.hpp"
#include "distsgd/losses.hpp"
#include "distsgd/rng.hpp"
#include "distsgd/sim.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace distsgd;
using losses::Family;
using losses::LossModel;
using losses::Sample;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Sample make_sample(Eigen::VectorXd u, double d) { return {std::move(u), d}; }

// Draws away from the hinge kink so central differences see a smooth loss.
bool differentiable_at(Family family, const Eigen::VectorXd& w, const Sample& s) {
  if (family == Family::squared) return true;
  return std::abs(1.0 - s.d * w.dot(s.u)) > 1e-3;
}

}  // namespace

TEST_CASE("instant loss values") {
  CHECK(losses::instant_loss({Family::squared, 0.0, 10.0}, vec2(0, 0),
                             make_sample(vec2(1, 0), 2.0)) == 4.0);
  // margin exactly met
  CHECK(losses::instant_loss({Family::hinge, 0.0, 10.0}, vec2(1, 0),
                             make_sample(vec2(1, 0), 1.0)) == 0.0);
  CHECK(losses::instant_loss({Family::squared, 0.01, 10.0}, vec2(1, 0),
                             make_sample(vec2(1, 0), 1.0)) ==
        doctest::Approx(0.005).epsilon(1e-15));
  CHECK(losses::instant_loss({Family::squared_hinge, 0.0, 10.0}, vec2(0, 0),
                             make_sample(vec2(1, 0), 1.0)) == 1.0);
  CHECK_THROWS_AS(losses::instant_loss({Family::squared, 0.0, 10.0}, vec2(0, 0),
                                       make_sample(Eigen::VectorXd::Zero(3), 1.0)),
                  std::invalid_argument);
}

TEST_CASE("gradient values") {
  const auto g = losses::stochastic_gradient({Family::squared, 0.0, 10.0},
                                             vec2(0, 0), make_sample(vec2(1, 2), 1.0));
  CHECK(g[0] == -2.0);
  CHECK(g[1] == -4.0);

  // inactive hinge: d * w'u = 2
  const auto gh = losses::stochastic_gradient({Family::hinge, 0.0, 10.0},
                                              vec2(2, 0), make_sample(vec2(1, 0), 1.0));
  CHECK(gh.norm() == 0.0);

  // at the kink (margin exactly 1) the zero-loss branch is returned
  const auto gk = losses::stochastic_gradient({Family::hinge, 0.5, 10.0},
                                              vec2(1, 0), make_sample(vec2(1, 0), 1.0));
  CHECK(gk == 0.5 * vec2(1, 0));
}

TEST_CASE("finite differences agree at differentiable points") {
  rng::Stream stream(2024);
  for (Family family : {Family::squared, Family::hinge, Family::squared_hinge}) {
    int tested = 0;
    while (tested < 200) {
      const LossModel model{family, 0.05, losses::kInfiniteRadius};
      const Eigen::VectorXd w = testing::random_vector(4, stream, 2.0);
      Sample s{testing::random_vector(4, stream), 0.0};
      s.d = family == Family::squared ? stream.next_gaussian()
                                      : (stream.next_double() < 0.5 ? -1.0 : 1.0);
      if (!differentiable_at(family, w, s)) continue;
      ++tested;
      const Eigen::VectorXd g = losses::stochastic_gradient(model, w, s);
      const Eigen::VectorXd fd = testing::fd_gradient(model, w, s);
      const double scale = std::max(1.0, g.norm());
      CHECK((g - fd).norm() / scale < 1e-5);
    }
  }
}

TEST_CASE("strong convexity and subgradient inequalities") {
  rng::Stream stream(77);
  const double lambda = 0.3;
  for (Family family : {Family::squared, Family::hinge, Family::squared_hinge}) {
    const LossModel model{family, lambda, losses::kInfiniteRadius};
    for (int k = 0; k < 200; ++k) {
      Sample s{testing::random_vector(3, stream), 0.0};
      s.d = family == Family::squared ? stream.next_gaussian()
                                      : (stream.next_double() < 0.5 ? -1.0 : 1.0);
      const Eigen::VectorXd w1 = testing::random_vector(3, stream, 3.0);
      const Eigen::VectorXd w2 = testing::random_vector(3, stream, 3.0);
      const double alpha = stream.next_double();

      const double f1 = losses::instant_loss(model, w1, s);
      const double f2 = losses::instant_loss(model, w2, s);
      const double fmid =
          losses::instant_loss(model, alpha * w1 + (1.0 - alpha) * w2, s);
      const double gap = (lambda / 2.0) * alpha * (1.0 - alpha) *
                         (w1 - w2).squaredNorm();
      CHECK(fmid <= alpha * f1 + (1.0 - alpha) * f2 - gap + 1e-9);

      const Eigen::VectorXd g = losses::stochastic_gradient(model, w1, s);
      CHECK(f2 >= f1 + g.dot(w2 - w1) +
                      (lambda / 2.0) * (w2 - w1).squaredNorm() - 1e-9);
    }
  }
}

TEST_CASE("projection") {
  CHECK(losses::project(vec2(3, 4), 5.0) == vec2(3, 4));  // on the boundary
  const auto p = losses::project(vec2(3, 4), 1.0);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(losses::project(vec2(0, 0), 2.0) == vec2(0, 0));
  CHECK(losses::project(vec2(1e6, 0), losses::kInfiniteRadius) == vec2(1e6, 0));

  rng::Stream stream(5);
  for (int k = 0; k < 200; ++k) {
    const double radius = 0.5 + 2.0 * stream.next_double();
    const Eigen::VectorXd a = testing::random_vector(3, stream, 3.0);
    const Eigen::VectorXd b = testing::random_vector(3, stream, 3.0);
    const Eigen::VectorXd pa = losses::project(a, radius);
    CHECK(losses::project(pa, radius) == pa);  // idempotent
    CHECK((pa - losses::project(b, radius)).norm() <=
          (a - b).norm() + 1e-12);  // nonexpansive
  }
}

TEST_CASE("analytic global cost") {
  const int n = 3;
  const int p = 2;
  Eigen::VectorXd w0 = vec2(1, 0);
  std::vector<Eigen::MatrixXd> cov(n, Eigen::MatrixXd::Identity(p, p));
  std::vector<double> noise(n, 0.1);

  const auto eval = losses::make_analytic_cost(Family::squared, w0, cov, noise, 0.0);
  // At the truth only the noise floor remains.
  CHECK(losses::global_cost(losses::CostEvaluator(eval), w0) ==
        doctest::Approx(n * 0.1).epsilon(1e-14));

  const auto single = losses::make_analytic_cost(
      Family::squared, w0, {Eigen::MatrixXd::Identity(p, p)}, {0.0}, 0.0);
  CHECK(losses::global_cost(losses::CostEvaluator(single), vec2(0, 0)) ==
        doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(losses::make_analytic_cost(Family::hinge, w0, cov, noise, 0.0),
                  std::invalid_argument);
}

TEST_CASE("empirical cost agrees with the analytic expectation") {
  // Monte-Carlo oracle: the sample mean of instant losses over 1e5 draws
  // should land within a few standard errors of the closed form.
  const int p = 3;
  const auto model = sim::build_synthetic(1, p, 0.1, {3.0, 3.0}, 99);
  const LossModel loss{Family::squared, 0.02, losses::kInfiniteRadius};
  rng::Stream stream(rng::stream_key(99, 0, rng::Purpose::sample));
  const Eigen::VectorXd w = testing::random_vector(p, stream);

  const long n_draws = 100000;
  double acc = 0.0, acc2 = 0.0;
  losses::EmpiricalCost emp;
  emp.family = Family::squared;
  emp.lambda = loss.lambda;
  emp.node_samples.resize(1);
  emp.node_samples[0].reserve(n_draws);
  for (long k = 0; k < n_draws; ++k) {
    emp.node_samples[0].push_back(sim::draw_sample(model, 0, stream));
    const double v = losses::instant_loss(loss, w, emp.node_samples[0].back());
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / n_draws;
  const double se = std::sqrt((acc2 / n_draws - mean * mean) / n_draws);

  const auto analytic = losses::make_analytic_cost(Family::squared, model.w0,
                                                   model.cov, {0.1}, loss.lambda);
  const double expected = losses::global_cost(losses::CostEvaluator(analytic), w);
  CHECK(std::abs(mean - expected) < 3.0 * se + 1e-12);
  CHECK(losses::global_cost(losses::CostEvaluator(emp), w) ==
        doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("analytic optimum") {
  const int p = 3;
  rng::Stream stream(11);
  Eigen::VectorXd w0 = testing::random_vector(p, stream);
  w0.normalize();

  // lambda = 0 with a nonsingular covariance sum: the truth minimizes.
  const auto unreg = losses::make_analytic_cost(
      Family::squared, w0, {Eigen::MatrixXd::Identity(p, p)}, {0.1}, 0.0);
  CHECK((losses::optimum(losses::CostEvaluator(unreg)) - w0).norm() < 1e-12);

  // N=1, R=I: solve (2+lambda) w = 2 w0 by hand.
  const double lambda = 0.7;
  const auto reg = losses::make_analytic_cost(
      Family::squared, w0, {Eigen::MatrixXd::Identity(p, p)}, {0.1}, lambda);
  const auto w_star = losses::optimum(losses::CostEvaluator(reg));
  CHECK((w_star - (2.0 / (2.0 + lambda)) * w0).norm() < 1e-12);
  // stationarity: 2 sum R (w* - w0) + N lambda w* = 0
  CHECK((2.0 * (w_star - w0) + lambda * w_star).norm() <= 1e-10);

  // Singular system: lambda = 0 and rank-deficient covariance.
  Eigen::MatrixXd rank1 = Eigen::MatrixXd::Zero(p, p);
  rank1(0, 0) = 1.0;
  const auto singular =
      losses::make_analytic_cost(Family::squared, w0, {rank1}, {0.1}, 0.0);
  CHECK_THROWS_AS(losses::optimum(losses::CostEvaluator(singular)), NumericalError);

  // Tight ball: the solution must stay feasible and beat the interior path.
  const auto tight = losses::optimum(losses::CostEvaluator(reg), {0.3, 100000, 1e-9});
  CHECK(tight.norm() <= 0.3 + 1e-12);
}

TEST_CASE("empirical reference solver beats random feasible points") {
  const int p = 3;
  const double radius = 5.0;
  rng::Stream stream(2718);
  losses::EmpiricalCost cost;
  cost.family = Family::squared_hinge;
  cost.lambda = 0.05;
  cost.node_samples.resize(2);
  for (auto& shard : cost.node_samples) {
    for (int k = 0; k < 40; ++k) {
      Sample s{testing::random_vector(p, stream), 0.0};
      s.d = stream.next_double() < 0.5 ? -1.0 : 1.0;
      shard.push_back(std::move(s));
    }
  }
  const losses::CostEvaluator eval(cost);
  const auto w_star = losses::optimum(eval, {radius, 200000, 1e-9});
  CHECK(w_star.norm() <= radius + 1e-12);
  const double f_star = losses::global_cost(eval, w_star);
  for (int k = 0; k < 1000; ++k) {
    Eigen::VectorXd w = testing::random_vector(p, stream, 2.0);
    w = losses::project(w, radius);
    CHECK(f_star <= losses::global_cost(eval, w) + 1e-9);
  }
  CHECK_THROWS_AS(
      losses::optimum(losses::CostEvaluator(losses::EmpiricalCost{
          cost.node_samples, Family::squared_hinge, 0.0})),
      std::invalid_argument);
}

TEST_CASE("gradient bound estimate is a running max") {
  losses::GradientBoundEstimate g;
  g.observe(1.0);
  g.observe(0.5);
  CHECK(g.g_max == 1.0);
  losses::GradientBoundEstimate h;
  h.observe(2.5);
  g.merge(h);
  CHECK(g.g_max == 2.5);
}
