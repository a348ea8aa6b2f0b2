#include "distsgd/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "distsgd/errors.hpp"
#include "distsgd/rng.hpp"

namespace distsgd::netgraph {

namespace {

constexpr double kTol = 1e-12;
constexpr int kRandomRetryBudget = 1000;

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

bool connected(int n, const std::vector<std::uint8_t>& adj) {
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      if (j != v && adj[static_cast<std::size_t>(v) * n + j] && !seen[j]) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
    }
  }
  return reached == n;
}

}  // namespace

TopologyKind topology_kind_from_name(const std::string& name) {
  if (name == "star") return TopologyKind::star;
  if (name == "circle") return TopologyKind::circle;
  if (name == "random") return TopologyKind::random_graph;
  if (name == "complete") return TopologyKind::complete;
  if (name == "line") return TopologyKind::line;
  throw std::invalid_argument("unknown topology kind: " + name);
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::star: return "star";
    case TopologyKind::circle: return "circle";
    case TopologyKind::random_graph: return "random";
    case TopologyKind::complete: return "complete";
    case TopologyKind::line: return "line";
  }
  return "?";
}

Topology::Topology(int n_nodes, const std::vector<std::pair<int, int>>& edges)
    : n_(n_nodes) {
  if (n_ < 2) throw std::invalid_argument("topology needs at least 2 nodes");
  adj_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (int i = 0; i < n_; ++i) adj_[idx(i, i)] = 1;
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n_ || b < 0 || b >= n_)
      throw std::invalid_argument("edge endpoint out of range");
    if (a == b) continue;
    adj_[idx(a, b)] = 1;
    adj_[idx(b, a)] = 1;
  }
  if (!connected(n_, adj_))
    throw std::invalid_argument("topology is not connected");
  neighbors_.resize(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (adj_[idx(i, j)]) neighbors_[i].push_back(j);
}

std::string Topology::to_csv() const {
  std::string out;
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      out += adj_[idx(i, j)] ? '1' : '0';
      out += j + 1 < n_ ? ',' : '\n';
    }
  }
  return out;
}

Topology build_topology(TopologyKind kind, int n, double edge_prob,
                        std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("build_topology: n must be >= 2");
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case TopologyKind::star:
      for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
      return Topology(n, edges);
    case TopologyKind::circle:
      for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      return Topology(n, edges);
    case TopologyKind::line:
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      return Topology(n, edges);
    case TopologyKind::complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      return Topology(n, edges);
    case TopologyKind::random_graph: {
      if (!(edge_prob > 0.0) || edge_prob > 1.0)
        throw std::invalid_argument("edge_prob must lie in (0, 1]");
      for (int attempt = 0; attempt < kRandomRetryBudget; ++attempt) {
        rng::Stream stream(rng::stream_key(seed, attempt, rng::Purpose::topology));
        edges.clear();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            if (stream.next_double() < edge_prob) edges.emplace_back(i, j);
        try {
          return Topology(n, edges);
        } catch (const std::invalid_argument&) {
          // disconnected draw, retry with the next derived stream
        }
      }
      throw std::runtime_error(
          fmt("random topology stayed disconnected after %d attempts "
              "(n=%d, edge_prob=%g)",
              kRandomRetryBudget, n, edge_prob));
    }
  }
  throw std::invalid_argument("unknown topology kind");
}

CombinationMatrix metropolis_matrix(const Topology& topo) {
  const int n = topo.n_nodes();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off_sum = 0.0;
    for (int j : topo.neighbors(i)) {
      if (j == i) continue;
      h(i, j) = 1.0 / std::max(topo.degree(i), topo.degree(j));
      off_sum += h(i, j);
    }
    h(i, i) = 1.0 - off_sum;
  }
  CombinationMatrix out{std::move(h), 0.0};
  out.sigma = second_singular_value(out.h);
  auto violations = validate_matrix(out.h, &topo);
  if (!violations.empty())
    throw std::logic_error("metropolis matrix failed validation: " +
                           violations.front());
  return out;
}

CombinationMatrix uniform_matrix(const Topology& topo) {
  const int n = topo.n_nodes();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off_sum = 0.0;
    for (int j : topo.neighbors(i)) {
      if (j == i) continue;
      h(i, j) = 1.0 / n;
      off_sum += h(i, j);
    }
    h(i, i) = 1.0 - off_sum;
  }
  CombinationMatrix out{std::move(h), 0.0};
  out.sigma = second_singular_value(out.h);
  auto violations = validate_matrix(out.h, &topo);
  if (!violations.empty())
    throw std::logic_error("uniform matrix failed validation: " +
                           violations.front());
  return out;
}

CombinationMatrix make_combination(Eigen::MatrixXd h) {
  CombinationMatrix out{std::move(h), 0.0};
  out.sigma = second_singular_value(out.h);
  return out;
}

double second_singular_value(const Eigen::MatrixXd& h, double tol,
                             int max_iter, std::uint64_t seed) {
  const auto n = h.rows();
  if (n < 1 || h.cols() != n)
    throw std::invalid_argument("second_singular_value: matrix must be square");
  if (n == 1) return 0.0;

  const Eigen::MatrixXd m =
      h - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));

  rng::Stream stream(rng::stream_key(seed, 0, rng::Purpose::power_iteration));
  Eigen::VectorXd x(n);
  auto reseed = [&] {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = stream.next_gaussian();
    x.normalize();
  };
  reseed();

  double nu = 0.0;
  double residual = 0.0;
  double best_residual = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  int restarts = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd y = m.transpose() * (m * x);
    nu = x.dot(y);
    if (nu <= 1e-28) return 0.0;  // M numerically zero in the x direction
    residual = (y - nu * x).norm();
    // For symmetric M'M the residual bounds the eigenvalue error directly.
    if (residual <= tol * nu) return std::sqrt(nu);
    if (residual < 0.99 * best_residual) {
      best_residual = residual;
      since_improvement = 0;
    } else if (++since_improvement > 200 && restarts < 2) {
      reseed();
      best_residual = std::numeric_limits<double>::infinity();
      since_improvement = 0;
      ++restarts;
      continue;
    }
    const double y_norm = y.norm();
    if (y_norm == 0.0) return 0.0;
    x = y / y_norm;
  }
  throw NumericalError(
      fmt("power iteration did not converge in %d iterations "
          "(residual %.3e, estimate %.17g)",
          max_iter, residual, std::sqrt(std::max(nu, 0.0))),
      std::sqrt(std::max(nu, 0.0)), residual);
}

std::vector<std::string> validate_matrix(const Eigen::MatrixXd& h,
                                         const Topology* topo) {
  std::vector<std::string> v;
  const auto n = h.rows();
  if (h.cols() != n || n < 1) {
    v.push_back("matrix is not square");
    return v;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (h(i, j) < -kTol)
        v.push_back(fmt("negative entry (%ld,%ld) = %.17g", long(i), long(j),
                        h(i, j)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double rs = h.row(i).sum();
    if (std::abs(rs - 1.0) > kTol)
      v.push_back(fmt("row %ld sum != 1 (got %.17g)", long(i), rs));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double cs = h.col(j).sum();
    if (std::abs(cs - 1.0) > kTol)
      v.push_back(fmt("column %ld sum != 1 (got %.17g)", long(j), cs));
  }
  if (topo != nullptr) {
    if (topo->n_nodes() != n) {
      v.push_back("topology size does not match matrix size");
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const bool edge = topo->adjacent(static_cast<int>(i), static_cast<int>(j));
          if (edge && h(i, j) <= kTol)
            v.push_back(fmt("zero weight on edge (%ld,%ld)", long(i), long(j)));
          if (!edge && std::abs(h(i, j)) > kTol)
            v.push_back(
                fmt("nonzero weight off edge (%ld,%ld) = %.17g", long(i),
                    long(j), h(i, j)));
        }
      }
    }
  }
  try {
    const double sigma = second_singular_value(h);
    if (sigma >= 1.0 - kTol)
      v.push_back(fmt("sigma >= 1 (got %.17g)", sigma));
  } catch (const NumericalError& e) {
    v.push_back(fmt("sigma computation failed to converge (estimate %.17g)",
                    e.estimate));
  }
  return v;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out += buf;
      out += j + 1 < m.cols() ? ',' : '\n';
    }
  }
  return out;
}

}  // namespace distsgd::netgraph
