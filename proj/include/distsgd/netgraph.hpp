#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace distsgd::netgraph {

enum class TopologyKind { star, circle, random_graph, complete, line };

// Names used in config files and on the command line:
// star|circle|random|complete|line.
TopologyKind topology_kind_from_name(const std::string& name);
std::string to_string(TopologyKind kind);

/// Undirected connected graph over nodes 0..n-1. Every node counts as its own
/// neighbor: adjacent(i, i) is true and degree(i) includes the self-loop.
class Topology {
 public:
  /// Throws std::invalid_argument if n < 2, an endpoint is out of range, or
  /// the resulting graph is disconnected.
  Topology(int n_nodes, const std::vector<std::pair<int, int>>& edges);

  int n_nodes() const { return n_; }
  bool adjacent(int i, int j) const { return adj_[idx(i, j)] != 0; }
  int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }
  /// Sorted, includes i itself.
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }

  std::string to_csv() const;

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }

  int n_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::vector<int>> neighbors_;
};

/// edge_prob and seed only matter for the random family. Random graphs are
/// redrawn with a reseeded generator until connected; throws
/// std::runtime_error after 1000 failed attempts.
Topology build_topology(TopologyKind kind, int n, double edge_prob = 0.3,
                        std::uint64_t seed = 0);

/// Doubly stochastic neighbor-weight matrix with the second-largest singular
/// value cached. sigma < 1 iff the underlying graph mixes.
struct CombinationMatrix {
  Eigen::MatrixXd h;
  double sigma = 0.0;
};

/// Metropolis weights: h(i,j) = 1/max{deg_i, deg_j} on edges (degrees count
/// the self-loop), remainder on the diagonal.
CombinationMatrix metropolis_matrix(const Topology& topo);

/// Maximum-degree rule: h(i,j) = 1/N on edges, remainder on the diagonal.
/// On the complete graph this is the rank-one averaging matrix with sigma 0.
CombinationMatrix uniform_matrix(const Topology& topo);

/// Wraps an arbitrary matrix, computing sigma. No validation.
CombinationMatrix make_combination(Eigen::MatrixXd h);

/// Spectral norm of h - (1/N)* ones, i.e. the second-largest singular value
/// of a doubly stochastic h. Power iteration on M'M; the top singular pair of
/// h is removed exactly by the rank-one subtraction. Converges when the
/// residual of the Rayleigh quotient drops below tol relative; throws
/// NumericalError after max_iter iterations without convergence.
double second_singular_value(const Eigen::MatrixXd& h, double tol = 1e-10,
                             int max_iter = 10000, std::uint64_t seed = 0);

/// Empty iff h is a valid combination matrix at tolerance 1e-12: square,
/// nonnegative, rows and columns sum to 1, sigma < 1, and (when a topology is
/// given) the sparsity pattern matches with strictly positive edge weights.
std::vector<std::string> validate_matrix(const Eigen::MatrixXd& h,
                                         const Topology* topo = nullptr);

/// Row-major CSV at full precision (%.17g).
std::string matrix_to_csv(const Eigen::MatrixXd& m);

}  // namespace distsgd::netgraph
