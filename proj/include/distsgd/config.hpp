#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "distsgd/sim.hpp"

namespace distsgd::cli {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key, long line = 0)
      : std::runtime_error(what), key(std::move(key)), line(line) {}
  std::string key;
  long line;
};

/// A parsed experiment file: the shared [experiment] block plus one
/// [algorithm] block (or several named [algorithm.<name>] blocks for
/// compare runs).
struct RunSetup {
  sim::ExperimentConfig base;
  std::vector<std::pair<std::string, strategies::AlgorithmSpec>> algorithms;
  bool check_bounds = false;
  std::optional<double> g_override;
};

RunSetup load_config(const std::string& path);
RunSetup parse_config_text(const std::string& text);

/// Canonical re-emission with every key resolved; parsing it back yields the
/// same setup byte for byte, which is what makes manifests re-runnable.
std::string canonical_config(const RunSetup& setup);

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int threads);
int cmd_compare(const std::string& config_path, const std::string& out_dir,
                int threads);
int cmd_graph(const std::string& kind, int n, double edge_prob,
              std::uint64_t seed, bool uniform, bool validate);
int cmd_bounds(int n_nodes, double lambda, double sigma, double g, long rounds,
               const std::string& which);
int cmd_dataset_info(const std::string& path,
                     std::optional<double> positive_class);

/// DISTSGD_THREADS when set, else 1. The flag wins over the env var.
int default_threads();

}  // namespace distsgd::cli
