#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "distsgd/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"distsgd - distributed stochastic subgradient simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = distsgd::cli::default_threads();

  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--out", out_dir, "output directory");
  run->add_option("--threads", threads, "trial-level parallelism");

  auto* compare = app.add_subcommand(
      "compare", "run every algorithm section of a config and merge the CSVs");
  compare->add_option("config", config_path, "config file")->required();
  compare->add_option("-o,--out", out_dir, "output directory");
  compare->add_option("--threads", threads, "trial-level parallelism");

  std::string graph_kind;
  int graph_n = 0;
  double edge_prob = 0.3;
  std::uint64_t seed = 0;
  bool uniform = false;
  bool validate = false;
  auto* graph = app.add_subcommand("graph", "print a combination matrix and its sigma");
  graph->add_option("kind", graph_kind, "star|circle|random|complete|line")->required();
  graph->add_option("n", graph_n, "number of nodes")->required();
  graph->add_option("--edge-prob", edge_prob, "edge probability (random only)");
  graph->add_option("--seed", seed, "seed (random only)");
  graph->add_flag("--uniform", uniform, "maximum-degree weights instead of Metropolis");
  graph->add_flag("--validate", validate, "run the matrix validator");

  int b_nodes = 0;
  double b_lambda = 0.0, b_sigma = 0.0, b_g = 1.0;
  long b_rounds = 1;
  std::string which = "both";
  auto* bounds = app.add_subcommand("bounds", "evaluate the convergence bounds");
  bounds->add_option("--nodes", b_nodes, "network size N")->required();
  bounds->add_option("--lambda", b_lambda, "strong-convexity constant")->required();
  bounds->add_option("--sigma", b_sigma, "second-largest singular value")->required();
  bounds->add_option("--g", b_g, "gradient-norm bound G")->required();
  bounds->add_option("--rounds", b_rounds, "round count T")->required();
  bounds->add_option("--which", which, "t1|t2|both");

  std::string dataset_path;
  double positive_class = 0.0;
  auto* info = app.add_subcommand("dataset-info", "inspect a LIBSVM file");
  auto* pc_opt = info->add_option("--positive-class", positive_class,
                                  "label mapped to +1 (one-vs-rest)");
  info->add_option("path", dataset_path, "LIBSVM file (.gz accepted)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (run->parsed()) return distsgd::cli::cmd_run(config_path, out_dir, threads);
  if (compare->parsed())
    return distsgd::cli::cmd_compare(config_path, out_dir, threads);
  if (graph->parsed())
    return distsgd::cli::cmd_graph(graph_kind, graph_n, edge_prob, seed,
                                   uniform, validate);
  if (bounds->parsed())
    return distsgd::cli::cmd_bounds(b_nodes, b_lambda, b_sigma, b_g, b_rounds,
                                    which);
  if (info->parsed())
    return distsgd::cli::cmd_dataset_info(
        dataset_path, pc_opt->count() > 0
                          ? std::optional<double>(positive_class)
                          : std::nullopt);
  return 2;
}
