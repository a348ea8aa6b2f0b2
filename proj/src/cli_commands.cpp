#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "distsgd/analysis.hpp"
#include "distsgd/config.hpp"
#include "distsgd/errors.hpp"

namespace distsgd::cli {

namespace {

namespace fs = std::filesystem;

template <typename F>
int guard(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dataio::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string manifest_text(const RunSetup& setup,
                          const std::vector<std::string>& artifacts,
                          double sigma, double g_max, double wall_seconds,
                          const std::vector<std::string>& extra_notes) {
  char buf[256];
  std::string out = "# distsgd run manifest\n";
  std::snprintf(buf, sizeof(buf), "# sigma = %.17g\n", sigma);
  out += buf;
  std::snprintf(buf, sizeof(buf), "# g_max = %.17g\n", g_max);
  out += buf;
  if (!setup.base.synthetic()) {
    std::snprintf(buf, sizeof(buf), "# dataset_checksum = fnv1a:%016llx\n",
                  static_cast<unsigned long long>(
                      dataio::file_checksum(setup.base.dataset_path)));
    out += buf;
  }
  out += "# artifacts:";
  for (const auto& a : artifacts) out += " " + a;
  out += "\n";
  for (const auto& note : extra_notes) out += "# " + note + "\n";
  std::snprintf(buf, sizeof(buf), "# wall_clock_seconds = %.3f\n", wall_seconds);
  out += buf;
  out += "# the remainder is a config file; rerunning it reproduces the CSVs\n";
  out += canonical_config(setup);
  return out;
}

sim::ExperimentConfig with_algorithm(const sim::ExperimentConfig& base,
                                     const strategies::AlgorithmSpec& spec) {
  sim::ExperimentConfig cfg = base;
  cfg.algorithm = spec;
  return cfg;
}

}  // namespace

int default_threads() {
  const char* env = std::getenv("DISTSGD_THREADS");
  if (env == nullptr) return 1;
  const int value = std::atoi(env);
  return value >= 1 ? value : 1;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int threads) {
  return guard([&] {
    const auto start = std::chrono::steady_clock::now();
    RunSetup setup = load_config(config_path);
    if (setup.algorithms.size() != 1)
      throw ConfigError(
          "'run' needs exactly one algorithm section; use 'compare' for "
          "several",
          "algorithm", 0);

    fs::create_directories(out_dir);
    sim::ExperimentConfig cfg = setup.base;
    sim::ExperimentData data = sim::prepare(cfg);
    setup.base = cfg;  // resolved dim etc. goes into the manifest
    const auto result = sim::run_experiment(cfg, data, threads);

    std::vector<std::string> artifacts{"trajectory.csv"};
    write_file(fs::path(out_dir) / "trajectory.csv", result.csv());

    std::vector<std::string> notes{result.meta.notes};
    if (setup.check_bounds) {
      const auto inputs = analysis::bound_inputs_from(result, setup.g_override);
      const auto t1 =
          analysis::check_trajectory(result, inputs, analysis::BoundKind::t1);
      const auto t2 =
          analysis::check_trajectory(result, inputs, analysis::BoundKind::t2);
      write_file(fs::path(out_dir) / "bounds_t1.csv", t1.csv());
      write_file(fs::path(out_dir) / "bounds_t2.csv", t2.csv());
      artifacts.push_back("bounds_t1.csv");
      artifacts.push_back("bounds_t2.csv");
      std::cout << t1.summary() << "\n" << t2.summary() << "\n";
      notes.push_back(t1.summary());
      notes.push_back(t2.summary());
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_file(fs::path(out_dir) / "manifest.txt",
               manifest_text(setup, artifacts, result.meta.sigma,
                             result.meta.g_max, wall, notes));

    std::printf("wrote %s (%ld rounds, %d trials, sigma %.6g, final msd %.6g)\n",
                (fs::path(out_dir) / "trajectory.csv").c_str(), cfg.rounds,
                cfg.trials, result.meta.sigma,
                result.msd_mean.empty() ? 0.0 : result.msd_mean.back());
    return 0;
  });
}

int cmd_compare(const std::string& config_path, const std::string& out_dir,
                int threads) {
  return guard([&] {
    const auto start = std::chrono::steady_clock::now();
    RunSetup setup = load_config(config_path);
    fs::create_directories(out_dir);

    sim::ExperimentConfig base = setup.base;
    sim::ExperimentData data = sim::prepare(base);
    setup.base = base;

    std::vector<std::string> artifacts;
    std::vector<sim::ExperimentResult> results;
    results.reserve(setup.algorithms.size());
    double sigma = 0.0;
    double g_max = 0.0;
    for (const auto& [name, spec] : setup.algorithms) {
      const auto cfg = with_algorithm(base, spec);
      results.push_back(sim::run_experiment(cfg, data, threads));
      const std::string file = name + "_trajectory.csv";
      write_file(fs::path(out_dir) / file, results.back().csv());
      artifacts.push_back(file);
      sigma = std::max(sigma, results.back().meta.sigma);
      g_max = std::max(g_max, results.back().meta.g_max);
    }

    // Wide CSV for side-by-side plots.
    std::string merged = "t";
    for (const auto& [name, spec] : setup.algorithms)
      merged += "," + name + "_nce_mean," + name + "_msd_mean";
    merged += "\n";
    char buf[64];
    for (long t = 1; t <= base.rounds; ++t) {
      merged += std::to_string(t);
      for (const auto& result : results) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g",
                      result.nce_mean[t - 1], result.msd_mean[t - 1]);
        merged += buf;
      }
      merged += "\n";
    }
    write_file(fs::path(out_dir) / "compare.csv", merged);
    artifacts.push_back("compare.csv");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_file(fs::path(out_dir) / "manifest.txt",
               manifest_text(setup, artifacts, sigma, g_max, wall,
                             {results.front().meta.notes}));

    for (std::size_t k = 0; k < results.size(); ++k)
      std::printf("%-12s final nce %.6g, final msd %.6g\n",
                  setup.algorithms[k].first.c_str(),
                  results[k].nce_mean.back(), results[k].msd_mean.back());
    return 0;
  });
}

int cmd_graph(const std::string& kind, int n, double edge_prob,
              std::uint64_t seed, bool uniform, bool validate) {
  return guard([&] {
    const auto topo = netgraph::build_topology(
        netgraph::topology_kind_from_name(kind), n, edge_prob, seed);
    const auto comb =
        uniform ? netgraph::uniform_matrix(topo) : netgraph::metropolis_matrix(topo);
    std::cout << netgraph::matrix_to_csv(comb.h);
    std::printf("sigma = %.17g\n", comb.sigma);
    if (validate) {
      const auto violations = netgraph::validate_matrix(comb.h, &topo);
      if (violations.empty()) {
        std::cout << "validate: ok\n";
      } else {
        for (const auto& v : violations) std::cout << "validate: " << v << "\n";
      }
    }
    return 0;
  });
}

int cmd_bounds(int n_nodes, double lambda, double sigma, double g, long rounds,
               const std::string& which) {
  return guard([&] {
    const analysis::BoundInputs b{n_nodes, lambda, sigma, g, rounds};
    if (which != "t1" && which != "t2" && which != "both")
      throw std::invalid_argument("--which must be t1, t2 or both");
    if (which == "t1" || which == "both")
      std::printf("theorem1_bound = %.17g\n", analysis::theorem1_bound(b));
    if (which == "t2" || which == "both")
      std::printf("theorem2_bound = %.17g\n", analysis::theorem2_bound(b));
    return 0;
  });
}

int cmd_dataset_info(const std::string& path,
                     std::optional<double> positive_class) {
  return guard([&] {
    const auto ds = dataio::parse_libsvm(path, positive_class);
    long positives = 0;
    for (const auto& s : ds.samples)
      if (s.d > 0) ++positives;
    std::printf("file: %s\n", path.c_str());
    std::printf("checksum: fnv1a:%016llx\n",
                static_cast<unsigned long long>(dataio::file_checksum(path)));
    std::printf("samples: %zu\n", ds.samples.size());
    std::printf("features: %d\n", ds.dim);
    std::printf("labels: %ld positive, %ld negative\n", positives,
                static_cast<long>(ds.samples.size()) - positives);
    std::printf(
        "known public sources for the benchmark sets:\n"
        "  covertype: https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/\n"
        "  quantum:   http://osmot.cs.cornell.edu/kddcup/\n");
    return 0;
  });
}

}  // namespace distsgd::cli
