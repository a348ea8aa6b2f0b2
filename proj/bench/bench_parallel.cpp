// Times the serial reference trial loop against the OpenMP one on the same
// config and verifies that both produce identical CSVs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include "distsgd/sim.hpp"

using namespace distsgd;

namespace {

sim::ExperimentConfig bench_config(int trials, long rounds) {
  sim::ExperimentConfig cfg;
  cfg.n_nodes = 20;
  cfg.dim = 5;
  cfg.rounds = rounds;
  cfg.trials = trials;
  cfg.master_seed = 42;
  cfg.topology = netgraph::TopologyKind::circle;
  cfg.algorithm = {strategies::Kind::tvw, strategies::Strategy::diffusion, 0.0};
  cfg.loss = {losses::Family::squared, 0.01, 10.0};
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  int trials = 16;
  long rounds = 500;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 2) threads = 2;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--trials") trials = std::atoi(argv[i + 1]);
    else if (key == "--rounds") rounds = std::atol(argv[i + 1]);
    else if (key == "--threads") threads = std::atoi(argv[i + 1]);
    else {
      std::fprintf(stderr, "usage: %s [--trials N] [--rounds T] [--threads K]\n",
                   argv[0]);
      return 2;
    }
  }

  const auto cfg = bench_config(trials, rounds);
  std::printf("config: N=%d p=%d T=%ld trials=%d\n", cfg.n_nodes, cfg.dim,
              cfg.rounds, cfg.trials);

  auto start = std::chrono::steady_clock::now();
  const auto serial = sim::run_experiment_serial(cfg);
  const double t_serial = seconds_since(start);
  std::printf("serial reference: %8.3f s\n", t_serial);

  start = std::chrono::steady_clock::now();
  const auto parallel = sim::run_experiment(cfg, threads);
  const double t_parallel = seconds_since(start);
  std::printf("openmp x%-2d      : %8.3f s  (speedup %.2fx)\n", threads,
              t_parallel, t_serial / t_parallel);

  if (serial.csv() != parallel.csv()) {
    std::printf("FAIL: serial and parallel outputs differ\n");
    return 1;
  }
  std::printf("outputs identical: yes\n");
  return 0;
}
