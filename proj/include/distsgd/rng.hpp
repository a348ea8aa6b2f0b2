#pragma once

#include <cstdint>

namespace distsgd::rng {

// splitmix64 step; doubles as the hash for deriving stream keys.
std::uint64_t mix64(std::uint64_t x);

// Role tags that keep the streams derived for one trial disjoint.
enum class Purpose : std::uint64_t {
  topology = 1,
  model = 2,
  sample = 3,
  shuffle = 4,
  power_iteration = 5,
};

// Counter-based split: every (seed, trial, purpose, a, b) tuple maps to its
// own stream key, so draws never depend on scheduling or execution order.
std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t trial,
                         Purpose purpose, std::uint64_t a = 0,
                         std::uint64_t b = 0);

/// xoshiro256++ with Box-Muller gaussians. One instance per derived key;
/// never shared across threads.
class Stream {
 public:
  explicit Stream(std::uint64_t key);

  std::uint64_t next_u64();
  double next_double();    // uniform on [0, 1)
  double next_gaussian();  // standard normal
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace distsgd::rng
