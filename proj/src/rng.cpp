#include "distsgd/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace distsgd::rng {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t trial,
                         Purpose purpose, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(master_seed);
  h = mix64(h ^ (trial + 0x517cc1b727220a95ULL));
  h = mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

Stream::Stream(std::uint64_t key) {
  std::uint64_t s = key;
  bool all_zero = true;
  for (auto& word : state_) {
    s = mix64(s);
    word = s;
    all_zero = all_zero && word == 0;
  }
  if (all_zero) state_[0] = 1;
}

std::uint64_t Stream::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Stream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 on (0,1] keeps the log finite
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::uint64_t Stream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  const std::uint64_t threshold = (0ULL - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

}  // namespace distsgd::rng
