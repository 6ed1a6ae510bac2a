#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace expanse {

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

// Per-record stream: the run seed mixed with the record id. Draws avoid
// std::uniform_*_distribution so sequences match across standard libraries.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view record_id);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  // Uniform in [lo, hi].
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  // Uniform in [0, 1) with 53 random bits.
  double unit();

 private:
  std::mt19937_64 engine_;
};

}  // namespace expanse
