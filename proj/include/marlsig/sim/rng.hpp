#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace marlsig::sim {

// Named deterministic generator. Each stochastic process owns one stream so that
// its draw sequence depends only on (seed, name), never on other streams' usage.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view name);

  // Uniform in [0, 1) with 53 bits of resolution; portable across standard libraries.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace marlsig::sim
