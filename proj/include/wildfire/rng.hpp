#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wildfire {

/// Deterministic generator; draws use raw engine output so sequences are
/// identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) { return n <= 1 ? 0 : next() % n; }
  bool chance(unsigned one_in) { return below(one_in) == 0; }

private:
  std::mt19937_64 engine_;
};

/// Stable per-name stream derivation (independent of scheduling order).
std::uint64_t derive_seed(std::uint64_t base, std::string_view name);

}  // namespace wildfire
