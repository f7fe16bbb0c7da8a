#pragma once

// In-process coverage-guided mutation fuzzer for isolated functions.

#include "wildfire/driver.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/vm.hpp"

#include <map>
#include <string>
#include <vector>

namespace wildfire {

struct FuzzConfig {
  double time_budget_s = 60.0;
  std::uint64_t step_budget = 100000;
  std::uint64_t rng_seed = 1;
  ByteStream delimiter = kDefaultDelimiter;
  /// Deterministic stop conditions; the time budget is a hard cap on top.
  std::uint64_t max_execs = 250000;
  std::uint64_t plateau_execs = 25000;
};

struct CrashEntry {
  ByteStream input;
  CrashReport report;
};

enum class FuzzStatus : std::uint8_t { Completed, SkippedAllSeedsCrash, SkippedAllSeedsHang };

std::string_view to_string(FuzzStatus s);
FuzzStatus fuzz_status_from_string(std::string_view s);

struct FuzzStats {
  std::uint64_t executions = 0;
  std::size_t unique_edges = 0;
  double elapsed_s = 0.0;
  bool hit_time_budget = false;
};

struct FuzzResult {
  std::string function;
  FuzzStatus status = FuzzStatus::Completed;
  std::vector<ByteStream> corpus;
  /// First input per (vuln_loc, vuln_kind), in discovery order.
  std::vector<CrashEntry> crashes;
  std::vector<ByteStream> hangs;
  FuzzStats stats;
  /// Union over every execution, including crashing ones.
  CoverageMap coverage;
};

/// One havoc round: 1-8 stacked mutations (bit/byte flips, random bytes,
/// interesting constants, block duplicate/delete, splice, delimiter insert).
ByteStream mutate(const ByteStream& tc, Rng& rng, const std::vector<ByteStream>& pool = {},
                  Bytes delim = kDefaultDelimiter);

/// Throws UsageError for non-isolatable functions.
FuzzResult fuzz_function(const Program& p, std::string_view function, const SeedSet& seeds, const FuzzConfig& cfg);

std::uint64_t function_seed(std::uint64_t rng_seed, std::string_view function);

/// Fuzzes each named function (default: every isolatable one) with its own
/// deterministic rng stream. Results do not depend on `workers`.
std::map<std::string, FuzzResult> fuzz_all(const Program& p, const FuzzConfig& cfg, unsigned workers,
                                           const std::vector<std::string>* only = nullptr);

}  // namespace wildfire
