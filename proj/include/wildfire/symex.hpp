#pragma once

// Targeted symbolic execution: starting at a caller, search for inputs whose
// call into a summarized target matches one of the target's recorded
// crashing argument tuples. States are scheduled by distance to the nearest
// call of the target; states that cannot reach it are dropped.

#include "wildfire/solver.hpp"
#include "wildfire/summarize.hpp"

#include <chrono>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace wildfire {

constexpr int kInfiniteDistance = std::numeric_limits<int>::max() / 4;

/// Distances count control-flow steps (block successors, call descents and
/// returns) to the nearest block that calls the target; a block containing
/// such a call has distance 0.
struct TargetSpec {
  std::string target;
  int target_index = -1;
  /// Context-insensitive distance per block, keyed by SourceLoc{fn, block, 0}.
  std::map<SourceLoc, int> block_distance;
  /// Descend-only distance per function/block (no returns to callers).
  std::vector<std::vector<int>> down;
  /// Intra-procedural distance to a returning block.
  std::vector<std::vector<int>> to_ret;

  int distance(const SourceLoc& block) const;
};

/// Throws UsageError for an unknown target.
TargetSpec compute_distances(const Program& p, std::string_view target);

struct SymexConfig {
  double time_budget_s = 60.0;
  std::chrono::milliseconds solver_budget{2000};
  /// Visits of one block within one frame before the state is deprioritized.
  unsigned loop_bound = 16;
  std::uint64_t step_budget = 100000;
  std::size_t max_states = 4096;
  /// Extra candidate element counts for the caller's buffer parameters.
  std::vector<std::size_t> extra_lengths;
  std::size_t max_length_candidates = 6;
  std::size_t max_layouts = 16;
};

enum class TargetedKind : std::uint8_t { VulnTriggered, Infeasible, Exhausted };
std::string_view to_string(TargetedKind k);

struct TargetedResult {
  TargetedKind kind = TargetedKind::Exhausted;
  /// Caller arguments that reach the target with a recorded tuple.
  ArgTuple model;
  std::size_t record_index = 0;
  /// Concrete trace of the model: target entry first, then caller frames.
  StackTrace trace;
  /// Crashes of the caller found before the target was reached.
  std::vector<CrashReport> caller_crashes;
  bool unreachable = false;
  std::uint64_t solver_queries = 0;
  std::uint64_t solver_unknowns = 0;
  std::uint64_t states_explored = 0;
  std::uint64_t states_pruned = 0;
  double elapsed_s = 0.0;
};

/// Throws UsageError when the target is not summarized in `sp`, or the caller
/// is unknown or takes nested pointers or function pointers.
TargetedResult run_targeted(const SummarizedProgram& sp, std::string_view caller, const TargetSpec& target,
                            const SymexConfig& cfg = {});

}  // namespace wildfire
