#pragma once

// Corpus minimization (greedy set cover over edge coverage) and test-case
// trimming that preserves the executed path or the crash identity.

#include "wildfire/driver.hpp"
#include "wildfire/vm.hpp"

#include <set>
#include <vector>

namespace wildfire {

struct MinimizeOptions {
  std::uint64_t step_budget = 100000;
  ByteStream delimiter = kDefaultDelimiter;
};

struct MinimizedCorpus {
  std::vector<ByteStream> kept;
  std::size_t dropped_count = 0;
  std::set<std::size_t> coverage_before;
  std::set<std::size_t> coverage_after;
};

/// Greedy set cover (most new edges first, smaller input on ties), then
/// drops any pick whose edges the other picks already cover.
MinimizedCorpus cmin(const Program& p, std::string_view function, const std::vector<ByteStream>& corpus,
                     const MinimizeOptions& opts = {});

/// What tmin must preserve: the edge-sequence hash for normal runs, or
/// (vuln_loc, vuln_kind, stripped stack) for crashes.
struct ExecutionKey {
  int kind = 0;  // 0 normal, 1 crash, 2 hang, 3 summary hit
  std::uint64_t path_hash = 0;
  SourceLoc vuln_loc;
  VulnKind vuln_kind = VulnKind::AssertFail;
  StackTrace stack;
  bool operator==(const ExecutionKey&) const = default;
};

ExecutionKey execution_key(const Program& p, std::string_view function, Bytes input, const MinimizeOptions& opts = {});

/// Strips leading/trailing NUL bytes and removes blocks by halving, keeping
/// only candidates with an unchanged ExecutionKey. Iterates to a fixpoint,
/// so tmin(tmin(x)) == tmin(x).
ByteStream tmin(const Program& p, std::string_view function, const ByteStream& tc, const MinimizeOptions& opts = {});

}  // namespace wildfire
