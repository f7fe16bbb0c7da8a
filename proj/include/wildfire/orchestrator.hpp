#pragma once

// End-to-end compositional analysis: fuzz isolated functions, minimize and
// replay their crashes, then decide pairwise (caller, callee) feasibility of
// every vulnerability, first by stack-trace matching and then by targeted
// symbolic execution against the callee's summary, walking up the call graph.

#include "wildfire/call_graph.hpp"
#include "wildfire/corpus_min.hpp"
#include "wildfire/fuzz.hpp"
#include "wildfire/summarize.hpp"
#include "wildfire/symex.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wildfire {

struct VulnKey {
  SourceLoc loc;
  VulnKind kind = VulnKind::AssertFail;
  auto operator<=>(const VulnKey&) const = default;
  bool operator==(const VulnKey&) const = default;
};

std::string to_string(const VulnKey& k);

enum class EdgeOrigin : std::uint8_t { Phase1, Phase2 };
std::string_view to_string(EdgeOrigin o);
EdgeOrigin edge_origin_from_string(std::string_view s);

struct ChainEdge {
  std::string caller;
  std::string callee;
  EdgeOrigin established_by = EdgeOrigin::Phase1;
  /// Phase1: the matched callee and caller traces. Phase2: the callee trace
  /// and the concrete trace of the model, plus the model itself.
  StackTrace callee_trace;
  StackTrace caller_trace;
  std::optional<ArgTuple> model;
  bool operator==(const ChainEdge&) const = default;
};

struct VulnerabilityChain {
  VulnKey key;
  /// Highest feasible caller first, vulnerable function last.
  std::vector<std::string> functions;
  std::vector<ChainEdge> edges;
  bool reaches_entry = false;
  bool ends_with_phase2 = false;
  bool operator==(const VulnerabilityChain&) const = default;
};

/// Where a crash record for a function came from.
enum class RecordOrigin : std::uint8_t { Fuzz, Trace, Phase2, Symex };
std::string_view to_string(RecordOrigin o);

struct CrashRecord {
  std::string function;
  VulnKey key;
  /// Absent for records reconstructed from a caller's trace.
  std::optional<ArgTuple> args;
  StackTrace trace;  // driver frames stripped
  RecordOrigin origin = RecordOrigin::Fuzz;
};

enum class PairStatus : std::uint8_t { Phase1, Phase2, Infeasible, Unknown };
std::string_view to_string(PairStatus s);
PairStatus pair_status_from_string(std::string_view s);

struct PairOutcome {
  std::string caller;
  std::string callee;
  VulnKey key;
  PairStatus status = PairStatus::Unknown;
  std::uint64_t solver_queries = 0;
  std::string detail;
  bool operator==(const PairOutcome&) const = default;
};

/// True iff sa's frames form an ordered (not necessarily contiguous)
/// subsequence of sb's, frames compared by (loc, function).
bool stack_traces_match(const StackTrace& sa, const StackTrace& sb);

using EdgeMap = std::map<std::tuple<std::string, std::string, VulnKey>, ChainEdge>;

/// Parent-restricted trace matching: an edge (parent -> f) for key K when
/// some record of f and some record of the parent with key K match.
EdgeMap phase1(const CallGraph& cg, const std::vector<CrashRecord>& records);

/// All maximal upward chains per key, stopping at entry points; ordered by
/// key, then longest first, then lexicographically by function sequence.
std::vector<VulnerabilityChain> build_chains(const EdgeMap& edges, const std::vector<VulnKey>& keys,
                                             const std::set<std::string>& entry_points);

struct PipelineConfig {
  FuzzConfig fuzz;
  SymexConfig symex;
  unsigned jobs = 1;
  bool entry_only = false;
  /// 0 selects isolatable functions x fuzz time + caller/callee pairs x
  /// symex time.
  double global_budget_s = 0.0;
};

struct FunctionArtifacts {
  std::string function;
  bool fuzzed = false;
  std::optional<FuzzResult> fuzz;
  std::vector<ByteStream> minimized_corpus;
  /// Trimmed crashing inputs, one per vulnerability key.
  std::vector<std::pair<ByteStream, CrashReport>> crashes;
};

struct StageTiming {
  double fuzz_s = 0.0;
  double minimize_s = 0.0;
  double feasibility_s = 0.0;
  double total_s = 0.0;
  bool hit_global_budget = false;
};

struct PipelineResult {
  CallGraph call_graph;
  std::map<std::string, FunctionArtifacts> functions;
  std::vector<CrashRecord> records;
  std::vector<FunctionSummary> summaries;
  EdgeMap edges;
  std::vector<PairOutcome> pairs;
  std::vector<VulnerabilityChain> chains;
  CoverageMap coverage;
  StageTiming timing;
};

PipelineResult run_pipeline(const Program& p, const PipelineConfig& cfg);

}  // namespace wildfire
