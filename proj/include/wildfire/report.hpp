#pragma once

// Analysis report: per-function coverage and fuzzing stats, vulnerability
// chains with aggregate counts, coverage grouped by call-graph depth, and the
// outcome of every feasibility pair. Timing is kept apart from the JSON form
// so that reruns with the same seed serialize byte-identically.

#include "wildfire/orchestrator.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wildfire {

struct FunctionReport {
  std::string name;
  std::optional<int> depth;
  bool isolatable = false;
  bool fuzzed = false;
  std::string fuzz_status;
  std::uint64_t executions = 0;
  std::size_t corpus_size = 0;
  std::size_t corpus_minimized = 0;
  std::size_t unique_edges = 0;
  std::size_t crash_count = 0;
  std::size_t hang_count = 0;
  std::size_t covered_instructions = 0;
  std::size_t total_instructions = 0;
  double coverage_pct = 0.0;
  bool operator==(const FunctionReport&) const = default;
};

struct Aggregates {
  std::size_t total_vulns = 0;
  std::size_t chains = 0;
  std::size_t chains_longer_than_one = 0;
  std::size_t chains_ending_phase2 = 0;
  std::size_t reaches_entry = 0;
  bool operator==(const Aggregates&) const = default;
};

struct RunSettings {
  std::string mode = "compositional";
  double fuzz_time_s = 60.0;
  double symex_time_s = 60.0;
  std::uint64_t solver_budget_ms = 2000;
  std::uint64_t rng_seed = 1;
  std::string delimiter_hex = "2f2f";
  bool operator==(const RunSettings&) const = default;
};

struct AnalysisReport {
  int schema = 1;
  std::string program_id;
  std::string content_hash;
  RunSettings settings;
  std::vector<FunctionReport> functions;
  /// Share of isolatable functions entered at least once.
  double function_coverage_pct = 0.0;
  std::vector<VulnerabilityChain> vulnerabilities;
  Aggregates aggregates;
  std::map<int, double> depth_coverage;
  std::vector<PairOutcome> pairs;
  StageTiming timing;  // not part of the JSON form

  bool operator==(const AnalysisReport& o) const {
    return schema == o.schema && program_id == o.program_id && content_hash == o.content_hash &&
           settings == o.settings && functions == o.functions && function_coverage_pct == o.function_coverage_pct &&
           vulnerabilities == o.vulnerabilities && aggregates == o.aggregates && depth_coverage == o.depth_coverage &&
           pairs == o.pairs;
  }
};

/// Instructions in entered blocks over all instructions, as a percentage.
double instruction_coverage_pct(const Function& f, const std::vector<bool>& covered_blocks);

/// Mean instruction coverage of the functions at each call-graph depth;
/// functions unreachable from every entry point are left out.
std::map<int, double> depth_coverage(const Program& p, const CallGraph& cg, const CoverageMap& cov);

Aggregates compute_aggregates(const std::vector<VulnerabilityChain>& chains);

std::string content_hash(const Program& p);

AnalysisReport build_report(const Program& p, std::string program_id, const PipelineResult& r,
                            const RunSettings& settings);

std::string render_json(const AnalysisReport& r);
/// Throws std::invalid_argument on schema mismatch or malformed input.
AnalysisReport parse_report(std::string_view text);

std::string render_report(const AnalysisReport& r);
std::string render_timing_json(const StageTiming& t);

}  // namespace wildfire
