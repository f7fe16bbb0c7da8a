#pragma once

// Function summaries: a vulnerable function is guarded by equality checks
// against its recorded crashing argument tuples. A call whose arguments equal
// a record raises SummaryHit; any other call falls through to the original
// body. Records are concrete values only, never path constraints.

#include "wildfire/call_graph.hpp"
#include "wildfire/vm.hpp"

#include <map>
#include <string>
#include <vector>

namespace wildfire {

struct SummaryRecord {
  ArgTuple args;
  CrashReport provenance;
  bool operator==(const SummaryRecord&) const = default;
};

struct FunctionSummary {
  std::string function;
  std::vector<SummaryRecord> records;
  bool keep_original = true;
  bool operator==(const FunctionSummary&) const = default;
};

/// Deduplicates by ArgTuple equality (buffers compare by length and bytes).
/// Throws UsageError for an empty crash list or ill-typed tuples.
FunctionSummary summarize(const Function& f, const std::vector<std::pair<ArgTuple, CrashReport>>& crashes);

class SummarizedProgram {
public:
  SummarizedProgram(const Program& base, std::map<std::string, FunctionSummary> summaries);

  const Program& base() const { return *base_; }
  const std::map<std::string, FunctionSummary>& summaries() const { return summaries_; }
  const SummaryTable& table() const { return table_; }
  bool is_summarized(std::string_view function) const;
  const FunctionSummary* summary(std::string_view function) const;

  /// The synthesized guard region: one check block per record, each
  /// branching to its failure block or to the next check; the last check
  /// falls through to the original body.
  Cfg check_region(std::string_view function) const;

  ExecResult execute(std::string_view function, const ArgTuple& args, ExecOptions opts = {}) const;

private:
  const Program* base_;
  std::map<std::string, FunctionSummary> summaries_;
  SummaryTable table_;
};

/// Throws UsageError when a summary names an unknown function.
SummarizedProgram apply_summaries(const Program& p, const std::vector<FunctionSummary>& summaries);

}  // namespace wildfire
