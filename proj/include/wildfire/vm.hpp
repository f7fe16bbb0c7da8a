#pragma once

// Concrete interpreter with memory-safety checking. Every load and store
// through a pointer is bounds-checked against the buffer it points into; the
// first violation ends the run with a CrashReport.

#include "wildfire/args.hpp"
#include "wildfire/ir.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace wildfire {

enum class VulnKind : std::uint8_t { OutOfBoundsRead, OutOfBoundsWrite, NullDeref, DivByZero, AssertFail };

std::string_view to_string(VulnKind k);
VulnKind vuln_kind_from_string(std::string_view s);

struct StackFrame {
  SourceLoc loc;
  std::string function;
  auto operator<=>(const StackFrame&) const = default;
  bool operator==(const StackFrame&) const = default;
};

/// Innermost frame first.
struct StackTrace {
  std::vector<StackFrame> frames;
  bool operator==(const StackTrace&) const = default;
};

/// Innermost-first textual form, one "#i loc in function" line per frame.
std::string to_string(const StackTrace& st);

struct CrashReport {
  SourceLoc vuln_loc;
  VulnKind vuln_kind = VulnKind::AssertFail;
  StackTrace stack;
  ArgTuple crashing_args;
  bool operator==(const CrashReport&) const = default;
};

/// A call matched one of the recorded crashing tuples of a summarized
/// function.
struct SummaryHit {
  std::string function;
  std::size_t record_index = 0;
  StackTrace stack;
  bool operator==(const SummaryHit&) const = default;
};

struct NormalExit {
  std::optional<std::int64_t> value;
  bool operator==(const NormalExit&) const = default;
};

struct HangExit {
  std::uint64_t steps = 0;
  bool operator==(const HangExit&) const = default;
};

using ExecOutcome = std::variant<NormalExit, CrashReport, HangExit, SummaryHit>;

/// Edge hit counts indexed by Program::edges() ids.
struct CoverageMap {
  std::vector<std::uint64_t> hits;

  void merge(const CoverageMap& other);
  std::size_t edge_count() const;
  bool covers(std::size_t edge) const { return edge < hits.size() && hits[edge] != 0; }
  bool operator==(const CoverageMap&) const = default;
};

/// Block-granular instruction coverage: instructions in entered blocks.
std::vector<std::vector<bool>> covered_blocks(const Program& p, const CoverageMap& cov);

/// Per-function arguments that trigger a SummaryHit; indexed by function
/// index, empty for functions without a summary.
using SummaryTable = std::vector<std::vector<ArgTuple>>;

struct ExecOptions {
  std::uint64_t step_budget = 100000;
  /// Adds the synthesized driver frame "__driver_<f>" as outermost frame.
  bool driver_frame = false;
  const SummaryTable* summaries = nullptr;
};

struct ExecResult {
  ExecOutcome outcome;
  CoverageMap coverage;
  /// Hash of the executed edge sequence.
  std::uint64_t path_hash = 0;
  std::uint64_t steps = 0;
};

constexpr std::string_view kDriverPrefix = "__driver_";
std::string driver_name(std::string_view function);

/// Reusable interpreter; keeps scratch storage between runs. Not thread-safe,
/// use one per worker.
class Interpreter {
public:
  explicit Interpreter(const Program& p);

  /// Throws UsageError when args do not match the signature.
  ExecResult run(int function, const ArgTuple& args, const ExecOptions& opts = {});

private:
  struct Slot {
    std::int64_t value = 0;  // scalar value or pointer offset
    std::int32_t buffer = -1;
  };
  struct Frame {
    int function;
    int block;
    int ip;
    std::size_t base;
  };
  struct Buffer {
    ScalarKind elem;
    std::vector<std::int64_t> data;
  };

  std::int64_t read(const Frame& fr, const Operand& o, ScalarKind as) const;
  std::int64_t read_raw(const Frame& fr, const Operand& o) const;
  void write_scalar(const Frame& fr, const Operand& dest, std::int64_t v);
  Slot& slot(const Frame& fr, const Operand& o) { return slots_[fr.base + static_cast<std::size_t>(o.index)]; }
  void push_frame(int function);
  std::optional<std::size_t> match_summary(int function, std::size_t base) const;
  StackTrace trace(const std::string* driver) const;

  const Program& program_;
  std::vector<Slot> slots_;
  std::vector<Frame> frames_;
  std::vector<Buffer> heap_;
  std::vector<std::int64_t> globals_;
  const SummaryTable* summaries_ = nullptr;
};

ExecResult execute(const Program& p, std::string_view function, const ArgTuple& args,
                   const ExecOptions& opts = {});

/// Removes frames of synthesized driver functions, preserving order.
StackTrace strip_driver_frames(const StackTrace& st);

}  // namespace wildfire
