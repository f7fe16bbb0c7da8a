#pragma once

// The analyzed intermediate language: a small register-style IR with signed
// fixed-width integers, single-level pointers into scalar buffers and explicit
// basic blocks. Textual grammar lives in docs/ir_grammar.md.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wildfire {

enum class ScalarKind : std::uint8_t { I8, I16, I32, I64 };

constexpr unsigned byte_size(ScalarKind k) {
  switch (k) {
  case ScalarKind::I8: return 1;
  case ScalarKind::I16: return 2;
  case ScalarKind::I32: return 4;
  case ScalarKind::I64: return 8;
  }
  return 8;
}
constexpr unsigned bit_width(ScalarKind k) { return byte_size(k) * 8; }

std::string_view to_string(ScalarKind k);
std::optional<ScalarKind> scalar_from_string(std::string_view s);

/// Scalar, pointer (possibly nested) or opaque function pointer.
struct Type {
  ScalarKind elem = ScalarKind::I32;
  std::uint8_t pointer_depth = 0;
  bool function_pointer = false;

  static Type scalar(ScalarKind k) { return {k, 0, false}; }
  static Type pointer(ScalarKind k, std::uint8_t depth = 1) { return {k, depth, false}; }
  static Type fn_pointer() { return {ScalarKind::I64, 0, true}; }

  bool is_scalar() const { return !function_pointer && pointer_depth == 0; }
  bool is_pointer() const { return !function_pointer && pointer_depth > 0; }

  bool operator==(const Type&) const = default;
};

std::string to_string(const Type& t);

/// Program-wide instruction identity, printed as "fn:block:idx".
struct SourceLoc {
  std::string function;
  int block = 0;
  int index = 0;

  auto operator<=>(const SourceLoc&) const = default;
  bool operator==(const SourceLoc& o) const { return index == o.index && block == o.block && function == o.function; }
};

std::string to_string(const SourceLoc& loc);
SourceLoc parse_source_loc(std::string_view text);

enum class Opcode : std::uint8_t {
  // arith
  Add, Sub, Mul, SDiv, SRem, UDiv, URem, And, Or, Xor, Shl, LShr, AShr,
  Mov, ZExt,
  // compare
  Cmp,
  // memory
  Load, Store, Index, Alloc, Null,
  Call,
  Assert,
  // terminators
  Br, CondBr, Ret, Unreachable,
};

enum class CmpPred : std::uint8_t { Eq, Ne, Slt, Sle, Sgt, Sge, Ult, Ule, Ugt, Uge };

std::string_view to_string(Opcode op);
std::string_view to_string(CmpPred p);

bool is_terminator(Opcode op);
bool is_binary_arith(Opcode op);

struct Operand {
  enum class Kind : std::uint8_t { None, Local, Global, Const };
  Kind kind = Kind::None;
  int index = -1;          // local slot or global index
  std::int64_t value = 0;  // constant

  static Operand local(int i) { return {Kind::Local, i, 0}; }
  static Operand global(int i) { return {Kind::Global, i, 0}; }
  static Operand constant(std::int64_t v) { return {Kind::Const, -1, v}; }

  bool is_none() const { return kind == Kind::None; }
  bool operator==(const Operand&) const = default;
};

struct Instruction {
  Opcode op = Opcode::Unreachable;
  ScalarKind ty = ScalarKind::I32;  // operation / element type
  CmpPred pred = CmpPred::Eq;
  Operand dest;                     // Local or Global, or None
  std::vector<Operand> args;
  int callee = -1;                  // function index for Call
  int targets[2] = {-1, -1};        // block indices for Br / CondBr
  int edge_ids[2] = {-1, -1};       // coverage edge per target

  bool operator==(const Instruction& o) const {
    return op == o.op && ty == o.ty && pred == o.pred && dest == o.dest && args == o.args &&
           callee == o.callee && targets[0] == o.targets[0] && targets[1] == o.targets[1];
  }
};

struct BasicBlock {
  std::string label;
  std::vector<Instruction> instrs;
  bool operator==(const BasicBlock&) const = default;
};

struct Local {
  std::string name;
  Type type;
  bool operator==(const Local&) const = default;
};

struct Function {
  std::string name;
  std::size_t param_count = 0;       // params are locals[0..param_count)
  std::vector<Local> locals;
  std::optional<ScalarKind> return_type;
  std::vector<BasicBlock> blocks;
  int entry_edge = -1;               // coverage edge id for entering block 0

  const Local& param(std::size_t i) const { return locals.at(i); }
  std::size_t pointer_param_count() const;
  std::size_t instruction_count() const;

  /// Parameterized, every pointer param single-level, no function pointers.
  bool is_isolatable() const;

  bool operator==(const Function& o) const {
    return name == o.name && param_count == o.param_count && locals == o.locals &&
           return_type == o.return_type && blocks == o.blocks;
  }
};

struct GlobalVar {
  std::string name;
  ScalarKind type = ScalarKind::I32;
  std::int64_t init = 0;
  bool operator==(const GlobalVar&) const = default;
};

/// Coverage edge between two blocks of the same function. from_block == -1
/// marks the edge that enters the function.
struct EdgeInfo {
  int function = -1;
  int from_block = -1;
  int to_block = 0;
};

class Program {
public:
  std::vector<Function> functions;
  std::vector<GlobalVar> globals;
  std::set<std::string> entry_points;

  int find_function(std::string_view name) const;
  const Function& function(std::string_view name) const;
  int find_global(std::string_view name) const;

  const std::vector<EdgeInfo>& edges() const { return edges_; }
  std::size_t total_instructions() const;

  /// Assigns coverage edge ids. Called by the parser; must be re-run after
  /// structural edits.
  void finalize();

  bool operator==(const Program& o) const {
    return functions == o.functions && globals == o.globals && entry_points == o.entry_points;
  }

private:
  std::vector<EdgeInfo> edges_;
};

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(int line, int column, const std::string& msg);
};

/// Parses the textual IR. Throws ParseError (syntax and semantic errors) with
/// 1-based line/column.
Program parse_program(std::string_view text);

/// Canonical textual form; parse_program(print_program(p)) == p.
std::string print_program(const Program& p);

/// Content hash used to identify analyzed programs (FNV-1a, 64 bit).
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace wildfire
