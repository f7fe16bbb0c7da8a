#pragma once

// Bit-vector satisfiability for conjunctions of boolean expressions.
//
// Tiers, cheapest first: constant propagation through invertible operations,
// interval narrowing for comparisons against constants, concrete probing with
// values drawn from the query's constants, then an exhaustive bit-level
// search (least significant bit first) that prunes with three-valued
// known-bits evaluation. Independent variable groups are solved separately.
// Unsat is only reported when it is certain; running out of budget is
// Unknown.

#include "wildfire/expr.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace wildfire {

struct VarInfo {
  std::string name;
  unsigned width = 32;
};
using VarTable = std::vector<VarInfo>;

enum class SolveStatus : std::uint8_t { Sat, Unsat, Unknown };
std::string_view to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::Unknown;
  /// One value per VarTable entry; unconstrained variables are 0.
  Model model;
  std::uint64_t search_nodes = 0;
};

struct SolverOptions {
  std::chrono::milliseconds budget{2000};
  /// Tried first; returned unchanged when it already satisfies the query.
  const Model* hint = nullptr;
};

SolveResult solve(const std::vector<ExprRef>& query, const VarTable& vars, const SolverOptions& opts = {});

bool satisfies(const std::vector<ExprRef>& query, const Model& m);

}  // namespace wildfire
