#pragma once

#include "wildfire/ir.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wildfire {

struct CallEdge {
  std::string caller;
  std::string callee;
  SourceLoc site;
  auto operator<=>(const CallEdge&) const = default;
};

/// Static call graph. depth is the minimum call distance from any entry
/// point; std::nullopt marks functions unreachable from every entry.
class CallGraph {
public:
  std::vector<CallEdge> edges;
  std::map<std::string, std::optional<int>> depth;

  std::vector<std::string> callers_of(const std::string& callee) const;
  std::vector<std::string> callees_of(const std::string& caller) const;
  bool has_edge(const std::string& caller, const std::string& callee) const;
};

CallGraph build_call_graph(const Program& p);

/// Control-flow graph of one function (or of a synthesized region): one node
/// per basic block, successor lists from terminators.
struct Cfg {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> succ;

  std::size_t edge_count() const;
  /// Edges (from, to) where `to` is on the DFS stack when reached from the
  /// entry node.
  std::vector<std::pair<int, int>> back_edges() const;
  bool is_acyclic() const { return back_edges().empty(); }
};

Cfg cfg_of(const Function& f);

}  // namespace wildfire
