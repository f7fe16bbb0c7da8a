#include "wildfire/call_graph.hpp"

#include <algorithm>
#include <deque>

namespace wildfire {

std::vector<std::string> CallGraph::callers_of(const std::string& callee) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.callee == callee) out.push_back(e.caller);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> CallGraph::callees_of(const std::string& caller) const {
  std::vector<std::string> out;
  for (const auto& e : edges)
    if (e.caller == caller) out.push_back(e.callee);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool CallGraph::has_edge(const std::string& caller, const std::string& callee) const {
  return std::any_of(edges.begin(), edges.end(),
                     [&](const CallEdge& e) { return e.caller == caller && e.callee == callee; });
}

CallGraph build_call_graph(const Program& p) {
  CallGraph cg;
  for (const auto& f : p.functions) {
    cg.depth[f.name] = std::nullopt;
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      const auto& instrs = f.blocks[b].instrs;
      for (std::size_t i = 0; i < instrs.size(); ++i) {
        if (instrs[i].op != Opcode::Call) continue;
        cg.edges.push_back({f.name, p.functions[static_cast<std::size_t>(instrs[i].callee)].name,
                            SourceLoc{f.name, static_cast<int>(b), static_cast<int>(i)}});
      }
    }
  }

  std::deque<std::string> queue;
  for (const auto& e : p.entry_points) {
    cg.depth[e] = 0;
    queue.push_back(e);
  }
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    int d = *cg.depth[cur];
    for (const auto& e : cg.edges) {
      if (e.caller != cur || cg.depth[e.callee]) continue;
      cg.depth[e.callee] = d + 1;
      queue.push_back(e.callee);
    }
  }
  return cg;
}

std::size_t Cfg::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : succ) n += s.size();
  return n;
}

std::vector<std::pair<int, int>> Cfg::back_edges() const {
  std::vector<std::pair<int, int>> out;
  if (succ.empty()) return out;
  enum : char { White, Grey, Black };
  std::vector<char> color(succ.size(), White);
  // iterative DFS: (node, next successor position)
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  color[0] = Grey;
  while (!stack.empty()) {
    auto& [node, pos] = stack.back();
    const auto& s = succ[static_cast<std::size_t>(node)];
    if (pos == s.size()) {
      color[static_cast<std::size_t>(node)] = Black;
      stack.pop_back();
      continue;
    }
    int to = s[pos++];
    if (color[static_cast<std::size_t>(to)] == Grey) {
      out.emplace_back(node, to);
    } else if (color[static_cast<std::size_t>(to)] == White) {
      color[static_cast<std::size_t>(to)] = Grey;
      stack.emplace_back(to, 0);
    }
  }
  return out;
}

Cfg cfg_of(const Function& f) {
  Cfg cfg;
  for (const auto& b : f.blocks) {
    cfg.labels.push_back(b.label);
    std::vector<int> s;
    const Instruction& term = b.instrs.back();
    if (term.op == Opcode::Br) s.push_back(term.targets[0]);
    if (term.op == Opcode::CondBr) {
      s.push_back(term.targets[0]);
      if (term.targets[1] != term.targets[0]) s.push_back(term.targets[1]);
    }
    cfg.succ.push_back(std::move(s));
  }
  return cfg;
}

}  // namespace wildfire
