#include "wildfire/summarize.hpp"

namespace wildfire {

FunctionSummary summarize(const Function& f, const std::vector<std::pair<ArgTuple, CrashReport>>& crashes) {
  if (crashes.empty()) throw UsageError("cannot summarize '" + f.name + "' without crashes");
  FunctionSummary s;
  s.function = f.name;
  for (const auto& [args, report] : crashes) {
    check_signature(f, args);
    bool dup = false;
    for (const auto& r : s.records) dup = dup || r.args == args;
    if (!dup) s.records.push_back({args, report});
  }
  return s;
}

SummarizedProgram::SummarizedProgram(const Program& base, std::map<std::string, FunctionSummary> summaries)
    : base_(&base), summaries_(std::move(summaries)), table_(base.functions.size()) {
  for (const auto& [name, s] : summaries_) {
    int idx = base.find_function(name);
    if (idx < 0) throw UsageError("summary for unknown function '" + name + "'");
    for (const auto& r : s.records) table_[static_cast<std::size_t>(idx)].push_back(r.args);
  }
}

bool SummarizedProgram::is_summarized(std::string_view function) const {
  return summary(function) != nullptr;
}

const FunctionSummary* SummarizedProgram::summary(std::string_view function) const {
  auto it = summaries_.find(std::string(function));
  return it == summaries_.end() ? nullptr : &it->second;
}

Cfg SummarizedProgram::check_region(std::string_view function) const {
  const FunctionSummary* s = summary(function);
  if (!s) throw UsageError("'" + std::string(function) + "' is not summarized");
  const int n = static_cast<int>(s->records.size());
  // nodes: check_0..check_{n-1}, fail_0..fail_{n-1}, body
  Cfg cfg;
  const int body = 2 * n;
  for (int i = 0; i < n; ++i) cfg.labels.push_back("check_" + std::to_string(i));
  for (int i = 0; i < n; ++i) cfg.labels.push_back("fail_" + std::to_string(i));
  cfg.labels.push_back("body");
  cfg.succ.resize(static_cast<std::size_t>(body + 1));
  for (int i = 0; i < n; ++i) cfg.succ[static_cast<std::size_t>(i)] = {n + i, i + 1 < n ? i + 1 : body};
  return cfg;
}

ExecResult SummarizedProgram::execute(std::string_view function, const ArgTuple& args, ExecOptions opts) const {
  opts.summaries = &table_;
  return wildfire::execute(*base_, function, args, opts);
}

SummarizedProgram apply_summaries(const Program& p, const std::vector<FunctionSummary>& summaries) {
  std::map<std::string, FunctionSummary> by_name;
  for (const auto& s : summaries) {
    if (p.find_function(s.function) < 0) throw UsageError("summary for unknown function '" + s.function + "'");
    auto& slot = by_name[s.function];
    if (slot.function.empty()) {
      slot = s;
    } else {
      for (const auto& r : s.records) {
        bool dup = false;
        for (const auto& existing : slot.records) dup = dup || existing.args == r.args;
        if (!dup) slot.records.push_back(r);
      }
    }
  }
  return SummarizedProgram(p, std::move(by_name));
}

}  // namespace wildfire
