#include "wildfire/orchestrator.hpp"

#include "wildfire/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <functional>

namespace wildfire {

using Clock = std::chrono::steady_clock;

std::string to_string(const VulnKey& k) { return to_string(k.loc) + " " + std::string(to_string(k.kind)); }

std::string_view to_string(EdgeOrigin o) { return o == EdgeOrigin::Phase1 ? "Phase1" : "Phase2"; }

EdgeOrigin edge_origin_from_string(std::string_view s) {
  if (s == "Phase1") return EdgeOrigin::Phase1;
  if (s == "Phase2") return EdgeOrigin::Phase2;
  throw std::invalid_argument("unknown edge origin '" + std::string(s) + "'");
}

std::string_view to_string(RecordOrigin o) {
  switch (o) {
    case RecordOrigin::Fuzz: return "fuzz";
    case RecordOrigin::Trace: return "trace";
    case RecordOrigin::Phase2: return "phase2";
    case RecordOrigin::Symex: return "symex";
  }
  return "?";
}

std::string_view to_string(PairStatus s) {
  switch (s) {
    case PairStatus::Phase1: return "Phase1";
    case PairStatus::Phase2: return "Phase2";
    case PairStatus::Infeasible: return "Infeasible";
    case PairStatus::Unknown: return "Unknown";
  }
  return "?";
}

PairStatus pair_status_from_string(std::string_view s) {
  for (auto v : {PairStatus::Phase1, PairStatus::Phase2, PairStatus::Infeasible, PairStatus::Unknown})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown pair status '" + std::string(s) + "'");
}

bool stack_traces_match(const StackTrace& sa, const StackTrace& sb) {
  std::size_t i = 0;
  for (const auto& fr : sb.frames)
    if (i < sa.frames.size() && sa.frames[i] == fr) ++i;
  return i == sa.frames.size();
}

namespace {

std::vector<std::pair<std::string, std::string>> call_pairs(const CallGraph& cg) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : cg.edges)
    if (e.caller != e.callee) pairs.insert({e.caller, e.callee});
  return {pairs.begin(), pairs.end()};
}

}  // namespace

EdgeMap phase1(const CallGraph& cg, const std::vector<CrashRecord>& records) {
  std::map<std::string, std::vector<const CrashRecord*>> by_fn;
  for (const auto& r : records) by_fn[r.function].push_back(&r);
  EdgeMap out;
  for (const auto& [caller, callee] : call_pairs(cg)) {
    auto ci = by_fn.find(callee), pi = by_fn.find(caller);
    if (ci == by_fn.end() || pi == by_fn.end()) continue;
    for (const CrashRecord* rc : ci->second) {
      auto id = std::make_tuple(caller, callee, rc->key);
      if (out.count(id)) continue;
      for (const CrashRecord* rp : pi->second) {
        if (rp->key != rc->key || !stack_traces_match(rc->trace, rp->trace)) continue;
        out[id] = ChainEdge{caller, callee, EdgeOrigin::Phase1, rc->trace, rp->trace, std::nullopt};
        break;
      }
    }
  }
  return out;
}

std::vector<VulnerabilityChain> build_chains(const EdgeMap& edges, const std::vector<VulnKey>& keys,
                                             const std::set<std::string>& entry_points) {
  constexpr std::size_t kMaxChainsPerKey = 64;
  std::vector<VulnerabilityChain> out;
  std::set<VulnKey> unique(keys.begin(), keys.end());
  for (const VulnKey& key : unique) {
    // callee -> incoming edges for this key
    std::map<std::string, std::vector<const ChainEdge*>> incoming;
    for (const auto& [id, e] : edges)
      if (std::get<2>(id) == key) incoming[e.callee].push_back(&e);

    std::vector<std::vector<const ChainEdge*>> found;  // bottom-up edge lists
    std::vector<std::string> path{key.loc.function};
    std::vector<const ChainEdge*> used;
    std::function<void()> extend = [&] {
      if (found.size() >= kMaxChainsPerKey) return;
      const std::string& top = path.back();
      bool extended = false;
      if (!entry_points.count(top)) {
        for (const ChainEdge* e : incoming[top]) {
          if (std::find(path.begin(), path.end(), e->caller) != path.end()) continue;
          extended = true;
          path.push_back(e->caller);
          used.push_back(e);
          extend();
          used.pop_back();
          path.pop_back();
        }
      }
      if (!extended) found.push_back(used);
    };
    extend();

    std::vector<VulnerabilityChain> chains;
    for (const auto& bottom_up : found) {
      VulnerabilityChain c;
      c.key = key;
      for (auto it = bottom_up.rbegin(); it != bottom_up.rend(); ++it) {
        c.functions.push_back((*it)->caller);
        c.edges.push_back(**it);
      }
      c.functions.push_back(key.loc.function);
      c.reaches_entry = entry_points.count(c.functions.front()) > 0;
      c.ends_with_phase2 = !c.edges.empty() && c.edges.front().established_by == EdgeOrigin::Phase2;
      chains.push_back(std::move(c));
    }
    std::stable_sort(chains.begin(), chains.end(), [](const auto& a, const auto& b) {
      if (a.functions.size() != b.functions.size()) return a.functions.size() > b.functions.size();
      return a.functions < b.functions;
    });
    for (auto& c : chains) out.push_back(std::move(c));
  }
  return out;
}

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

bool symbolic_capable(const Function& f) {
  for (std::size_t i = 0; i < f.param_count; ++i) {
    const Type& t = f.param(i).type;
    if (t.function_pointer || t.pointer_depth > 1) return false;
  }
  return true;
}

/// A zero-parameter function has a single behavior: run it once.
FuzzResult run_once(const Program& p, const Function& f, const FuzzConfig& cfg) {
  FuzzResult r;
  r.function = f.name;
  ExecOptions eo;
  eo.step_budget = cfg.step_budget;
  eo.driver_frame = true;
  ExecResult x = execute(p, f.name, ArgTuple{}, eo);
  r.coverage = x.coverage;
  r.stats.executions = 1;
  r.stats.unique_edges = x.coverage.edge_count();
  if (auto* c = std::get_if<CrashReport>(&x.outcome)) {
    r.crashes.push_back({ByteStream{}, *c});
    r.status = FuzzStatus::SkippedAllSeedsCrash;
  } else if (std::holds_alternative<HangExit>(x.outcome)) {
    r.hangs.push_back({});
    r.status = FuzzStatus::SkippedAllSeedsHang;
  } else {
    r.corpus.push_back({});
  }
  return r;
}

class Feasibility {
public:
  Feasibility(const Program& p, const PipelineConfig& cfg, PipelineResult& res, Clock::time_point deadline)
      : p_(p), cfg_(cfg), res_(res), deadline_(deadline) {}

  void run() {
    add_trace_records();
    if (cfg_.entry_only) {
      res_.edges = phase1(res_.call_graph, res_.records);
      return;
    }
    std::set<std::tuple<std::string, std::string, VulnKey>> attempted;
    for (;;) {
      for (auto& [id, e] : phase1(res_.call_graph, res_.records))
        if (!attempted.count(id)) res_.edges.emplace(id, std::move(e));

      std::vector<std::tuple<std::string, std::string, VulnKey>> wave;
      for (const auto& [caller, callee] : call_pairs(res_.call_graph)) {
        if (p_.entry_points.count(callee)) continue;
        for (const VulnKey& key : summarizable_keys(callee)) {
          auto id = std::make_tuple(caller, callee, key);
          if (!res_.edges.count(id) && !attempted.count(id)) wave.push_back(id);
        }
      }
      if (wave.empty()) break;

      std::vector<Attempt> results(wave.size());
      if (Clock::now() >= deadline_) {
        res_.timing.hit_global_budget = true;
        for (auto& r : results) r.detail = "global budget exhausted";
      } else {
        for (const auto& w : wave) distances(std::get<1>(w));
        parallel_for(wave.size(), cfg_.jobs, [&](std::size_t i) { results[i] = attempt(wave[i]); });
      }
      for (std::size_t i = 0; i < wave.size(); ++i) {
        attempted.insert(wave[i]);
        merge(wave[i], std::move(results[i]));
      }
      add_trace_records();
    }
  }

private:
  struct Attempt {
    PairStatus status = PairStatus::Unknown;
    std::string detail;
    std::uint64_t queries = 0;
    std::vector<CrashRecord> callee_records;
    std::optional<TargetedResult> symex;
  };

  std::vector<const CrashRecord*> arg_records(const std::string& fn, const VulnKey& key) const {
    std::vector<const CrashRecord*> out;
    for (const auto& r : res_.records)
      if (r.function == fn && r.key == key && r.args) {
        bool dup = false;
        for (const auto* o : out) dup = dup || *o->args == *r.args;
        if (!dup) out.push_back(&r);
      }
    return out;
  }

  std::set<VulnKey> summarizable_keys(const std::string& fn) const {
    std::set<VulnKey> out;
    for (const auto& r : res_.records)
      if (r.function == fn && r.args) out.insert(r.key);
    return out;
  }

  const TargetSpec& distances(const std::string& callee) {
    auto it = specs_.find(callee);
    if (it == specs_.end()) it = specs_.emplace(callee, compute_distances(p_, callee)).first;
    return it->second;
  }

  std::vector<std::size_t> corpus_lengths(const std::string& fn) const {
    std::set<std::size_t> lens;
    auto it = res_.functions.find(fn);
    if (it == res_.functions.end()) return {};
    const Function& f = p_.function(fn);
    for (const auto& input : it->second.minimized_corpus) {
      ArgTuple args = decode_args(f, input, cfg_.fuzz.delimiter);
      for (const auto& v : args.values)
        if (const auto* b = std::get_if<BufferArg>(&v)) lens.insert(b->length());
    }
    return {lens.begin(), lens.end()};
  }

  Attempt attempt(const std::tuple<std::string, std::string, VulnKey>& id) const {
    const auto& [caller, callee, key] = id;
    Attempt a;
    if (!symbolic_capable(p_.function(caller))) {
      a.detail = "caller parameters cannot be made symbolic";
      return a;
    }
    for (const CrashRecord* r : arg_records(callee, key)) a.callee_records.push_back(*r);
    FunctionSummary s;
    s.function = callee;
    for (const CrashRecord& r : a.callee_records)
      s.records.push_back({*r.args, CrashReport{key.loc, key.kind, r.trace, *r.args}});
    SummarizedProgram sp(p_, {{callee, s}});

    SymexConfig scfg = cfg_.symex;
    const double remaining = std::chrono::duration<double>(deadline_ - Clock::now()).count();
    scfg.time_budget_s = std::max(0.0, std::min(scfg.time_budget_s, remaining));
    scfg.extra_lengths = corpus_lengths(caller);
    TargetedResult r = run_targeted(sp, caller, specs_.at(callee), scfg);
    a.queries = r.solver_queries;
    switch (r.kind) {
      case TargetedKind::VulnTriggered: a.status = PairStatus::Phase2; break;
      case TargetedKind::Infeasible:
        a.status = PairStatus::Infeasible;
        a.detail = r.unreachable ? "target unreachable from caller" : "all paths infeasible";
        break;
      case TargetedKind::Exhausted:
        a.status = PairStatus::Unknown;
        a.detail = "symbolic execution exhausted its budget";
        break;
    }
    a.symex = std::move(r);
    return a;
  }

  bool has_record(const std::string& fn, const VulnKey& key, const std::optional<ArgTuple>& args) const {
    for (const auto& r : res_.records)
      if (r.function == fn && r.key == key && (!args || r.args == args)) return true;
    return false;
  }

  void merge(const std::tuple<std::string, std::string, VulnKey>& id, Attempt a) {
    const auto& [caller, callee, key] = id;
    res_.pairs.push_back({caller, callee, key, a.status, a.queries, a.detail});
    if (!a.symex) return;
    TargetedResult& r = *a.symex;

    std::vector<CrashRecord> fresh;
    for (auto& c : r.caller_crashes) {
      VulnKey k{c.vuln_loc, c.vuln_kind};
      if (has_record(caller, k, std::nullopt)) continue;
      fresh.push_back({caller, k, c.crashing_args, strip_driver_frames(c.stack), RecordOrigin::Symex});
    }

    if (a.status == PairStatus::Phase2) {
      const CrashRecord& via = a.callee_records.at(r.record_index);
      // prefer the concrete trace when the model crashes on its own
      StackTrace trace;
      ExecOptions eo;
      eo.step_budget = cfg_.fuzz.step_budget;
      ExecResult x = execute(p_, caller, r.model, eo);
      const auto* crash = std::get_if<CrashReport>(&x.outcome);
      if (crash && crash->vuln_loc == key.loc && crash->vuln_kind == key.kind) {
        trace = crash->stack;
      } else {
        trace = via.trace;
        for (std::size_t i = 1; i < r.trace.frames.size(); ++i) trace.frames.push_back(r.trace.frames[i]);
      }
      res_.edges[id] = ChainEdge{caller, callee, EdgeOrigin::Phase2, via.trace, trace, r.model};
      if (!has_record(caller, key, r.model))
        fresh.push_back({caller, key, r.model, trace, RecordOrigin::Phase2});
    }
    for (auto& f : fresh) res_.records.push_back(std::move(f));
  }

  /// Functions on a recorded trace that have no record of their own for the
  /// key receive the trace suffix starting at their frame.
  void add_trace_records() {
    std::set<std::pair<std::string, VulnKey>> have;
    for (const auto& r : res_.records) have.insert({r.function, r.key});
    const std::size_t n = res_.records.size();
    for (std::size_t i = 0; i < n; ++i) {
      const CrashRecord r = res_.records[i];
      for (std::size_t j = 0; j + 1 < r.trace.frames.size(); ++j) {
        const std::string& fn = r.trace.frames[j].function;
        if (have.count({fn, r.key})) continue;
        have.insert({fn, r.key});
        StackTrace suffix;
        suffix.frames.assign(r.trace.frames.begin(), r.trace.frames.begin() + static_cast<std::ptrdiff_t>(j + 1));
        res_.records.push_back({fn, r.key, std::nullopt, std::move(suffix), RecordOrigin::Trace});
      }
    }
  }

  const Program& p_;
  const PipelineConfig& cfg_;
  PipelineResult& res_;
  Clock::time_point deadline_;
  std::map<std::string, TargetSpec> specs_;
};

}  // namespace

PipelineResult run_pipeline(const Program& p, const PipelineConfig& cfg) {
  const auto t0 = Clock::now();
  PipelineResult res;
  res.call_graph = build_call_graph(p);
  res.coverage.hits.assign(p.edges().size(), 0);

  std::vector<std::string> fuzz_names, once_names;
  std::size_t isolatable = 0;
  for (const auto& f : p.functions) {
    isolatable += f.is_isolatable();
    if (cfg.entry_only && !p.entry_points.count(f.name)) continue;
    if (f.is_isolatable()) fuzz_names.push_back(f.name);
    else if (f.param_count == 0) once_names.push_back(f.name);
  }
  double budget = cfg.global_budget_s;
  if (budget <= 0.0)
    budget = static_cast<double>(isolatable) * cfg.fuzz.time_budget_s +
             static_cast<double>(call_pairs(res.call_graph).size()) * cfg.symex.time_budget_s;
  const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(budget));

  // fuzz
  std::map<std::string, FuzzResult> fuzzed = fuzz_all(p, cfg.fuzz, cfg.jobs, &fuzz_names);
  for (const auto& name : once_names) fuzzed.emplace(name, run_once(p, p.function(name), cfg.fuzz));
  for (auto& [name, r] : fuzzed) {
    res.coverage.merge(r.coverage);
    auto& art = res.functions[name];
    art.function = name;
    art.fuzzed = true;
    art.fuzz = std::move(r);
  }
  for (const auto& f : p.functions) res.functions[f.name].function = f.name;
  res.timing.fuzz_s = seconds_since(t0);

  // replay and minimize
  const auto t1 = Clock::now();
  MinimizeOptions mo;
  mo.step_budget = cfg.fuzz.step_budget;
  mo.delimiter = cfg.fuzz.delimiter;
  std::vector<FunctionArtifacts*> work;
  for (auto& [name, art] : res.functions)
    if (art.fuzz) work.push_back(&art);
  parallel_for(work.size(), cfg.jobs, [&](std::size_t i) {
    FunctionArtifacts& art = *work[i];
    const FuzzResult& fr = *art.fuzz;
    art.minimized_corpus = cmin(p, art.function, fr.corpus, mo).kept;
    const Function& f = p.function(art.function);
    for (const auto& ce : fr.crashes) {
      ByteStream input = f.param_count == 0 ? ByteStream{} : tmin(p, art.function, ce.input, mo);
      ExecOptions eo;
      eo.step_budget = mo.step_budget;
      eo.driver_frame = true;
      ExecResult x = execute(p, art.function, decode_args(f, input, mo.delimiter), eo);
      if (auto* c = std::get_if<CrashReport>(&x.outcome)) art.crashes.push_back({input, *c});
    }
  });
  for (const auto& [name, art] : res.functions)
    for (const auto& [input, c] : art.crashes)
      res.records.push_back({name, VulnKey{c.vuln_loc, c.vuln_kind}, c.crashing_args, strip_driver_frames(c.stack),
                             RecordOrigin::Fuzz});
  res.timing.minimize_s = seconds_since(t1);

  // feasibility
  const auto t2 = Clock::now();
  Feasibility(p, cfg, res, deadline).run();
  for (const auto& [id, e] : res.edges)
    if (e.established_by == EdgeOrigin::Phase1)
      res.pairs.push_back({e.caller, e.callee, std::get<2>(id), PairStatus::Phase1, 0, "matching stack traces"});
  std::sort(res.pairs.begin(), res.pairs.end(), [](const PairOutcome& a, const PairOutcome& b) {
    return std::tie(a.key, a.caller, a.callee) < std::tie(b.key, b.caller, b.callee);
  });
  res.timing.feasibility_s = seconds_since(t2);

  // summaries of every function with replayable crashes
  std::map<std::string, FunctionSummary> sums;
  for (const auto& r : res.records) {
    if (!r.args) continue;
    auto& s = sums[r.function];
    s.function = r.function;
    bool dup = false;
    for (const auto& existing : s.records) dup = dup || existing.args == *r.args;
    if (!dup) s.records.push_back({*r.args, CrashReport{r.key.loc, r.key.kind, r.trace, *r.args}});
  }
  for (auto& [name, s] : sums) res.summaries.push_back(std::move(s));

  std::vector<VulnKey> keys;
  for (const auto& r : res.records) keys.push_back(r.key);
  res.chains = build_chains(res.edges, keys, p.entry_points);
  res.timing.total_s = seconds_since(t0);
  if (Clock::now() > deadline) res.timing.hit_global_budget = true;
  return res;
}

}  // namespace wildfire
