#include "wildfire/report.hpp"

#include "wildfire/json_io.hpp"

#include <iomanip>
#include <sstream>

namespace wildfire {

using jsonio::json;

double instruction_coverage_pct(const Function& f, const std::vector<bool>& covered_blocks) {
  std::size_t total = 0, covered = 0;
  for (std::size_t b = 0; b < f.blocks.size(); ++b) {
    total += f.blocks[b].instrs.size();
    if (b < covered_blocks.size() && covered_blocks[b]) covered += f.blocks[b].instrs.size();
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(covered) / static_cast<double>(total);
}

std::map<int, double> depth_coverage(const Program& p, const CallGraph& cg, const CoverageMap& cov) {
  auto blocks = covered_blocks(p, cov);
  std::map<int, std::pair<double, int>> acc;
  for (std::size_t i = 0; i < p.functions.size(); ++i) {
    auto it = cg.depth.find(p.functions[i].name);
    if (it == cg.depth.end() || !it->second) continue;
    auto& [sum, n] = acc[*it->second];
    sum += instruction_coverage_pct(p.functions[i], blocks[i]);
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [d, sn] : acc) out[d] = sn.first / sn.second;
  return out;
}

Aggregates compute_aggregates(const std::vector<VulnerabilityChain>& chains) {
  Aggregates a;
  std::set<VulnKey> keys;
  for (const auto& c : chains) {
    keys.insert(c.key);
    ++a.chains;
    a.chains_longer_than_one += !c.edges.empty();
    a.chains_ending_phase2 += c.ends_with_phase2;
    a.reaches_entry += c.reaches_entry;
  }
  a.total_vulns = keys.size();
  return a;
}

std::string content_hash(const Program& p) { return hex64(fnv1a(print_program(p))); }

AnalysisReport build_report(const Program& p, std::string program_id, const PipelineResult& r,
                            const RunSettings& settings) {
  AnalysisReport rep;
  rep.program_id = std::move(program_id);
  rep.content_hash = content_hash(p);
  rep.settings = settings;
  auto blocks = covered_blocks(p, r.coverage);
  std::size_t isolatable = 0, entered = 0;
  for (std::size_t i = 0; i < p.functions.size(); ++i) {
    const Function& f = p.functions[i];
    FunctionReport fr;
    fr.name = f.name;
    if (auto it = r.call_graph.depth.find(f.name); it != r.call_graph.depth.end()) fr.depth = it->second;
    fr.isolatable = f.is_isolatable();
    if (auto it = r.functions.find(f.name); it != r.functions.end() && it->second.fuzz) {
      const FunctionArtifacts& art = it->second;
      const FuzzResult& fz = *art.fuzz;
      fr.fuzzed = true;
      fr.fuzz_status = std::string(to_string(fz.status));
      fr.executions = fz.stats.executions;
      fr.corpus_size = fz.corpus.size();
      fr.corpus_minimized = art.minimized_corpus.size();
      fr.unique_edges = fz.stats.unique_edges;
      fr.crash_count = fz.crashes.size();
      fr.hang_count = fz.hangs.size();
    }
    fr.total_instructions = f.instruction_count();
    for (std::size_t b = 0; b < f.blocks.size(); ++b)
      if (blocks[i][b]) fr.covered_instructions += f.blocks[b].instrs.size();
    fr.coverage_pct = instruction_coverage_pct(f, blocks[i]);
    if (fr.isolatable) {
      ++isolatable;
      entered += r.coverage.covers(static_cast<std::size_t>(f.entry_edge));
    }
    rep.functions.push_back(std::move(fr));
  }
  rep.function_coverage_pct = isolatable == 0 ? 100.0 : 100.0 * static_cast<double>(entered) / static_cast<double>(isolatable);
  rep.vulnerabilities = r.chains;
  rep.aggregates = compute_aggregates(r.chains);
  rep.depth_coverage = depth_coverage(p, r.call_graph, r.coverage);
  rep.pairs = r.pairs;
  rep.timing = r.timing;
  return rep;
}

namespace {

json key_json(const VulnKey& k) { return {{"loc", to_string(k.loc)}, {"kind", std::string(to_string(k.kind))}}; }

VulnKey key_from(const json& j) {
  return {parse_source_loc(j.at("loc").get<std::string>()), vuln_kind_from_string(j.at("kind").get<std::string>())};
}

json chain_json(const VulnerabilityChain& c) {
  json edges = json::array();
  for (const auto& e : c.edges) {
    json je = {{"caller", e.caller},
               {"callee", e.callee},
               {"established_by", std::string(to_string(e.established_by))},
               {"callee_trace", jsonio::to_json(e.callee_trace)},
               {"caller_trace", jsonio::to_json(e.caller_trace)}};
    if (e.model) je["model"] = jsonio::to_json(*e.model);
    edges.push_back(std::move(je));
  }
  return {{"key", key_json(c.key)},
          {"functions", c.functions},
          {"edges", edges},
          {"reaches_entry", c.reaches_entry},
          {"ends_with_phase2", c.ends_with_phase2}};
}

VulnerabilityChain chain_from(const json& j) {
  VulnerabilityChain c;
  c.key = key_from(j.at("key"));
  c.functions = j.at("functions").get<std::vector<std::string>>();
  for (const auto& je : j.at("edges")) {
    ChainEdge e;
    e.caller = je.at("caller").get<std::string>();
    e.callee = je.at("callee").get<std::string>();
    e.established_by = edge_origin_from_string(je.at("established_by").get<std::string>());
    e.callee_trace = jsonio::trace_from_json(je.at("callee_trace"));
    e.caller_trace = jsonio::trace_from_json(je.at("caller_trace"));
    if (je.contains("model")) e.model = jsonio::args_from_json(je.at("model"));
    c.edges.push_back(std::move(e));
  }
  c.reaches_entry = j.at("reaches_entry").get<bool>();
  c.ends_with_phase2 = j.at("ends_with_phase2").get<bool>();
  return c;
}

}  // namespace

std::string render_json(const AnalysisReport& r) {
  json functions = json::array();
  for (const auto& f : r.functions)
    functions.push_back({{"name", f.name},
                         {"depth", f.depth ? json(*f.depth) : json(nullptr)},
                         {"isolatable", f.isolatable},
                         {"fuzzed", f.fuzzed},
                         {"fuzz_status", f.fuzz_status},
                         {"executions", f.executions},
                         {"corpus_size", f.corpus_size},
                         {"corpus_minimized", f.corpus_minimized},
                         {"unique_edges", f.unique_edges},
                         {"crash_count", f.crash_count},
                         {"hang_count", f.hang_count},
                         {"covered_instructions", f.covered_instructions},
                         {"total_instructions", f.total_instructions},
                         {"coverage_pct", f.coverage_pct}});
  json vulns = json::array();
  for (const auto& c : r.vulnerabilities) vulns.push_back(chain_json(c));
  json depth = json::object();
  for (const auto& [d, pct] : r.depth_coverage) depth[std::to_string(d)] = pct;
  json pairs = json::array();
  for (const auto& pr : r.pairs)
    pairs.push_back({{"caller", pr.caller},
                     {"callee", pr.callee},
                     {"key", key_json(pr.key)},
                     {"status", std::string(to_string(pr.status))},
                     {"solver_queries", pr.solver_queries},
                     {"detail", pr.detail}});
  const auto& s = r.settings;
  const auto& a = r.aggregates;
  json j = {{"schema", r.schema},
            {"program", {{"id", r.program_id}, {"hash", r.content_hash}}},
            {"settings",
             {{"mode", s.mode},
              {"fuzz_time_s", s.fuzz_time_s},
              {"symex_time_s", s.symex_time_s},
              {"solver_budget_ms", s.solver_budget_ms},
              {"rng_seed", s.rng_seed},
              {"delimiter", s.delimiter_hex}}},
            {"functions", functions},
            {"function_coverage_pct", r.function_coverage_pct},
            {"vulnerabilities", vulns},
            {"aggregates",
             {{"total_vulns", a.total_vulns},
              {"chains", a.chains},
              {"chains_longer_than_one", a.chains_longer_than_one},
              {"chains_ending_phase2", a.chains_ending_phase2},
              {"reaches_entry", a.reaches_entry}}},
            {"depth_coverage", depth},
            {"pairs", pairs}};
  return j.dump(2) + "\n";
}

AnalysisReport parse_report(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed report: ") + e.what());
  }
  try {
    AnalysisReport r;
    r.schema = j.at("schema").get<int>();
    if (r.schema != 1) throw std::invalid_argument("unsupported report schema " + std::to_string(r.schema));
    r.program_id = j.at("program").at("id").get<std::string>();
    r.content_hash = j.at("program").at("hash").get<std::string>();
    const json& s = j.at("settings");
    r.settings.mode = s.at("mode").get<std::string>();
    r.settings.fuzz_time_s = s.at("fuzz_time_s").get<double>();
    r.settings.symex_time_s = s.at("symex_time_s").get<double>();
    r.settings.solver_budget_ms = s.at("solver_budget_ms").get<std::uint64_t>();
    r.settings.rng_seed = s.at("rng_seed").get<std::uint64_t>();
    r.settings.delimiter_hex = s.at("delimiter").get<std::string>();
    for (const auto& jf : j.at("functions")) {
      FunctionReport f;
      f.name = jf.at("name").get<std::string>();
      if (!jf.at("depth").is_null()) f.depth = jf.at("depth").get<int>();
      f.isolatable = jf.at("isolatable").get<bool>();
      f.fuzzed = jf.at("fuzzed").get<bool>();
      f.fuzz_status = jf.at("fuzz_status").get<std::string>();
      f.executions = jf.at("executions").get<std::uint64_t>();
      f.corpus_size = jf.at("corpus_size").get<std::size_t>();
      f.corpus_minimized = jf.at("corpus_minimized").get<std::size_t>();
      f.unique_edges = jf.at("unique_edges").get<std::size_t>();
      f.crash_count = jf.at("crash_count").get<std::size_t>();
      f.hang_count = jf.at("hang_count").get<std::size_t>();
      f.covered_instructions = jf.at("covered_instructions").get<std::size_t>();
      f.total_instructions = jf.at("total_instructions").get<std::size_t>();
      f.coverage_pct = jf.at("coverage_pct").get<double>();
      r.functions.push_back(std::move(f));
    }
    r.function_coverage_pct = j.at("function_coverage_pct").get<double>();
    for (const auto& jc : j.at("vulnerabilities")) r.vulnerabilities.push_back(chain_from(jc));
    const json& a = j.at("aggregates");
    r.aggregates.total_vulns = a.at("total_vulns").get<std::size_t>();
    r.aggregates.chains = a.at("chains").get<std::size_t>();
    r.aggregates.chains_longer_than_one = a.at("chains_longer_than_one").get<std::size_t>();
    r.aggregates.chains_ending_phase2 = a.at("chains_ending_phase2").get<std::size_t>();
    r.aggregates.reaches_entry = a.at("reaches_entry").get<std::size_t>();
    for (const auto& [d, pct] : j.at("depth_coverage").items()) r.depth_coverage[std::stoi(d)] = pct.get<double>();
    for (const auto& jp : j.at("pairs"))
      r.pairs.push_back({jp.at("caller").get<std::string>(), jp.at("callee").get<std::string>(), key_from(jp.at("key")),
                         pair_status_from_string(jp.at("status").get<std::string>()),
                         jp.at("solver_queries").get<std::uint64_t>(), jp.at("detail").get<std::string>()});
    return r;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed report: ") + e.what());
  }
}

std::string render_report(const AnalysisReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  const auto& a = r.aggregates;
  out << "program " << r.program_id << " (" << r.content_hash << "), mode " << r.settings.mode << "\n";
  out << a.total_vulns << (a.total_vulns == 1 ? " vulnerability" : " vulnerabilities") << ", " << a.chains
      << " chains (|chain|>1: " << a.chains_longer_than_one << ", ≺P2: " << a.chains_ending_phase2
      << ", reaching an entry point: " << a.reaches_entry << ")\n";

  std::vector<const VulnerabilityChain*> chains;
  for (const auto& c : r.vulnerabilities) chains.push_back(&c);
  std::stable_sort(chains.begin(), chains.end(),
                   [](const auto* x, const auto* y) { return to_string(x->key) < to_string(y->key); });
  if (!chains.empty()) out << "\nvulnerabilities:\n";
  for (const auto* c : chains) {
    out << "  [" << to_string(c->key.kind) << "] ";
    for (std::size_t i = 0; i < c->functions.size(); ++i) out << (i ? " -> " : "") << c->functions[i];
    out << " @ " << to_string(c->key.loc) << " [";
    for (std::size_t i = 0; i < c->edges.size(); ++i)
      out << (i ? "," : "") << (c->edges[i].established_by == EdgeOrigin::Phase1 ? "P1" : "P2");
    out << "]";
    if (c->ends_with_phase2) out << " ≺P2";
    if (c->reaches_entry) out << " (entry)";
    out << "\n";
  }

  if (!r.pairs.empty()) out << "\nfeasibility pairs:\n";
  for (const auto& p : r.pairs)
    out << "  " << p.caller << " -> " << p.callee << "  " << to_string(p.key) << "  " << to_string(p.status)
        << " (solver queries " << p.solver_queries << ")" << (p.detail.empty() ? "" : ", " + p.detail) << "\n";

  out << "\ncoverage by call-graph depth:\n";
  for (const auto& [d, pct] : r.depth_coverage) out << "  depth " << d << ": " << pct << "%\n";
  out << "function coverage (isolatable): " << r.function_coverage_pct << "%\n";

  out << "\nfunctions:\n";
  for (const auto& f : r.functions) {
    out << "  " << std::left << std::setw(24) << f.name << std::right << " depth "
        << (f.depth ? std::to_string(*f.depth) : std::string("-")) << "  cov " << f.coverage_pct << "%";
    if (f.fuzzed)
      out << "  execs " << f.executions << "  corpus " << f.corpus_size << "->" << f.corpus_minimized << "  crashes "
          << f.crash_count << "  " << f.fuzz_status;
    else
      out << "  not fuzzed";
    out << "\n";
  }

  const auto& t = r.timing;
  out << "\ntiming: fuzz " << t.fuzz_s << "s, minimize " << t.minimize_s << "s, feasibility " << t.feasibility_s
      << "s, total " << t.total_s << "s" << (t.hit_global_budget ? " (global budget hit)" : "") << "\n";
  return out.str();
}

std::string render_timing_json(const StageTiming& t) {
  json j = {{"fuzz_s", t.fuzz_s},
            {"minimize_s", t.minimize_s},
            {"feasibility_s", t.feasibility_s},
            {"total_s", t.total_s},
            {"hit_global_budget", t.hit_global_budget}};
  return j.dump(2) + "\n";
}

}  // namespace wildfire
