// Acceptance gate: one line per criterion, nonzero exit if any fails.

#include "test_support.hpp"

#include "wildfire/cli.hpp"
#include "wildfire/corpus_min.hpp"
#include "wildfire/driver.hpp"
#include "wildfire/report.hpp"
#include "wildfire/summarize.hpp"

#include "json.hpp"

#include <chrono>
#include <functional>
#include <iostream>

using namespace wildfire;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt_s(double s) {
  std::ostringstream o;
  o.precision(1);
  o << std::fixed << s << "s";
  return o.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("wildfire_accept_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wildfire-lite");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string bench(const std::string& f) { return (testing::bench_dir() / f).string(); }

const nlohmann::json& manifest_entry(const std::string& file) {
  static const nlohmann::json m = nlohmann::json::parse(testing::slurp(testing::bench_dir() / "manifest.json"));
  for (const auto& p : m.at("programs"))
    if (p.at("file") == file) return p;
  throw std::runtime_error("no manifest entry for " + file);
}

VulnKey planted_key(const nlohmann::json& v) {
  return {parse_source_loc(v.at("loc").get<std::string>()), vuln_kind_from_string(v.at("kind").get<std::string>())};
}

AnalysisReport analyze_cli(const std::string& file, const std::string& tag, std::vector<std::string> extra = {}) {
  fs::path d = scratch(tag);
  std::vector<std::string> args{"analyze", bench(file), "--fuzz-time", "10", "--symex-time", "10", "--jobs", "2",
                                "-o", d.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  int code = cli(args);
  if (code != 0 && code != 1) throw std::runtime_error("analyze exited with " + std::to_string(code));
  return parse_report(testing::slurp(d / "report.json"));
}

const PairOutcome* find_pair(const std::vector<PairOutcome>& pairs, const std::string& caller,
                             const std::string& callee, const VulnKey& key) {
  for (const auto& p : pairs)
    if (p.caller == caller && p.callee == callee && p.key == key) return &p;
  return nullptr;
}

// ---- benchmark scenarios ---------------------------------------------------

Outcome magic_guard() {
  auto t0 = Clock::now();
  const std::string file = "b1_stream_magic.ir";
  VulnKey key = planted_key(manifest_entry(file).at("planted")[0]);
  AnalysisReport comp = analyze_cli(file, "b1");
  AnalysisReport entry = analyze_cli(file, "b1_entry", {"--entry-only"});
  double elapsed = seconds_since(t0);

  const VulnerabilityChain* chain = nullptr;
  for (const auto& c : comp.vulnerabilities)
    if (c.key == key && (!chain || c.functions.size() > chain->functions.size())) chain = &c;
  if (!chain) return {false, "leaf key " + to_string(key) + " not reported"};
  bool ok = chain->functions.size() >= 3 && !chain->edges.empty() &&
            chain->edges.front().established_by == EdgeOrigin::Phase2 && chain->ends_with_phase2 &&
            comp.aggregates.chains_ending_phase2 == 1 && entry.vulnerabilities.empty() && elapsed <= 120;
  std::ostringstream d;
  d << "|chain|=" << chain->functions.size() << ", top edge " << to_string(chain->edges.front().established_by)
    << ", chain≺P2=" << comp.aggregates.chains_ending_phase2 << ", entry-only vulns=" << entry.vulnerabilities.size()
    << ", " << fmt_s(elapsed);
  return {ok, d.str()};
}

Outcome sanitized_caller() {
  auto t0 = Clock::now();
  const std::string file = "b2_sanitized_caller.ir";
  const auto& planted = manifest_entry(file).at("planted")[0];
  VulnKey key = planted_key(planted);
  auto pair = planted.at("infeasible_pairs")[0].get<std::vector<std::string>>();
  AnalysisReport r = analyze_cli(file, "b2");
  double elapsed = seconds_since(t0);
  const VulnerabilityChain* chain = nullptr;
  for (const auto& c : r.vulnerabilities)
    if (c.key == key) chain = &c;
  const PairOutcome* po = find_pair(r.pairs, pair[0], pair[1], key);
  if (!chain || !po) return {false, "leaf chain or pair outcome missing"};
  bool ok = chain->functions.size() == 1 && po->status == PairStatus::Infeasible && elapsed <= 60;
  return {ok, "|chain|=" + std::to_string(chain->functions.size()) + ", (" + pair[0] + "," + pair[1] + ") " +
                  std::string(to_string(po->status)) + ", " + fmt_s(elapsed)};
}

Outcome passthrough() {
  const std::string file = "b3_passthrough.ir";
  VulnKey key = planted_key(manifest_entry(file).at("planted")[0]);
  AnalysisReport r = analyze_cli(file, "b3");
  for (const auto& c : r.vulnerabilities) {
    if (c.key != key || c.edges.size() != 1) continue;
    const ChainEdge& e = c.edges[0];
    const PairOutcome* po = find_pair(r.pairs, e.caller, e.callee, key);
    bool ok = e.established_by == EdgeOrigin::Phase1 && po && po->status == PairStatus::Phase1 &&
              po->solver_queries == 0;
    return {ok, e.caller + " -> " + e.callee + " " + std::string(to_string(e.established_by)) + ", " +
                    std::to_string(po ? po->solver_queries : 0) + " solver queries"};
  }
  return {false, "no one-edge chain for " + to_string(key)};
}

// ---- argument extraction ---------------------------------------------------

// Reference decoder written from the byte layout alone.
ArgTuple reference_decode(const Function& f, const ByteStream& s, const ByteStream& delim) {
  ArgTuple out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < f.param_count; ++i) {
    const Type& t = f.param(i).type;
    const std::size_t es = byte_size(t.elem);
    if (t.is_pointer()) {
      auto hit = std::search(s.begin() + static_cast<std::ptrdiff_t>(pos), s.end(), delim.begin(), delim.end());
      std::size_t given = static_cast<std::size_t>(hit - s.begin()) - pos;
      std::size_t len = given / es * es;
      out.values.emplace_back(BufferArg{t.elem, ByteStream(s.begin() + static_cast<std::ptrdiff_t>(pos),
                                                           s.begin() + static_cast<std::ptrdiff_t>(pos + len))});
      pos = hit == s.end() ? s.size() : pos + given + delim.size();
    } else {
      std::uint64_t v = 0;
      for (std::size_t b = 0; b < es && pos + b < s.size(); ++b) v |= std::uint64_t{s[pos + b]} << (8 * b);
      pos = std::min(s.size(), pos + es);
      const unsigned bits = static_cast<unsigned>(es * 8);
      auto sv = static_cast<std::int64_t>(v);
      if (bits < 64 && ((v >> (bits - 1)) & 1)) sv = static_cast<std::int64_t>(v | (~0ULL << bits));
      out.values.emplace_back(ScalarArg{t.elem, sv});
    }
  }
  return out;
}

// Encoding must fail exactly when a buffer followed by the delimiter shows
// the delimiter early.
bool encodable(const ArgTuple& t, const ByteStream& delim) {
  for (const auto& v : t.values)
    if (const auto* b = std::get_if<BufferArg>(&v)) {
      ByteStream chunk = b->bytes;
      chunk.insert(chunk.end(), delim.begin(), delim.end());
      if (std::search(chunk.begin(), chunk.end(), delim.begin(), delim.end()) != chunk.begin() + static_cast<std::ptrdiff_t>(b->bytes.size()))
        return false;
    }
  return true;
}

Outcome extraction() {
  static constexpr const char* kinds[] = {"i8", "i16", "i32", "i64"};
  Rng rng(2024);
  std::size_t cases = 0, failures = 0, round_trips = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (int sig = 0; sig < 200; ++sig) {
    std::string text = "fn f(";
    std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      text += (i ? ", " : "") + std::string("a") + std::to_string(i) + ": " + (rng.chance(2) ? "ptr " : "") +
              kinds[rng.below(4)];
    }
    text += ") { b0: ret; }\n";
    Program p = parse_program(text);
    const Function& f = p.function("f");
    ByteStream delim = kDefaultDelimiter;
    if (sig % 4 == 3) {
      delim.assign(1 + rng.below(3), 0);
      for (auto& b : delim) b = static_cast<std::uint8_t>(rng.below(256));
    }
    for (int k = 0; k < 50; ++k, ++cases) {
      ByteStream s(rng.below(65));
      for (auto& b : s)
        b = rng.chance(3) ? delim[rng.below(delim.size())] : static_cast<std::uint8_t>(rng.below(256));
      ArgTuple t;
      try {
        t = decode_args(f, s, delim);
      } catch (const std::exception& e) {
        fail(text + ": decode threw " + e.what());
        continue;
      }
      if (!(t == reference_decode(f, s, delim))) fail(text + ": decode differs from reference");
      for (const auto& v : t.values)
        if (const auto* b = std::get_if<BufferArg>(&v); b && b->bytes.size() % byte_size(b->elem) != 0)
          fail(text + ": buffer length not a multiple of the element size");

      // decode -> encode -> decode, and a fresh random tuple
      ArgTuple fresh;
      for (std::size_t i = 0; i < f.param_count; ++i) {
        const Type& ty = f.param(i).type;
        if (ty.is_pointer()) {
          ByteStream bytes(byte_size(ty.elem) * rng.below(6));
          for (auto& b : bytes)
            b = rng.chance(3) ? delim[rng.below(delim.size())] : static_cast<std::uint8_t>(rng.below(256));
          fresh.values.emplace_back(BufferArg{ty.elem, bytes});
        } else {
          fresh.values.emplace_back(ScalarArg{ty.elem, arith::convert(static_cast<std::int64_t>(rng.next()), ty.elem)});
        }
      }
      for (const ArgTuple* tuple : {&t, &fresh}) {
        bool expect = encodable(*tuple, delim);
        try {
          ByteStream e = encode_args(f, *tuple, delim);
          if (!expect) fail(text + ": encoded a tuple whose buffer hides the delimiter");
          else if (!(decode_args(f, e, delim) == *tuple)) fail(text + ": round trip changed the tuple");
          else ++round_trips;
        } catch (const EncodingError&) {
          if (expect) fail(text + ": refused an encodable tuple");
        }
      }
    }
  }
  std::string d = std::to_string(cases) + " cases, " + std::to_string(round_trips) + " exact round trips, " +
                  std::to_string(failures) + " failures";
  if (failures) d += " (first: " + first + ")";
  return {failures == 0 && cases >= 10000, d};
}

// ---- ordered subsets -------------------------------------------------------

Outcome ordered_subsets() {
  auto t0 = Clock::now();
  constexpr int kMaxLen = 8;  // over the symbols 0..3, two bits each
  std::vector<std::vector<int>> seqs;
  std::vector<std::size_t> offset(kMaxLen + 2, 0);
  for (int len = 0; len <= kMaxLen; ++len) {
    offset[static_cast<std::size_t>(len)] = seqs.size();
    std::size_t count = std::size_t{1} << (2 * len);
    for (std::size_t c = 0; c < count; ++c) {
      std::vector<int> s(static_cast<std::size_t>(len));
      for (int k = 0; k < len; ++k) s[static_cast<std::size_t>(k)] = static_cast<int>((c >> (2 * k)) & 3);
      seqs.push_back(std::move(s));
    }
  }
  offset[kMaxLen + 1] = seqs.size();
  auto index_of = [&](const std::vector<int>& s) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < s.size(); ++k) c |= static_cast<std::size_t>(s[k]) << (2 * k);
    return offset[s.size()] + c;
  };
  std::vector<StackTrace> traces;
  traces.reserve(seqs.size());
  for (const auto& s : seqs) traces.push_back(testing::symbolic_trace(s));

  // brute force: every position mask of b picks one subsequence
  auto subsequences = [&](std::size_t b) {
    std::vector<std::size_t> out;
    const auto& sb = seqs[b];
    for (std::uint32_t mask = 0; mask < (1u << sb.size()); ++mask) {
      std::vector<int> pick;
      for (std::size_t k = 0; k < sb.size(); ++k)
        if (mask >> k & 1) pick.push_back(sb[k]);
      out.push_back(index_of(pick));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  std::uint64_t pairs = 0, disagreements = 0;
  constexpr std::size_t kBlock = 64;  // b traces kept hot while every a streams past
  for (std::size_t b0 = 0; b0 < seqs.size(); b0 += kBlock) {
    const std::size_t b1 = std::min(seqs.size(), b0 + kBlock);
    std::vector<std::vector<std::size_t>> subs;
    for (std::size_t b = b0; b < b1; ++b) subs.push_back(subsequences(b));
    for (std::size_t a = 0; a < seqs.size(); ++a)
      for (std::size_t b = b0; b < b1; ++b, ++pairs) {
        const auto& sub = subs[b - b0];
        bool expected = std::binary_search(sub.begin(), sub.end(), a);
        if (stack_traces_match(traces[a], traces[b]) != expected) ++disagreements;
      }
  }
  return {disagreements == 0, std::to_string(pairs) + " pairs, " + std::to_string(disagreements) +
                                  " disagreements, " + fmt_s(seconds_since(t0))};
}

// ---- solver ----------------------------------------------------------------

Outcome solver_oracle() {
  auto t0 = Clock::now();
  testing::QueryGen gen(31337);
  std::size_t sat = 0, unsat = 0, wrong = 0, unknown = 0, bad_model = 0;
  for (int i = 0; i < 1000; ++i) {
    auto q = gen.next(16);
    bool expected = testing::enumerate_sat(q);
    SolveResult r = solve(q.conjuncts, q.vars);
    if (r.status == SolveStatus::Unknown) {
      ++unknown;
      continue;
    }
    if ((r.status == SolveStatus::Sat) != expected) ++wrong;
    if (r.status == SolveStatus::Sat) {
      ++sat;
      for (const auto& c : q.conjuncts)
        if (ex::eval(c, r.model) == 0) {
          ++bad_model;
          break;
        }
    } else {
      ++unsat;
    }
  }
  double elapsed = seconds_since(t0);
  bool ok = wrong == 0 && unknown == 0 && bad_model == 0 && elapsed <= 30;
  std::ostringstream d;
  d << "1000 queries (" << sat << " sat, " << unsat << " unsat), " << wrong << " disagreements, " << unknown
    << " unknown, " << bad_model << " bad models, " << fmt_s(elapsed);
  return {ok, d.str()};
}

// ---- pipeline-based criteria ----------------------------------------------

struct BenchRun {
  std::string file;
  Program program;
  PipelineResult comp;
  PipelineResult entry;
  AnalysisReport comp_report;
  AnalysisReport entry_report;
};

PipelineConfig pipeline_config(bool entry_only) {
  PipelineConfig c;
  c.fuzz.time_budget_s = 10;
  c.symex.time_budget_s = 10;
  c.jobs = 2;
  c.entry_only = entry_only;
  return c;
}

const std::vector<BenchRun>& bench_runs() {
  static const std::vector<BenchRun> runs = [] {
    std::vector<BenchRun> out;
    for (const auto& file : testing::bench_files()) {
      BenchRun r{file, testing::load_bench(file), {}, {}, {}, {}};
      r.comp = run_pipeline(r.program, pipeline_config(false));
      r.entry = run_pipeline(r.program, pipeline_config(true));
      RunSettings s;
      r.comp_report = build_report(r.program, file, r.comp, s);
      s.mode = "entry-only";
      r.entry_report = build_report(r.program, file, r.entry, s);
      out.push_back(std::move(r));
    }
    return out;
  }();
  return runs;
}

std::set<std::size_t> edges_of(const Program& p, const std::string& fn, const ByteStream& input) {
  ExecOptions o;
  o.driver_frame = true;
  ExecResult r = execute(p, fn, decode_args(p.function(fn), input), o);
  std::set<std::size_t> out;
  for (std::size_t e = 0; e < r.coverage.hits.size(); ++e)
    if (r.coverage.hits[e]) out.insert(e);
  return out;
}

Outcome minimizers() {
  std::size_t corpora = 0, crashes = 0, failures = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (const auto& run : bench_runs()) {
    const Program& p = run.program;
    for (const auto& [name, art] : run.comp.functions) {
      if (!art.fuzz) continue;
      const FuzzResult& fr = *art.fuzz;
      if (!fr.corpus.empty()) {
        ++corpora;
        MinimizedCorpus m = cmin(p, name, fr.corpus);
        std::set<std::size_t> before, after;
        for (const auto& in : fr.corpus) {
          auto e = edges_of(p, name, in);
          before.insert(e.begin(), e.end());
        }
        for (const auto& in : m.kept) {
          auto e = edges_of(p, name, in);
          after.insert(e.begin(), e.end());
        }
        if (before != after || m.coverage_before != before || m.coverage_after != after)
          fail(run.file + " " + name + ": cmin changed the edge union");
      }
      for (const auto& c : fr.crashes) {
        ++crashes;
        ByteStream t = tmin(p, name, c.input);
        ExecutionKey orig = execution_key(p, name, c.input), trimmed = execution_key(p, name, t);
        if (orig.kind != 1 || !(trimmed == orig)) fail(run.file + " " + name + ": tmin changed the crash key");
        if (tmin(p, name, t) != t) fail(run.file + " " + name + ": tmin not idempotent");
      }
    }
  }
  std::string d = std::to_string(corpora) + " corpora, " + std::to_string(crashes) + " crashes, " +
                  std::to_string(failures) + " failures";
  if (failures) d += " (first: " + first + ")";
  return {failures == 0 && crashes > 0, d};
}

bool same_behavior(const ExecResult& a, const ExecResult& b) {
  return a.outcome == b.outcome && a.coverage.hits == b.coverage.hits && a.path_hash == b.path_hash;
}

// Changes one byte of the tuple; false when it has no bytes to change.
bool perturb(ArgTuple& t, Rng& rng) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const auto* b = std::get_if<BufferArg>(&t.values[i]);
    if (!b || !b->bytes.empty()) candidates.push_back(i);
  }
  if (candidates.empty()) return false;
  auto& v = t.values[candidates[rng.below(candidates.size())]];
  auto delta = static_cast<std::uint8_t>(1 + rng.below(255));
  if (auto* b = std::get_if<BufferArg>(&v)) {
    b->bytes[rng.below(b->bytes.size())] ^= delta;
  } else {
    auto& s = std::get<ScalarArg>(v);
    std::size_t byte = rng.below(byte_size(s.type));
    s.value = arith::convert(static_cast<std::int64_t>(static_cast<std::uint64_t>(s.value) ^ (std::uint64_t{delta} << (8 * byte))), s.type);
  }
  return true;
}

Outcome summary_semantics() {
  Rng rng(7);
  std::size_t summaries = 0, records = 0, perturbed = 0, failures = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first = what;
  };
  for (const auto& run : bench_runs()) {
    const Program& p = run.program;
    for (const auto& s : run.comp.summaries) {
      ++summaries;
      SummarizedProgram sp = apply_summaries(p, {s});
      if (!sp.check_region(s.function).is_acyclic()) fail(s.function + ": check region has a cycle");
      for (std::size_t i = 0; i < s.records.size(); ++i) {
        ++records;
        ExecResult hit = sp.execute(s.function, s.records[i].args);
        const auto* h = std::get_if<SummaryHit>(&hit.outcome);
        if (!h || h->function != s.function) fail(s.function + ": recorded tuple did not raise SummaryAssertFail");

        for (int attempt = 0; attempt < 8; ++attempt) {
          ArgTuple t = s.records[i].args;
          if (!perturb(t, rng)) break;
          bool recorded = false;
          for (const auto& r : s.records) recorded |= r.args == t;
          if (recorded) continue;
          ++perturbed;
          if (!same_behavior(sp.execute(s.function, t), execute(p, s.function, t)))
            fail(s.function + ": perturbed tuple " + to_string(t) + " diverged from the original");
          break;
        }
      }
    }
  }
  std::string d = std::to_string(summaries) + " summaries, " + std::to_string(records) + " records, " +
                  std::to_string(perturbed) + " perturbations, " + std::to_string(failures) + " failures";
  if (failures) d += " (first: " + first + ")";
  return {failures == 0 && records > 0, d};
}

Outcome depth_coverage_shape() {
  std::size_t full = 0, programs = 0, guarded_uncovered = 0, depth_violations = 0;
  std::string detail;
  for (const auto& run : bench_runs()) {
    ++programs;
    if (run.comp_report.function_coverage_pct == 100.0) ++full;
    else detail += " " + run.file + " covers " + std::to_string(run.comp_report.function_coverage_pct) + "%";
    for (const auto& name : manifest_entry(run.file).at("guarded_deep"))
      for (const auto& f : run.entry_report.functions)
        if (f.name == name.get<std::string>() && f.covered_instructions == 0) ++guarded_uncovered;
    for (const auto& [d, pct] : run.entry_report.depth_coverage) {
      auto it = run.comp_report.depth_coverage.find(d);
      if (it == run.comp_report.depth_coverage.end() || it->second < pct) {
        ++depth_violations;
        detail += " " + run.file + " depth " + std::to_string(d);
      }
    }
  }
  bool ok = full == programs && guarded_uncovered >= 1 && depth_violations == 0;
  return {ok, std::to_string(full) + "/" + std::to_string(programs) +
                  " programs at 100% function coverage, " + std::to_string(guarded_uncovered) +
                  " guarded deep functions uncovered by entry-only, " + std::to_string(depth_violations) +
                  " depth regressions" + detail};
}

Outcome determinism() {
  std::size_t same = 0, total = 0;
  std::string differing;
  for (const auto& file : testing::bench_files()) {
    ++total;
    std::string a, b;
    for (int k = 0; k < 2; ++k) {
      fs::path d = scratch("det_" + std::to_string(k));
      int code = cli({"analyze", bench(file), "--fuzz-time", "10", "--symex-time", "10", "--jobs", "2", "--rng-seed",
                      "7", "-o", d.string()});
      if (code != 0 && code != 1) throw std::runtime_error(file + ": analyze exited with " + std::to_string(code));
      (k == 0 ? a : b) = testing::slurp(d / "report.json");
    }
    if (a == b && !a.empty()) ++same;
    else differing += " " + file;
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " report.json pairs byte-identical" +
                             differing};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"B1 magic-guarded leaf", magic_guard},
      {"B2 sanitized caller", sanitized_caller},
      {"phase-1 pass-through chain", passthrough},
      {"argument extraction properties", extraction},
      {"ordered-subset oracle", ordered_subsets},
      {"solver oracle", solver_oracle},
      {"minimizer contracts", minimizers},
      {"summary semantics", summary_semantics},
      {"depth coverage", depth_coverage_shape},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
