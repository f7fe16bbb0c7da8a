#include "wildfire/cli.hpp"

#include "wildfire/json_io.hpp"
#include "wildfire/report.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace wildfire {

namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

Program load_program(const std::string& path) {
  std::string text = read_file(path);
  try {
    return parse_program(text);
  } catch (const ParseError& e) {
    throw ConfigError(path + ":" + std::to_string(e.line) + ":" + std::to_string(e.column) + ": " + e.what());
  }
}

std::string id_name(std::size_t i) {
  std::ostringstream s;
  s << "id_" << std::setw(6) << std::setfill('0') << i;
  return s.str();
}

struct CommonOptions {
  double fuzz_time = 60.0;
  double symex_time = 60.0;
  std::uint64_t solver_budget_ms = 2000;
  unsigned jobs = 1;
  std::optional<std::uint64_t> rng_seed;
  std::string delimiter_hex = "2f2f";
  std::uint64_t step_budget = 100000;

  std::uint64_t seed() const {
    if (rng_seed) return *rng_seed;
    if (const char* env = std::getenv("WILDFIRE_LITE_SEED")) {
      try {
        std::size_t used = 0;
        std::uint64_t v = std::stoull(env, &used, 0);
        if (used == std::string_view(env).size()) return v;
      } catch (const std::exception&) {
      }
      throw ConfigError("WILDFIRE_LITE_SEED is not an integer: '" + std::string(env) + "'");
    }
    return 1;
  }

  ByteStream delimiter() const {
    ByteStream d;
    try {
      d = parse_hex_bytes(delimiter_hex);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad --delimiter: ") + e.what());
    }
    if (d.empty()) throw ConfigError("--delimiter must not be empty");
    return d;
  }

  FuzzConfig fuzz() const {
    FuzzConfig c;
    c.time_budget_s = fuzz_time;
    c.rng_seed = seed();
    c.delimiter = delimiter();
    c.step_budget = step_budget;
    return c;
  }

  SymexConfig symex() const {
    SymexConfig c;
    c.time_budget_s = symex_time;
    c.solver_budget = std::chrono::milliseconds(solver_budget_ms);
    c.step_budget = step_budget;
    return c;
  }
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--fuzz-time", o.fuzz_time, "Fuzzing budget per function, seconds")->check(CLI::PositiveNumber);
  cmd->add_option("--symex-time", o.symex_time, "Symbolic execution budget per pair, seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--solver-budget", o.solver_budget_ms, "Solver budget per query, milliseconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 256u));
  cmd->add_option("--rng-seed", o.rng_seed, "Random seed (default: $WILDFIRE_LITE_SEED or 1)");
  cmd->add_option("--delimiter", o.delimiter_hex, "Buffer delimiter as hex bytes");
  cmd->add_option("--step-budget", o.step_budget, "Instruction budget per execution")->check(CLI::PositiveNumber);
}

int cmd_analyze(const std::string& path, const CommonOptions& o, bool entry_only, const std::string& out_dir,
                std::ostream& out) {
  Program p = load_program(path);
  PipelineConfig cfg;
  cfg.fuzz = o.fuzz();
  cfg.symex = o.symex();
  cfg.jobs = o.jobs;
  cfg.entry_only = entry_only;
  PipelineResult r = run_pipeline(p, cfg);

  RunSettings s;
  s.mode = entry_only ? "entry-only" : "compositional";
  s.fuzz_time_s = o.fuzz_time;
  s.symex_time_s = o.symex_time;
  s.solver_budget_ms = o.solver_budget_ms;
  s.rng_seed = cfg.fuzz.rng_seed;
  s.delimiter_hex = jsonio::hex(cfg.fuzz.delimiter);
  AnalysisReport rep = build_report(p, fs::path(path).stem().string(), r, s);
  const std::string text = render_report(rep);

  if (!out_dir.empty()) {
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create '" + out_dir + "': " + ec.message());
    write_file(dir / "report.json", render_json(rep));
    write_file(dir / "report.txt", text);
    write_file(dir / "timing.json", render_timing_json(r.timing));
    write_file(dir / "summaries.json", jsonio::to_json(r.summaries).dump(2) + "\n");
    fs::remove_all(dir / "corpus");
    fs::remove_all(dir / "crashes");
    for (const auto& [name, art] : r.functions) {
      if (!art.fuzz) continue;
      fs::create_directories(dir / "corpus" / name);
      for (std::size_t i = 0; i < art.minimized_corpus.size(); ++i) {
        const auto& c = art.minimized_corpus[i];
        write_file(dir / "corpus" / name / id_name(i), std::string_view(reinterpret_cast<const char*>(c.data()), c.size()));
      }
      if (art.crashes.empty()) continue;
      fs::create_directories(dir / "crashes" / name);
      for (std::size_t i = 0; i < art.crashes.size(); ++i) {
        const auto& [input, report] = art.crashes[i];
        write_file(dir / "crashes" / name / id_name(i),
                   std::string_view(reinterpret_cast<const char*>(input.data()), input.size()));
        write_file(dir / "crashes" / name / (id_name(i) + ".json"), jsonio::to_json(report).dump(2) + "\n");
      }
    }
  }
  out << text;
  return rep.aggregates.reaches_entry > 0 ? 1 : 0;
}

int cmd_fuzz_one(const std::string& path, const std::string& fn, const CommonOptions& o, std::ostream& out) {
  Program p = load_program(path);
  if (p.find_function(fn) < 0) throw ConfigError("unknown function '" + fn + "'");
  FuzzConfig cfg = o.fuzz();
  FuzzResult r = fuzz_function(p, fn, generate_seeds(p.function(fn), function_seed(cfg.rng_seed, fn + "#seeds"), cfg.delimiter), cfg);
  out << jsonio::to_json(r).dump(2) << "\n";
  return 0;
}

int cmd_symex_one(const std::string& path, const std::string& caller, const std::string& target,
                  const std::string& summaries_path, const CommonOptions& o, std::ostream& out) {
  Program p = load_program(path);
  if (p.find_function(caller) < 0) throw ConfigError("unknown function '" + caller + "'");
  if (p.find_function(target) < 0) throw ConfigError("unknown function '" + target + "'");
  std::vector<FunctionSummary> sums;
  if (!summaries_path.empty()) {
    try {
      for (auto& s : jsonio::summaries_from_json(jsonio::json::parse(read_file(summaries_path))))
        if (s.function == target) sums.push_back(std::move(s));
    } catch (const jsonio::json::exception& e) {
      throw ConfigError("bad summaries file: " + std::string(e.what()));
    }
  } else {
    FuzzConfig cfg = o.fuzz();
    FuzzResult fr = fuzz_function(
        p, target, generate_seeds(p.function(target), function_seed(cfg.rng_seed, target + "#seeds"), cfg.delimiter), cfg);
    std::vector<std::pair<ArgTuple, CrashReport>> crashes;
    for (const auto& c : fr.crashes) crashes.push_back({c.report.crashing_args, c.report});
    if (!crashes.empty()) sums.push_back(summarize(p.function(target), crashes));
  }
  if (sums.empty()) throw ConfigError("no crash records for '" + target + "'");
  SummarizedProgram sp = apply_summaries(p, sums);
  TargetedResult r = run_targeted(sp, caller, compute_distances(p, target), o.symex());
  jsonio::json j = {{"caller", caller},
                    {"target", target},
                    {"result", std::string(to_string(r.kind))},
                    {"unreachable", r.unreachable},
                    {"solver_queries", r.solver_queries},
                    {"states_explored", r.states_explored},
                    {"states_pruned", r.states_pruned}};
  if (r.kind == TargetedKind::VulnTriggered) {
    j["model"] = jsonio::to_json(r.model);
    j["record_index"] = r.record_index;
    j["trace"] = jsonio::to_json(r.trace);
  }
  jsonio::json crashes = jsonio::json::array();
  for (const auto& c : r.caller_crashes) crashes.push_back(jsonio::to_json(c));
  j["caller_crashes"] = crashes;
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& path, bool as_json, std::ostream& out) {
  AnalysisReport r;
  try {
    r = parse_report(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  out << (as_json ? render_json(r) : render_report(r));
  return 0;
}

int cmd_parse_check(const std::string& path, std::ostream& out) {
  Program p = load_program(path);
  out << path << ": ok, " << p.functions.size() << " functions, " << p.total_instructions() << " instructions, "
      << p.edges().size() << " edges\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compositional fuzzing of functions in a small IR", "wildfire-lite"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string program, function, caller, target, summaries, out_dir, report_path;
  bool entry_only = false, as_json = false;

  auto* analyze = app.add_subcommand("analyze", "Run the full compositional analysis");
  analyze->add_option("program", program, "IR file")->required();
  add_common(analyze, common);
  analyze->add_flag("--entry-only", entry_only, "Fuzz entry points only, no composition");
  analyze->add_option("-o,--out", out_dir, "Output directory");

  auto* fuzz_one = app.add_subcommand("fuzz-one", "Fuzz one function in isolation");
  fuzz_one->add_option("program", program, "IR file")->required();
  fuzz_one->add_option("function", function, "Function name")->required();
  add_common(fuzz_one, common);

  auto* symex_one = app.add_subcommand("symex-one", "Targeted symbolic execution for one caller/callee pair");
  symex_one->add_option("program", program, "IR file")->required();
  symex_one->add_option("caller", caller, "Caller function")->required();
  symex_one->add_option("target", target, "Summarized callee")->required();
  symex_one->add_option("--summaries", summaries, "summaries.json from a previous analyze run");
  add_common(symex_one, common);

  auto* report = app.add_subcommand("report", "Re-render a stored report.json");
  report->add_option("report", report_path, "report.json")->required();
  report->add_flag("--json", as_json, "Emit canonical JSON instead of text");

  auto* parse_check = app.add_subcommand("parse-check", "Parse and validate an IR file");
  parse_check->add_option("program", program, "IR file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*analyze) return cmd_analyze(program, common, entry_only, out_dir, out);
    if (*fuzz_one) return cmd_fuzz_one(program, function, common, out);
    if (*symex_one) return cmd_symex_one(program, caller, target, summaries, common, out);
    if (*report) return cmd_report(report_path, as_json, out);
    if (*parse_check) return cmd_parse_check(program, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace wildfire
