#include "wildfire/json_io.hpp"

namespace wildfire::jsonio {

std::string hex(const ByteStream& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

json to_json(const StackTrace& st) {
  json frames = json::array();
  for (const auto& fr : st.frames) frames.push_back({{"loc", to_string(fr.loc)}, {"function", fr.function}});
  return frames;
}

StackTrace trace_from_json(const json& j) {
  StackTrace st;
  for (const auto& fr : j)
    st.frames.push_back({parse_source_loc(fr.at("loc").get<std::string>()), fr.at("function").get<std::string>()});
  return st;
}

namespace {

ScalarKind kind_of(const json& j) {
  auto k = scalar_from_string(j.get<std::string>());
  if (!k) throw std::invalid_argument("unknown scalar type " + j.dump());
  return *k;
}

}  // namespace

json to_json(const ArgValue& v) {
  if (const auto* s = std::get_if<ScalarArg>(&v)) return {{"type", std::string(to_string(s->type))}, {"value", s->value}};
  const auto& b = std::get<BufferArg>(v);
  return {{"elem", std::string(to_string(b.elem))}, {"bytes", hex(b.bytes)}};
}

ArgValue arg_from_json(const json& j) {
  if (j.contains("type")) return ScalarArg{kind_of(j.at("type")), j.at("value").get<std::int64_t>()};
  BufferArg b;
  b.elem = kind_of(j.at("elem"));
  auto hex_bytes = j.at("bytes").get<std::string>();
  if (!hex_bytes.empty()) b.bytes = parse_hex_bytes(hex_bytes);
  return b;
}

json to_json(const ArgTuple& t) {
  json out = json::array();
  for (const auto& v : t.values) out.push_back(to_json(v));
  return out;
}

ArgTuple args_from_json(const json& j) {
  ArgTuple t;
  for (const auto& v : j) t.values.push_back(arg_from_json(v));
  return t;
}

json to_json(const CrashReport& c) {
  return {{"vuln_loc", to_string(c.vuln_loc)},
          {"vuln_kind", std::string(to_string(c.vuln_kind))},
          {"stack", to_json(c.stack)},
          {"args", to_json(c.crashing_args)}};
}

CrashReport crash_from_json(const json& j) {
  CrashReport c;
  c.vuln_loc = parse_source_loc(j.at("vuln_loc").get<std::string>());
  c.vuln_kind = vuln_kind_from_string(j.at("vuln_kind").get<std::string>());
  c.stack = trace_from_json(j.at("stack"));
  c.crashing_args = args_from_json(j.at("args"));
  return c;
}

json to_json(const FunctionSummary& s) {
  json records = json::array();
  for (const auto& r : s.records) records.push_back({{"args", to_json(r.args)}, {"provenance", to_json(r.provenance)}});
  return {{"function", s.function}, {"keep_original", s.keep_original}, {"records", records}};
}

FunctionSummary summary_from_json(const json& j) {
  FunctionSummary s;
  s.function = j.at("function").get<std::string>();
  s.keep_original = j.value("keep_original", true);
  for (const auto& r : j.at("records"))
    s.records.push_back({args_from_json(r.at("args")), crash_from_json(r.at("provenance"))});
  return s;
}

json to_json(const std::vector<FunctionSummary>& s) {
  json out = json::array();
  for (const auto& x : s) out.push_back(to_json(x));
  return {{"schema", 1}, {"summaries", out}};
}

std::vector<FunctionSummary> summaries_from_json(const json& j) {
  std::vector<FunctionSummary> out;
  for (const auto& x : j.at("summaries")) out.push_back(summary_from_json(x));
  return out;
}

json to_json(const FuzzResult& r) {
  json corpus = json::array(), crashes = json::array(), hangs = json::array();
  for (const auto& c : r.corpus) corpus.push_back(hex(c));
  for (const auto& c : r.crashes) crashes.push_back({{"input", hex(c.input)}, {"report", to_json(c.report)}});
  for (const auto& h : r.hangs) hangs.push_back(hex(h));
  return {{"function", r.function},
          {"status", std::string(to_string(r.status))},
          {"executions", r.stats.executions},
          {"unique_edges", r.stats.unique_edges},
          {"hit_time_budget", r.stats.hit_time_budget},
          {"corpus", corpus},
          {"crashes", crashes},
          {"hangs", hangs}};
}

}  // namespace wildfire::jsonio
