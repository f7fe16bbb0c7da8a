#include "doctest.h"

#include "test_support.hpp"

#include "wildfire/call_graph.hpp"
#include "wildfire/symex.hpp"

#include <deque>
#include <sstream>

using namespace wildfire;

namespace {

CrashReport provenance(const std::string& fn) {
  CrashReport c;
  c.vuln_loc = SourceLoc{fn, 0, 0};
  c.vuln_kind = VulnKind::AssertFail;
  c.stack.frames.push_back({c.vuln_loc, fn});
  return c;
}

SummarizedProgram summarize_scalar(const Program& p, const std::string& fn, ScalarKind k,
                                   const std::vector<std::int64_t>& values) {
  std::vector<std::pair<ArgTuple, CrashReport>> recs;
  for (auto v : values) recs.push_back({ArgTuple{{ScalarArg{k, v}}}, provenance(fn)});
  return apply_summaries(p, {summarize(p.function(fn), recs)});
}

SymexConfig quick() {
  SymexConfig c;
  c.time_budget_s = 20;
  c.solver_budget = std::chrono::milliseconds(2000);
  return c;
}

// Shortest number of CFG edges from each block to a block that calls `target`.
std::vector<int> bfs_to_call(const Function& f, int target) {
  Cfg cfg = cfg_of(f);
  std::size_t n = cfg.labels.size();
  std::vector<std::vector<int>> pred(n);
  for (std::size_t b = 0; b < n; ++b)
    for (int s : cfg.succ[b]) pred[static_cast<std::size_t>(s)].push_back(static_cast<int>(b));
  std::vector<int> dist(n, kInfiniteDistance);
  std::deque<int> q;
  for (std::size_t b = 0; b < n; ++b)
    for (const auto& in : f.blocks[b].instrs)
      if (in.op == Opcode::Call && in.callee == target && dist[b] != 0) {
        dist[b] = 0;
        q.push_back(static_cast<int>(b));
      }
  while (!q.empty()) {
    int b = q.front();
    q.pop_front();
    for (int p : pred[static_cast<std::size_t>(b)])
      if (dist[static_cast<std::size_t>(p)] == kInfiniteDistance) {
        dist[static_cast<std::size_t>(p)] = dist[static_cast<std::size_t>(b)] + 1;
        q.push_back(p);
      }
  }
  return dist;
}

// Loop-free caller over two i8 params with random branching before one call.
std::string random_caller(Rng& rng) {
  static const char* ops[] = {"add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "ashr"};
  static const char* preds[] = {"eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule", "ugt", "uge"};
  auto operand = [&]() -> std::string {
    switch (rng.below(3)) {
    case 0: return "a";
    case 1: return "b";
    default: return std::to_string(static_cast<int>(rng.below(256)) - 128);
    }
  };
  std::ostringstream s;
  s << "fn f(x: i8) {\nb0:\n  ret;\n}\n";
  s << "fn g(a: i8, b: i8) -> i32 {\n";
  const int n = 4;
  for (int i = 0; i < n; ++i) {
    std::string op = ops[rng.below(9)];
    std::string rhs = op.find("sh") != std::string::npos ? std::to_string(rng.below(8)) : operand();
    s << "n" << i << ":\n";
    s << "  t" << i << " = " << op << " i8 " << operand() << ", " << rhs << ";\n";
    s << "  c" << i << " = cmp " << preds[rng.below(10)] << " i8 t" << i << ", " << operand() << ";\n";
    auto next = [&]() -> std::string {
      std::uint64_t k = rng.below(static_cast<std::uint64_t>(n - i) + 1);
      if (k == 0) return "exit";
      if (static_cast<int>(k) == n - i) return "hit";
      return "n" + std::to_string(i + static_cast<int>(k));
    };
    s << "  cbr c" << i << ", " << next() << ", " << next() << ";\n";
  }
  s << "hit:\n  arg = " << ops[rng.below(6)] << " i8 " << operand() << ", " << operand() << ";\n";
  s << "  call f(arg);\n  ret 1;\n";
  s << "exit:\n  ret 0;\n}\n";
  return s.str();
}

}  // namespace

TEST_CASE("distances agree with a BFS oracle on a five-block caller") {
  Program p = parse_program(R"(
fn t(x: i32) {
b0:
  ret;
}
fn g(x: i32) {
b0:
  c = cmp sgt i32 x, 0;
  cbr c, b1, b4;
b1:
  d = cmp sgt i32 x, 10;
  cbr d, b2, b3;
b2:
  call t(x);
  br b4;
b3:
  br b2;
b4:
  ret;
}
)");
  TargetSpec ts = compute_distances(p, "t");
  std::vector<int> oracle = bfs_to_call(p.function("g"), p.find_function("t"));
  for (int b = 0; b < 5; ++b) {
    CAPTURE(b);
    CHECK(ts.distance(SourceLoc{"g", b, 0}) == oracle[static_cast<std::size_t>(b)]);
  }
  CHECK(ts.distance(SourceLoc{"g", 0, 0}) == 2);
  CHECK(ts.distance(SourceLoc{"g", 2, 0}) == 0);
  CHECK(ts.distance(SourceLoc{"g", 4, 0}) == kInfiniteDistance);
}

TEST_CASE("distances through intermediate calls and unreachable targets") {
  Program p = parse_program(R"(
fn t(x: i32) { b0: ret; }
fn mid(x: i32) {
b0:
  call t(x);
  ret;
}
fn top(x: i32) {
b0:
  c = cmp eq i32 x, 1;
  cbr c, b1, b2;
b1:
  call mid(x);
  br b2;
b2:
  ret;
}
fn away(x: i32) {
b0:
  ret;
}
)");
  TargetSpec ts = compute_distances(p, "t");
  CHECK(ts.distance(SourceLoc{"mid", 0, 0}) == 0);
  // descending into mid is one edge
  CHECK(ts.distance(SourceLoc{"top", 1, 0}) == 1);
  CHECK(ts.distance(SourceLoc{"top", 0, 0}) == 2);
  CHECK(ts.distance(SourceLoc{"away", 0, 0}) == kInfiniteDistance);
}

TEST_CASE("branch guard caller reaches the recorded tuple") {
  Program p = parse_program(R"(
fn f(x: i32) { b0: ret; }
fn g(x: i32) {
b0:
  c = cmp sgt i32 x, 10;
  cbr c, call, out;
call:
  call f(x);
  ret;
out:
  ret;
}
)");
  SummarizedProgram sp = summarize_scalar(p, "f", ScalarKind::I32, {12});
  TargetedResult r = run_targeted(sp, "g", compute_distances(p, "f"), quick());
  REQUIRE(r.kind == TargetedKind::VulnTriggered);
  CHECK(r.model == ArgTuple{{ScalarArg{ScalarKind::I32, 12}}});
  CHECK(r.trace.frames.front().function == "f");
  CHECK(r.trace.frames.back().function == "g");
  CHECK(r.solver_queries > 0);
}

TEST_CASE("sanitizing caller is infeasible") {
  Program p = parse_program(R"(
fn f(x: i32) { b0: ret; }
fn g(x: i32) {
b0:
  c = cmp slt i32 x, 8;
  cbr c, call, out;
call:
  call f(x);
  ret;
out:
  ret;
}
)");
  SummarizedProgram sp = summarize_scalar(p, "f", ScalarKind::I32, {9});
  TargetedResult r = run_targeted(sp, "g", compute_distances(p, "f"), quick());
  CHECK(r.kind == TargetedKind::Infeasible);
  CHECK(r.solver_unknowns == 0);
}

TEST_CASE("magic guard that random fuzzing misses") {
  Program p = parse_program(R"(
fn f(x: i32) { b0: ret; }
fn g(x: i32, y: i32) {
b0:
  c = cmp eq i32 x, 0xDEADBEEF;
  cbr c, call, out;
call:
  z = xor i32 y, x;
  call f(z);
  ret;
out:
  ret;
}
)");
  SummarizedProgram sp = summarize_scalar(p, "f", ScalarKind::I32, {77});
  TargetedResult r = run_targeted(sp, "g", compute_distances(p, "f"), quick());
  REQUIRE(r.kind == TargetedKind::VulnTriggered);
  auto x = std::get<ScalarArg>(r.model.values[0]).value;
  auto y = std::get<ScalarArg>(r.model.values[1]).value;
  CHECK(static_cast<std::uint32_t>(x) == 0xDEADBEEF);
  CHECK((static_cast<std::uint32_t>(x) ^ static_cast<std::uint32_t>(y)) == 77);
  CHECK(std::holds_alternative<SummaryHit>(sp.execute("g", r.model).outcome));
}

TEST_CASE("buffers must match record length and contents") {
  Program p = parse_program(R"(
fn f(buf: ptr i8) { b0: ret; }
fn g(buf: ptr i8, k: i32) {
b0:
  c = cmp eq i32 k, 2;
  cbr c, go, out;
go:
  v = load i8 buf, 0;
  d = cmp eq i8 v, 'P';
  cbr d, call, out;
call:
  q = index i8 buf, 1;
  call f(q);
  ret;
out:
  ret;
}
)");
  ArgTuple rec{{BufferArg{ScalarKind::I8, testing::bytes("KZ")}}};
  SummarizedProgram sp = apply_summaries(p, {summarize(p.function("f"), {{rec, provenance("f")}})});
  // The callee sees the caller's buffer from offset 1, so only a caller length
  // of 3 can match; default candidates are the record lengths and 16.
  CHECK(run_targeted(sp, "g", compute_distances(p, "f"), quick()).kind != TargetedKind::VulnTriggered);
  SymexConfig cfg = quick();
  cfg.extra_lengths = {3};
  TargetedResult r = run_targeted(sp, "g", compute_distances(p, "f"), cfg);
  REQUIRE(r.kind == TargetedKind::VulnTriggered);
  CHECK(std::get<BufferArg>(r.model.values[0]).bytes == testing::bytes("PKZ"));
  CHECK(std::get<ScalarArg>(r.model.values[1]).value == 2);
}

TEST_CASE("caller crashes on the way are reported") {
  Program p = parse_program(R"(
fn f(x: i32) { b0: ret; }
fn g(x: i32, y: i32) {
b0:
  q = sdiv i32 100, y;
  c = cmp eq i32 x, 5;
  cbr c, call, out;
call:
  call f(q);
  ret;
out:
  ret;
}
)");
  SummarizedProgram sp = summarize_scalar(p, "f", ScalarKind::I32, {20});
  TargetedResult r = run_targeted(sp, "g", compute_distances(p, "f"), quick());
  CHECK(r.kind == TargetedKind::VulnTriggered);
  REQUIRE(r.caller_crashes.size() == 1);
  CHECK(r.caller_crashes[0].vuln_kind == VulnKind::DivByZero);
  CHECK(r.caller_crashes[0].vuln_loc == SourceLoc{"g", 0, 0});
}

TEST_CASE("usage errors") {
  Program p = parse_program(R"(
fn f(x: i32) { b0: ret; }
fn g(x: i32) { b0: call f(x); ret; }
fn h(pp: ptr ptr i8, x: i32) { b0: call f(x); ret; }
)");
  SummarizedProgram none = apply_summaries(p, {});
  CHECK_THROWS_AS(run_targeted(none, "g", compute_distances(p, "f"), quick()), UsageError);
  SummarizedProgram sp = summarize_scalar(p, "f", ScalarKind::I32, {1});
  CHECK_THROWS_AS(run_targeted(sp, "nope", compute_distances(p, "f"), quick()), UsageError);
  CHECK_THROWS_AS(run_targeted(sp, "h", compute_distances(p, "f"), quick()), UsageError);
}

TEST_CASE("targeted search agrees with brute force on loop-free callers") {
  Rng rng(31337);
  int triggered = 0, infeasible = 0;
  for (int round = 0; round < 40; ++round) {
    std::string text = random_caller(rng);
    CAPTURE(text);
    Program p = parse_program(text);
    std::vector<std::int64_t> recs;
    for (int i = 0; i < 2; ++i) recs.push_back(static_cast<std::int64_t>(rng.below(256)) - 128);
    SummarizedProgram sp = summarize_scalar(p, "f", ScalarKind::I8, recs);

    bool reachable = false;
    for (int a = -128; a < 128 && !reachable; ++a)
      for (int b = -128; b < 128 && !reachable; ++b) {
        ArgTuple t{{ScalarArg{ScalarKind::I8, a}, ScalarArg{ScalarKind::I8, b}}};
        reachable = std::holds_alternative<SummaryHit>(sp.execute("g", t).outcome);
      }

    TargetedResult r = run_targeted(sp, "g", compute_distances(p, "f"), quick());
    REQUIRE(r.kind != TargetedKind::Exhausted);
    CHECK((r.kind == TargetedKind::VulnTriggered) == reachable);
    if (r.kind == TargetedKind::VulnTriggered) {
      ++triggered;
      CHECK(std::holds_alternative<SummaryHit>(sp.execute("g", r.model).outcome));
    } else {
      ++infeasible;
    }
  }
  CHECK(triggered > 0);
  CHECK(infeasible > 0);
}
