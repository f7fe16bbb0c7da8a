#include "doctest.h"

#include "test_support.hpp"

#include "wildfire/corpus_min.hpp"
#include "wildfire/fuzz.hpp"

using namespace wildfire;

namespace {

// Each input byte selects which of five independent branches are taken.
const char* kBits = R"(
fn bits(x: i8) {
b0:
  a = and i8 x, 1;
  ca = cmp ne i8 a, 0;
  cbr ca, t0, f0;
t0:
  br n1;
f0:
  br n1;
n1:
  b = and i8 x, 2;
  cb = cmp ne i8 b, 0;
  cbr cb, t1, f1;
t1:
  br n2;
f1:
  br n2;
n2:
  c = and i8 x, 4;
  cc = cmp ne i8 c, 0;
  cbr cc, t2, done;
t2:
  br done;
done:
  ret;
}
fn pick(x: i8, y: i8, z: i8) {
b0:
  c = cmp eq i8 z, 'a';
  cbr c, hit, miss;
hit:
  ret;
miss:
  ret;
}
fn crashy(x: i8, y: i16) {
b0:
  c = cmp sgt i16 y, 1000;
  cbr c, boom, fine;
boom:
  d = sdiv i16 y, 0;
  ret;
fine:
  ret;
}
)";

std::set<std::size_t> edges_of(const Program& p, std::string_view fn, const ByteStream& in) {
  ExecResult r = execute(p, fn, decode_args(p.function(fn), in));
  std::set<std::size_t> out;
  for (std::size_t e = 0; e < r.coverage.hits.size(); ++e)
    if (r.coverage.covers(e)) out.insert(e);
  return out;
}

// Smallest number of inputs whose coverage union equals the full union.
std::size_t brute_cover(const std::vector<std::set<std::size_t>>& sets) {
  std::set<std::size_t> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());
  std::size_t best = sets.size();
  for (std::uint32_t mask = 0; mask < (1u << sets.size()); ++mask) {
    std::set<std::size_t> u;
    for (std::size_t i = 0; i < sets.size(); ++i)
      if (mask & (1u << i)) u.insert(sets[i].begin(), sets[i].end());
    if (u == all) best = std::min<std::size_t>(best, static_cast<std::size_t>(__builtin_popcount(mask)));
  }
  return best;
}

}  // namespace

TEST_CASE("cmin drops inputs with duplicate coverage") {
  Program p = parse_program(kBits);
  MinimizedCorpus m = cmin(p, "bits", {ByteStream{1}, ByteStream{9}});
  CHECK(m.kept.size() == 1);
  CHECK(m.dropped_count == 1);
  CHECK(m.coverage_before == m.coverage_after);
}

TEST_CASE("cmin keeps inputs with disjoint coverage") {
  Program p = parse_program(kBits);
  MinimizedCorpus m = cmin(p, "bits", {ByteStream{0}, ByteStream{7}});
  CHECK(m.kept.size() == 2);
}

TEST_CASE("cmin prefers a small input covering the union of two others") {
  Program p = parse_program(kBits);
  // #3 (value 3, one byte) covers the union of #1 (value 1) and #2 (value 2).
  std::vector<ByteStream> corpus{ByteStream{1, 0, 0}, ByteStream{2, 0}, ByteStream{3}, ByteStream{4, 0, 0, 0},
                                 ByteStream{0, 0, 0, 0, 0}};
  MinimizedCorpus m = cmin(p, "bits", corpus);
  std::vector<std::set<std::size_t>> sets;
  for (const auto& c : corpus) sets.push_back(edges_of(p, "bits", c));
  CHECK(std::find(m.kept.begin(), m.kept.end(), ByteStream{3}) != m.kept.end());
  CHECK(std::find(m.kept.begin(), m.kept.end(), ByteStream{1, 0, 0}) == m.kept.end());
  CHECK(std::find(m.kept.begin(), m.kept.end(), ByteStream{2, 0}) == m.kept.end());
  CHECK(m.kept.size() == brute_cover(sets));
}

TEST_CASE("cmin preserves the union on random corpora and stays near the optimum") {
  Program p = parse_program(kBits);
  Rng rng(17);
  for (int round = 0; round < 60; ++round) {
    std::vector<ByteStream> corpus(1 + rng.below(10));
    for (auto& c : corpus) c = ByteStream{static_cast<std::uint8_t>(rng.below(8))};
    MinimizedCorpus m = cmin(p, "bits", corpus);
    std::set<std::size_t> before, after;
    std::vector<std::set<std::size_t>> sets;
    for (const auto& c : corpus) {
      sets.push_back(edges_of(p, "bits", c));
      before.insert(sets.back().begin(), sets.back().end());
    }
    for (const auto& c : m.kept) {
      auto e = edges_of(p, "bits", c);
      after.insert(e.begin(), e.end());
    }
    CHECK(before == after);
    CHECK(m.coverage_after == after);
    CHECK(m.kept.size() + m.dropped_count == corpus.size());
    std::size_t opt = brute_cover(sets);
    CHECK(m.kept.size() >= opt);
    CHECK(m.kept.size() <= opt + 1);
  }
}

TEST_CASE("tmin keeps the executed path") {
  Program p = parse_program(kBits);
  ByteStream in{'a', 0, 0, 0, 0};
  Program q = parse_program(R"(
fn first(c: i8) {
b0:
  x = cmp eq i8 c, 'a';
  cbr x, yes, no;
yes:
  ret;
no:
  ret;
}
)");
  CHECK(tmin(q, "first", in) == ByteStream{'a'});
  CHECK(tmin(q, "first", ByteStream{'a'}) == ByteStream{'a'});
  ByteStream three{0, 0, 'a', 0, 0};
  ByteStream t = tmin(p, "pick", three);
  CHECK(t.size() == 3);
  CHECK(t[2] == 'a');
  CHECK(execution_key(p, "pick", t) == execution_key(p, "pick", three));
}

TEST_CASE("tmin on a crash reproduces the crash key and is idempotent") {
  Program p = parse_program(kBits);
  ByteStream in{9, 0xE9, 0x03, 0x55, 0x66, '/', '/', 1};
  ExecutionKey k = execution_key(p, "crashy", in);
  REQUIRE(k.kind == 1);
  ByteStream t = tmin(p, "crashy", in);
  CHECK(t.size() <= in.size());
  ExecutionKey kt = execution_key(p, "crashy", t);
  CHECK(kt.vuln_loc == k.vuln_loc);
  CHECK(kt.vuln_kind == k.vuln_kind);
  CHECK(kt.stack == k.stack);
  CHECK(tmin(p, "crashy", t) == t);
}
