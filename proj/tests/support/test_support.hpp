#pragma once

#include "wildfire/expr.hpp"
#include "wildfire/ir.hpp"
#include "wildfire/orchestrator.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/solver.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace wildfire::testing {

#ifndef WILDFIRE_BENCH_DIR
#error "WILDFIRE_BENCH_DIR must point at the benchmark corpus"
#endif

inline std::filesystem::path bench_dir() { return WILDFIRE_BENCH_DIR; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Program load_bench(const std::string& file) { return parse_program(slurp(bench_dir() / file)); }

inline std::vector<std::string> bench_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(bench_dir()))
    if (e.path().extension() == ".ir") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline ByteStream bytes(std::string_view s) { return ByteStream(s.begin(), s.end()); }

// Brute-force ordered-subset test: try every way of picking |a| positions of b.
inline bool brute_subsequence(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t n = b.size();
  if (a.size() > n) return false;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    std::size_t k = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      if (mask & (1u << i)) ok = b[i] == a[k++];
    if (ok) return true;
  }
  return false;
}

inline StackTrace symbolic_trace(const std::vector<int>& symbols) {
  StackTrace st;
  for (int s : symbols) {
    std::string fn(1, static_cast<char>('a' + s));
    st.frames.push_back({SourceLoc{fn, 0, s}, fn});
  }
  return st;
}

// Random bit-vector queries over a few small variables, total width <= max_bits.
class QueryGen {
public:
  explicit QueryGen(std::uint64_t seed) : rng_(seed) {}

  struct Query {
    VarTable vars;
    std::vector<ExprRef> conjuncts;
  };

  Query next(unsigned max_bits = 16) {
    Query q;
    static constexpr unsigned widths[] = {1, 2, 3, 4, 8};
    unsigned used = 0;
    std::size_t nvars = 1 + rng_.below(4);
    for (std::size_t i = 0; i < nvars; ++i) {
      unsigned w = widths[rng_.below(5)];
      if (used + w > max_bits) break;
      used += w;
      q.vars.push_back({"v" + std::to_string(i), w});
    }
    if (q.vars.empty()) q.vars.push_back({"v0", 8});
    std::size_t n = 1 + rng_.below(4);
    for (std::size_t i = 0; i < n; ++i) q.conjuncts.push_back(predicate(q.vars, 3));
    return q;
  }

private:
  static constexpr unsigned kOpWidths[] = {8, 16, 32};

  ExprRef term(const VarTable& vars, unsigned width, int depth) {
    std::uint64_t pick = rng_.below(depth <= 0 ? 3 : 7);
    if (pick == 0) return ex::constant(interesting(width), width);
    if (pick <= 2) {
      int v = static_cast<int>(rng_.below(vars.size()));
      ExprRef x = ex::variable(v, vars[static_cast<std::size_t>(v)].width);
      return x->width < width && rng_.chance(3) ? ex::sext(x, width) : ex::resize(x, width);
    }
    if (pick == 6) {
      ExprRef c = predicate(vars, depth - 1);
      return ex::ite(c, term(vars, width, depth - 1), term(vars, width, depth - 1));
    }
    static constexpr arith::BinOp ops[] = {arith::BinOp::Add, arith::BinOp::Sub,  arith::BinOp::Mul,
                                           arith::BinOp::And, arith::BinOp::Or,   arith::BinOp::Xor,
                                           arith::BinOp::Shl, arith::BinOp::LShr, arith::BinOp::AShr,
                                           arith::BinOp::UDiv, arith::BinOp::URem, arith::BinOp::SDiv,
                                           arith::BinOp::SRem};
    auto op = ops[rng_.below(std::size(ops))];
    ExprRef a = term(vars, width, depth - 1);
    ExprRef b = term(vars, width, depth - 1);
    if (arith::is_division(op))  // keep queries total
      b = ex::ite(ex::compare(CmpPred::Eq, b, ex::constant(0, width)), ex::constant(1, width), b);
    return ex::binary(op, a, b);
  }

  ExprRef predicate(const VarTable& vars, int depth) {
    unsigned w = kOpWidths[rng_.below(3)];
    if (rng_.chance(3)) w = vars[rng_.below(vars.size())].width;
    auto pred = static_cast<CmpPred>(rng_.below(10));
    ExprRef c = ex::compare(pred, term(vars, w, depth), term(vars, w, depth));
    return rng_.chance(6) ? ex::logical_not(c) : c;
  }

  std::uint64_t interesting(unsigned width) {
    switch (rng_.below(4)) {
    case 0: return rng_.below(4);
    case 1: return arith::mask(width) - rng_.below(3);
    case 2: return arith::trunc(1ULL << rng_.below(width), width);
    default: return arith::trunc(rng_.next(), width);
    }
  }

  Rng rng_;
};

// Enumerate every assignment of a query's variables; true if one satisfies it.
inline bool enumerate_sat(const QueryGen::Query& q) {
  unsigned total = 0;
  for (const auto& v : q.vars) total += v.width;
  Model m(q.vars.size(), 0);
  for (std::uint64_t code = 0; code < (1ULL << total); ++code) {
    unsigned shift = 0;
    for (std::size_t i = 0; i < q.vars.size(); ++i) {
      m[i] = (code >> shift) & arith::mask(q.vars[i].width);
      shift += q.vars[i].width;
    }
    bool all = true;
    for (const auto& c : q.conjuncts)
      if (!ex::eval(c, m)) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

}  // namespace wildfire::testing
