#include "wildfire/solver.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <unordered_map>

namespace wildfire {

using arith::BinOp;
using arith::mask;
using Clock = std::chrono::steady_clock;

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Sat: return "sat";
    case SolveStatus::Unsat: return "unsat";
    case SolveStatus::Unknown: return "unknown";
  }
  return "?";
}

bool satisfies(const std::vector<ExprRef>& query, const Model& m) {
  return std::all_of(query.begin(), query.end(), [&](const ExprRef& c) { return ex::eval(c, m) != 0; });
}

namespace {

// ---- known bits -----------------------------------------------------------

struct KB {
  std::uint64_t known = 0;
  std::uint64_t val = 0;
};

bool full(KB k, unsigned w) { return (k.known & mask(w)) == mask(w); }
KB exact(std::uint64_t v, unsigned w) { return {mask(w), v & mask(w)}; }
KB unknown() { return {0, 0}; }

std::uint64_t umin(KB k, unsigned w) { return k.val & k.known & mask(w); }
std::uint64_t umax(KB k, unsigned w) { return ((k.val & k.known) | ~k.known) & mask(w); }

std::int64_t smin(KB k, unsigned w) {
  const std::uint64_t sign = 1ULL << (w - 1);
  std::uint64_t v = k.val & k.known & mask(w);
  if (!(k.known & sign)) v |= sign;
  return arith::to_signed(v, w);
}

std::int64_t smax(KB k, unsigned w) {
  const std::uint64_t sign = 1ULL << (w - 1);
  std::uint64_t v = ((k.val & k.known) | ~k.known) & mask(w);
  if (!(k.known & sign)) v &= ~sign;
  return arith::to_signed(v, w);
}

KB kb_add(KB a, KB b, unsigned w, bool carry_in) {
  if (full(a, w) && full(b, w)) return exact(a.val + b.val + (carry_in ? 1 : 0), w);
  KB r;
  bool ck = true, cv = carry_in;
  for (unsigned i = 0; i < w; ++i) {
    const std::uint64_t bit = 1ULL << i;
    const bool ak = a.known & bit, bk = b.known & bit;
    const bool av = a.val & bit, bv = b.val & bit;
    if (ak && bk && ck) {
      r.known |= bit;
      if (av ^ bv ^ cv) r.val |= bit;
    }
    const int ones = (ak && av) + (bk && bv) + (ck && cv);
    const int zeros = (ak && !av) + (bk && !bv) + (ck && !cv);
    if (ones >= 2) {
      ck = true;
      cv = true;
    } else if (zeros >= 2) {
      ck = true;
      cv = false;
    } else {
      ck = false;
    }
  }
  return r;
}

unsigned trailing_known(KB k, unsigned w) {
  unsigned n = 0;
  while (n < w && (k.known >> n) & 1) ++n;
  return n;
}

unsigned trailing_zeros_known(KB k, unsigned w) {
  unsigned n = 0;
  while (n < w && ((k.known >> n) & 1) && !((k.val >> n) & 1)) ++n;
  return n;
}

KB kb_mul(KB a, KB b, unsigned w) {
  if (full(a, w) && full(b, w)) return exact(a.val * b.val, w);
  KB r;
  const unsigned low = std::min(trailing_known(a, w), trailing_known(b, w));
  if (low > 0) {
    r.known = mask(low);
    r.val = (a.val * b.val) & mask(low);
  }
  const unsigned z = std::min(w, trailing_zeros_known(a, w) + trailing_zeros_known(b, w));
  if (z > low) {
    r.known = mask(z);
    r.val &= ~mask(z);
  }
  // a known zero factor
  if ((full(a, w) && a.val == 0) || (full(b, w) && b.val == 0)) return exact(0, w);
  return r;
}

KB kb_bin(BinOp op, KB a, KB b, unsigned w) {
  const std::uint64_t m = mask(w);
  switch (op) {
    case BinOp::Add: return kb_add(a, b, w, false);
    case BinOp::Sub: return kb_add(a, KB{b.known, ~b.val & b.known}, w, true);
    case BinOp::Mul: return kb_mul(a, b, w);
    case BinOp::And: {
      const std::uint64_t zero = (a.known & ~a.val) | (b.known & ~b.val);
      const std::uint64_t both = a.known & b.known;
      return {(zero | both) & m, a.val & b.val & both & m};
    }
    case BinOp::Or: {
      const std::uint64_t one = (a.known & a.val) | (b.known & b.val);
      const std::uint64_t both = a.known & b.known;
      return {(one | both) & m, one & m};
    }
    case BinOp::Xor: {
      const std::uint64_t both = a.known & b.known;
      return {both & m, (a.val ^ b.val) & both & m};
    }
    case BinOp::Shl:
    case BinOp::LShr:
    case BinOp::AShr: {
      if (!full(b, w)) return full(a, w) && a.val == 0 ? exact(0, w) : unknown();
      const unsigned s = static_cast<unsigned>(b.val % w);
      if (op == BinOp::Shl) return {((a.known << s) | mask(s)) & m, (a.val << s) & m};
      const std::uint64_t high = m & ~(m >> s);
      if (op == BinOp::LShr) return {((a.known & m) >> s) | high, (a.val & m) >> s};
      const std::uint64_t sign = 1ULL << (w - 1);
      KB r{(a.known & m) >> s, (a.val & a.known & m) >> s};
      if (a.known & sign) {
        r.known |= high;
        if (a.val & sign) r.val |= high;
      }
      return r;
    }
    default:
      if (full(a, w) && full(b, w)) return exact(arith::binary(op, a.val, b.val, w), w);
      return unknown();
  }
}

KB kb_cmp(CmpPred p, KB a, KB b, unsigned w) {
  if (full(a, w) && full(b, w)) return exact(arith::compare(p, a.val, b.val, w) ? 1 : 0, 1);
  auto known_bool = [](std::optional<bool> v) { return v ? exact(*v ? 1 : 0, 1) : unknown(); };
  std::optional<bool> r;
  switch (p) {
    case CmpPred::Eq:
    case CmpPred::Ne: {
      const std::uint64_t both = a.known & b.known & mask(w);
      if ((a.val ^ b.val) & both) r = (p == CmpPred::Ne);
      break;
    }
    case CmpPred::Ult:
      if (umax(a, w) < umin(b, w)) r = true;
      else if (umin(a, w) >= umax(b, w)) r = false;
      break;
    case CmpPred::Ule:
      if (umax(a, w) <= umin(b, w)) r = true;
      else if (umin(a, w) > umax(b, w)) r = false;
      break;
    case CmpPred::Ugt: return kb_cmp(CmpPred::Ult, b, a, w);
    case CmpPred::Uge: return kb_cmp(CmpPred::Ule, b, a, w);
    case CmpPred::Slt:
      if (smax(a, w) < smin(b, w)) r = true;
      else if (smin(a, w) >= smax(b, w)) r = false;
      break;
    case CmpPred::Sle:
      if (smax(a, w) <= smin(b, w)) r = true;
      else if (smin(a, w) > smax(b, w)) r = false;
      break;
    case CmpPred::Sgt: return kb_cmp(CmpPred::Slt, b, a, w);
    case CmpPred::Sge: return kb_cmp(CmpPred::Sle, b, a, w);
  }
  return known_bool(r);
}

// ---- tape -----------------------------------------------------------------

struct Node {
  const Expr* e;
  int a = -1, b = -1, c = -1;
};

struct Tape {
  std::vector<Node> nodes;
  std::vector<int> roots;
  std::unordered_map<const Expr*, int> index;

  int add(const ExprRef& root) {
    // iterative post-order
    std::vector<std::pair<const Expr*, bool>> stack{{root.get(), false}};
    while (!stack.empty()) {
      auto [e, expanded] = stack.back();
      stack.pop_back();
      if (index.count(e)) continue;
      if (!expanded) {
        stack.push_back({e, true});
        for (const ExprRef* ch : {&e->a, &e->b, &e->c})
          if (*ch && !index.count(ch->get())) stack.push_back({ch->get(), false});
        continue;
      }
      Node n{e};
      if (e->a) n.a = index.at(e->a.get());
      if (e->b) n.b = index.at(e->b.get());
      if (e->c) n.c = index.at(e->c.get());
      index.emplace(e, static_cast<int>(nodes.size()));
      nodes.push_back(n);
    }
    return index.at(root.get());
  }
};

enum class Verdict { False, Undecided, True };

Verdict eval_tape(const Tape& t, const std::vector<KB>& var_kb, std::vector<KB>& vals) {
  vals.resize(t.nodes.size());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const Expr& e = *t.nodes[i].e;
    const Node& n = t.nodes[i];
    const unsigned w = e.width;
    switch (e.kind) {
      case ExprKind::Const: vals[i] = exact(e.value, w); break;
      case ExprKind::Var: vals[i] = var_kb[static_cast<std::size_t>(e.var)]; break;
      case ExprKind::Bin: vals[i] = kb_bin(e.op, vals[n.a], vals[n.b], w); break;
      case ExprKind::Cmp: vals[i] = kb_cmp(e.pred, vals[n.a], vals[n.b], e.a->width); break;
      case ExprKind::Ite: {
        KB c = vals[n.c];
        if (c.known & 1) {
          vals[i] = (c.val & 1) ? vals[n.a] : vals[n.b];
        } else {
          KB x = vals[n.a], y = vals[n.b];
          std::uint64_t agree = x.known & y.known & ~(x.val ^ y.val);
          vals[i] = {agree, x.val & agree};
        }
        break;
      }
      case ExprKind::ZExt: {
        KB x = vals[n.a];
        std::uint64_t high = mask(w) & ~mask(e.a->width);
        vals[i] = {x.known | high, x.val & mask(e.a->width)};
        break;
      }
      case ExprKind::SExt: {
        KB x = vals[n.a];
        const unsigned aw = e.a->width;
        std::uint64_t high = mask(w) & ~mask(aw);
        std::uint64_t sign = 1ULL << (aw - 1);
        KB r{x.known & mask(aw), x.val & x.known & mask(aw)};
        if (x.known & sign) {
          r.known |= high;
          if (x.val & sign) r.val |= high;
        }
        vals[i] = r;
        break;
      }
      case ExprKind::Trunc: vals[i] = {vals[n.a].known & mask(w), vals[n.a].val & mask(w)}; break;
    }
  }
  bool all = true;
  for (int r : t.roots) {
    KB k = vals[static_cast<std::size_t>(r)];
    if (k.known & 1) {
      if (!(k.val & 1)) return Verdict::False;
    } else {
      all = false;
    }
  }
  return all ? Verdict::True : Verdict::Undecided;
}

// ---- propagation ----------------------------------------------------------

struct Pin {
  int var;
  std::uint64_t value;
};

std::uint64_t mod_inverse(std::uint64_t a, unsigned w) {
  // Newton iteration, a odd
  std::uint64_t x = a;
  for (int i = 0; i < 6; ++i) x *= 2 - a * x;
  return x & mask(w);
}

/// Solves `e == v` for the single variable under a chain of invertible
/// operations. nullopt: not invertible; a Pin with var -1: no solution.
std::optional<Pin> invert(const ExprRef& e, std::uint64_t v) {
  const unsigned w = e->width;
  switch (e->kind) {
    case ExprKind::Var: return Pin{e->var, v & mask(w)};
    case ExprKind::ZExt:
      if (v > mask(e->a->width)) return Pin{-1, 0};
      return invert(e->a, v);
    case ExprKind::SExt:
      if (arith::sext(v, e->a->width, w) != v) return Pin{-1, 0};
      return invert(e->a, arith::trunc(v, e->a->width));
    case ExprKind::Bin: {
      const bool ka = e->a->is_const(), kb = e->b->is_const();
      if (ka == kb) return std::nullopt;
      const ExprRef& x = ka ? e->b : e->a;
      const std::uint64_t k = ka ? e->a->value : e->b->value;
      switch (e->op) {
        case BinOp::Add: return invert(x, (v - k) & mask(w));
        case BinOp::Sub: return invert(x, (kb ? v + k : k - v) & mask(w));
        case BinOp::Xor: return invert(x, (v ^ k) & mask(w));
        case BinOp::Mul:
          if (k & 1) return invert(x, (v * mod_inverse(k, w)) & mask(w));
          return std::nullopt;
        default: return std::nullopt;
      }
    }
    default: return std::nullopt;
  }
}

// Interval per variable over both the unsigned and the signed view.
struct Range {
  __int128 ulo, uhi, slo, shi;
};

Range full_range(unsigned w) {
  return {0, static_cast<__int128>(mask(w)), -(static_cast<__int128>(1) << (w - 1)),
          (static_cast<__int128>(1) << (w - 1)) - 1};
}

void narrow(__int128& lo, __int128& hi, CmpPred p, __int128 k) {
  switch (p) {
    case CmpPred::Eq: lo = std::max(lo, k); hi = std::min(hi, k); break;
    case CmpPred::Ne:
      if (k == lo) ++lo;
      else if (k == hi) --hi;
      break;
    case CmpPred::Ult:
    case CmpPred::Slt: hi = std::min(hi, k - 1); break;
    case CmpPred::Ule:
    case CmpPred::Sle: hi = std::min(hi, k); break;
    case CmpPred::Ugt:
    case CmpPred::Sgt: lo = std::max(lo, k + 1); break;
    case CmpPred::Uge:
    case CmpPred::Sge: lo = std::max(lo, k); break;
  }
}

bool is_signed_pred(CmpPred p) {
  return p == CmpPred::Slt || p == CmpPred::Sle || p == CmpPred::Sgt || p == CmpPred::Sge;
}
bool is_unsigned_pred(CmpPred p) {
  return p == CmpPred::Ult || p == CmpPred::Ule || p == CmpPred::Ugt || p == CmpPred::Uge;
}

void apply_range(const ExprRef& c, std::map<int, Range>& ranges, const VarTable& vars) {
  if (c->kind != ExprKind::Cmp || !c->b->is_const()) return;
  const ExprRef& lhs = c->a;
  const unsigned cw = lhs->width;
  const CmpPred p = c->pred;
  const ExprRef* var = nullptr;
  bool use_unsigned = false, use_signed = false;
  if (lhs->kind == ExprKind::Var) {
    var = &lhs;
    use_unsigned = !is_signed_pred(p);
    use_signed = !is_unsigned_pred(p);
  } else if (lhs->kind == ExprKind::ZExt && lhs->a->kind == ExprKind::Var) {
    var = &lhs->a;
    use_unsigned = !is_signed_pred(p);
  } else if (lhs->kind == ExprKind::SExt && lhs->a->kind == ExprKind::Var) {
    var = &lhs->a;
    use_signed = !is_unsigned_pred(p);
  }
  if (!var) return;
  const int id = (*var)->var;
  auto it = ranges.find(id);
  if (it == ranges.end()) it = ranges.emplace(id, full_range(vars[static_cast<std::size_t>(id)].width)).first;
  Range& r = it->second;
  if (use_unsigned) narrow(r.ulo, r.uhi, p, static_cast<__int128>(c->b->value));
  if (use_signed) narrow(r.slo, r.shi, p, static_cast<__int128>(arith::to_signed(c->b->value, cw)));
}

/// Intersects the unsigned and signed views, returning up to two unsigned
/// intervals.
std::vector<std::pair<__int128, __int128>> pieces(const Range& r, unsigned w) {
  const __int128 mod = static_cast<__int128>(1) << w;
  std::vector<std::pair<__int128, __int128>> signed_parts;
  if (r.slo <= std::min<__int128>(r.shi, -1)) signed_parts.push_back({r.slo + mod, std::min<__int128>(r.shi, -1) + mod});
  if (std::max<__int128>(r.slo, 0) <= r.shi) signed_parts.push_back({std::max<__int128>(r.slo, 0), r.shi});
  std::vector<std::pair<__int128, __int128>> out;
  for (auto [lo, hi] : signed_parts) {
    __int128 a = std::max(lo, r.ulo), b = std::min(hi, r.uhi);
    if (a <= b) out.push_back({a, b});
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- search ---------------------------------------------------------------

class Search {
public:
  Search(const std::vector<ExprRef>& conj, const std::vector<int>& order, const VarTable& vars,
         const std::map<int, std::uint64_t>& prefer, Clock::time_point deadline)
      : vars_(vars), order_(order), deadline_(deadline), var_kb_(vars.size()) {
    for (const auto& c : conj) tape_.roots.push_back(tape_.add(c));
    for (int v : order_) {
      auto it = prefer.find(v);
      prefer_.push_back(it == prefer.end() ? 0 : it->second);
    }
  }

  SolveStatus run(Model& model) {
    Verdict v = eval_tape(tape_, var_kb_, scratch_);
    if (v == Verdict::False) return SolveStatus::Unsat;
    SolveStatus s = v == Verdict::True ? SolveStatus::Sat : dfs(0, 0);
    if (s == SolveStatus::Sat) {
      for (std::size_t i = 0; i < order_.size(); ++i) {
        auto id = static_cast<std::size_t>(order_[i]);
        const unsigned w = vars_[id].width;
        KB k = var_kb_[id];
        model[id] = ((k.val & k.known) | (prefer_[i] & ~k.known)) & mask(w);
      }
    }
    return s;
  }

  std::uint64_t nodes() const { return nodes_; }

private:
  SolveStatus dfs(std::size_t vi, unsigned bit) {
    if (vi == order_.size()) return SolveStatus::Unsat;
    const auto id = static_cast<std::size_t>(order_[vi]);
    const unsigned w = vars_[id].width;
    std::size_t next_vi = vi;
    unsigned next_bit = bit + 1;
    if (next_bit == w) {
      ++next_vi;
      next_bit = 0;
    }
    const std::uint64_t b = 1ULL << bit;
    const bool first = (prefer_[vi] >> bit) & 1;
    bool unknown = false;
    for (bool choice : {first, !first}) {
      if ((++nodes_ & 255) == 0 && Clock::now() > deadline_) return SolveStatus::Unknown;
      KB& k = var_kb_[id];
      k.known |= b;
      k.val = choice ? (k.val | b) : (k.val & ~b);
      Verdict v = eval_tape(tape_, var_kb_, scratch_);
      if (v == Verdict::True) return SolveStatus::Sat;
      if (v == Verdict::Undecided) {
        SolveStatus s = dfs(next_vi, next_bit);
        if (s == SolveStatus::Sat) return s;
        if (s == SolveStatus::Unknown) {
          unknown = true;
          break;
        }
      }
    }
    KB& k = var_kb_[id];
    k.known &= ~b;
    k.val &= ~b;
    return unknown ? SolveStatus::Unknown : SolveStatus::Unsat;
  }

  const VarTable& vars_;
  std::vector<int> order_;
  std::vector<std::uint64_t> prefer_;
  Clock::time_point deadline_;
  Tape tape_;
  std::vector<KB> var_kb_;
  std::vector<KB> scratch_;
  std::uint64_t nodes_ = 0;
};

void collect_consts(const ExprRef& e, std::set<std::uint64_t>& out) {
  if (!e) return;
  if (e->is_const()) {
    out.insert(e->value);
    return;
  }
  collect_consts(e->a, out);
  collect_consts(e->b, out);
  collect_consts(e->c, out);
}

/// Concrete probing over values drawn from the query constants and small
/// magnitudes. Finds models for shapes the bitwise search decides late,
/// such as division by a variable. Only ever proves Sat.
bool probe(const std::vector<ExprRef>& conj, const std::vector<int>& order, const VarTable& vars,
           const std::map<int, std::uint64_t>& prefer, Model& model, Clock::time_point deadline) {
  std::set<std::uint64_t> consts;
  for (const auto& c : conj) collect_consts(c, consts);
  std::vector<std::uint64_t> ks(consts.begin(), consts.end());
  if (ks.size() > 24) ks.resize(24);

  std::vector<std::vector<std::uint64_t>> cand;
  for (int v : order) {
    const unsigned w = vars[static_cast<std::size_t>(v)].width;
    std::set<std::uint64_t> seen;
    std::vector<std::uint64_t> list;
    auto add = [&](std::uint64_t x) {
      x &= mask(w);
      if (seen.insert(x).second) list.push_back(x);
    };
    if (auto it = prefer.find(v); it != prefer.end()) add(it->second);
    for (std::uint64_t i = 0; i <= 16; ++i) {
      add(i);
      add(0 - i);
    }
    for (std::uint64_t k : ks) {
      add(k);
      add(k + 1);
      add(k - 1);
      add(0 - k);
      for (std::uint64_t d : ks)
        if (d != 0 && d <= k) add(k / d);
    }
    cand.push_back(std::move(list));
  }

  auto holds = [&](const Model& m) {
    for (const auto& c : conj)
      if (ex::eval(c, m) == 0) return false;
    return true;
  };

  Model m = model;
  double product = 1;
  for (const auto& c : cand) product *= static_cast<double>(c.size());
  std::size_t evals = 0;
  if (product <= 60000) {
    std::vector<std::size_t> pos(order.size(), 0);
    while (true) {
      for (std::size_t i = 0; i < order.size(); ++i) m[static_cast<std::size_t>(order[i])] = cand[i][pos[i]];
      if (holds(m)) {
        model = m;
        return true;
      }
      if ((++evals & 1023) == 0 && Clock::now() > deadline) return false;
      std::size_t i = 0;
      while (i < pos.size() && ++pos[i] == cand[i].size()) pos[i++] = 0;
      if (i == pos.size()) return false;
    }
  }
  // too many combinations: sweep one variable at a time
  auto score = [&](const Model& mm) {
    std::size_t n = 0;
    for (const auto& c : conj) n += ex::eval(c, mm) != 0;
    return n;
  };
  for (std::size_t i = 0; i < order.size(); ++i) m[static_cast<std::size_t>(order[i])] = cand[i][0];
  std::size_t best = score(m);
  for (int round = 0; round < 4; ++round) {
    bool improved = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto id = static_cast<std::size_t>(order[i]);
      for (std::uint64_t x : cand[i]) {
        std::uint64_t old = m[id];
        m[id] = x;
        std::size_t sc = score(m);
        if (sc > best) {
          best = sc;
          improved = true;
        } else {
          m[id] = old;
        }
        if ((++evals & 255) == 0 && Clock::now() > deadline) return false;
      }
      if (best == conj.size()) {
        model = m;
        return true;
      }
    }
    if (!improved) break;
  }
  return false;
}

void flatten(const ExprRef& c, std::vector<ExprRef>& out) {
  if (c->kind == ExprKind::Bin && c->op == BinOp::And && c->width == 1) {
    flatten(c->a, out);
    flatten(c->b, out);
  } else {
    out.push_back(c);
  }
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

SolveResult solve(const std::vector<ExprRef>& query, const VarTable& vars, const SolverOptions& opts) {
  const auto deadline = Clock::now() + opts.budget;
  SolveResult res;
  res.model.assign(vars.size(), 0);
  if (opts.hint && opts.hint->size() == vars.size() && satisfies(query, *opts.hint)) {
    res.status = SolveStatus::Sat;
    res.model = *opts.hint;
    return res;
  }

  std::vector<ExprRef> cs;
  for (const auto& c : query) flatten(c, cs);

  auto unsat = [&] {
    res.status = SolveStatus::Unsat;
    res.model.assign(vars.size(), 0);
    return res;
  };

  auto pin_all = [&](int var, std::uint64_t value) {
    res.model[static_cast<std::size_t>(var)] = value;
    std::vector<ExprRef> next;
    for (const auto& c : cs) flatten(ex::substitute(c, var, value), next);
    cs = std::move(next);
  };

  std::map<int, std::uint64_t> prefer;
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<ExprRef> live;
    for (const auto& c : cs) {
      if (c->is_const()) {
        if (c->value == 0) return unsat();
        continue;
      }
      live.push_back(c);
    }
    cs = std::move(live);

    for (const auto& c : cs) {
      if (c->kind == ExprKind::Cmp && c->pred == CmpPred::Eq && c->b->is_const()) {
        if (auto pin = invert(c->a, c->b->value)) {
          if (pin->var < 0) return unsat();
          pin_all(pin->var, pin->value);
          changed = true;
          break;
        }
      }
    }
    if (changed) continue;

    std::map<int, Range> ranges;
    for (const auto& c : cs) apply_range(c, ranges, vars);
    prefer.clear();
    for (const auto& [id, r] : ranges) {
      const unsigned w = vars[static_cast<std::size_t>(id)].width;
      auto ps = pieces(r, w);
      if (ps.empty()) return unsat();
      if (ps.size() == 1 && ps[0].first == ps[0].second) {
        pin_all(id, static_cast<std::uint64_t>(ps[0].first));
        changed = true;
        break;
      }
      // prefer the low end of the first non-negative piece
      prefer[id] = static_cast<std::uint64_t>(ps.front().first);
    }
  }

  if (cs.empty()) {
    res.status = SolveStatus::Sat;
    return res;
  }

  // group conjuncts by shared variables
  std::vector<std::set<int>> cvars(cs.size());
  UnionFind uf(vars.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    ex::collect_vars(cs[i], cvars[i]);
    if (cvars[i].empty() && ex::eval(cs[i], res.model) == 0) return unsat();
    for (int v : cvars[i]) uf.unite(v, *cvars[i].begin());
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cs.size(); ++i)
    if (!cvars[i].empty()) groups[uf.find(*cvars[i].begin())].push_back(i);

  bool unknown = false;
  for (const auto& [root, members] : groups) {
    std::vector<ExprRef> conj;
    std::map<int, int> occurrences;
    for (std::size_t i : members) {
      conj.push_back(cs[i]);
      for (int v : cvars[i]) ++occurrences[v];
    }
    std::vector<int> order;
    for (const auto& [v, n] : occurrences) order.push_back(v);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return occurrences[a] > occurrences[b]; });
    if (probe(conj, order, vars, prefer, res.model, deadline)) continue;
    Search search(conj, order, vars, prefer, deadline);
    SolveStatus s = search.run(res.model);
    res.search_nodes += search.nodes();
    if (s == SolveStatus::Unsat) return unsat();
    if (s == SolveStatus::Unknown) unknown = true;
  }
  if (unknown) {
    res.status = SolveStatus::Unknown;
    return res;
  }
  res.status = satisfies(query, res.model) ? SolveStatus::Sat : SolveStatus::Unknown;
  return res;
}

}  // namespace wildfire
