#include "wildfire/expr.hpp"

#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace wildfire::ex {

using arith::BinOp;
using arith::mask;

namespace {

ExprRef make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool is_value(const ExprRef& e, std::uint64_t v) { return e->is_const() && e->value == v; }

bool is_bool_expr(const ExprRef& e) { return e->width == 1; }

}  // namespace

CmpPred negate(CmpPred p) {
  switch (p) {
    case CmpPred::Eq: return CmpPred::Ne;
    case CmpPred::Ne: return CmpPred::Eq;
    case CmpPred::Slt: return CmpPred::Sge;
    case CmpPred::Sge: return CmpPred::Slt;
    case CmpPred::Sle: return CmpPred::Sgt;
    case CmpPred::Sgt: return CmpPred::Sle;
    case CmpPred::Ult: return CmpPred::Uge;
    case CmpPred::Uge: return CmpPred::Ult;
    case CmpPred::Ule: return CmpPred::Ugt;
    case CmpPred::Ugt: return CmpPred::Ule;
  }
  return p;
}

ExprRef constant(std::uint64_t v, unsigned width) {
  Expr e;
  e.kind = ExprKind::Const;
  e.width = width;
  e.value = arith::trunc(v, width);
  return make(std::move(e));
}

ExprRef boolean(bool v) {
  static const ExprRef t = constant(1, 1);
  static const ExprRef f = constant(0, 1);
  return v ? t : f;
}

ExprRef variable(int id, unsigned width) {
  Expr e;
  e.kind = ExprKind::Var;
  e.width = width;
  e.var = id;
  return make(std::move(e));
}

ExprRef binary(BinOp op, ExprRef a, ExprRef b) {
  if (a->width != b->width) throw std::logic_error("binary: width mismatch");
  const unsigned w = a->width;
  if (a->is_const() && b->is_const()) return constant(arith::binary(op, a->value, b->value, w), w);
  switch (op) {
    case BinOp::Add:
      if (is_value(b, 0)) return a;
      if (is_value(a, 0)) return b;
      break;
    case BinOp::Sub:
    case BinOp::Shl:
    case BinOp::LShr:
    case BinOp::AShr:
      if (is_value(b, 0)) return a;
      break;
    case BinOp::Or:
    case BinOp::Xor:
      if (is_value(b, 0)) return a;
      if (is_value(a, 0)) return b;
      break;
    case BinOp::And:
      if (is_value(b, 0) || is_value(a, 0)) return constant(0, w);
      if (is_value(b, mask(w))) return a;
      if (is_value(a, mask(w))) return b;
      break;
    case BinOp::Mul:
      if (is_value(b, 0) || is_value(a, 0)) return constant(0, w);
      if (is_value(b, 1)) return a;
      if (is_value(a, 1)) return b;
      break;
    default: break;
  }
  // boolean negation of a comparison folds into the comparison
  if (op == BinOp::Xor && w == 1) {
    if (is_value(b, 1) && a->kind == ExprKind::Cmp) return compare(negate(a->pred), a->a, a->b);
    if (is_value(a, 1) && b->kind == ExprKind::Cmp) return compare(negate(b->pred), b->a, b->b);
  }
  Expr e;
  e.kind = ExprKind::Bin;
  e.width = w;
  e.op = op;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(std::move(e));
}

ExprRef compare(CmpPred pred, ExprRef a, ExprRef b) {
  if (a->width != b->width) throw std::logic_error("compare: width mismatch");
  if (a->is_const() && b->is_const()) return boolean(arith::compare(pred, a->value, b->value, a->width));
  if (a == b) {
    switch (pred) {
      case CmpPred::Eq:
      case CmpPred::Sle:
      case CmpPred::Sge:
      case CmpPred::Ule:
      case CmpPred::Uge: return boolean(true);
      default: return boolean(false);
    }
  }
  // keep constants on the right
  if (a->is_const() && !b->is_const()) {
    CmpPred swapped = pred;
    switch (pred) {
      case CmpPred::Slt: swapped = CmpPred::Sgt; break;
      case CmpPred::Sgt: swapped = CmpPred::Slt; break;
      case CmpPred::Sle: swapped = CmpPred::Sge; break;
      case CmpPred::Sge: swapped = CmpPred::Sle; break;
      case CmpPred::Ult: swapped = CmpPred::Ugt; break;
      case CmpPred::Ugt: swapped = CmpPred::Ult; break;
      case CmpPred::Ule: swapped = CmpPred::Uge; break;
      case CmpPred::Uge: swapped = CmpPred::Ule; break;
      default: break;
    }
    return compare(swapped, b, a);
  }
  if ((pred == CmpPred::Eq || pred == CmpPred::Ne) && b->is_const()) {
    // zext(c) ==/!= k for a boolean c
    ExprRef inner = a->kind == ExprKind::ZExt && is_bool_expr(a->a) ? a->a : (is_bool_expr(a) ? a : nullptr);
    if (inner) {
      if (b->value > 1) return boolean(pred == CmpPred::Ne);
      bool want_true = (pred == CmpPred::Eq) == (b->value == 1);
      return want_true ? inner : logical_not(inner);
    }
    // zext(x) == k with k outside the source range
    if (a->kind == ExprKind::ZExt && b->value > mask(a->a->width)) return boolean(pred == CmpPred::Ne);
  }
  Expr e;
  e.kind = ExprKind::Cmp;
  e.width = 1;
  e.pred = pred;
  e.a = std::move(a);
  e.b = std::move(b);
  return make(std::move(e));
}

ExprRef ite(ExprRef cond, ExprRef a, ExprRef b) {
  if (cond->width != 1 || a->width != b->width) throw std::logic_error("ite: width mismatch");
  if (cond->is_const()) return cond->value ? a : b;
  if (a == b || (a->is_const() && b->is_const() && a->value == b->value)) return a;
  if (a->width == 1 && is_value(a, 1) && is_value(b, 0)) return cond;
  Expr e;
  e.kind = ExprKind::Ite;
  e.width = a->width;
  e.a = std::move(a);
  e.b = std::move(b);
  e.c = std::move(cond);
  return make(std::move(e));
}

ExprRef zext(ExprRef a, unsigned width) {
  if (a->width == width) return a;
  if (a->width > width) return trunc(std::move(a), width);
  if (a->is_const()) return constant(a->value, width);
  if (a->kind == ExprKind::ZExt) return zext(a->a, width);
  Expr e;
  e.kind = ExprKind::ZExt;
  e.width = width;
  e.a = std::move(a);
  return make(std::move(e));
}

ExprRef sext(ExprRef a, unsigned width) {
  if (a->width == width) return a;
  if (a->width > width) return trunc(std::move(a), width);
  if (a->is_const()) return constant(arith::sext(a->value, a->width, width), width);
  if (a->kind == ExprKind::SExt) return sext(a->a, width);
  Expr e;
  e.kind = ExprKind::SExt;
  e.width = width;
  e.a = std::move(a);
  return make(std::move(e));
}

ExprRef trunc(ExprRef a, unsigned width) {
  if (a->width == width) return a;
  if (a->width < width) throw std::logic_error("trunc: widening");
  if (a->is_const()) return constant(a->value, width);
  if ((a->kind == ExprKind::ZExt || a->kind == ExprKind::SExt) && a->a->width == width) return a->a;
  if ((a->kind == ExprKind::ZExt || a->kind == ExprKind::SExt) && a->a->width > width) return trunc(a->a, width);
  if (a->kind == ExprKind::Trunc) return trunc(a->a, width);
  Expr e;
  e.kind = ExprKind::Trunc;
  e.width = width;
  e.a = std::move(a);
  return make(std::move(e));
}

ExprRef resize(ExprRef a, unsigned width) { return a->width < width ? sext(std::move(a), width) : trunc(std::move(a), width); }

ExprRef logical_not(ExprRef cond) { return binary(BinOp::Xor, std::move(cond), boolean(true)); }

ExprRef logical_and(ExprRef a, ExprRef b) { return binary(BinOp::And, std::move(a), std::move(b)); }

ExprRef truthy(ExprRef e) {
  if (e->width == 1) return e;
  return compare(CmpPred::Ne, e, constant(0, e->width));
}

namespace {

std::uint64_t eval_rec(const Expr* e, const Model& m, std::unordered_map<const Expr*, std::uint64_t>& memo) {
  switch (e->kind) {
    case ExprKind::Const: return e->value;
    case ExprKind::Var: {
      auto i = static_cast<std::size_t>(e->var);
      return i < m.size() ? arith::trunc(m[i], e->width) : 0;
    }
    default: break;
  }
  if (auto it = memo.find(e); it != memo.end()) return it->second;
  std::uint64_t r = 0;
  switch (e->kind) {
    case ExprKind::Bin: r = arith::binary(e->op, eval_rec(e->a.get(), m, memo), eval_rec(e->b.get(), m, memo), e->width); break;
    case ExprKind::Cmp:
      r = arith::compare(e->pred, eval_rec(e->a.get(), m, memo), eval_rec(e->b.get(), m, memo), e->a->width) ? 1 : 0;
      break;
    case ExprKind::Ite: r = eval_rec(e->c.get(), m, memo) ? eval_rec(e->a.get(), m, memo) : eval_rec(e->b.get(), m, memo); break;
    case ExprKind::ZExt: r = eval_rec(e->a.get(), m, memo); break;
    case ExprKind::SExt: r = arith::sext(eval_rec(e->a.get(), m, memo), e->a->width, e->width); break;
    case ExprKind::Trunc: r = arith::trunc(eval_rec(e->a.get(), m, memo), e->width); break;
    default: break;
  }
  memo.emplace(e, r);
  return r;
}

template <typename F>
void walk(const ExprRef& root, F&& visit) {
  std::unordered_map<const Expr*, bool> seen;
  std::vector<const Expr*> stack{root.get()};
  while (!stack.empty()) {
    const Expr* e = stack.back();
    stack.pop_back();
    if (!seen.emplace(e, true).second) continue;
    visit(*e);
    for (const ExprRef* child : {&e->a, &e->b, &e->c})
      if (*child) stack.push_back(child->get());
  }
}

ExprRef subst_rec(const ExprRef& e, int var, std::uint64_t value, std::unordered_map<const Expr*, ExprRef>& memo) {
  switch (e->kind) {
    case ExprKind::Const: return e;
    case ExprKind::Var: return e->var == var ? constant(value, e->width) : e;
    default: break;
  }
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  ExprRef r;
  switch (e->kind) {
    case ExprKind::Bin: {
      ExprRef a = subst_rec(e->a, var, value, memo), b = subst_rec(e->b, var, value, memo);
      r = (a == e->a && b == e->b) ? e : binary(e->op, a, b);
      break;
    }
    case ExprKind::Cmp: {
      ExprRef a = subst_rec(e->a, var, value, memo), b = subst_rec(e->b, var, value, memo);
      r = (a == e->a && b == e->b) ? e : compare(e->pred, a, b);
      break;
    }
    case ExprKind::Ite: {
      ExprRef c = subst_rec(e->c, var, value, memo);
      if (c->is_const()) {
        r = subst_rec(c->value ? e->a : e->b, var, value, memo);
      } else {
        ExprRef a = subst_rec(e->a, var, value, memo), b = subst_rec(e->b, var, value, memo);
        r = (a == e->a && b == e->b && c == e->c) ? e : ite(c, a, b);
      }
      break;
    }
    case ExprKind::ZExt: {
      ExprRef a = subst_rec(e->a, var, value, memo);
      r = a == e->a ? e : zext(a, e->width);
      break;
    }
    case ExprKind::SExt: {
      ExprRef a = subst_rec(e->a, var, value, memo);
      r = a == e->a ? e : sext(a, e->width);
      break;
    }
    case ExprKind::Trunc: {
      ExprRef a = subst_rec(e->a, var, value, memo);
      r = a == e->a ? e : trunc(a, e->width);
      break;
    }
    default: r = e;
  }
  memo.emplace(e.get(), r);
  return r;
}

std::string_view op_name(BinOp op) {
  switch (op) {
    case BinOp::Add: return "add";
    case BinOp::Sub: return "sub";
    case BinOp::Mul: return "mul";
    case BinOp::SDiv: return "sdiv";
    case BinOp::SRem: return "srem";
    case BinOp::UDiv: return "udiv";
    case BinOp::URem: return "urem";
    case BinOp::And: return "and";
    case BinOp::Or: return "or";
    case BinOp::Xor: return "xor";
    case BinOp::Shl: return "shl";
    case BinOp::LShr: return "lshr";
    case BinOp::AShr: return "ashr";
  }
  return "?";
}

void print_rec(std::ostream& os, const ExprRef& e) {
  switch (e->kind) {
    case ExprKind::Const: os << e->value << ":" << e->width; return;
    case ExprKind::Var: os << "v" << e->var; return;
    case ExprKind::Bin: os << "(" << op_name(e->op) << " "; print_rec(os, e->a); os << " "; print_rec(os, e->b); os << ")"; return;
    case ExprKind::Cmp: os << "(" << to_string(e->pred) << " "; print_rec(os, e->a); os << " "; print_rec(os, e->b); os << ")"; return;
    case ExprKind::Ite: os << "(ite "; print_rec(os, e->c); os << " "; print_rec(os, e->a); os << " "; print_rec(os, e->b); os << ")"; return;
    case ExprKind::ZExt: os << "(zext" << e->width << " "; print_rec(os, e->a); os << ")"; return;
    case ExprKind::SExt: os << "(sext" << e->width << " "; print_rec(os, e->a); os << ")"; return;
    case ExprKind::Trunc: os << "(trunc" << e->width << " "; print_rec(os, e->a); os << ")"; return;
  }
}

}  // namespace

std::uint64_t eval(const ExprRef& e, const Model& m) {
  std::unordered_map<const Expr*, std::uint64_t> memo;
  return eval_rec(e.get(), m, memo);
}

void collect_vars(const ExprRef& e, std::set<int>& out) {
  walk(e, [&](const Expr& n) {
    if (n.kind == ExprKind::Var) out.insert(n.var);
  });
}

ExprRef substitute(const ExprRef& e, int var, std::uint64_t value) {
  std::unordered_map<const Expr*, ExprRef> memo;
  return subst_rec(e, var, value, memo);
}

std::size_t node_count(const ExprRef& e) {
  std::size_t n = 0;
  walk(e, [&](const Expr&) { ++n; });
  return n;
}

std::string to_string(const ExprRef& e) {
  std::ostringstream os;
  print_rec(os, e);
  return os.str();
}

}  // namespace wildfire::ex
