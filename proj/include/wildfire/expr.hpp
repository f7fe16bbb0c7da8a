#pragma once

// Immutable fixed-width bit-vector expressions. Width 1 is boolean. Builders
// fold constants and apply a few local rewrites so path conditions stay small.

#include "wildfire/arith.hpp"

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace wildfire {

enum class ExprKind : std::uint8_t { Const, Var, Bin, Cmp, Ite, ZExt, SExt, Trunc };

struct Expr;
using ExprRef = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind = ExprKind::Const;
  unsigned width = 1;
  arith::BinOp op = arith::BinOp::Add;
  CmpPred pred = CmpPred::Eq;
  std::uint64_t value = 0;  // Const
  int var = -1;             // Var
  ExprRef a, b, c;

  bool is_const() const { return kind == ExprKind::Const; }
};

using Model = std::vector<std::uint64_t>;

namespace ex {

ExprRef constant(std::uint64_t v, unsigned width);
ExprRef boolean(bool v);
ExprRef variable(int id, unsigned width);
ExprRef binary(arith::BinOp op, ExprRef a, ExprRef b);
ExprRef compare(CmpPred pred, ExprRef a, ExprRef b);
ExprRef ite(ExprRef cond, ExprRef a, ExprRef b);
ExprRef zext(ExprRef a, unsigned width);
ExprRef sext(ExprRef a, unsigned width);
ExprRef trunc(ExprRef a, unsigned width);
/// Signed resize: sign-extend or truncate to `width`.
ExprRef resize(ExprRef a, unsigned width);
ExprRef logical_not(ExprRef cond);
ExprRef logical_and(ExprRef a, ExprRef b);
/// `e != 0` as a boolean.
ExprRef truthy(ExprRef e);

CmpPred negate(CmpPred p);

/// Concrete evaluation; variables missing from the model read as 0.
std::uint64_t eval(const ExprRef& e, const Model& m);

void collect_vars(const ExprRef& e, std::set<int>& out);
ExprRef substitute(const ExprRef& e, int var, std::uint64_t value);
std::size_t node_count(const ExprRef& e);
std::string to_string(const ExprRef& e);

}  // namespace ex
}  // namespace wildfire
