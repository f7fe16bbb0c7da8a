#include "wildfire/arith.hpp"

#include <stdexcept>

namespace wildfire::arith {

std::uint64_t binary(BinOp op, std::uint64_t a, std::uint64_t b, unsigned width, bool* div_by_zero) {
  a = trunc(a, width);
  b = trunc(b, width);
  auto zero_div = [&]() -> std::uint64_t {
    if (div_by_zero) *div_by_zero = true;
    return 0;
  };
  switch (op) {
  case BinOp::Add: return trunc(a + b, width);
  case BinOp::Sub: return trunc(a - b, width);
  case BinOp::Mul: return trunc(a * b, width);
  case BinOp::UDiv: return b == 0 ? zero_div() : a / b;
  case BinOp::URem: return b == 0 ? zero_div() : a % b;
  case BinOp::SDiv:
  case BinOp::SRem: {
    if (b == 0) return zero_div();
    std::int64_t sa = to_signed(a, width), sb = to_signed(b, width);
    // most-negative / -1 wraps
    if (sb == -1) return op == BinOp::SDiv ? trunc(static_cast<std::uint64_t>(0) - a, width) : 0;
    return trunc(static_cast<std::uint64_t>(op == BinOp::SDiv ? sa / sb : sa % sb), width);
  }
  case BinOp::And: return a & b;
  case BinOp::Or: return a | b;
  case BinOp::Xor: return a ^ b;
  case BinOp::Shl: return trunc(a << (b % width), width);
  case BinOp::LShr: return a >> (b % width);
  case BinOp::AShr: return trunc(static_cast<std::uint64_t>(to_signed(a, width) >> (b % width)), width);
  }
  return 0;
}

bool compare(CmpPred pred, std::uint64_t a, std::uint64_t b, unsigned width) {
  a = trunc(a, width);
  b = trunc(b, width);
  std::int64_t sa = to_signed(a, width), sb = to_signed(b, width);
  switch (pred) {
  case CmpPred::Eq: return a == b;
  case CmpPred::Ne: return a != b;
  case CmpPred::Slt: return sa < sb;
  case CmpPred::Sle: return sa <= sb;
  case CmpPred::Sgt: return sa > sb;
  case CmpPred::Sge: return sa >= sb;
  case CmpPred::Ult: return a < b;
  case CmpPred::Ule: return a <= b;
  case CmpPred::Ugt: return a > b;
  case CmpPred::Uge: return a >= b;
  }
  return false;
}

BinOp from_opcode(Opcode op) {
  switch (op) {
  case Opcode::Add: return BinOp::Add;
  case Opcode::Sub: return BinOp::Sub;
  case Opcode::Mul: return BinOp::Mul;
  case Opcode::SDiv: return BinOp::SDiv;
  case Opcode::SRem: return BinOp::SRem;
  case Opcode::UDiv: return BinOp::UDiv;
  case Opcode::URem: return BinOp::URem;
  case Opcode::And: return BinOp::And;
  case Opcode::Or: return BinOp::Or;
  case Opcode::Xor: return BinOp::Xor;
  case Opcode::Shl: return BinOp::Shl;
  case Opcode::LShr: return BinOp::LShr;
  case Opcode::AShr: return BinOp::AShr;
  default: throw std::invalid_argument("not a binary arithmetic opcode");
  }
}

bool is_division(BinOp op) {
  return op == BinOp::SDiv || op == BinOp::SRem || op == BinOp::UDiv || op == BinOp::URem;
}

}  // namespace wildfire::arith
