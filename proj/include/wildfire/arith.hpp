#pragma once

// Fixed-width two's complement integer semantics shared by the concrete
// interpreter and the symbolic expression evaluator. Values are carried as
// zero-extended uint64 masked to their width.

#include "wildfire/ir.hpp"

#include <cstdint>

namespace wildfire::arith {

constexpr std::uint64_t mask(unsigned width) { return width >= 64 ? ~0ULL : ((1ULL << width) - 1); }

constexpr std::uint64_t trunc(std::uint64_t v, unsigned width) { return v & mask(width); }

constexpr std::int64_t to_signed(std::uint64_t v, unsigned width) {
  v = trunc(v, width);
  if (width < 64 && (v >> (width - 1)) & 1) v |= ~mask(width);
  return static_cast<std::int64_t>(v);
}

constexpr std::uint64_t sext(std::uint64_t v, unsigned from, unsigned to) {
  return trunc(static_cast<std::uint64_t>(to_signed(v, from)), to);
}

/// C-style conversion of a signed value into a narrower/wider signed type.
constexpr std::int64_t convert(std::int64_t v, ScalarKind k) {
  return to_signed(static_cast<std::uint64_t>(v), bit_width(k));
}

enum class BinOp : std::uint8_t { Add, Sub, Mul, SDiv, SRem, UDiv, URem, And, Or, Xor, Shl, LShr, AShr };

/// Division and remainder by zero are reported through `div_by_zero` and
/// yield 0. Shift amounts are reduced modulo the width.
std::uint64_t binary(BinOp op, std::uint64_t a, std::uint64_t b, unsigned width, bool* div_by_zero = nullptr);

bool compare(CmpPred pred, std::uint64_t a, std::uint64_t b, unsigned width);

BinOp from_opcode(Opcode op);
bool is_division(BinOp op);

}  // namespace wildfire::arith
