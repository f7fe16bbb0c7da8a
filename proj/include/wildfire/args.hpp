#pragma once

#include "wildfire/ir.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wildfire {

/// Misuse of an API (wrong arity, non-isolatable function, ...). Distinct
/// from crashes of the analyzed program.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ScalarArg {
  ScalarKind type = ScalarKind::I32;
  std::int64_t value = 0;  // sign-extended from `type`
  bool operator==(const ScalarArg&) const = default;
};

/// Buffer contents as raw little-endian bytes; length() counts elements.
struct BufferArg {
  ScalarKind elem = ScalarKind::I8;
  std::vector<std::uint8_t> bytes;

  std::size_t length() const { return bytes.size() / byte_size(elem); }
  std::int64_t element(std::size_t i) const;
  static BufferArg from_elements(ScalarKind elem, const std::vector<std::int64_t>& values);

  // memcmp semantics: length and content must match
  bool operator==(const BufferArg&) const = default;
};

using ArgValue = std::variant<ScalarArg, BufferArg>;

/// Concrete argument tuple for one call.
struct ArgTuple {
  std::vector<ArgValue> values;
  bool operator==(const ArgTuple&) const = default;
};

std::string to_string(const ArgValue& v);
std::string to_string(const ArgTuple& t);

/// Throws UsageError unless `args` fits the parameter list of `f`.
void check_signature(const Function& f, const ArgTuple& args);

}  // namespace wildfire
