#include "wildfire/args.hpp"

#include "wildfire/arith.hpp"

#include <sstream>

namespace wildfire {

std::int64_t BufferArg::element(std::size_t i) const {
  unsigned size = byte_size(elem);
  std::uint64_t v = 0;
  for (unsigned b = 0; b < size; ++b) v |= static_cast<std::uint64_t>(bytes.at(i * size + b)) << (8 * b);
  return arith::to_signed(v, size * 8);
}

BufferArg BufferArg::from_elements(ScalarKind elem, const std::vector<std::int64_t>& values) {
  BufferArg out;
  out.elem = elem;
  unsigned size = byte_size(elem);
  out.bytes.reserve(values.size() * size);
  for (std::int64_t v : values) {
    auto u = static_cast<std::uint64_t>(v);
    for (unsigned b = 0; b < size; ++b) out.bytes.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  return out;
}

std::string to_string(const ArgValue& v) {
  std::ostringstream out;
  if (const auto* s = std::get_if<ScalarArg>(&v)) {
    out << to_string(s->type) << " " << s->value;
  } else {
    const auto& b = std::get<BufferArg>(v);
    out << "ptr " << to_string(b.elem) << " [";
    static const char* hex = "0123456789abcdef";
    for (std::uint8_t c : b.bytes) out << hex[c >> 4] << hex[c & 0xF];
    out << "]";
  }
  return out.str();
}

std::string to_string(const ArgTuple& t) {
  std::string s = "<";
  for (std::size_t i = 0; i < t.values.size(); ++i) s += (i ? ", " : "") + to_string(t.values[i]);
  return s + ">";
}

void check_signature(const Function& f, const ArgTuple& args) {
  if (args.values.size() != f.param_count)
    throw UsageError("'" + f.name + "' expects " + std::to_string(f.param_count) + " arguments, got " +
                     std::to_string(args.values.size()));
  for (std::size_t i = 0; i < f.param_count; ++i) {
    const Type& t = f.param(i).type;
    const ArgValue& v = args.values[i];
    if (t.is_scalar()) {
      const auto* sc = std::get_if<ScalarArg>(&v);
      if (!sc || sc->type != t.elem)
        throw UsageError("argument " + std::to_string(i + 1) + " of '" + f.name + "' must be a scalar of " +
                         std::string(to_string(t.elem)));
    } else if (t.is_pointer() && t.pointer_depth == 1) {
      const auto* b = std::get_if<BufferArg>(&v);
      if (!b || b->elem != t.elem || b->bytes.size() % byte_size(b->elem) != 0)
        throw UsageError("argument " + std::to_string(i + 1) + " of '" + f.name + "' must be a buffer of " +
                         std::string(to_string(t.elem)));
    } else {
      throw UsageError("parameter '" + f.param(i).name + "' of '" + f.name + "' cannot be supplied concretely");
    }
  }
}

}  // namespace wildfire
