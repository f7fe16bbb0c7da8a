#include "wildfire/driver.hpp"

#include "wildfire/arith.hpp"
#include "wildfire/rng.hpp"

#include <algorithm>
#include <cctype>

namespace wildfire {

std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
  std::uint64_t h = fnv1a(name, 0xcbf29ce484222325ULL ^ base);
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

namespace {

void append_alpha(ByteStream& out, Rng& rng, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>('a' + rng.below(26)));
}

void require_isolatable(const Function& f) {
  if (!f.is_isolatable()) throw UsageError("function '" + f.name + "' cannot be isolated");
}

bool valid_size(unsigned s) { return s == 1 || s == 2 || s == 4 || s == 8; }

}  // namespace

SeedSet generate_seeds(const Function& f, std::uint64_t rng_seed, const ByteStream& delim) {
  require_isolatable(f);
  Rng rng(rng_seed);
  SeedSet set;
  set.seeds.push_back({SeedKind::Empty, {}});

  Seed alpha{SeedKind::RandomAlpha, {}};
  append_alpha(alpha.bytes, rng, kAlphaSeedLength);
  set.seeds.push_back(std::move(alpha));

  Seed delimited{SeedKind::Delimited, {}};
  std::size_t pointers = f.pointer_param_count();
  for (std::size_t i = 0; i < pointers; ++i) {
    append_alpha(delimited.bytes, rng, kDelimiterPadding);
    delimited.bytes.insert(delimited.bytes.end(), delim.begin(), delim.end());
  }
  append_alpha(delimited.bytes, rng, kDelimiterPadding);
  set.seeds.push_back(std::move(delimited));
  return set;
}

FixedExtract extract_fixed(unsigned type_size, Bytes rem) {
  if (!valid_size(type_size)) throw UsageError("type size must be 1, 2, 4 or 8");
  std::size_t take = std::min<std::size_t>(type_size, rem.size());
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < take; ++i) v |= static_cast<std::uint64_t>(rem[i]) << (8 * i);
  return {v, rem.subspan(take)};
}

DynamicExtract extract_dynamic(unsigned elem_size, Bytes rem, Bytes delim) {
  if (!valid_size(elem_size)) throw UsageError("element size must be 1, 2, 4 or 8");
  if (delim.empty()) throw UsageError("delimiter must not be empty");
  auto hit = std::search(rem.begin(), rem.end(), delim.begin(), delim.end());
  std::size_t given = static_cast<std::size_t>(hit - rem.begin());
  std::size_t buf_size = given - given % elem_size;
  DynamicExtract out{ByteStream(rem.begin(), rem.begin() + static_cast<std::ptrdiff_t>(buf_size)), {}};
  if (hit != rem.end())
    out.rest = rem.subspan(given + delim.size());
  else
    out.rest = rem.subspan(rem.size());
  return out;
}

ArgTuple decode_args(const Function& f, Bytes input, Bytes delim) {
  require_isolatable(f);
  ArgTuple args;
  Bytes rem = input;
  for (std::size_t i = 0; i < f.param_count; ++i) {
    const Type& t = f.param(i).type;
    if (t.is_pointer()) {
      auto d = extract_dynamic(byte_size(t.elem), rem, delim);
      args.values.emplace_back(BufferArg{t.elem, std::move(d.buffer)});
      rem = d.rest;
    } else {
      auto d = extract_fixed(byte_size(t.elem), rem);
      args.values.emplace_back(ScalarArg{t.elem, arith::to_signed(d.value, bit_width(t.elem))});
      rem = d.rest;
    }
  }
  return args;
}

ByteStream encode_args(const Function& f, const ArgTuple& args, Bytes delim) {
  require_isolatable(f);
  check_signature(f, args);
  if (delim.empty()) throw UsageError("delimiter must not be empty");
  ByteStream out;
  for (std::size_t i = 0; i < f.param_count; ++i) {
    const Type& t = f.param(i).type;
    if (t.is_pointer()) {
      const auto& b = std::get<BufferArg>(args.values[i]);
      ByteStream chunk = b.bytes;
      chunk.insert(chunk.end(), delim.begin(), delim.end());
      auto hit = std::search(chunk.begin(), chunk.end(), delim.begin(), delim.end());
      if (static_cast<std::size_t>(hit - chunk.begin()) != b.bytes.size())
        throw EncodingError("buffer argument " + std::to_string(i + 1) + " contains the delimiter");
      out.insert(out.end(), chunk.begin(), chunk.end());
    } else {
      auto v = static_cast<std::uint64_t>(std::get<ScalarArg>(args.values[i]).value);
      for (unsigned b = 0; b < byte_size(t.elem); ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
    }
  }
  return out;
}

ByteStream parse_hex_bytes(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.empty() || hex.size() % 2 != 0) throw UsageError("hex byte string must have an even, nonzero length");
  ByteStream out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    auto nibble = [&](char c) -> int {
      if (std::isdigit(static_cast<unsigned char>(c))) return c - '0';
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      throw UsageError("invalid hex digit");
    };
    out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) * 16 + nibble(hex[i + 1])));
  }
  return out;
}

}  // namespace wildfire
