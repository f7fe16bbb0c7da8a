#pragma once

// Fuzzing drivers for isolated functions: seed-argument generation and the
// decoding of a fuzzer byte-stream into a typed argument tuple.

#include "wildfire/args.hpp"
#include "wildfire/ir.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace wildfire {

using ByteStream = std::vector<std::uint8_t>;
using Bytes = std::span<const std::uint8_t>;

inline const ByteStream kDefaultDelimiter{'/', '/'};

enum class SeedKind : std::uint8_t { Empty, RandomAlpha, Delimited };

struct Seed {
  SeedKind kind;
  ByteStream bytes;
};

struct SeedSet {
  std::vector<Seed> seeds;
};

constexpr std::size_t kAlphaSeedLength = 64;
constexpr std::size_t kDelimiterPadding = 8;

/// Empty stream, 64 random [a-z] bytes, and a stream holding one delimiter
/// per pointer parameter, each surrounded by 8 random [a-z] bytes.
SeedSet generate_seeds(const Function& f, std::uint64_t rng_seed, const ByteStream& delim = kDefaultDelimiter);

struct FixedExtract {
  std::uint64_t value;  // little-endian, zero-extended
  Bytes rest;
};

/// Consumes type_size bytes (NUL-padded when the stream is shorter).
FixedExtract extract_fixed(unsigned type_size, Bytes rem);

struct DynamicExtract {
  ByteStream buffer;
  Bytes rest;
};

/// Takes bytes up to the first delimiter (or the end), rounded down to a
/// multiple of elem_size. A found delimiter is consumed along with the bytes
/// before it; otherwise the whole stream is consumed.
DynamicExtract extract_dynamic(unsigned elem_size, Bytes rem, Bytes delim);

/// Total for isolatable functions: every byte-stream decodes.
ArgTuple decode_args(const Function& f, Bytes input, Bytes delim = kDefaultDelimiter);

struct EncodingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inverse of decode_args. Throws EncodingError when a buffer's bytes would
/// make the delimiter appear before the buffer's end.
ByteStream encode_args(const Function& f, const ArgTuple& args, Bytes delim = kDefaultDelimiter);

ByteStream parse_hex_bytes(std::string_view hex);

}  // namespace wildfire
