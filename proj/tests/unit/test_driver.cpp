#include "doctest.h"

#include "test_support.hpp"

#include "wildfire/driver.hpp"

#include <algorithm>

using namespace wildfire;
using testing::bytes;

namespace {

const char* kSigs = R"(
fn scalar1(a: i32) { b0: ret; }
fn two_bufs(p: ptr i8, q: ptr i8) { b0: ret; }
fn foo(a: i32, b: i32) { b0: ret; }
fn bar(p: ptr i32, n: i32) { b0: ret; }
fn sort4(limit: ptr i8, base: ptr i16, perm: ptr i32, length: ptr i64, a: i32, b: i8, c: i64) { b0: ret; }
fn buf_then_byte(s: ptr i8, v: i8) { b0: ret; }
fn none() { b0: ret; }
fn pp(x: ptr ptr i8) { b0: ret; }
)";

std::size_t count_occurrences(const ByteStream& hay, const ByteStream& needle) {
  std::size_t n = 0;
  auto it = hay.begin();
  while ((it = std::search(it, hay.end(), needle.begin(), needle.end())) != hay.end()) {
    ++n;
    it += static_cast<std::ptrdiff_t>(needle.size());
  }
  return n;
}

}  // namespace

TEST_CASE("extract_fixed") {
  ByteStream z{0, 0, 0, 0};
  auto a = extract_fixed(4, z);
  CHECK(a.value == 0);
  CHECK(a.rest.empty());

  ByteStream s{0x01, 0, 0, 0, 0xFF};
  auto b = extract_fixed(4, s);
  CHECK(b.value == 1);
  REQUIRE(b.rest.size() == 1);
  CHECK(b.rest[0] == 0xFF);

  ByteStream short_input{0x41};
  auto c = extract_fixed(4, short_input);
  CHECK(c.value == 65);
  CHECK(c.rest.empty());

  CHECK(extract_fixed(8, ByteStream{}).value == 0);
  CHECK_THROWS_AS(extract_fixed(3, z), UsageError);
}

TEST_CASE("extract_dynamic") {
  ByteStream s = bytes("ab//c");
  auto a = extract_dynamic(1, s, kDefaultDelimiter);
  CHECK(a.buffer == bytes("ab"));
  CHECK(ByteStream(a.rest.begin(), a.rest.end()) == bytes("c"));

  ByteStream six = bytes("abcdef");
  auto b = extract_dynamic(4, six, kDefaultDelimiter);
  CHECK(b.buffer.size() == 4);
  CHECK(b.buffer == bytes("abcd"));

  auto c = extract_dynamic(1, ByteStream{}, kDefaultDelimiter);
  CHECK(c.buffer.empty());
  CHECK(c.rest.empty());

  ByteStream lead = bytes("//xy");
  auto d = extract_dynamic(2, lead, kDefaultDelimiter);
  CHECK(d.buffer.empty());
  CHECK(ByteStream(d.rest.begin(), d.rest.end()) == bytes("xy"));

  ByteStream custom{1, 2, 0xAA, 3};
  ByteStream delim{0xAA};
  auto e = extract_dynamic(1, custom, delim);
  CHECK(e.buffer == ByteStream{1, 2});
  CHECK(e.rest.size() == 1);
}

TEST_CASE("decode_args scenarios") {
  Program p = parse_program(kSigs);
  SUBCASE("two integers") {
    ByteStream s{1, 0, 0, 0, 0xFE, 0xFF, 0xFF, 0xFF};
    ArgTuple t = decode_args(p.function("foo"), s);
    REQUIRE(t.values.size() == 2);
    CHECK(std::get<ScalarArg>(t.values[0]).value == 1);
    CHECK(std::get<ScalarArg>(t.values[1]).value == -2);
  }
  SUBCASE("buffer then scalar") {
    ByteStream s = bytes("xxxx//");
    s.insert(s.end(), {7, 0, 0, 0});
    ArgTuple t = decode_args(p.function("bar"), s);
    REQUIRE(t.values.size() == 2);
    const auto& b = std::get<BufferArg>(t.values[0]);
    CHECK(b.bytes.size() == 4);
    CHECK(b.length() == 1);
    CHECK(b.element(0) == 0x78787878);
    CHECK(std::get<ScalarArg>(t.values[1]).value == 7);
  }
  SUBCASE("four buffers then three scalars from one stream") {
    ByteStream s = bytes("abcd//efgh//ijkl//mnopqrst//");
    s.insert(s.end(), {5, 0, 0, 0, 0x80, 1, 2, 3, 4, 5, 6, 7, 8});
    ArgTuple t = decode_args(p.function("sort4"), s);
    REQUIRE(t.values.size() == 7);
    CHECK(std::get<BufferArg>(t.values[0]).length() == 4);
    CHECK(std::get<BufferArg>(t.values[1]).length() == 2);
    CHECK(std::get<BufferArg>(t.values[2]).length() == 1);
    CHECK(std::get<BufferArg>(t.values[3]).length() == 1);
    CHECK(std::get<ScalarArg>(t.values[4]).value == 5);
    CHECK(std::get<ScalarArg>(t.values[5]).value == -128);
    CHECK(std::get<ScalarArg>(t.values[6]).value == 0x0807060504030201);
  }
  SUBCASE("empty stream gives zeros and empty buffers") {
    ArgTuple t = decode_args(p.function("sort4"), ByteStream{});
    REQUIRE(t.values.size() == 7);
    for (int i = 0; i < 4; ++i) CHECK(std::get<BufferArg>(t.values[static_cast<std::size_t>(i)]).bytes.empty());
    for (int i = 4; i < 7; ++i) CHECK(std::get<ScalarArg>(t.values[static_cast<std::size_t>(i)]).value == 0);
  }
  SUBCASE("non-isolatable signatures are rejected") {
    CHECK_THROWS_AS(decode_args(p.function("none"), ByteStream{}), UsageError);
    CHECK_THROWS_AS(decode_args(p.function("pp"), ByteStream{}), UsageError);
  }
}

TEST_CASE("encode_args") {
  Program p = parse_program(kSigs);
  CHECK(encode_args(p.function("scalar1"), ArgTuple{{ScalarArg{ScalarKind::I32, 1}}}) == ByteStream{1, 0, 0, 0});
  ArgTuple t{{BufferArg{ScalarKind::I8, bytes("ab")}, ScalarArg{ScalarKind::I8, 5}}};
  ByteStream expected = bytes("ab//");
  expected.push_back(5);
  CHECK(encode_args(p.function("buf_then_byte"), t) == expected);
  CHECK(decode_args(p.function("buf_then_byte"), expected) == t);

  ArgTuple bad{{BufferArg{ScalarKind::I8, bytes("a//b")}, ScalarArg{ScalarKind::I8, 5}}};
  CHECK_THROWS_AS(encode_args(p.function("buf_then_byte"), bad), EncodingError);
  ArgTuple straddle{{BufferArg{ScalarKind::I8, bytes("a/")}, ScalarArg{ScalarKind::I8, 5}}};
  CHECK_THROWS_AS(encode_args(p.function("buf_then_byte"), straddle), EncodingError);
  CHECK_THROWS_AS(encode_args(p.function("none"), ArgTuple{}), UsageError);
  CHECK_THROWS_AS(encode_args(p.function("buf_then_byte"), ArgTuple{{ScalarArg{ScalarKind::I8, 5}}}), UsageError);
}

TEST_CASE("seed generation") {
  Program p = parse_program(kSigs);
  SeedSet s = generate_seeds(p.function("scalar1"), 7);
  REQUIRE(s.seeds.size() == 3);
  CHECK(s.seeds[0].kind == SeedKind::Empty);
  CHECK(s.seeds[0].bytes.empty());
  CHECK(s.seeds[1].bytes.size() == kAlphaSeedLength);
  CHECK(s.seeds[2].bytes.size() == kDelimiterPadding);
  for (const auto& seed : s.seeds)
    for (auto b : seed.bytes) CHECK(std::isalpha(b));

  SeedSet two = generate_seeds(p.function("two_bufs"), 7);
  CHECK(count_occurrences(two.seeds[2].bytes, kDefaultDelimiter) == 2);
  ArgTuple decoded = decode_args(p.function("two_bufs"), two.seeds[2].bytes);
  CHECK(std::get<BufferArg>(decoded.values[0]).bytes.size() == kDelimiterPadding);
  CHECK(std::get<BufferArg>(decoded.values[1]).bytes.size() == kDelimiterPadding);

  SeedSet again = generate_seeds(p.function("two_bufs"), 7);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.seeds[i].bytes == two.seeds[i].bytes);
  SeedSet other = generate_seeds(p.function("two_bufs"), 8);
  CHECK(other.seeds[1].bytes != two.seeds[1].bytes);

  ByteStream delim{0xFE, 0xFD, 0xFC};
  SeedSet custom = generate_seeds(p.function("two_bufs"), 7, delim);
  CHECK(count_occurrences(custom.seeds[2].bytes, delim) == 2);
  CHECK_THROWS_AS(generate_seeds(p.function("pp"), 1), UsageError);
}

TEST_CASE("hex byte strings") {
  CHECK(parse_hex_bytes("2f2f") == kDefaultDelimiter);
  CHECK(parse_hex_bytes("0xA0ff") == ByteStream{0xA0, 0xFF});
  CHECK_THROWS(parse_hex_bytes(""));
  CHECK_THROWS(parse_hex_bytes("abc"));
  CHECK_THROWS(parse_hex_bytes("zz"));
}

TEST_CASE("random decode and re-encode") {
  Program p = parse_program(kSigs);
  Rng rng(99);
  const Function& f = p.function("sort4");
  for (int i = 0; i < 500; ++i) {
    ByteStream s(rng.below(48));
    for (auto& b : s) b = static_cast<std::uint8_t>(rng.chance(4) ? '/' : rng.below(256));
    ArgTuple t = decode_args(f, s);
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& b = std::get<BufferArg>(t.values[k]);
      CHECK(b.bytes.size() % byte_size(b.elem) == 0);
    }
    try {
      ByteStream e = encode_args(f, t);
      CHECK(decode_args(f, e) == t);
    } catch (const EncodingError&) {
    }
  }
}
