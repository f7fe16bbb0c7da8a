#include "wildfire/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <unordered_map>

namespace wildfire {

std::string_view to_string(ScalarKind k) {
  switch (k) {
  case ScalarKind::I8: return "i8";
  case ScalarKind::I16: return "i16";
  case ScalarKind::I32: return "i32";
  case ScalarKind::I64: return "i64";
  }
  return "?";
}

std::optional<ScalarKind> scalar_from_string(std::string_view s) {
  if (s == "i8") return ScalarKind::I8;
  if (s == "i16") return ScalarKind::I16;
  if (s == "i32") return ScalarKind::I32;
  if (s == "i64") return ScalarKind::I64;
  return std::nullopt;
}

std::string to_string(const Type& t) {
  if (t.function_pointer) return "fnptr";
  std::string out;
  for (int i = 0; i < t.pointer_depth; ++i) out += "ptr ";
  out += to_string(t.elem);
  return out;
}

std::string to_string(const SourceLoc& loc) {
  return loc.function + ":" + std::to_string(loc.block) + ":" + std::to_string(loc.index);
}

SourceLoc parse_source_loc(std::string_view text) {
  auto last = text.rfind(':');
  if (last == std::string_view::npos || last == 0) throw std::invalid_argument("bad SourceLoc");
  auto mid = text.rfind(':', last - 1);
  if (mid == std::string_view::npos) throw std::invalid_argument("bad SourceLoc");
  SourceLoc loc;
  loc.function = std::string(text.substr(0, mid));
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("bad SourceLoc");
    return v;
  };
  loc.block = parse_int(text.substr(mid + 1, last - mid - 1));
  loc.index = parse_int(text.substr(last + 1));
  return loc;
}

namespace {

struct OpInfo {
  std::string_view name;
  Opcode op;
};

constexpr OpInfo kOps[] = {
    {"add", Opcode::Add},     {"sub", Opcode::Sub},       {"mul", Opcode::Mul},
    {"sdiv", Opcode::SDiv},   {"srem", Opcode::SRem},     {"udiv", Opcode::UDiv},
    {"urem", Opcode::URem},   {"and", Opcode::And},       {"or", Opcode::Or},
    {"xor", Opcode::Xor},     {"shl", Opcode::Shl},       {"lshr", Opcode::LShr},
    {"ashr", Opcode::AShr},   {"mov", Opcode::Mov},       {"zext", Opcode::ZExt},
    {"cmp", Opcode::Cmp},     {"load", Opcode::Load},     {"store", Opcode::Store},
    {"index", Opcode::Index}, {"alloc", Opcode::Alloc},   {"null", Opcode::Null},
    {"call", Opcode::Call},   {"assert", Opcode::Assert}, {"br", Opcode::Br},
    {"cbr", Opcode::CondBr},  {"ret", Opcode::Ret},       {"unreachable", Opcode::Unreachable},
};

constexpr std::string_view kPreds[] = {"eq", "ne", "slt", "sle", "sgt", "sge", "ult", "ule", "ugt", "uge"};

}  // namespace

std::string_view to_string(Opcode op) {
  for (const auto& info : kOps)
    if (info.op == op) return info.name;
  return "?";
}

std::string_view to_string(CmpPred p) { return kPreds[static_cast<int>(p)]; }

bool is_terminator(Opcode op) {
  return op == Opcode::Br || op == Opcode::CondBr || op == Opcode::Ret || op == Opcode::Unreachable;
}

bool is_binary_arith(Opcode op) { return op >= Opcode::Add && op <= Opcode::AShr; }

std::size_t Function::pointer_param_count() const {
  return static_cast<std::size_t>(std::count_if(locals.begin(), locals.begin() + param_count,
                                                [](const Local& l) { return l.type.is_pointer(); }));
}

std::size_t Function::instruction_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.instrs.size();
  return n;
}

bool Function::is_isolatable() const {
  if (param_count == 0) return false;
  for (std::size_t i = 0; i < param_count; ++i) {
    const Type& t = locals[i].type;
    if (t.function_pointer || t.pointer_depth > 1) return false;
  }
  return true;
}

int Program::find_function(std::string_view name) const {
  for (std::size_t i = 0; i < functions.size(); ++i)
    if (functions[i].name == name) return static_cast<int>(i);
  return -1;
}

const Function& Program::function(std::string_view name) const {
  int i = find_function(name);
  if (i < 0) throw std::out_of_range("unknown function '" + std::string(name) + "'");
  return functions[static_cast<std::size_t>(i)];
}

int Program::find_global(std::string_view name) const {
  for (std::size_t i = 0; i < globals.size(); ++i)
    if (globals[i].name == name) return static_cast<int>(i);
  return -1;
}

std::size_t Program::total_instructions() const {
  std::size_t n = 0;
  for (const auto& f : functions) n += f.instruction_count();
  return n;
}

void Program::finalize() {
  edges_.clear();
  for (std::size_t fi = 0; fi < functions.size(); ++fi) {
    Function& f = functions[fi];
    f.entry_edge = static_cast<int>(edges_.size());
    edges_.push_back({static_cast<int>(fi), -1, 0});
    for (std::size_t bi = 0; bi < f.blocks.size(); ++bi) {
      if (f.blocks[bi].instrs.empty()) continue;
      Instruction& term = f.blocks[bi].instrs.back();
      int n = term.op == Opcode::Br ? 1 : term.op == Opcode::CondBr ? 2 : 0;
      for (int s = 0; s < n; ++s) {
        if (s == 1 && term.targets[1] == term.targets[0]) {
          term.edge_ids[1] = term.edge_ids[0];
          continue;
        }
        term.edge_ids[s] = static_cast<int>(edges_.size());
        edges_.push_back({static_cast<int>(fi), static_cast<int>(bi), term.targets[s]});
      }
    }
  }
}

ParseError::ParseError(int l, int c, const std::string& msg)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), column(c) {}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, GlobalRef, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (is_ident_start(c)) {
        t.kind = Tok::Ident;
        t.text = take_ident();
      } else if (c == '@') {
        advance();
        if (pos_ >= src_.size() || !is_ident_start(src_[pos_]))
          throw ParseError(t.line, t.col, "expected global name after '@'");
        t.kind = Tok::GlobalRef;
        t.text = take_ident();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        t.kind = Tok::Int;
        t.value = take_int(t);
      } else if (c == '\'') {
        t.kind = Tok::Int;
        t.value = take_char(t);
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        t.kind = Tok::Punct;
        t.text = "->";
        advance();
        advance();
      } else if (std::string_view("(){}:;,=").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, c);
        advance();
      } else {
        throw ParseError(t.line, t.col, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

private:
  static bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string take_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance();
    return std::string(src_.substr(start, pos_ - start));
  }

  std::int64_t take_int(const Token& t) {
    bool neg = false;
    if (src_[pos_] == '-') {
      neg = true;
      advance();
    }
    int base = 10;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
      base = 16;
      advance();
      advance();
    }
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isxdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    std::uint64_t v = 0;
    auto digits = src_.substr(start, pos_ - start);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
    if (digits.empty() || ec != std::errc() || p != digits.data() + digits.size())
      throw ParseError(t.line, t.col, "malformed integer literal");
    if (pos_ < src_.size() && is_ident_char(src_[pos_])) throw ParseError(t.line, t.col, "malformed integer literal");
    return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
  }

  std::int64_t take_char(const Token& t) {
    advance();  // opening quote
    if (pos_ >= src_.size()) throw ParseError(t.line, t.col, "unterminated character literal");
    std::int64_t v;
    if (src_[pos_] == '\\') {
      advance();
      if (pos_ >= src_.size()) throw ParseError(t.line, t.col, "unterminated character literal");
      switch (src_[pos_]) {
      case 'n': v = '\n'; break;
      case 't': v = '\t'; break;
      case '0': v = 0; break;
      case '\\': v = '\\'; break;
      case '\'': v = '\''; break;
      default: throw ParseError(t.line, t.col, "unknown escape in character literal");
      }
    } else {
      v = static_cast<unsigned char>(src_[pos_]);
    }
    advance();
    if (pos_ >= src_.size() || src_[pos_] != '\'') throw ParseError(t.line, t.col, "unterminated character literal");
    advance();
    return v;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser: builds an unresolved syntax tree first, then resolves names once
// all functions are known (calls may refer forward).

struct RawOperand {
  Operand::Kind kind = Operand::Kind::None;
  std::string name;
  std::int64_t value = 0;
  int line = 0, col = 0;
};

struct RawInstr {
  Opcode op{};
  ScalarKind ty = ScalarKind::I32;
  CmpPred pred = CmpPred::Eq;
  RawOperand dest;
  std::vector<RawOperand> args;
  std::string callee;
  std::string labels[2];
  int line = 0, col = 0;
};

struct RawBlock {
  std::string label;
  std::vector<RawInstr> instrs;
  int line = 0, col = 0;
};

struct RawParam {
  std::string name;
  Type type;
  int line = 0, col = 0;
};

struct RawFunction {
  std::string name;
  std::vector<RawParam> params;
  std::optional<ScalarKind> ret;
  std::vector<RawBlock> blocks;
  int line = 0, col = 0;
};

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program run() {
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (is_word("global")) {
        parse_global();
      } else if (is_word("entry")) {
        parse_entry();
      } else if (is_word("fn")) {
        parse_function();
      } else {
        fail(t, "expected 'fn', 'global' or 'entry'");
      }
    }
    return resolve();
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  [[noreturn]] static void fail(const Token& t, const std::string& msg) { throw ParseError(t.line, t.col, msg); }
  [[noreturn]] static void fail_at(int line, int col, const std::string& msg) { throw ParseError(line, col, msg); }

  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool is_punct(std::string_view p) const { return peek().kind == Tok::Punct && peek().text == p; }

  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail(peek(), "expected '" + std::string(p) + "'");
    next();
  }
  const Token& expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(peek(), std::string("expected ") + what);
    return next();
  }

  ScalarKind parse_scalar() {
    const Token& t = expect_ident("scalar type");
    auto k = scalar_from_string(t.text);
    if (!k) fail(t, "unknown scalar type '" + t.text + "'");
    return *k;
  }

  Type parse_type() {
    if (is_word("fnptr")) {
      next();
      return Type::fn_pointer();
    }
    std::uint8_t depth = 0;
    while (is_word("ptr")) {
      next();
      ++depth;
    }
    return Type{parse_scalar(), depth, false};
  }

  std::int64_t parse_int_literal() {
    if (peek().kind != Tok::Int) fail(peek(), "expected integer literal");
    return next().value;
  }

  void parse_global() {
    const Token& kw = next();
    GlobalVar g;
    g.name = expect_ident("global name").text;
    expect_punct(":");
    g.type = parse_scalar();
    expect_punct("=");
    g.init = parse_int_literal();
    expect_punct(";");
    for (const auto& other : globals_)
      if (other.first.name == g.name) fail(kw, "duplicate global '" + g.name + "'");
    globals_.push_back({g, kw});
  }

  void parse_entry() {
    next();
    for (;;) {
      const Token& t = expect_ident("entry point name");
      entries_.push_back(t);
      if (is_punct(",")) {
        next();
        continue;
      }
      expect_punct(";");
      break;
    }
  }

  void parse_function() {
    const Token& kw = next();
    RawFunction f;
    f.line = kw.line;
    f.col = kw.col;
    f.name = expect_ident("function name").text;
    expect_punct("(");
    if (!is_punct(")")) {
      for (;;) {
        const Token& pn = expect_ident("parameter name");
        RawParam p{pn.text, {}, pn.line, pn.col};
        expect_punct(":");
        p.type = parse_type();
        f.params.push_back(p);
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    if (is_punct("->")) {
      next();
      f.ret = parse_scalar();
    }
    expect_punct("{");
    while (!is_punct("}")) {
      if (peek().kind == Tok::End) fail(peek(), "unterminated function body");
      if (peek().kind == Tok::Ident && peek(1).kind == Tok::Punct && peek(1).text == ":") {
        const Token& lt = next();
        next();
        f.blocks.push_back(RawBlock{lt.text, {}, lt.line, lt.col});
        continue;
      }
      if (f.blocks.empty()) fail(peek(), "instruction outside of a labelled block");
      f.blocks.back().instrs.push_back(parse_instr());
    }
    next();
    functions_.push_back(std::move(f));
  }

  RawOperand parse_operand() {
    const Token& t = peek();
    RawOperand o;
    o.line = t.line;
    o.col = t.col;
    if (t.kind == Tok::Ident) {
      o.kind = Operand::Kind::Local;
      o.name = t.text;
    } else if (t.kind == Tok::GlobalRef) {
      o.kind = Operand::Kind::Global;
      o.name = t.text;
    } else if (t.kind == Tok::Int) {
      o.kind = Operand::Kind::Const;
      o.value = t.value;
    } else {
      fail(t, "expected operand");
    }
    next();
    return o;
  }

  std::vector<RawOperand> parse_operand_list(std::size_t n) {
    std::vector<RawOperand> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) expect_punct(",");
      out.push_back(parse_operand());
    }
    return out;
  }

  RawInstr parse_instr() {
    RawInstr in;
    in.line = peek().line;
    in.col = peek().col;
    // optional destination
    if ((peek().kind == Tok::Ident || peek().kind == Tok::GlobalRef) && peek(1).kind == Tok::Punct &&
        peek(1).text == "=") {
      in.dest = parse_operand();
      next();
    }
    const Token& opt = expect_ident("opcode");
    const OpInfo* info = nullptr;
    for (const auto& i : kOps)
      if (i.name == opt.text) info = &i;
    if (!info) fail(opt, "unknown opcode '" + opt.text + "'");
    in.op = info->op;

    auto need_dest = [&](bool required) {
      bool has = in.dest.kind != Operand::Kind::None;
      if (required && !has) fail(opt, "'" + opt.text + "' requires a destination");
      if (!required && has) fail(opt, "'" + opt.text + "' does not produce a value");
    };

    switch (in.op) {
    case Opcode::Cmp: {
      need_dest(true);
      const Token& pt = expect_ident("comparison predicate");
      auto it = std::find(std::begin(kPreds), std::end(kPreds), pt.text);
      if (it == std::end(kPreds)) fail(pt, "unknown predicate '" + pt.text + "'");
      in.pred = static_cast<CmpPred>(it - std::begin(kPreds));
      in.ty = parse_scalar();
      in.args = parse_operand_list(2);
      break;
    }
    case Opcode::Mov:
    case Opcode::ZExt:
    case Opcode::Alloc:
      need_dest(true);
      in.ty = parse_scalar();
      in.args = parse_operand_list(1);
      break;
    case Opcode::Null:
      need_dest(true);
      in.ty = parse_scalar();
      break;
    case Opcode::Load:
    case Opcode::Index:
      need_dest(true);
      in.ty = parse_scalar();
      in.args = parse_operand_list(2);
      break;
    case Opcode::Store:
      need_dest(false);
      in.ty = parse_scalar();
      in.args = parse_operand_list(3);
      break;
    case Opcode::Call: {
      in.callee = expect_ident("callee name").text;
      expect_punct("(");
      if (!is_punct(")")) {
        for (;;) {
          in.args.push_back(parse_operand());
          if (is_punct(",")) {
            next();
            continue;
          }
          break;
        }
      }
      expect_punct(")");
      break;
    }
    case Opcode::Assert:
      need_dest(false);
      in.args = parse_operand_list(1);
      break;
    case Opcode::Br:
      need_dest(false);
      in.labels[0] = expect_ident("block label").text;
      break;
    case Opcode::CondBr:
      need_dest(false);
      in.args = parse_operand_list(1);
      expect_punct(",");
      in.labels[0] = expect_ident("block label").text;
      expect_punct(",");
      in.labels[1] = expect_ident("block label").text;
      break;
    case Opcode::Ret:
      need_dest(false);
      if (!is_punct(";")) in.args.push_back(parse_operand());
      break;
    case Opcode::Unreachable:
      need_dest(false);
      break;
    default:  // binary arith
      need_dest(true);
      in.ty = parse_scalar();
      in.args = parse_operand_list(2);
      break;
    }
    expect_punct(";");
    return in;
  }

  // -------------------------------------------------------------------------
  // Resolution

  Program resolve() {
    Program p;
    for (const auto& [g, tok] : globals_) p.globals.push_back(g);
    std::map<std::string, int> fn_index;
    for (const auto& rf : functions_) {
      if (fn_index.count(rf.name)) fail_at(rf.line, rf.col, "duplicate function '" + rf.name + "'");
      fn_index[rf.name] = static_cast<int>(p.functions.size());
      Function f;
      f.name = rf.name;
      f.return_type = rf.ret;
      f.param_count = rf.params.size();
      for (const auto& rp : rf.params) {
        for (const auto& l : f.locals)
          if (l.name == rp.name) fail_at(rp.line, rp.col, "duplicate parameter '" + rp.name + "'");
        f.locals.push_back({rp.name, rp.type});
      }
      p.functions.push_back(std::move(f));
    }
    for (std::size_t i = 0; i < functions_.size(); ++i) resolve_function(p, fn_index, functions_[i], p.functions[i]);
    for (const Token& t : entries_) {
      if (!fn_index.count(t.text)) fail(t, "entry point '" + t.text + "' is not a declared function");
      p.entry_points.insert(t.text);
    }
    if (entries_.empty() && fn_index.count("main")) p.entry_points.insert("main");
    p.finalize();
    return p;
  }

  static Type dest_type(const RawInstr& in, const Program& p, const std::map<std::string, int>& fns) {
    switch (in.op) {
    case Opcode::Cmp: return Type::scalar(ScalarKind::I32);
    case Opcode::Index:
    case Opcode::Alloc:
    case Opcode::Null: return Type::pointer(in.ty);
    case Opcode::Call: {
      const Function& callee = p.functions[static_cast<std::size_t>(fns.at(in.callee))];
      if (!callee.return_type) fail_at(in.line, in.col, "callee '" + in.callee + "' does not return a value");
      return Type::scalar(*callee.return_type);
    }
    default: return Type::scalar(in.ty);
    }
  }

  void resolve_function(const Program& p, const std::map<std::string, int>& fns, const RawFunction& rf,
                        Function& f) {
    if (rf.blocks.empty()) fail_at(rf.line, rf.col, "function '" + rf.name + "' has no blocks");
    std::map<std::string, int> labels;
    for (std::size_t b = 0; b < rf.blocks.size(); ++b) {
      const RawBlock& rb = rf.blocks[b];
      if (labels.count(rb.label)) fail_at(rb.line, rb.col, "duplicate block label '" + rb.label + "'");
      labels[rb.label] = static_cast<int>(b);
      if (rb.instrs.empty()) fail_at(rb.line, rb.col, "block '" + rb.label + "' is empty");
      for (std::size_t i = 0; i < rb.instrs.size(); ++i) {
        bool last = i + 1 == rb.instrs.size();
        const RawInstr& in = rb.instrs[i];
        if (is_terminator(in.op) != last)
          fail_at(in.line, in.col,
                  last ? "block '" + rb.label + "' must end with a terminator" : "terminator in the middle of a block");
        if (in.op == Opcode::Call && !fns.count(in.callee))
          fail_at(in.line, in.col, "call to undeclared function '" + in.callee + "'");
      }
    }

    // Pass 1: local declarations from destinations.
    std::map<std::string, int> locals;
    for (std::size_t i = 0; i < f.locals.size(); ++i) locals[f.locals[i].name] = static_cast<int>(i);
    for (const auto& rb : rf.blocks) {
      for (const auto& in : rb.instrs) {
        if (in.dest.kind != Operand::Kind::Local) continue;
        Type t = dest_type(in, p, fns);
        auto it = locals.find(in.dest.name);
        if (it == locals.end()) {
          locals[in.dest.name] = static_cast<int>(f.locals.size());
          f.locals.push_back({in.dest.name, t});
        } else if (f.locals[static_cast<std::size_t>(it->second)].type != t) {
          fail_at(in.dest.line, in.dest.col,
                  "local '" + in.dest.name + "' redefined with type " + to_string(t) + " (was " +
                      to_string(f.locals[static_cast<std::size_t>(it->second)].type) + ")");
        }
      }
    }

    auto resolve_operand = [&](const RawOperand& ro) -> Operand {
      switch (ro.kind) {
      case Operand::Kind::Local: {
        auto it = locals.find(ro.name);
        if (it == locals.end()) fail_at(ro.line, ro.col, "unknown local '" + ro.name + "'");
        return Operand::local(it->second);
      }
      case Operand::Kind::Global: {
        int g = p.find_global(ro.name);
        if (g < 0) fail_at(ro.line, ro.col, "unknown global '@" + ro.name + "'");
        return Operand::global(g);
      }
      case Operand::Kind::Const: return Operand::constant(ro.value);
      default: return {};
      }
    };
    auto local_type = [&](const Operand& o) { return f.locals[static_cast<std::size_t>(o.index)].type; };
    auto need_scalar = [&](const RawOperand& ro, const Operand& o) {
      if (o.kind == Operand::Kind::Local && !local_type(o).is_scalar())
        fail_at(ro.line, ro.col, "'" + ro.name + "' is not a scalar");
    };
    auto need_pointer = [&](const RawOperand& ro, const Operand& o, ScalarKind elem) {
      if (o.kind != Operand::Kind::Local) fail_at(ro.line, ro.col, "expected a pointer local");
      Type t = local_type(o);
      if (t != Type::pointer(elem))
        fail_at(ro.line, ro.col,
                "'" + ro.name + "' has type " + to_string(t) + ", expected " + to_string(Type::pointer(elem)));
    };

    // Pass 2: instructions.
    for (const auto& rb : rf.blocks) {
      BasicBlock bb;
      bb.label = rb.label;
      for (const auto& rin : rb.instrs) {
        Instruction in;
        in.op = rin.op;
        in.ty = rin.ty;
        in.pred = rin.pred;
        if (rin.dest.kind != Operand::Kind::None) {
          in.dest = resolve_operand(rin.dest);
          if (in.dest.kind == Operand::Kind::Global && !dest_type(rin, p, fns).is_scalar())
            fail_at(rin.dest.line, rin.dest.col, "globals can only hold scalars");
        }
        for (const auto& ra : rin.args) in.args.push_back(resolve_operand(ra));

        switch (rin.op) {
        case Opcode::Load:
          need_pointer(rin.args[0], in.args[0], rin.ty);
          need_scalar(rin.args[1], in.args[1]);
          break;
        case Opcode::Store:
          need_pointer(rin.args[0], in.args[0], rin.ty);
          need_scalar(rin.args[1], in.args[1]);
          need_scalar(rin.args[2], in.args[2]);
          break;
        case Opcode::Index:
          need_pointer(rin.args[0], in.args[0], rin.ty);
          need_scalar(rin.args[1], in.args[1]);
          break;
        case Opcode::Call: {
          in.callee = fns.at(rin.callee);
          const Function& callee = p.functions[static_cast<std::size_t>(in.callee)];
          if (rin.args.size() != callee.param_count)
            fail_at(rin.line, rin.col,
                    "call to '" + callee.name + "' expects " + std::to_string(callee.param_count) + " arguments");
          for (std::size_t a = 0; a < rin.args.size(); ++a) {
            const Type& pt = callee.param(a).type;
            if (pt.is_scalar()) {
              need_scalar(rin.args[a], in.args[a]);
            } else if (in.args[a].kind != Operand::Kind::Local || local_type(in.args[a]) != pt) {
              fail_at(rin.args[a].line, rin.args[a].col,
                      "argument " + std::to_string(a + 1) + " of '" + callee.name + "' must be a local of type " +
                          to_string(pt));
            }
          }
          break;
        }
        case Opcode::Br:
        case Opcode::CondBr: {
          int n = rin.op == Opcode::Br ? 1 : 2;
          for (int s = 0; s < n; ++s) {
            auto it = labels.find(rin.labels[s]);
            if (it == labels.end()) fail_at(rin.line, rin.col, "unknown block label '" + rin.labels[s] + "'");
            in.targets[s] = it->second;
          }
          if (rin.op == Opcode::CondBr) need_scalar(rin.args[0], in.args[0]);
          break;
        }
        case Opcode::Ret:
          if (f.return_type && in.args.empty()) fail_at(rin.line, rin.col, "missing return value");
          if (!f.return_type && !in.args.empty()) fail_at(rin.line, rin.col, "void function returns a value");
          if (!in.args.empty()) need_scalar(rin.args[0], in.args[0]);
          break;
        case Opcode::Null:
        case Opcode::Unreachable: break;
        default:
          for (std::size_t a = 0; a < in.args.size(); ++a) need_scalar(rin.args[a], in.args[a]);
          break;
        }
        bb.instrs.push_back(std::move(in));
      }
      f.blocks.push_back(std::move(bb));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::pair<GlobalVar, Token>> globals_;
  std::vector<Token> entries_;
  std::vector<RawFunction> functions_;
};

std::string operand_text(const Program& p, const Function& f, const Operand& o) {
  switch (o.kind) {
  case Operand::Kind::Local: return f.locals[static_cast<std::size_t>(o.index)].name;
  case Operand::Kind::Global: return "@" + p.globals[static_cast<std::size_t>(o.index)].name;
  case Operand::Kind::Const: return std::to_string(o.value);
  default: return "";
  }
}

}  // namespace

Program parse_program(std::string_view text) {
  Lexer lex(text);
  Parser parser(lex.run());
  return parser.run();
}

std::string print_program(const Program& p) {
  std::ostringstream out;
  for (const auto& g : p.globals) out << "global " << g.name << ": " << to_string(g.type) << " = " << g.init << ";\n";
  if (!p.entry_points.empty()) {
    out << "entry ";
    bool first = true;
    for (const auto& e : p.entry_points) {
      out << (first ? "" : ", ") << e;
      first = false;
    }
    out << ";\n";
  }
  for (const auto& f : p.functions) {
    out << "\nfn " << f.name << "(";
    for (std::size_t i = 0; i < f.param_count; ++i)
      out << (i ? ", " : "") << f.locals[i].name << ": " << to_string(f.locals[i].type);
    out << ")";
    if (f.return_type) out << " -> " << to_string(*f.return_type);
    out << " {\n";
    for (const auto& b : f.blocks) {
      out << b.label << ":\n";
      for (const auto& in : b.instrs) {
        out << "  ";
        if (!in.dest.is_none()) out << operand_text(p, f, in.dest) << " = ";
        out << to_string(in.op);
        auto args = [&](std::size_t from) {
          for (std::size_t a = from; a < in.args.size(); ++a)
            out << (a > from ? ", " : " ") << operand_text(p, f, in.args[a]);
        };
        switch (in.op) {
        case Opcode::Cmp:
          out << " " << to_string(in.pred) << " " << to_string(in.ty);
          args(0);
          break;
        case Opcode::Null: out << " " << to_string(in.ty); break;
        case Opcode::Call:
          out << " " << p.functions[static_cast<std::size_t>(in.callee)].name << "(";
          for (std::size_t a = 0; a < in.args.size(); ++a) out << (a ? ", " : "") << operand_text(p, f, in.args[a]);
          out << ")";
          break;
        case Opcode::Assert:
        case Opcode::Ret: args(0); break;
        case Opcode::Br: out << " " << f.blocks[static_cast<std::size_t>(in.targets[0])].label; break;
        case Opcode::CondBr:
          args(0);
          out << ", " << f.blocks[static_cast<std::size_t>(in.targets[0])].label << ", "
              << f.blocks[static_cast<std::size_t>(in.targets[1])].label;
          break;
        case Opcode::Unreachable: break;
        default:
          out << " " << to_string(in.ty);
          args(0);
          break;
        }
        out << ";\n";
      }
    }
    out << "}\n";
  }
  return out.str();
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace wildfire
