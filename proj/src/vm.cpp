#include "wildfire/vm.hpp"

#include "wildfire/arith.hpp"

#include <sstream>
#include <stdexcept>

namespace wildfire {

namespace {
constexpr std::int64_t kMaxAlloc = 1 << 20;
constexpr std::uint64_t kHashPrime = 0x100000001b3ULL;
}  // namespace

std::string_view to_string(VulnKind k) {
  switch (k) {
  case VulnKind::OutOfBoundsRead: return "OutOfBoundsRead";
  case VulnKind::OutOfBoundsWrite: return "OutOfBoundsWrite";
  case VulnKind::NullDeref: return "NullDeref";
  case VulnKind::DivByZero: return "DivByZero";
  case VulnKind::AssertFail: return "AssertFail";
  }
  return "?";
}

VulnKind vuln_kind_from_string(std::string_view s) {
  for (auto k : {VulnKind::OutOfBoundsRead, VulnKind::OutOfBoundsWrite, VulnKind::NullDeref, VulnKind::DivByZero,
                 VulnKind::AssertFail})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown vulnerability kind '" + std::string(s) + "'");
}

std::string to_string(const StackTrace& st) {
  std::ostringstream out;
  for (std::size_t i = 0; i < st.frames.size(); ++i)
    out << "#" << i << " " << to_string(st.frames[i].loc) << " in " << st.frames[i].function << "\n";
  return out.str();
}

void CoverageMap::merge(const CoverageMap& other) {
  if (hits.size() < other.hits.size()) hits.resize(other.hits.size(), 0);
  for (std::size_t i = 0; i < other.hits.size(); ++i) hits[i] += other.hits[i];
}

std::size_t CoverageMap::edge_count() const {
  std::size_t n = 0;
  for (auto h : hits) n += h != 0;
  return n;
}

std::vector<std::vector<bool>> covered_blocks(const Program& p, const CoverageMap& cov) {
  std::vector<std::vector<bool>> out;
  for (const auto& f : p.functions) out.emplace_back(f.blocks.size(), false);
  const auto& edges = p.edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (cov.covers(e))
      out[static_cast<std::size_t>(edges[e].function)][static_cast<std::size_t>(edges[e].to_block)] = true;
  return out;
}

std::string driver_name(std::string_view function) { return std::string(kDriverPrefix) + std::string(function); }

StackTrace strip_driver_frames(const StackTrace& st) {
  StackTrace out;
  for (const auto& fr : st.frames)
    if (fr.function.rfind(kDriverPrefix, 0) != 0) out.frames.push_back(fr);
  return out;
}

Interpreter::Interpreter(const Program& p) : program_(p) {}

std::int64_t Interpreter::read_raw(const Frame& fr, const Operand& o) const {
  switch (o.kind) {
  case Operand::Kind::Const: return o.value;
  case Operand::Kind::Global: return globals_[static_cast<std::size_t>(o.index)];
  case Operand::Kind::Local: return slots_[fr.base + static_cast<std::size_t>(o.index)].value;
  default: return 0;
  }
}

std::int64_t Interpreter::read(const Frame& fr, const Operand& o, ScalarKind as) const {
  return arith::convert(read_raw(fr, o), as);
}

void Interpreter::write_scalar(const Frame& fr, const Operand& dest, std::int64_t v) {
  if (dest.kind == Operand::Kind::Global) {
    globals_[static_cast<std::size_t>(dest.index)] =
        arith::convert(v, program_.globals[static_cast<std::size_t>(dest.index)].type);
  } else if (dest.kind == Operand::Kind::Local) {
    const Function& f = program_.functions[static_cast<std::size_t>(fr.function)];
    slots_[fr.base + static_cast<std::size_t>(dest.index)].value =
        arith::convert(v, f.locals[static_cast<std::size_t>(dest.index)].type.elem);
  }
}

void Interpreter::push_frame(int function) {
  const Function& f = program_.functions[static_cast<std::size_t>(function)];
  std::size_t base = slots_.size();
  slots_.resize(base + f.locals.size(), Slot{});
  frames_.push_back({function, 0, 0, base});
}

std::optional<std::size_t> Interpreter::match_summary(int function, std::size_t base) const {
  if (!summaries_ || static_cast<std::size_t>(function) >= summaries_->size()) return std::nullopt;
  const auto& records = (*summaries_)[static_cast<std::size_t>(function)];
  const Function& f = program_.functions[static_cast<std::size_t>(function)];
  for (std::size_t r = 0; r < records.size(); ++r) {
    const ArgTuple& rec = records[r];
    if (rec.values.size() != f.param_count) continue;
    bool equal = true;
    for (std::size_t i = 0; i < f.param_count && equal; ++i) {
      const Slot& s = slots_[base + i];
      const Type& t = f.param(i).type;
      if (const auto* sc = std::get_if<ScalarArg>(&rec.values[i])) {
        equal = t.is_scalar() && arith::convert(s.value, t.elem) == arith::convert(sc->value, t.elem);
      } else {
        const auto& buf = std::get<BufferArg>(rec.values[i]);
        if (!t.is_pointer() || s.buffer < 0) {
          equal = false;
          continue;
        }
        const Buffer& b = heap_[static_cast<std::size_t>(s.buffer)];
        auto len = static_cast<std::int64_t>(b.data.size());
        if (b.elem != buf.elem || s.value < 0 || s.value > len ||
            static_cast<std::size_t>(len - s.value) != buf.length()) {
          equal = false;
          continue;
        }
        for (std::size_t k = 0; k < buf.length() && equal; ++k)
          equal = b.data[static_cast<std::size_t>(s.value) + k] == buf.element(k);
      }
    }
    if (equal) return r;
  }
  return std::nullopt;
}

StackTrace Interpreter::trace(const std::string* driver) const {
  StackTrace st;
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    const std::string& name = program_.functions[static_cast<std::size_t>(it->function)].name;
    st.frames.push_back({SourceLoc{name, it->block, it->ip}, name});
  }
  if (driver) st.frames.push_back({SourceLoc{*driver, 0, 0}, *driver});
  return st;
}

ExecResult Interpreter::run(int function, const ArgTuple& args, const ExecOptions& opts) {
  if (function < 0 || static_cast<std::size_t>(function) >= program_.functions.size())
    throw UsageError("unknown function index");
  const Function& top = program_.functions[static_cast<std::size_t>(function)];
  check_signature(top, args);

  ExecResult result;
  result.coverage.hits.assign(program_.edges().size(), 0);
  std::uint64_t path_hash = 0xcbf29ce484222325ULL;
  auto hit = [&](int edge) {
    ++result.coverage.hits[static_cast<std::size_t>(edge)];
    path_hash = (path_hash ^ static_cast<std::uint64_t>(edge)) * kHashPrime;
  };

  summaries_ = opts.summaries;
  slots_.clear();
  frames_.clear();
  heap_.clear();
  globals_.clear();
  for (const auto& g : program_.globals) globals_.push_back(arith::convert(g.init, g.type));

  std::string driver;
  if (opts.driver_frame) driver = driver_name(top.name);
  const std::string* driver_ptr = opts.driver_frame ? &driver : nullptr;

  push_frame(function);
  for (std::size_t i = 0; i < top.param_count; ++i) {
    Slot& s = slots_[i];
    if (const auto* sc = std::get_if<ScalarArg>(&args.values[i])) {
      s.value = arith::convert(sc->value, top.param(i).type.elem);
    } else {
      const auto& b = std::get<BufferArg>(args.values[i]);
      Buffer buf{b.elem, {}};
      buf.data.reserve(b.length());
      for (std::size_t k = 0; k < b.length(); ++k) buf.data.push_back(b.element(k));
      s.buffer = static_cast<std::int32_t>(heap_.size());
      s.value = 0;
      heap_.push_back(std::move(buf));
    }
  }

  auto finish = [&](ExecOutcome outcome, std::uint64_t steps) {
    result.outcome = std::move(outcome);
    result.path_hash = path_hash;
    result.steps = steps;
    return result;
  };
  auto crash = [&](VulnKind kind, std::uint64_t steps) {
    CrashReport rep;
    const Frame& fr = frames_.back();
    rep.vuln_loc = SourceLoc{program_.functions[static_cast<std::size_t>(fr.function)].name, fr.block, fr.ip};
    rep.vuln_kind = kind;
    rep.stack = trace(driver_ptr);
    rep.crashing_args = args;
    return finish(std::move(rep), steps);
  };

  if (auto r = match_summary(function, 0)) return finish(SummaryHit{top.name, *r, trace(driver_ptr)}, 0);
  hit(top.entry_edge);

  std::uint64_t steps = 0;
  while (!frames_.empty()) {
    if (++steps > opts.step_budget) return finish(HangExit{steps - 1}, steps - 1);
    Frame& fr = frames_.back();
    const Function& f = program_.functions[static_cast<std::size_t>(fr.function)];
    const Instruction& in =
        f.blocks[static_cast<std::size_t>(fr.block)].instrs[static_cast<std::size_t>(fr.ip)];

    switch (in.op) {
    case Opcode::Mov: write_scalar(fr, in.dest, read(fr, in.args[0], in.ty)); break;
    case Opcode::ZExt: {
      const Operand& a = in.args[0];
      unsigned src = 64;
      if (a.kind == Operand::Kind::Local) src = bit_width(f.locals[static_cast<std::size_t>(a.index)].type.elem);
      if (a.kind == Operand::Kind::Global) src = bit_width(program_.globals[static_cast<std::size_t>(a.index)].type);
      auto u = arith::trunc(static_cast<std::uint64_t>(read_raw(fr, a)), src);
      write_scalar(fr, in.dest, arith::convert(static_cast<std::int64_t>(u), in.ty));
      break;
    }
    case Opcode::Cmp: {
      unsigned w = bit_width(in.ty);
      auto a = static_cast<std::uint64_t>(read(fr, in.args[0], in.ty));
      auto b = static_cast<std::uint64_t>(read(fr, in.args[1], in.ty));
      write_scalar(fr, in.dest, arith::compare(in.pred, a, b, w) ? 1 : 0);
      break;
    }
    case Opcode::Load:
    case Opcode::Store: {
      const Slot& p = slot(fr, in.args[0]);
      bool is_load = in.op == Opcode::Load;
      if (p.buffer < 0) return crash(VulnKind::NullDeref, steps);
      Buffer& b = heap_[static_cast<std::size_t>(p.buffer)];
      std::int64_t idx = p.value + read(fr, in.args[1], ScalarKind::I64);
      if (idx < 0 || idx >= static_cast<std::int64_t>(b.data.size()))
        return crash(is_load ? VulnKind::OutOfBoundsRead : VulnKind::OutOfBoundsWrite, steps);
      if (is_load)
        write_scalar(fr, in.dest, b.data[static_cast<std::size_t>(idx)]);
      else
        b.data[static_cast<std::size_t>(idx)] = read(fr, in.args[2], in.ty);
      break;
    }
    case Opcode::Index: {
      Slot p = slot(fr, in.args[0]);
      if (p.buffer >= 0) p.value += read(fr, in.args[1], ScalarKind::I64);
      slot(fr, in.dest) = p;
      break;
    }
    case Opcode::Alloc: {
      std::int64_t n = read(fr, in.args[0], ScalarKind::I64);
      Slot p;
      if (n >= 0 && n <= kMaxAlloc) {
        p.buffer = static_cast<std::int32_t>(heap_.size());
        heap_.push_back(Buffer{in.ty, std::vector<std::int64_t>(static_cast<std::size_t>(n), 0)});
      }
      slot(fr, in.dest) = p;
      break;
    }
    case Opcode::Null: slot(fr, in.dest) = Slot{}; break;
    case Opcode::Assert:
      if (read_raw(fr, in.args[0]) == 0) return crash(VulnKind::AssertFail, steps);
      break;
    case Opcode::Unreachable: return crash(VulnKind::AssertFail, steps);
    case Opcode::Call: {
      const Function& callee = program_.functions[static_cast<std::size_t>(in.callee)];
      std::size_t caller_base = fr.base;
      int caller_fn = fr.function;
      push_frame(in.callee);  // invalidates fr
      std::size_t base = frames_.back().base;
      for (std::size_t i = 0; i < callee.param_count; ++i) {
        const Operand& a = in.args[i];
        const Type& t = callee.param(i).type;
        if (t.is_scalar()) {
          Frame tmp{caller_fn, 0, 0, caller_base};
          slots_[base + i].value = read(tmp, a, t.elem);
        } else {
          slots_[base + i] = slots_[caller_base + static_cast<std::size_t>(a.index)];
        }
      }
      if (auto r = match_summary(in.callee, base)) {
        const SourceLoc entry{callee.name, 0, 0};
        StackTrace st = trace(driver_ptr);
        st.frames.front().loc = entry;
        return finish(SummaryHit{callee.name, *r, std::move(st)}, steps);
      }
      hit(callee.entry_edge);
      continue;  // do not advance the new frame
    }
    case Opcode::Br:
      hit(in.edge_ids[0]);
      fr.block = in.targets[0];
      fr.ip = 0;
      continue;
    case Opcode::CondBr: {
      int s = read_raw(fr, in.args[0]) != 0 ? 0 : 1;
      hit(in.edge_ids[s]);
      fr.block = in.targets[s];
      fr.ip = 0;
      continue;
    }
    case Opcode::Ret: {
      std::optional<std::int64_t> value;
      if (!in.args.empty()) value = read(fr, in.args[0], *f.return_type);
      slots_.resize(fr.base);
      frames_.pop_back();
      if (frames_.empty()) return finish(NormalExit{value}, steps);
      Frame& caller = frames_.back();
      const Function& cf = program_.functions[static_cast<std::size_t>(caller.function)];
      const Instruction& call =
          cf.blocks[static_cast<std::size_t>(caller.block)].instrs[static_cast<std::size_t>(caller.ip)];
      if (!call.dest.is_none() && value) write_scalar(caller, call.dest, *value);
      ++caller.ip;
      continue;
    }
    default: {
      unsigned w = bit_width(in.ty);
      auto a = static_cast<std::uint64_t>(read(fr, in.args[0], in.ty));
      auto b = static_cast<std::uint64_t>(read(fr, in.args[1], in.ty));
      bool div_zero = false;
      std::uint64_t r = arith::binary(arith::from_opcode(in.op), a, b, w, &div_zero);
      if (div_zero) return crash(VulnKind::DivByZero, steps);
      write_scalar(fr, in.dest, arith::to_signed(r, w));
      break;
    }
    }
    ++frames_.back().ip;
  }
  return finish(NormalExit{}, steps);
}

ExecResult execute(const Program& p, std::string_view function, const ArgTuple& args, const ExecOptions& opts) {
  int idx = p.find_function(function);
  if (idx < 0) throw UsageError("unknown function '" + std::string(function) + "'");
  Interpreter vm(p);
  return vm.run(idx, args, opts);
}

}  // namespace wildfire
