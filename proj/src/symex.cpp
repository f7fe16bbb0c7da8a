#include "wildfire/symex.hpp"

#include <algorithm>
#include <memory>
#include <set>

namespace wildfire {

namespace {

using Clock = std::chrono::steady_clock;
constexpr int kInf = kInfiniteDistance;
constexpr std::int64_t kMaxAlloc = 1 << 20;
constexpr std::size_t kMaxSymbolicIndexSpan = 4096;

int add_dist(int a, int b) { return (a >= kInf || b >= kInf) ? kInf : std::min(kInf, a + b); }

std::vector<int> successors(const BasicBlock& bb) {
  const Instruction& t = bb.instrs.back();
  if (t.op == Opcode::Br) return {t.targets[0]};
  if (t.op == Opcode::CondBr) return {t.targets[0], t.targets[1]};
  return {};
}

}  // namespace

std::string_view to_string(TargetedKind k) {
  switch (k) {
    case TargetedKind::VulnTriggered: return "VulnTriggered";
    case TargetedKind::Infeasible: return "Infeasible";
    case TargetedKind::Exhausted: return "Exhausted";
  }
  return "?";
}

int TargetSpec::distance(const SourceLoc& block) const {
  auto it = block_distance.find(SourceLoc{block.function, block.block, 0});
  return it == block_distance.end() ? kInf : it->second;
}

TargetSpec compute_distances(const Program& p, std::string_view target) {
  TargetSpec ts;
  ts.target = std::string(target);
  ts.target_index = p.find_function(target);
  if (ts.target_index < 0) throw UsageError("unknown target function '" + ts.target + "'");

  const std::size_t nf = p.functions.size();
  ts.down.resize(nf);
  ts.to_ret.resize(nf);
  std::vector<std::vector<int>> full(nf);
  // call sites per callee: (caller function, block)
  std::vector<std::vector<std::pair<int, int>>> sites(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& blocks = p.functions[f].blocks;
    ts.down[f].assign(blocks.size(), kInf);
    ts.to_ret[f].assign(blocks.size(), kInf);
    full[f].assign(blocks.size(), kInf);
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (const auto& in : blocks[b].instrs)
        if (in.op == Opcode::Call) sites[static_cast<std::size_t>(in.callee)].push_back({static_cast<int>(f), static_cast<int>(b)});
  }

  auto relax = [](int& slot, int v) {
    if (v < slot) {
      slot = v;
      return true;
    }
    return false;
  };

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& blocks = p.functions[f].blocks;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].instrs.back().op == Opcode::Ret) {
          changed |= relax(ts.to_ret[f][b], 0);
          continue;
        }
        for (int s : successors(blocks[b])) changed |= relax(ts.to_ret[f][b], add_dist(1, ts.to_ret[f][static_cast<std::size_t>(s)]));
      }
    }
  }

  auto local_pass = [&](std::vector<std::vector<int>>& d, bool with_returns) {
    bool changed = false;
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& blocks = p.functions[f].blocks;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        int& slot = d[f][b];
        for (const auto& in : blocks[b].instrs) {
          if (in.op != Opcode::Call) continue;
          if (in.callee == ts.target_index) changed |= relax(slot, 0);
          else changed |= relax(slot, add_dist(1, d[static_cast<std::size_t>(in.callee)][0]));
        }
        for (int s : successors(blocks[b])) changed |= relax(slot, add_dist(1, d[f][static_cast<std::size_t>(s)]));
        if (with_returns && ts.to_ret[f][b] < kInf)
          for (auto [g, c] : sites[f])
            changed |= relax(slot, add_dist(ts.to_ret[f][b] + 1, d[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)]));
      }
    }
    return changed;
  };
  while (local_pass(ts.down, false)) {
  }
  while (local_pass(full, true)) {
  }

  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t b = 0; b < full[f].size(); ++b)
      ts.block_distance[SourceLoc{p.functions[f].name, static_cast<int>(b), 0}] = full[f][b];
  return ts;
}

namespace {

struct SymSlot {
  ExprRef v;           // scalar value
  int buffer = -1;     // pointer: heap index, -1 for null
  ExprRef off;         // pointer offset (64 bit)
};

struct SymFrame {
  int fn = 0;
  int block = 0;
  int ip = 0;
  std::vector<SymSlot> slots;
  std::map<int, unsigned> visits;
};

struct SymBuffer {
  ScalarKind elem = ScalarKind::I8;
  std::vector<ExprRef> data;
};

struct State {
  std::vector<SymFrame> frames;
  std::vector<std::shared_ptr<SymBuffer>> heap;  // copy on write
  std::vector<ExprRef> globals;
  std::vector<ExprRef> path;
  Model model;
  bool model_valid = true;
  std::size_t layout = 0;
  std::uint64_t steps = 0;
  bool deprioritized = false;
  std::uint64_t id = 0;
};

struct Layout {
  // per caller parameter: scalar variable id, or buffer element variable ids
  std::vector<std::vector<int>> vars;
  std::vector<bool> is_buffer;
};

struct Key {
  bool deprioritized;
  int distance;
  std::uint64_t steps;
  std::uint64_t id;
  auto operator<=>(const Key&) const = default;
};

class Engine {
public:
  Engine(const SummarizedProgram& sp, int caller, const TargetSpec& ts, const SymexConfig& cfg)
      : sp_(sp), p_(sp.base()), caller_(caller), ts_(ts), cfg_(cfg),
        deadline_(Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.time_budget_s))) {}

  TargetedResult run() {
    const auto start = Clock::now();
    build_layouts();
    for (std::size_t l = 0; l < layouts_.size(); ++l) push(initial_state(l));
    if (worklist_.empty() && !layouts_.empty()) result_.unreachable = true;

    while (!worklist_.empty() && !triggered_) {
      if (Clock::now() > deadline_) {
        incomplete_ = true;
        break;
      }
      auto node = worklist_.extract(worklist_.begin());
      ++result_.states_explored;
      step_state(std::move(node.mapped()));
    }

    if (triggered_) result_.kind = TargetedKind::VulnTriggered;
    else if (incomplete_ || result_.solver_unknowns > 0) result_.kind = TargetedKind::Exhausted;
    else result_.kind = TargetedKind::Infeasible;
    result_.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
    return result_;
  }

private:
  // ---- setup ----------------------------------------------------------------

  void build_layouts() {
    const Function& f = p_.functions[static_cast<std::size_t>(caller_)];
    std::map<ScalarKind, std::set<std::size_t>> record_lengths;
    if (const auto* s = sp_.summary(ts_.target))
      for (const auto& r : s->records)
        for (const auto& v : r.args.values)
          if (const auto* b = std::get_if<BufferArg>(&v)) record_lengths[b->elem].insert(b->length());

    std::vector<std::vector<std::size_t>> choices;
    for (std::size_t i = 0; i < f.param_count; ++i) {
      const Type& t = f.param(i).type;
      if (!t.is_pointer()) {
        choices.push_back({0});
        continue;
      }
      std::set<std::size_t> lens = record_lengths[t.elem];
      lens.insert(cfg_.extra_lengths.begin(), cfg_.extra_lengths.end());
      lens.insert(16);
      std::vector<std::size_t> v(lens.begin(), lens.end());
      if (v.size() > cfg_.max_length_candidates) v.resize(cfg_.max_length_candidates);
      choices.push_back(v);
    }

    // cartesian product in lexicographic order, capped
    std::vector<std::size_t> idx(choices.size(), 0);
    bool done = false;
    while (!done && layouts_.size() < std::max<std::size_t>(cfg_.max_layouts, 1)) {
      Layout l;
      for (std::size_t i = 0; i < f.param_count; ++i) {
        const Local& param = f.param(i);
        std::vector<int> ids;
        const std::string tag = "#" + std::to_string(layouts_.size());
        if (param.type.is_pointer()) {
          for (std::size_t k = 0; k < choices[i][idx[i]]; ++k)
            ids.push_back(new_var(param.name + "[" + std::to_string(k) + "]" + tag, bit_width(param.type.elem)));
        } else {
          ids.push_back(new_var(param.name + tag, bit_width(param.type.elem)));
        }
        l.vars.push_back(std::move(ids));
        l.is_buffer.push_back(param.type.is_pointer());
      }
      layouts_.push_back(std::move(l));
      done = true;
      for (std::size_t pos = choices.size(); pos-- > 0;) {
        if (++idx[pos] < choices[pos].size()) {
          done = false;
          break;
        }
        idx[pos] = 0;
      }
    }
    if (!done) incomplete_ = true;
  }

  int new_var(std::string name, unsigned width) {
    vars_.push_back({std::move(name), width});
    return static_cast<int>(vars_.size() - 1);
  }

  State initial_state(std::size_t l) {
    const Function& f = p_.functions[static_cast<std::size_t>(caller_)];
    State s;
    s.layout = l;
    s.model.assign(vars_.size(), 0);
    for (const auto& g : p_.globals) s.globals.push_back(ex::constant(static_cast<std::uint64_t>(g.init), bit_width(g.type)));
    SymFrame fr;
    fr.fn = caller_;
    fr.slots.resize(f.locals.size());
    for (std::size_t i = 0; i < f.param_count; ++i) {
      const Type& t = f.param(i).type;
      const auto& ids = layouts_[l].vars[i];
      if (t.is_pointer()) {
        auto buf = std::make_shared<SymBuffer>();
        buf->elem = t.elem;
        for (int id : ids) buf->data.push_back(ex::variable(id, bit_width(t.elem)));
        fr.slots[i].buffer = static_cast<int>(s.heap.size());
        fr.slots[i].off = ex::constant(0, 64);
        s.heap.push_back(std::move(buf));
      } else {
        fr.slots[i].v = ex::variable(ids[0], bit_width(t.elem));
      }
    }
    fr.visits[0] = 1;
    s.frames.push_back(std::move(fr));
    return s;
  }

  // ---- scheduling -----------------------------------------------------------

  int pos_dist(int fn, int block, int ip) const {
    const auto& bb = p_.functions[static_cast<std::size_t>(fn)].blocks[static_cast<std::size_t>(block)];
    int best = kInf;
    for (std::size_t j = static_cast<std::size_t>(ip); j < bb.instrs.size(); ++j) {
      const Instruction& in = bb.instrs[j];
      if (in.op != Opcode::Call) continue;
      if (in.callee == ts_.target_index) return 0;
      best = std::min(best, add_dist(1, ts_.down[static_cast<std::size_t>(in.callee)][0]));
    }
    for (int s : successors(bb)) best = std::min(best, add_dist(1, ts_.down[static_cast<std::size_t>(fn)][static_cast<std::size_t>(s)]));
    return best;
  }

  int ret_dist(int fn, int block) const {
    const auto& bb = p_.functions[static_cast<std::size_t>(fn)].blocks[static_cast<std::size_t>(block)];
    if (bb.instrs.back().op == Opcode::Ret) return 0;
    int best = kInf;
    for (int s : successors(bb)) best = std::min(best, add_dist(1, ts_.to_ret[static_cast<std::size_t>(fn)][static_cast<std::size_t>(s)]));
    return best;
  }

  int distance(const State& s) const {
    int best = kInf, acc = 0;
    for (std::size_t k = s.frames.size(); k-- > 0;) {
      const SymFrame& fr = s.frames[k];
      const int ip = (k + 1 == s.frames.size()) ? fr.ip : fr.ip + 1;
      best = std::min(best, add_dist(acc, pos_dist(fr.fn, fr.block, ip)));
      acc = add_dist(acc, add_dist(ret_dist(fr.fn, fr.block), 1));
      if (acc >= kInf) break;
    }
    return best;
  }

  void push(State s) {
    const int d = distance(s);
    if (d >= kInf) {
      ++result_.states_pruned;
      return;
    }
    s.id = next_id_++;
    Key k{s.deprioritized, d, s.steps, s.id};
    worklist_.emplace(k, std::move(s));
    if (worklist_.size() > cfg_.max_states) {
      worklist_.erase(std::prev(worklist_.end()));
      incomplete_ = true;
    }
  }

  // ---- solving --------------------------------------------------------------

  /// Sat/Unsat/Unknown for path ∧ extra; on Sat, `out` receives a model.
  SolveStatus check(const State& s, const ExprRef& extra, Model& out) {
    if (extra->is_const()) {
      if (!extra->value) return SolveStatus::Unsat;
      if (s.model_valid) {
        out = s.model;
        return SolveStatus::Sat;
      }
    } else if (s.model_valid && ex::eval(extra, s.model)) {
      out = s.model;
      return SolveStatus::Sat;
    }
    std::vector<ExprRef> q = s.path;
    if (!extra->is_const()) q.push_back(extra);
    ++result_.solver_queries;
    SolverOptions so;
    so.budget = cfg_.solver_budget;
    SolveResult r = solve(q, vars_, so);
    if (r.status == SolveStatus::Unknown) ++result_.solver_unknowns;
    if (r.status == SolveStatus::Sat) out = std::move(r.model);
    return r.status;
  }

  void constrain(State& s, const ExprRef& c, SolveStatus status, Model m) {
    if (!c->is_const()) s.path.push_back(c);
    if (status == SolveStatus::Sat) {
      s.model = std::move(m);
      s.model_valid = true;
    } else {
      s.model_valid = false;
    }
  }

  ArgTuple concretize(const State& s, const Model& m) const {
    const Function& f = p_.functions[static_cast<std::size_t>(caller_)];
    const Layout& l = layouts_[s.layout];
    ArgTuple args;
    for (std::size_t i = 0; i < f.param_count; ++i) {
      const Type& t = f.param(i).type;
      const unsigned w = bit_width(t.elem);
      if (l.is_buffer[i]) {
        std::vector<std::int64_t> vals;
        for (int id : l.vars[i]) vals.push_back(arith::to_signed(m[static_cast<std::size_t>(id)], w));
        args.values.push_back(BufferArg::from_elements(t.elem, vals));
      } else {
        args.values.push_back(ScalarArg{t.elem, arith::to_signed(m[static_cast<std::size_t>(l.vars[i][0])], w)});
      }
    }
    return args;
  }

  /// Replays a model concretely. A SummaryHit on the target ends the search;
  /// a crash is recorded as a caller crash.
  void replay(const State& s, const Model& m) {
    ArgTuple args = concretize(s, m);
    ExecOptions eo;
    eo.step_budget = cfg_.step_budget;
    ExecResult r = sp_.execute(p_.functions[static_cast<std::size_t>(caller_)].name, args, eo);
    if (const auto* hit = std::get_if<SummaryHit>(&r.outcome)) {
      if (hit->function == ts_.target) {
        triggered_ = true;
        result_.model = std::move(args);
        result_.record_index = hit->record_index;
        result_.trace = hit->stack;
      }
    } else if (auto* c = std::get_if<CrashReport>(&r.outcome)) {
      for (const auto& prev : result_.caller_crashes)
        if (prev.vuln_loc == c->vuln_loc && prev.vuln_kind == c->vuln_kind) return;
      result_.caller_crashes.push_back(std::move(*c));
    }
  }

  /// A vulnerability is possible under `cond`: replay a model for it.
  void report_if(const State& s, const ExprRef& cond) {
    Model m;
    SolveStatus st = check(s, cond, m);
    if (st == SolveStatus::Sat) replay(s, m);
    else if (st == SolveStatus::Unknown) incomplete_ = true;
  }

  // ---- evaluation -----------------------------------------------------------

  unsigned operand_width(const State& s, const Operand& o) const {
    if (o.kind == Operand::Kind::Local) {
      const Function& f = p_.functions[static_cast<std::size_t>(s.frames.back().fn)];
      return bit_width(f.locals[static_cast<std::size_t>(o.index)].type.elem);
    }
    if (o.kind == Operand::Kind::Global) return bit_width(p_.globals[static_cast<std::size_t>(o.index)].type);
    return 64;
  }

  ExprRef raw(const State& s, const SymFrame& fr, const Operand& o) const {
    switch (o.kind) {
      case Operand::Kind::Const: return ex::constant(static_cast<std::uint64_t>(o.value), 64);
      case Operand::Kind::Global: return s.globals[static_cast<std::size_t>(o.index)];
      case Operand::Kind::Local: {
        const ExprRef& v = fr.slots[static_cast<std::size_t>(o.index)].v;
        if (v) return v;
        const Function& f = p_.functions[static_cast<std::size_t>(fr.fn)];
        return ex::constant(0, bit_width(f.locals[static_cast<std::size_t>(o.index)].type.elem));
      }
      default: return ex::constant(0, 64);
    }
  }

  ExprRef read(const State& s, const SymFrame& fr, const Operand& o, unsigned width) const {
    return ex::resize(raw(s, fr, o), width);
  }

  void write(State& s, SymFrame& fr, const Operand& dest, ExprRef v) {
    if (dest.kind == Operand::Kind::Global) {
      s.globals[static_cast<std::size_t>(dest.index)] =
          ex::resize(std::move(v), bit_width(p_.globals[static_cast<std::size_t>(dest.index)].type));
    } else if (dest.kind == Operand::Kind::Local) {
      const Function& f = p_.functions[static_cast<std::size_t>(fr.fn)];
      fr.slots[static_cast<std::size_t>(dest.index)].v =
          ex::resize(std::move(v), bit_width(f.locals[static_cast<std::size_t>(dest.index)].type.elem));
    }
  }

  SymBuffer& writable(State& s, int buffer) {
    auto& ptr = s.heap[static_cast<std::size_t>(buffer)];
    if (ptr.use_count() > 1) ptr = std::make_shared<SymBuffer>(*ptr);
    return *ptr;
  }

  /// Pins a symbolic value to its model value.
  bool concretize_value(State& s, const ExprRef& e, std::uint64_t& out) {
    if (e->is_const()) {
      out = e->value;
      return true;
    }
    Model m;
    if (check(s, ex::boolean(true), m) != SolveStatus::Sat) {
      incomplete_ = true;
      return false;
    }
    out = ex::eval(e, m);
    constrain(s, ex::compare(CmpPred::Eq, e, ex::constant(out, e->width)), SolveStatus::Sat, std::move(m));
    return true;
  }

  void enter_block(State& s, int block) {
    SymFrame& fr = s.frames.back();
    fr.block = block;
    fr.ip = 0;
    if (++fr.visits[block] > cfg_.loop_bound) s.deprioritized = true;
  }

  /// Forks on `cond`; the taken state continues in `s`, the other is queued.
  /// Returns false when no side is feasible.
  bool branch(State& s, const ExprRef& cond, int then_block, int else_block) {
    if (cond->is_const()) {
      enter_block(s, cond->value ? then_block : else_block);
      return true;
    }
    ExprRef neg = ex::logical_not(cond);
    Model mt, mf;
    SolveStatus t = check(s, cond, mt);
    SolveStatus f = check(s, neg, mf);
    if (t == SolveStatus::Unknown || f == SolveStatus::Unknown) incomplete_ = true;
    const bool take_t = t != SolveStatus::Unsat, take_f = f != SolveStatus::Unsat;
    if (take_t && take_f) {
      State other = s;
      constrain(other, neg, f, std::move(mf));
      enter_block(other, else_block);
      push(std::move(other));
      constrain(s, cond, t, std::move(mt));
      enter_block(s, then_block);
      return true;
    }
    if (take_t) {
      constrain(s, cond, t, std::move(mt));
      enter_block(s, then_block);
      return true;
    }
    if (take_f) {
      constrain(s, neg, f, std::move(mf));
      enter_block(s, else_block);
      return true;
    }
    return false;
  }

  /// Restricts execution to `ok`; reports a vulnerability if `!ok` is possible.
  bool guard(State& s, const ExprRef& ok) {
    if (ok->is_const()) {
      if (!ok->value) report_if(s, ex::boolean(true));
      return ok->value != 0;
    }
    report_if(s, ex::logical_not(ok));
    if (triggered_) return false;
    Model m;
    SolveStatus st = check(s, ok, m);
    if (st == SolveStatus::Unsat) return false;
    if (st == SolveStatus::Unknown) incomplete_ = true;
    constrain(s, ok, st, std::move(m));
    return true;
  }

  /// Symbolic buffer position: in-bounds constraint plus element selection.
  struct Access {
    int buffer;
    ExprRef index;  // 64-bit
  };

  std::optional<Access> access(State& s, const SymFrame& fr, const Instruction& in) {
    const SymSlot& ptr = fr.slots[static_cast<std::size_t>(in.args[0].index)];
    if (ptr.buffer < 0) {
      report_if(s, ex::boolean(true));
      return std::nullopt;
    }
    ExprRef idx = ex::binary(arith::BinOp::Add, ptr.off, read(s, fr, in.args[1], 64));
    const auto len = s.heap[static_cast<std::size_t>(ptr.buffer)]->data.size();
    ExprRef ok = ex::logical_and(ex::compare(CmpPred::Sge, idx, ex::constant(0, 64)),
                                 ex::compare(CmpPred::Slt, idx, ex::constant(len, 64)));
    if (!guard(s, ok)) return std::nullopt;
    if (!idx->is_const() && len > kMaxSymbolicIndexSpan) {
      std::uint64_t v = 0;
      if (!concretize_value(s, idx, v)) return std::nullopt;
      idx = ex::constant(v, 64);
    }
    return Access{ptr.buffer, idx};
  }

  ExprRef select(const SymBuffer& b, const ExprRef& idx) const {
    if (idx->is_const()) return b.data[static_cast<std::size_t>(idx->value)];
    ExprRef out = b.data.back();
    for (std::size_t k = b.data.size() - 1; k-- > 0;)
      out = ex::ite(ex::compare(CmpPred::Eq, idx, ex::constant(k, 64)), b.data[k], out);
    return out;
  }

  // ---- target call ----------------------------------------------------------

  ExprRef record_match(const State& s, const SymFrame& fr, const Instruction& call, const ArgTuple& rec) const {
    const Function& callee = p_.functions[static_cast<std::size_t>(call.callee)];
    ExprRef all = ex::boolean(true);
    for (std::size_t i = 0; i < callee.param_count; ++i) {
      const Type& t = callee.param(i).type;
      const unsigned w = bit_width(t.elem);
      if (const auto* sc = std::get_if<ScalarArg>(&rec.values[i])) {
        if (!t.is_scalar()) return ex::boolean(false);
        all = ex::logical_and(all, ex::compare(CmpPred::Eq, read(s, fr, call.args[i], w),
                                               ex::constant(static_cast<std::uint64_t>(sc->value), w)));
        continue;
      }
      const auto& rb = std::get<BufferArg>(rec.values[i]);
      const SymSlot& ptr = fr.slots[static_cast<std::size_t>(call.args[i].index)];
      if (!t.is_pointer() || ptr.buffer < 0) return ex::boolean(false);
      const SymBuffer& b = *s.heap[static_cast<std::size_t>(ptr.buffer)];
      if (b.elem != rb.elem || b.data.size() < rb.length()) return ex::boolean(false);
      const std::size_t start = b.data.size() - rb.length();
      all = ex::logical_and(all, ex::compare(CmpPred::Eq, ptr.off, ex::constant(start, 64)));
      for (std::size_t k = 0; k < rb.length(); ++k)
        all = ex::logical_and(all, ex::compare(CmpPred::Eq, b.data[start + k],
                                               ex::constant(static_cast<std::uint64_t>(rb.element(k)), w)));
      if (all->is_const() && !all->value) return all;
    }
    return all;
  }

  void at_target_call(State& s, const SymFrame& fr, const Instruction& call) {
    const FunctionSummary* sum = sp_.summary(ts_.target);
    for (const auto& rec : sum->records) {
      ExprRef match = record_match(s, fr, call, rec.args);
      if (match->is_const() && !match->value) continue;
      Model m;
      SolveStatus st = check(s, match, m);
      if (st == SolveStatus::Sat) {
        replay(s, m);
        if (triggered_) return;
        incomplete_ = true;  // model did not replay
      } else if (st == SolveStatus::Unknown) {
        incomplete_ = true;
      }
    }
  }

  // ---- stepping -------------------------------------------------------------

  void step_state(State s) {
    while (!triggered_) {
      if (++s.steps > cfg_.step_budget) {
        incomplete_ = true;
        return;
      }
      SymFrame& fr = s.frames.back();
      const Function& f = p_.functions[static_cast<std::size_t>(fr.fn)];
      const Instruction& in = f.blocks[static_cast<std::size_t>(fr.block)].instrs[static_cast<std::size_t>(fr.ip)];
      const unsigned w = bit_width(in.ty);

      switch (in.op) {
        case Opcode::Mov: write(s, fr, in.dest, read(s, fr, in.args[0], w)); break;
        case Opcode::ZExt: {
          ExprRef src = raw(s, fr, in.args[0]);
          src = ex::trunc(src, std::min(src->width, operand_width(s, in.args[0])));
          write(s, fr, in.dest, ex::zext(src, w));
          break;
        }
        case Opcode::Cmp:
          write(s, fr, in.dest, ex::zext(ex::compare(in.pred, read(s, fr, in.args[0], w), read(s, fr, in.args[1], w)), 32));
          break;
        case Opcode::Load: {
          auto a = access(s, fr, in);
          if (!a) return;
          write(s, s.frames.back(), in.dest, select(*s.heap[static_cast<std::size_t>(a->buffer)], a->index));
          break;
        }
        case Opcode::Store: {
          auto a = access(s, fr, in);
          if (!a) return;
          SymFrame& cur = s.frames.back();
          ExprRef v = read(s, cur, in.args[2], w);
          SymBuffer& b = writable(s, a->buffer);
          if (a->index->is_const()) {
            b.data[static_cast<std::size_t>(a->index->value)] = v;
          } else {
            for (std::size_t k = 0; k < b.data.size(); ++k)
              b.data[k] = ex::ite(ex::compare(CmpPred::Eq, a->index, ex::constant(k, 64)), v, b.data[k]);
          }
          break;
        }
        case Opcode::Index: {
          SymSlot p = fr.slots[static_cast<std::size_t>(in.args[0].index)];
          if (p.buffer >= 0) p.off = ex::binary(arith::BinOp::Add, p.off, read(s, fr, in.args[1], 64));
          fr.slots[static_cast<std::size_t>(in.dest.index)] = p;
          break;
        }
        case Opcode::Alloc: {
          std::uint64_t n = 0;
          if (!concretize_value(s, read(s, fr, in.args[0], 64), n)) return;
          SymFrame& cur = s.frames.back();
          SymSlot p;
          const auto sn = static_cast<std::int64_t>(n);
          if (sn >= 0 && sn <= kMaxAlloc) {
            auto buf = std::make_shared<SymBuffer>();
            buf->elem = in.ty;
            buf->data.assign(n, ex::constant(0, w));
            p.buffer = static_cast<int>(s.heap.size());
            p.off = ex::constant(0, 64);
            s.heap.push_back(std::move(buf));
          }
          cur.slots[static_cast<std::size_t>(in.dest.index)] = p;
          break;
        }
        case Opcode::Null: fr.slots[static_cast<std::size_t>(in.dest.index)] = SymSlot{}; break;
        case Opcode::Assert:
          if (!guard(s, ex::truthy(raw(s, fr, in.args[0])))) return;
          break;
        case Opcode::Unreachable: report_if(s, ex::boolean(true)); return;
        case Opcode::Call: {
          if (in.callee == ts_.target_index) {
            at_target_call(s, fr, in);
            if (triggered_) return;
          }
          const Function& callee = p_.functions[static_cast<std::size_t>(in.callee)];
          SymFrame next;
          next.fn = in.callee;
          next.slots.resize(callee.locals.size());
          for (std::size_t i = 0; i < callee.param_count; ++i) {
            const Type& t = callee.param(i).type;
            if (t.is_scalar()) next.slots[i].v = read(s, fr, in.args[i], bit_width(t.elem));
            else next.slots[i] = fr.slots[static_cast<std::size_t>(in.args[i].index)];
          }
          next.visits[0] = 1;
          s.frames.push_back(std::move(next));
          // re-queue so the scheduler sees the new distance
          push(std::move(s));
          return;
        }
        case Opcode::Br: enter_block(s, in.targets[0]); continue;
        case Opcode::CondBr: {
          ExprRef c = ex::truthy(raw(s, fr, in.args[0]));
          const bool was_symbolic = !c->is_const();
          if (!branch(s, c, in.targets[0], in.targets[1])) return;
          if (was_symbolic) {
            push(std::move(s));
            return;
          }
          continue;
        }
        case Opcode::Ret: {
          ExprRef value;
          if (!in.args.empty()) value = read(s, fr, in.args[0], bit_width(*f.return_type));
          s.frames.pop_back();
          if (s.frames.empty()) return;
          SymFrame& caller = s.frames.back();
          const Instruction& call = p_.functions[static_cast<std::size_t>(caller.fn)]
                                        .blocks[static_cast<std::size_t>(caller.block)]
                                        .instrs[static_cast<std::size_t>(caller.ip)];
          if (!call.dest.is_none() && value) write(s, caller, call.dest, value);
          ++caller.ip;
          push(std::move(s));
          return;
        }
        default: {
          const auto op = arith::from_opcode(in.op);
          ExprRef a = read(s, fr, in.args[0], w);
          ExprRef b = read(s, fr, in.args[1], w);
          if (arith::is_division(op) && !guard(s, ex::compare(CmpPred::Ne, b, ex::constant(0, w)))) return;
          SymFrame& cur = s.frames.back();
          write(s, cur, in.dest, ex::binary(op, a, b));
          break;
        }
      }
      ++s.frames.back().ip;
    }
  }

  const SummarizedProgram& sp_;
  const Program& p_;
  int caller_;
  const TargetSpec& ts_;
  SymexConfig cfg_;
  Clock::time_point deadline_;
  VarTable vars_;
  std::vector<Layout> layouts_;
  std::map<Key, State> worklist_;
  std::uint64_t next_id_ = 0;
  bool incomplete_ = false;
  bool triggered_ = false;
  TargetedResult result_;
};

}  // namespace

TargetedResult run_targeted(const SummarizedProgram& sp, std::string_view caller, const TargetSpec& target,
                            const SymexConfig& cfg) {
  const Program& p = sp.base();
  if (!sp.is_summarized(target.target)) throw UsageError("target '" + target.target + "' is not summarized");
  const int ci = p.find_function(caller);
  if (ci < 0) throw UsageError("unknown caller '" + std::string(caller) + "'");
  const Function& f = p.functions[static_cast<std::size_t>(ci)];
  for (std::size_t i = 0; i < f.param_count; ++i) {
    const Type& t = f.param(i).type;
    if (t.function_pointer || t.pointer_depth > 1)
      throw UsageError("caller '" + f.name + "' takes parameters that cannot be made symbolic");
  }
  if (target.down.size() != p.functions.size() || target.target_index != p.find_function(target.target))
    throw UsageError("target spec was computed for a different program");
  Engine engine(sp, ci, target, cfg);
  return engine.run();
}

}  // namespace wildfire
