#include "wildfire/corpus_min.hpp"

#include <algorithm>

namespace wildfire {

namespace {

struct Runner {
  const Program& p;
  int fidx;
  const Function& f;
  const MinimizeOptions& opts;
  Interpreter vm;

  Runner(const Program& prog, std::string_view function, const MinimizeOptions& o)
      : p(prog), fidx(prog.find_function(function)), f(prog.function(function)), opts(o), vm(prog) {}

  ExecResult run(Bytes input) {
    ExecOptions eo;
    eo.step_budget = opts.step_budget;
    eo.driver_frame = true;
    return vm.run(fidx, decode_args(f, input, opts.delimiter), eo);
  }

  ExecutionKey key(Bytes input) {
    ExecResult r = run(input);
    ExecutionKey k;
    if (auto* c = std::get_if<CrashReport>(&r.outcome)) {
      k.kind = 1;
      k.vuln_loc = c->vuln_loc;
      k.vuln_kind = c->vuln_kind;
      k.stack = strip_driver_frames(c->stack);
    } else if (std::holds_alternative<HangExit>(r.outcome)) {
      k.kind = 2;
    } else if (auto* s = std::get_if<SummaryHit>(&r.outcome)) {
      k.kind = 3;
      k.stack = strip_driver_frames(s->stack);
    } else {
      k.path_hash = r.path_hash;
    }
    return k;
  }
};

std::set<std::size_t> edge_set(const CoverageMap& cov) {
  std::set<std::size_t> out;
  for (std::size_t e = 0; e < cov.hits.size(); ++e)
    if (cov.hits[e]) out.insert(e);
  return out;
}

}  // namespace

MinimizedCorpus cmin(const Program& p, std::string_view function, const std::vector<ByteStream>& corpus,
                     const MinimizeOptions& opts) {
  Runner runner(p, function, opts);
  std::vector<std::set<std::size_t>> cover;
  for (const auto& input : corpus) cover.push_back(edge_set(runner.run(input).coverage));

  MinimizedCorpus out;
  for (const auto& c : cover) out.coverage_before.insert(c.begin(), c.end());

  // greedy set cover: most new edges first, smaller input on ties
  std::vector<std::size_t> picked;
  std::vector<bool> used(corpus.size(), false);
  std::set<std::size_t> covered;
  while (covered.size() < out.coverage_before.size()) {
    std::size_t best = corpus.size(), best_gain = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (used[i]) continue;
      std::size_t gain = 0;
      for (std::size_t e : cover[i]) gain += !covered.count(e);
      if (gain > best_gain || (gain == best_gain && gain > 0 && corpus[i].size() < corpus[best].size())) {
        best = i;
        best_gain = gain;
      }
    }
    used[best] = true;
    picked.push_back(best);
    covered.insert(cover[best].begin(), cover[best].end());
  }

  // drop picks made redundant by later ones, largest first
  std::vector<std::size_t> by_size = picked;
  std::stable_sort(by_size.begin(), by_size.end(),
                   [&](std::size_t a, std::size_t b) { return corpus[a].size() > corpus[b].size(); });
  for (std::size_t i : by_size) {
    std::set<std::size_t> rest;
    for (std::size_t j : picked)
      if (j != i && used[j]) rest.insert(cover[j].begin(), cover[j].end());
    if (std::includes(rest.begin(), rest.end(), cover[i].begin(), cover[i].end())) used[i] = false;
  }

  for (std::size_t i : picked)
    if (used[i]) {
      out.kept.push_back(corpus[i]);
      out.coverage_after.insert(cover[i].begin(), cover[i].end());
    }
  out.dropped_count = corpus.size() - out.kept.size();
  return out;
}

ExecutionKey execution_key(const Program& p, std::string_view function, Bytes input, const MinimizeOptions& opts) {
  Runner runner(p, function, opts);
  return runner.key(input);
}

ByteStream tmin(const Program& p, std::string_view function, const ByteStream& tc, const MinimizeOptions& opts) {
  Runner runner(p, function, opts);
  const ExecutionKey target = runner.key(tc);
  ByteStream cur = tc;

  auto accept = [&](ByteStream candidate) {
    if (candidate == cur || !(runner.key(candidate) == target)) return false;
    cur = std::move(candidate);
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;

    // leading NULs: all at once, then one at a time
    std::size_t lead = 0;
    while (lead < cur.size() && cur[lead] == 0) ++lead;
    if (lead > 0 && !accept(ByteStream(cur.begin() + static_cast<std::ptrdiff_t>(lead), cur.end())))
      while (!cur.empty() && cur.front() == 0 && accept(ByteStream(cur.begin() + 1, cur.end()))) changed = true;
    else if (lead > 0)
      changed = true;

    std::size_t trail = 0;
    while (trail < cur.size() && cur[cur.size() - 1 - trail] == 0) ++trail;
    if (trail > 0 && !accept(ByteStream(cur.begin(), cur.end() - static_cast<std::ptrdiff_t>(trail))))
      while (!cur.empty() && cur.back() == 0 && accept(ByteStream(cur.begin(), cur.end() - 1))) changed = true;
    else if (trail > 0)
      changed = true;

    // block removal, halving the block size each round
    for (std::size_t block = std::max<std::size_t>(cur.size() / 2, 1); block >= 1; block /= 2) {
      std::size_t pos = 0;
      while (pos < cur.size()) {
        std::size_t len = std::min(block, cur.size() - pos);
        ByteStream candidate(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(pos));
        candidate.insert(candidate.end(), cur.begin() + static_cast<std::ptrdiff_t>(pos + len), cur.end());
        if (accept(std::move(candidate)))
          changed = true;
        else
          pos += len;
      }
      if (block == 1) break;
    }
  }
  return cur;
}

}  // namespace wildfire
