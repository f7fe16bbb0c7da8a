#include "wildfire/fuzz.hpp"

#include "wildfire/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <set>

namespace wildfire {

namespace {

constexpr std::size_t kMaxInputLength = 4096;
constexpr std::size_t kMaxHangsKept = 16;
constexpr std::uint64_t kReweightInterval = 128;

std::uint64_t interesting_value(Rng& rng, unsigned width) {
  const unsigned bits = width * 8;
  const std::uint64_t all = bits == 64 ? ~0ULL : (1ULL << bits) - 1;
  const std::uint64_t smax = all >> 1;
  switch (rng.below(5)) {
  case 0: return 0;
  case 1: return 1;
  case 2: return all;  // -1
  case 3: return smax;
  default: return smax + 1;  // signed minimum
  }
}

void put_le(ByteStream& out, std::size_t pos, std::uint64_t v, unsigned width) {
  if (out.size() < pos + width) out.resize(pos + width, 0);
  for (unsigned b = 0; b < width; ++b) out[pos + b] = static_cast<std::uint8_t>(v >> (8 * b));
}

void mutate_once(ByteStream& out, Rng& rng, const std::vector<ByteStream>& pool, Bytes delim) {
  switch (rng.below(9)) {
  case 0:  // bit flip
    if (!out.empty()) out[rng.below(out.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    break;
  case 1:  // byte flip
    if (!out.empty()) out[rng.below(out.size())] ^= 0xFF;
    break;
  case 2:  // random byte
    if (!out.empty()) out[rng.below(out.size())] = static_cast<std::uint8_t>(rng.below(256));
    break;
  case 3: {  // interesting constant at a width-aligned offset
    static constexpr unsigned widths[] = {1, 2, 4, 8};
    unsigned w = widths[rng.below(4)];
    std::size_t slots = out.size() / w + 1;
    put_le(out, w * rng.below(slots), interesting_value(rng, w), w);
    break;
  }
  case 4: {  // block duplicate
    if (out.empty()) {
      std::size_t n = 1 + rng.below(8);
      for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(rng.below(256)));
      break;
    }
    std::size_t start = rng.below(out.size());
    std::size_t len = 1 + rng.below(std::min<std::size_t>(out.size() - start, 32));
    ByteStream block(out.begin() + static_cast<std::ptrdiff_t>(start),
                     out.begin() + static_cast<std::ptrdiff_t>(start + len));
    std::size_t at = rng.below(out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), block.begin(), block.end());
    break;
  }
  case 5: {  // block delete
    if (out.size() < 2) break;
    std::size_t start = rng.below(out.size());
    std::size_t len = 1 + rng.below(std::min<std::size_t>(out.size() - start, 32));
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(start),
              out.begin() + static_cast<std::ptrdiff_t>(start + len));
    break;
  }
  case 6: {  // splice with another corpus entry
    if (pool.empty()) break;
    const ByteStream& other = pool[rng.below(pool.size())];
    std::size_t cut = rng.below(out.size() + 1);
    std::size_t from = rng.below(other.size() + 1);
    out.resize(cut);
    out.insert(out.end(), other.begin() + static_cast<std::ptrdiff_t>(from), other.end());
    break;
  }
  case 7: {  // delimiter insertion
    std::size_t at = rng.below(out.size() + 1);
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), delim.begin(), delim.end());
    break;
  }
  default: {  // small arithmetic on a byte
    if (out.empty()) break;
    std::size_t at = rng.below(out.size());
    auto delta = static_cast<std::uint8_t>(1 + rng.below(35));
    out[at] = rng.chance(2) ? static_cast<std::uint8_t>(out[at] + delta) : static_cast<std::uint8_t>(out[at] - delta);
    break;
  }
  }
}

struct CorpusEntry {
  ByteStream input;
  std::vector<std::uint32_t> edges;
};

}  // namespace

std::string_view to_string(FuzzStatus s) {
  switch (s) {
  case FuzzStatus::Completed: return "Completed";
  case FuzzStatus::SkippedAllSeedsCrash: return "SkippedAllSeedsCrash";
  case FuzzStatus::SkippedAllSeedsHang: return "SkippedAllSeedsHang";
  }
  return "?";
}

FuzzStatus fuzz_status_from_string(std::string_view s) {
  for (auto k : {FuzzStatus::Completed, FuzzStatus::SkippedAllSeedsCrash, FuzzStatus::SkippedAllSeedsHang})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown fuzz status '" + std::string(s) + "'");
}

ByteStream mutate(const ByteStream& tc, Rng& rng, const std::vector<ByteStream>& pool, Bytes delim) {
  ByteStream out = tc;
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::size_t rounds = std::size_t{1} << rng.below(4);
    for (std::size_t i = 0; i < rounds; ++i) mutate_once(out, rng, pool, delim);
    if (out.size() > kMaxInputLength) out.resize(kMaxInputLength);
    if (out != tc) return out;
  }
  // unchanged after every attempt (e.g. splice with itself): force a change
  if (out.empty())
    out.push_back(static_cast<std::uint8_t>(rng.below(256)));
  else
    out[rng.below(out.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
  return out;
}

std::uint64_t function_seed(std::uint64_t rng_seed, std::string_view function) {
  return derive_seed(rng_seed, function);
}

FuzzResult fuzz_function(const Program& p, std::string_view function, const SeedSet& seeds, const FuzzConfig& cfg) {
  int fidx = p.find_function(function);
  if (fidx < 0) throw UsageError("unknown function '" + std::string(function) + "'");
  const Function& f = p.functions[static_cast<std::size_t>(fidx)];
  if (!f.is_isolatable()) throw UsageError("function '" + f.name + "' cannot be isolated");
  if (cfg.time_budget_s <= 0 || cfg.step_budget == 0) throw UsageError("fuzz budgets must be positive");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto deadline = start + std::chrono::duration_cast<clock::duration>(
                                    std::chrono::duration<double>(cfg.time_budget_s));

  FuzzResult res;
  res.function = f.name;
  res.coverage.hits.assign(p.edges().size(), 0);

  Interpreter vm(p);
  Rng rng(function_seed(cfg.rng_seed, f.name));
  ExecOptions opts;
  opts.step_budget = cfg.step_budget;
  opts.driver_frame = true;

  std::vector<bool> seen(p.edges().size(), false);
  std::vector<std::uint64_t> freq(p.edges().size(), 0);
  std::set<std::pair<SourceLoc, VulnKind>> crash_keys;
  std::vector<CorpusEntry> corpus;
  std::uint64_t last_progress = 0;

  enum class Kind { Normal, Crash, Hang };
  auto run_one = [&](const ByteStream& input) -> Kind {
    ArgTuple args = decode_args(f, input, cfg.delimiter);
    ExecResult r = vm.run(fidx, args, opts);
    ++res.stats.executions;
    res.coverage.merge(r.coverage);
    std::vector<std::uint32_t> edges;
    for (std::size_t e = 0; e < r.coverage.hits.size(); ++e) {
      if (!r.coverage.hits[e]) continue;
      edges.push_back(static_cast<std::uint32_t>(e));
      ++freq[e];
    }
    if (auto* crash = std::get_if<CrashReport>(&r.outcome)) {
      if (crash_keys.insert({crash->vuln_loc, crash->vuln_kind}).second) {
        res.crashes.push_back({input, std::move(*crash)});
        last_progress = res.stats.executions;
      }
      return Kind::Crash;
    }
    if (std::holds_alternative<HangExit>(r.outcome)) {
      if (res.hangs.size() < kMaxHangsKept) res.hangs.push_back(input);
      return Kind::Hang;
    }
    // only normal runs admit coverage; crashing prefixes stay unexplored
    bool fresh = false;
    for (auto e : edges) {
      if (!seen[e]) {
        seen[e] = true;
        fresh = true;
      }
    }
    if (fresh) {
      corpus.push_back({input, std::move(edges)});
      last_progress = res.stats.executions;
    }
    return Kind::Normal;
  };

  std::size_t normal = 0, hangs = 0;
  for (const auto& s : seeds.seeds) {
    Kind k = run_one(s.bytes);
    normal += k == Kind::Normal;
    hangs += k == Kind::Hang;
  }

  auto finish = [&] {
    for (const auto& c : corpus) res.corpus.push_back(c.input);
    res.stats.unique_edges = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
    res.stats.elapsed_s = std::chrono::duration<double>(clock::now() - start).count();
    return res;
  };

  if (normal == 0) {
    res.status = hangs == seeds.seeds.size() && hangs > 0 ? FuzzStatus::SkippedAllSeedsHang
                                                          : FuzzStatus::SkippedAllSeedsCrash;
    return finish();
  }

  std::vector<double> cumulative;
  std::vector<ByteStream> pool;
  auto reweight = [&] {
    cumulative.clear();
    pool.clear();
    double total = 0;
    for (const auto& c : corpus) {
      std::uint64_t rarest = std::numeric_limits<std::uint64_t>::max();
      for (auto e : c.edges) rarest = std::min(rarest, freq[e]);
      total += 1.0 / static_cast<double>(std::max<std::uint64_t>(rarest, 1));
      cumulative.push_back(total);
      pool.push_back(c.input);
    }
  };
  reweight();

  std::uint64_t since_reweight = 0;
  while (res.stats.executions < cfg.max_execs && res.stats.executions - last_progress < cfg.plateau_execs) {
    if (clock::now() >= deadline) {
      res.stats.hit_time_budget = true;
      break;
    }
    if (since_reweight++ >= kReweightInterval || cumulative.size() != corpus.size()) {
      reweight();
      since_reweight = 0;
    }
    // weighted pick: 53 bits of the raw draw scaled into [0, total)
    double x = static_cast<double>(rng.next() >> 11) * 0x1.0p-53 * cumulative.back();
    std::size_t pick = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), x) -
                                                cumulative.begin());
    pick = std::min(pick, corpus.size() - 1);
    ByteStream child = mutate(corpus[pick].input, rng, pool, cfg.delimiter);
    run_one(child);
  }
  return finish();
}

std::map<std::string, FuzzResult> fuzz_all(const Program& p, const FuzzConfig& cfg, unsigned workers,
                                           const std::vector<std::string>* only) {
  if (workers == 0) throw UsageError("workers must be at least 1");
  std::vector<std::string> names;
  if (only) {
    names = *only;
  } else {
    for (const auto& f : p.functions)
      if (f.is_isolatable()) names.push_back(f.name);
  }
  std::vector<FuzzResult> results(names.size());
  parallel_for(names.size(), workers, [&](std::size_t i) {
    const Function& f = p.function(names[i]);
    SeedSet seeds = generate_seeds(f, derive_seed(cfg.rng_seed, names[i] + "#seeds"), cfg.delimiter);
    results[i] = fuzz_function(p, names[i], seeds, cfg);
  });
  std::map<std::string, FuzzResult> out;
  for (auto& r : results) out.emplace(r.function, std::move(r));
  return out;
}

}  // namespace wildfire
