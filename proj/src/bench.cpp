#include "cuckoopp/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

#include "cuckoopp/horton.hpp"
#include "cuckoopp/table.hpp"
#include "cuckoopp/workload.hpp"

#if defined(_OPENMP)
#define CUCKOOPP_OMP_PARALLEL_FOR _Pragma("omp parallel for schedule(static, 1)")
#else
#define CUCKOOPP_OMP_PARALLEL_FOR
#endif

namespace cuckoopp::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class T>
std::string num(T v) {
  if constexpr (std::is_floating_point_v<T>) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
  } else {
    return std::to_string(v);
  }
}

// Tables are filled at time zero with the farthest still-valid expiration, so
// probes at time zero see every entry.
constexpr Timestamp16 kBenchNow{0};
constexpr Timestamp16 kBenchExpiry{kMaxExpiryDelay};

bool timers_enabled(const BenchConfig& cfg) {
  return cfg.timers || cfg.variant == Variant::CuckooPPTimer;
}

LookupStrategy strategy_of(Variant v) {
  switch (v) {
    case Variant::Pessimistic:
      return LookupStrategy::Pessimistic;
    case Variant::Optimistic:
      return LookupStrategy::Optimistic;
    default:
      return LookupStrategy::BloomGuided;
  }
}

void validate(const BenchConfig& cfg) {
  if (cfg.batch == 0) throw std::invalid_argument("batch must be positive");
  if (cfg.workers == 0) throw std::invalid_argument("workers must be positive");
  if (cfg.load_factor <= 0.0 || cfg.load_factor > 1.0) {
    throw std::invalid_argument("load-factor must be in (0, 1]");
  }
  if (cfg.negative_rate < 0.0 || cfg.negative_rate > 1.0) {
    throw std::invalid_argument("neg-rate must be in [0, 1]");
  }
  if (cfg.variant == Variant::Horton && timers_enabled(cfg)) {
    throw std::invalid_argument("the horton variant has no expiration timers");
  }
}

template <class Table>
std::unique_ptr<Table> make_table(const BenchConfig& cfg) {
  auto t = std::make_unique<Table>(cfg.capacity);
  if constexpr (!std::is_same_v<Table, HortonTable>) {
    t->set_strategy(strategy_of(cfg.variant));
  }
  return t;
}

template <class Table>
InsertResult insert_one(Table& t, const Key& k) {
  if constexpr (std::is_same_v<Table, TimerTable>) {
    return t.insert(k, workload::value_for(k), kBenchExpiry, kBenchNow);
  } else {
    return t.insert(k, workload::value_for(k));
  }
}

/// Inserts keys in order until the first failure; returns how many went in.
template <class Table>
std::size_t fill_table(Table& t, std::span<const Key> keys) {
  std::size_t n = 0;
  for (const Key& k : keys) {
    if (insert_one(t, k) == InsertResult::Failed) break;
    ++n;
  }
  return n;
}

template <class Table>
void batch_call(const Table& t, std::span<const Key> keys,
                std::span<std::optional<Value>> out) {
  if constexpr (std::is_same_v<Table, TimerTable>) {
    t.lookup_batch(keys, out, kBenchNow);
  } else {
    t.lookup_batch(keys, out);
  }
}

template <class Table>
std::optional<Value> scalar_call(const Table& t, const Key& k) {
  if constexpr (std::is_same_v<Table, TimerTable>) {
    return t.lookup(k, kBenchNow);
  } else if constexpr (std::is_same_v<Table, PlainTable>) {
    return t.lookup(k);
  } else {
    // The single-array variant only has the batched entry point; a batch of
    // one stands in as its serial reference.
    std::optional<Value> out;
    t.lookup_batch(std::span(&k, 1), std::span(&out, 1));
    return out;
  }
}

template <class Table>
void run_batched(const Table& t, const workload::Workload& wl, std::size_t batch,
                 std::span<std::optional<Value>> out) {
  const std::span keys(wl.probe_keys);
  for (std::size_t i = 0; i < keys.size(); i += batch) {
    const std::size_t n = std::min(batch, keys.size() - i);
    batch_call(t, keys.subspan(i, n), out.subspan(i, n));
  }
}

template <class Table>
std::uint64_t run_scalar(const Table& t, const workload::Workload& wl) {
  std::uint64_t hits = 0;
  for (const Key& k : wl.probe_keys) hits += scalar_call(t, k).has_value();
  return hits;
}

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    return static_cast<std::size_t>(default_hash(k));
  }
};

/// Checks batched results against the workload's ground truth. When the fill
/// stopped early, only the keys that actually went in count as present.
bool verify_results(const workload::Workload& wl, std::size_t filled,
                    std::span<const std::optional<Value>> out) {
  std::unordered_set<Key, KeyHash> partial;
  const bool full = filled == wl.insert_keys.size();
  if (!full) {
    partial.insert(wl.insert_keys.begin(),
                   wl.insert_keys.begin() + static_cast<std::ptrdiff_t>(filled));
  }
  for (std::size_t i = 0; i < wl.probe_keys.size(); ++i) {
    const bool expect =
        wl.probe_present[i] && (full || partial.contains(wl.probe_keys[i]));
    if (expect) {
      if (!out[i] || *out[i] != workload::value_for(wl.probe_keys[i])) return false;
    } else if (out[i]) {
      return false;
    }
  }
  return true;
}

void add_common(Row& r, const char* command, const BenchConfig& cfg) {
  r.emplace_back("command", command);
  r.emplace_back("variant", variant_name(cfg.variant));
  r.emplace_back("timers", timers_enabled(cfg) ? "1" : "0");
  r.emplace_back("capacity", num(cfg.capacity));
  r.emplace_back("seed", num(cfg.seed));
}

template <class Table>
std::vector<Row> lookup_bench_impl(const BenchConfig& cfg) {
  const auto insert_count =
      static_cast<std::size_t>(static_cast<double>(cfg.capacity) * cfg.load_factor);
  const unsigned W = cfg.workers;

  std::vector<workload::Workload> wls(W);
  std::vector<std::unique_ptr<Table>> tables(W);
  std::vector<std::size_t> filled(W);
  std::vector<std::vector<std::optional<Value>>> outs(W);

#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(W));
#endif

  CUCKOOPP_OMP_PARALLEL_FOR
  for (int w = 0; w < static_cast<int>(W); ++w) {
    const std::uint64_t seed =
        W == 1 ? cfg.seed : workload::worker_seed(cfg.seed, static_cast<unsigned>(w));
    wls[w] = workload::make_workload(
        {insert_count, cfg.probes, cfg.negative_rate, seed});
    tables[w] = make_table<Table>(cfg);
    filled[w] = fill_table(*tables[w], wls[w].insert_keys);
    tables[w]->reset_counters();
    outs[w].resize(cfg.probes);
  }

  const auto tb0 = Clock::now();
  CUCKOOPP_OMP_PARALLEL_FOR
  for (int w = 0; w < static_cast<int>(W); ++w) {
    run_batched(*tables[w], wls[w], cfg.batch, std::span(outs[w]));
  }
  const double wall_batched = seconds_since(tb0);

  Counters agg;
  bool verified = true;
  std::size_t total_filled = 0;
  for (unsigned w = 0; w < W; ++w) {
    const Counters& c = tables[w]->counters();
    agg.lookups += c.lookups;
    agg.lookup_hits += c.lookup_hits;
    agg.lookup_misses += c.lookup_misses;
    agg.primary_bucket_reads += c.primary_bucket_reads;
    agg.secondary_bucket_reads += c.secondary_bucket_reads;
    agg.kv_reads += c.kv_reads;
    agg.bloom_positive += c.bloom_positive;
    agg.bloom_true_positive += c.bloom_true_positive;
    agg.bloom_false_positive += c.bloom_false_positive;
    verified = verified && verify_results(wls[w], filled[w], std::span(outs[w]));
    total_filled += filled[w];
    outs[w].clear();
    outs[w].shrink_to_fit();
    tables[w]->reset_counters();
  }

  std::vector<std::uint64_t> scalar_hits(W);
  const auto ts0 = Clock::now();
  CUCKOOPP_OMP_PARALLEL_FOR
  for (int w = 0; w < static_cast<int>(W); ++w) {
    scalar_hits[w] = run_scalar(*tables[w], wls[w]);
  }
  const double wall_scalar = seconds_since(ts0);

  std::uint64_t scalar_total = 0;
  for (unsigned w = 0; w < W; ++w) scalar_total += scalar_hits[w];
  verified = verified && scalar_total == agg.lookup_hits;

  const double total_probes = static_cast<double>(cfg.probes) * W;
  const double lookups = std::max<double>(1.0, static_cast<double>(agg.lookups));
  const double misses = static_cast<double>(agg.lookup_misses);

  Row r;
  add_common(r, "bench-lookup", cfg);
  r.emplace_back("load_factor", num(cfg.load_factor));
  r.emplace_back("neg_rate", num(cfg.negative_rate));
  r.emplace_back("batch", num(cfg.batch));
  r.emplace_back("workers", num(W));
  r.emplace_back("filled", num(total_filled));
  r.emplace_back("probes", num(static_cast<std::uint64_t>(total_probes)));
  r.emplace_back("hits", num(agg.lookup_hits));
  r.emplace_back("misses", num(agg.lookup_misses));
  r.emplace_back("batched_mops", num(total_probes / wall_batched / 1e6));
  r.emplace_back("scalar_mops", num(total_probes / wall_scalar / 1e6));
  r.emplace_back("batched_speedup", num(wall_scalar / wall_batched));
  r.emplace_back("avg_bucket_reads",
                 num(static_cast<double>(agg.primary_bucket_reads +
                                         agg.secondary_bucket_reads) /
                     lookups));
  r.emplace_back("secondary_read_rate",
                 num(static_cast<double>(agg.secondary_bucket_reads) / lookups));
  r.emplace_back("filter_positive_rate",
                 num(static_cast<double>(agg.bloom_positive) / lookups));
  r.emplace_back("filter_fpr",
                 num(misses == 0.0
                         ? 0.0
                         : static_cast<double>(agg.bloom_false_positive) / misses));
  r.emplace_back("verified", verified ? "1" : "0");
  return {std::move(r)};
}

template <class Table>
std::vector<Row> insert_bench_impl(const BenchConfig& cfg) {
  const auto wl = workload::make_workload({cfg.capacity, 0, 0.0, cfg.seed});
  auto table = make_table<Table>(cfg);

  constexpr double kMilestones[] = {0.6, 0.8, 0.95};
  std::size_t next_ms = 0;
  std::vector<Row> rows;
  double elapsed = 0.0;
  std::size_t inserted = 0;
  bool failed = false;

  const auto emit = [&](const char* milestone) {
    const auto st = table->stats();
    Row r;
    add_common(r, "bench-insert", cfg);
    r.emplace_back("milestone", milestone);
    r.emplace_back("inserted", num(inserted));
    r.emplace_back("load_factor", num(st.load_factor));
    r.emplace_back("seconds", num(elapsed));
    r.emplace_back("insert_mops", num(static_cast<double>(inserted) / elapsed / 1e6));
    r.emplace_back("moves", num(table->counters().cuckoo_moves));
    r.emplace_back("moves_per_insert",
                   num(static_cast<double>(table->counters().cuckoo_moves) /
                       std::max<double>(1.0, static_cast<double>(inserted))));
    r.emplace_back("ratio_in_secondary", num(st.ratio_in_secondary));
    r.emplace_back("failed", failed ? "1" : "0");
    rows.push_back(std::move(r));
  };

  auto t0 = Clock::now();
  for (const Key& k : wl.insert_keys) {
    if (insert_one(*table, k) == InsertResult::Failed) {
      failed = true;
      break;
    }
    ++inserted;
    if (next_ms < std::size(kMilestones) &&
        static_cast<double>(inserted) >=
            kMilestones[next_ms] * static_cast<double>(cfg.capacity)) {
      elapsed += seconds_since(t0);
      emit(num(kMilestones[next_ms]).c_str());
      ++next_ms;
      t0 = Clock::now();
    }
  }
  elapsed += seconds_since(t0);
  emit(failed ? "fail" : "end");
  return rows;
}

std::vector<Row> stats_sweep_cuckoo(const BenchConfig& cfg) {
  const auto insert_target =
      static_cast<std::size_t>(static_cast<double>(cfg.capacity) * cfg.load_factor);
  const auto wl = workload::make_workload({insert_target, 0, 0.0, cfg.seed});

  std::vector<Row> rows;
  const auto run = [&](auto table) {
    std::size_t consumed = 0;
    for (double ms = 0.05; ms <= cfg.load_factor + 1e-9; ms += 0.05) {
      const auto target = std::min(
          insert_target,
          static_cast<std::size_t>(ms * static_cast<double>(cfg.capacity)));
      bool fill_failed = false;
      while (consumed < target) {
        if (insert_one(*table, wl.insert_keys[consumed]) == InsertResult::Failed) {
          fill_failed = true;
          break;
        }
        ++consumed;
      }
      const auto st = table->stats();
      Row r;
      add_common(r, "stats-sweep", cfg);
      r.emplace_back("load_factor", num(st.load_factor));
      r.emplace_back("occupied", num(st.occupied));
      r.emplace_back("in_primary", num(st.in_primary));
      r.emplace_back("in_secondary", num(st.in_secondary));
      r.emplace_back("ratio_in_secondary", num(st.ratio_in_secondary));
      r.emplace_back("moved_zero_fraction",
                     num(static_cast<double>(st.buckets_moved_zero) /
                         static_cast<double>(st.num_buckets)));
      r.emplace_back("moves", num(table->counters().cuckoo_moves));
      rows.push_back(std::move(r));
      if (fill_failed) break;
    }
  };
  if (timers_enabled(cfg)) run(make_table<TimerTable>(cfg));
  else run(make_table<PlainTable>(cfg));
  return rows;
}

std::vector<Row> stats_sweep_horton(const BenchConfig& cfg) {
  const auto insert_target =
      static_cast<std::size_t>(static_cast<double>(cfg.capacity) * cfg.load_factor);
  const auto wl = workload::make_workload({insert_target, 0, 0.0, cfg.seed});
  auto table = make_table<HortonTable>(cfg);

  std::vector<Row> rows;
  std::size_t consumed = 0;
  for (double ms = 0.05; ms <= cfg.load_factor + 1e-9; ms += 0.05) {
    const auto target = std::min(
        insert_target, static_cast<std::size_t>(ms * static_cast<double>(cfg.capacity)));
    bool fill_failed = false;
    while (consumed < target) {
      if (table->insert(wl.insert_keys[consumed], workload::value_for(wl.insert_keys[consumed])) ==
          InsertResult::Failed) {
        fill_failed = true;
        break;
      }
      ++consumed;
    }
    const auto st = table->stats();
    Row r;
    add_common(r, "stats-sweep", cfg);
    r.emplace_back("load_factor", num(st.load_factor));
    r.emplace_back("occupied", num(st.occupied));
    r.emplace_back("in_primary", num(st.in_primary));
    r.emplace_back("in_secondary", num(st.in_secondary));
    r.emplace_back("ratio_in_secondary", num(st.ratio_in_secondary));
    r.emplace_back("remap_set_fraction",
                   num(static_cast<double>(st.remap_entries_set) /
                       (static_cast<double>(st.num_buckets) * kHortonRemapEntries)));
    r.emplace_back("moves", num(table->counters().cuckoo_moves));
    rows.push_back(std::move(r));
    if (fill_failed) break;
  }
  return rows;
}

template <class Table>
std::vector<Row> fpr_sweep_impl(const BenchConfig& cfg) {
  std::vector<double> milestones;
  for (double ms = 0.6; ms <= cfg.load_factor + 1e-9; ms += 0.05) milestones.push_back(ms);
  if (milestones.empty()) milestones.push_back(cfg.load_factor);

  const auto insert_target = static_cast<std::size_t>(
      milestones.back() * static_cast<double>(cfg.capacity));
  const auto wl = workload::make_workload({insert_target, 0, 0.0, cfg.seed});
  const auto absent = workload::make_absent_keys(
      std::span(wl.insert_keys), cfg.fpr_probes, mix64(cfg.seed ^ 0x5bd1e995u));
  auto table = make_table<Table>(cfg);

  std::vector<Row> rows;
  std::vector<std::optional<Value>> out(absent.size());
  workload::Workload probe_wl;
  probe_wl.probe_keys = absent;
  std::size_t consumed = 0;
  for (const double ms : milestones) {
    const auto target =
        static_cast<std::size_t>(ms * static_cast<double>(cfg.capacity));
    bool fill_failed = false;
    while (consumed < target) {
      if (insert_one(*table, wl.insert_keys[consumed]) == InsertResult::Failed) {
        fill_failed = true;
        break;
      }
      ++consumed;
    }
    table->reset_counters();
    run_batched(*table, probe_wl, cfg.batch, std::span(out));
    bool clean = true;
    for (const auto& o : out) clean = clean && !o.has_value();
    const Counters& c = table->counters();
    Row r;
    add_common(r, "fpr-sweep", cfg);
    r.emplace_back("load_factor", num(static_cast<double>(consumed) /
                                      static_cast<double>(cfg.capacity)));
    r.emplace_back("occupied", num(consumed));
    r.emplace_back("probes", num(absent.size()));
    r.emplace_back("filter_positives", num(c.bloom_positive));
    r.emplace_back("fpr", num(static_cast<double>(c.bloom_false_positive) /
                              static_cast<double>(absent.size())));
    r.emplace_back("secondary_reads_per_probe",
                   num(static_cast<double>(c.secondary_bucket_reads) /
                       static_cast<double>(absent.size())));
    r.emplace_back("verified", clean ? "1" : "0");
    rows.push_back(std::move(r));
    if (fill_failed) break;
  }
  return rows;
}

std::vector<Row> counter_hist_impl(const BenchConfig& cfg) {
  const auto insert_target =
      static_cast<std::size_t>(static_cast<double>(cfg.capacity) * cfg.load_factor);
  const auto wl = workload::make_workload({insert_target, 0, 0.0, cfg.seed});

  const auto run = [&](auto table) {
    fill_table(*table, wl.insert_keys);
    const auto st = table->stats();
    std::vector<Row> rows;
    for (int v = 0; v <= 16; ++v) {
      Row r;
      add_common(r, "counter-hist", cfg);
      r.emplace_back("load_factor", num(st.load_factor));
      r.emplace_back("counter", v < 16 ? num(v) : std::string("16+"));
      r.emplace_back("buckets", num(st.moved_counter_hist[v]));
      r.emplace_back("fraction", num(static_cast<double>(st.moved_counter_hist[v]) /
                                     static_cast<double>(st.num_buckets)));
      rows.push_back(std::move(r));
    }
    return rows;
  };
  if (timers_enabled(cfg)) return run(make_table<TimerTable>(cfg));
  return run(make_table<PlainTable>(cfg));
}

nlohmann::ordered_json typed(const std::string& s) {
  if (!s.empty()) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    long long iv = 0;
    auto [pi, eci] = std::from_chars(first, last, iv);
    if (eci == std::errc{} && pi == last) return iv;
    double dv = 0.0;
    auto [pd, ecd] = std::from_chars(first, last, dv);
    if (ecd == std::errc{} && pd == last) return dv;
  }
  return s;
}

}  // namespace

const char* variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::Pessimistic:
      return "pessimistic";
    case Variant::Optimistic:
      return "optimistic";
    case Variant::CuckooPP:
      return "cuckoopp";
    case Variant::CuckooPPTimer:
      return "cuckoopp_timer";
    case Variant::Horton:
      return "horton";
  }
  return "unknown";
}

std::vector<Row> run_lookup_bench(const BenchConfig& cfg) {
  validate(cfg);
  if (cfg.variant == Variant::Horton) return lookup_bench_impl<HortonTable>(cfg);
  if (timers_enabled(cfg)) return lookup_bench_impl<TimerTable>(cfg);
  return lookup_bench_impl<PlainTable>(cfg);
}

std::vector<Row> run_insert_bench(const BenchConfig& cfg) {
  validate(cfg);
  if (cfg.variant == Variant::Horton) return insert_bench_impl<HortonTable>(cfg);
  if (timers_enabled(cfg)) return insert_bench_impl<TimerTable>(cfg);
  return insert_bench_impl<PlainTable>(cfg);
}

std::vector<Row> run_stats_sweep(const BenchConfig& cfg) {
  validate(cfg);
  if (cfg.variant == Variant::Horton) return stats_sweep_horton(cfg);
  return stats_sweep_cuckoo(cfg);
}

std::vector<Row> run_fpr_sweep(const BenchConfig& cfg) {
  validate(cfg);
  if (cfg.fpr_probes == 0) throw std::invalid_argument("fpr probes must be positive");
  if (cfg.variant == Variant::Horton) return fpr_sweep_impl<HortonTable>(cfg);
  if (timers_enabled(cfg)) return fpr_sweep_impl<TimerTable>(cfg);
  return fpr_sweep_impl<PlainTable>(cfg);
}

std::vector<Row> run_counter_hist(const BenchConfig& cfg) {
  validate(cfg);
  if (cfg.variant == Variant::Horton) {
    throw std::invalid_argument("counter-hist requires a cuckoo variant");
  }
  return counter_hist_impl(cfg);
}

std::string to_csv(const std::vector<Row>& rows) {
  if (rows.empty()) return "";
  std::ostringstream os;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    os << (i ? "," : "") << rows[0][i].first;
  }
  os << '\n';
  for (const Row& r : rows) {
    if (r.size() != rows[0].size()) {
      throw std::logic_error("to_csv: rows disagree on columns");
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].first != rows[0][i].first) {
        throw std::logic_error("to_csv: rows disagree on columns");
      }
      os << (i ? "," : "") << r[i].second;
    }
    os << '\n';
  }
  return os.str();
}

std::string to_json(const std::vector<Row>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Row& r : rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r) obj[k] = typed(v);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

}  // namespace cuckoopp::bench
