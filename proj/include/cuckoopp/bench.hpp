#ifndef CUCKOOPP_BENCH_HPP
#define CUCKOOPP_BENCH_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cuckoopp::bench {

enum class Variant { Pessimistic, Optimistic, CuckooPP, CuckooPPTimer, Horton };

const char* variant_name(Variant v) noexcept;

struct BenchConfig {
  std::size_t capacity = std::size_t{1} << 20;  // slots
  double load_factor = 0.8;
  double negative_rate = 0.0;
  std::size_t batch = 32;
  std::uint64_t seed = 1;
  Variant variant = Variant::CuckooPP;
  bool timers = false;  // run the cuckoo variants with expiration timers
  unsigned workers = 1;
  std::size_t probes = 4'000'000;      // bench-lookup stream length
  std::size_t fpr_probes = 1'000'000;  // absent probes per fpr-sweep point
};

/// One output record as ordered (column, value) pairs. All rows produced by
/// one run share the same columns in the same order.
using Row = std::vector<std::pair<std::string, std::string>>;

/// Fills a table to load_factor, then times the probe stream twice: batched
/// through the prefetch pipeline and one key at a time as the serial
/// reference. With workers > 1 every worker drives its own table over its own
/// stream (share-nothing) and the row reports aggregate throughput.
std::vector<Row> run_lookup_bench(const BenchConfig& cfg);

/// Inserts distinct keys until the first failure, reporting cumulative
/// throughput at fixed occupancy milestones and the load factor reached when
/// an insert first fails.
std::vector<Row> run_insert_bench(const BenchConfig& cfg);

/// Occupancy structure (share of entries in their secondary bucket, share of
/// buckets with a zero moved counter) at rising load factors.
std::vector<Row> run_stats_sweep(const BenchConfig& cfg);

/// Absent-key false positive rate of the secondary-bucket filter (bloom
/// filter or remap array) at rising load factors.
std::vector<Row> run_fpr_sweep(const BenchConfig& cfg);

/// Histogram of per-bucket moved counters at one load factor. Cuckoo
/// variants only.
std::vector<Row> run_counter_hist(const BenchConfig& cfg);

std::string to_csv(const std::vector<Row>& rows);
std::string to_json(const std::vector<Row>& rows);

}  // namespace cuckoopp::bench

#endif  // CUCKOOPP_BENCH_HPP
