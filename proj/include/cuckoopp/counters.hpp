#ifndef CUCKOOPP_COUNTERS_HPP
#define CUCKOOPP_COUNTERS_HPP

#include <cstdint>

namespace cuckoopp {

/// Structural event counters, always on. Read counters (bucket/kv) count
/// logical accesses on the lookup path only: inserts, erases and scans never
/// bump them. Scalar and batched lookups of the same keys under the same
/// strategy produce identical counts except for prefetch_*, which only the
/// batched pipeline issues.
struct Counters {
  std::uint64_t lookups = 0;
  std::uint64_t lookup_hits = 0;
  std::uint64_t lookup_misses = 0;

  std::uint64_t primary_bucket_reads = 0;
  std::uint64_t secondary_bucket_reads = 0;
  std::uint64_t kv_reads = 0;

  // Bloom consults happen only after the primary bucket failed to produce a
  // full match; a consult is "positive" when at least one probed bit is set.
  std::uint64_t bloom_positive = 0;
  std::uint64_t bloom_true_positive = 0;
  std::uint64_t bloom_false_positive = 0;

  std::uint64_t inserts_primary = 0;
  std::uint64_t inserts_secondary = 0;
  std::uint64_t cuckoo_moves = 0;
  std::uint64_t insert_failures = 0;

  std::uint64_t prefetch_primary = 0;
  std::uint64_t prefetch_secondary = 0;
  std::uint64_t prefetch_kv = 0;
};

}  // namespace cuckoopp

#endif  // CUCKOOPP_COUNTERS_HPP
