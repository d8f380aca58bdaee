#ifndef CUCKOOPP_TABLE_HPP
#define CUCKOOPP_TABLE_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cuckoopp/bucket.hpp"
#include "cuckoopp/counters.hpp"
#include "cuckoopp/hashing.hpp"
#include "cuckoopp/key.hpp"
#include "cuckoopp/timestamp.hpp"

namespace cuckoopp {

/// How batched lookups treat the secondary bucket:
///   Pessimistic prefetches both candidate buckets for every key.
///   Optimistic prefetches only the primary and pays a stall on overflow keys.
///   BloomGuided consults the primary bucket's filter and prefetches the
///   secondary only on a positive.
/// The strategy changes memory traffic, never results: the same keys produce
/// the same hits, misses and values under all three.
enum class LookupStrategy { Pessimistic, Optimistic, BloomGuided };

enum class InsertResult { Inserted, Updated, Failed };

/// Move one step of a displacement path: the entry at (bucket, slot) moves to
/// the next step's bucket; the final step names the landing slot.
struct PathStep {
  std::uint32_t bucket;
  int slot;
};

/// Occupancy snapshot produced by a full table walk.
struct TableStats {
  std::size_t occupied = 0;  // busy slots, including not-yet-reclaimed expired ones
  std::size_t in_primary = 0;
  std::size_t in_secondary = 0;
  double load_factor = 0.0;
  double ratio_in_secondary = 0.0;
  std::array<std::uint64_t, 17> moved_counter_hist{};  // [16] counts >= 16
  std::size_t buckets_moved_zero = 0;
  std::size_t num_buckets = 0;
};

inline constexpr int kMaxPathDepth = 4;

/// Single-writer bucketized cuckoo hash table for fixed 16-byte keys and
/// values. Each key has two candidate buckets of 8 slots; inserts displace
/// residents along paths of at most kMaxPathDepth moves. Every bucket keeps a
/// 64-bit bloom filter over the keys that call it primary but live in their
/// secondary bucket, plus a moved counter that resets the filter when the
/// last such key returns or dies.
///
/// WithTimers adds a 16-bit expiration timer per slot. Expired slots are
/// invisible to lookups and reclaimed lazily on overwrite or by
/// scan_expire(), which must run at least every kScanPeriod time units to
/// stop wrapped timers from coming back to life.
///
/// Reads and writes must come from one thread at a time; there is no internal
/// synchronization.
template <bool WithTimers>
class CuckooTable {
 public:
  static constexpr bool with_timers = WithTimers;

  /// capacity is the total slot count: a multiple of 8, at least 1024, with
  /// capacity/8 (the bucket count) a power of two.
  explicit CuckooTable(std::size_t capacity, Hasher hasher = default_hash)
      : hasher_(hasher) {
    if (hasher_ == nullptr) {
      throw std::invalid_argument("CuckooTable: hasher must not be null");
    }
    if (capacity < 1024 || capacity % kSlotsPerBucket != 0) {
      throw std::invalid_argument(
          "CuckooTable: capacity must be a multiple of 8 and at least 1024");
    }
    const std::size_t nb = capacity / kSlotsPerBucket;
    if (!is_power_of_two(nb) || nb < 128 || nb > (std::size_t{1} << 31)) {
      throw std::invalid_argument(
          "CuckooTable: capacity/8 must be a power of two in [128, 2^31]");
    }
    buckets_.resize(nb);
    entries_.resize(capacity);
    if constexpr (WithTimers) alt_rows_.resize(nb);
    index_mask_ = static_cast<std::uint32_t>(nb - 1);
  }

  std::size_t num_buckets() const noexcept { return buckets_.size(); }
  std::size_t capacity() const noexcept { return entries_.size(); }
  /// Busy slots, including expired ones that have not been reclaimed yet.
  std::size_t occupied() const noexcept { return size_; }

  Hasher hasher() const noexcept { return hasher_; }
  LookupStrategy strategy() const noexcept { return strategy_; }
  void set_strategy(LookupStrategy s) noexcept { strategy_ = s; }

  /// Gates the advisory prefetch instructions of the batched pipeline. The
  /// prefetch_* counters keep counting either way, so traffic accounting
  /// stays comparable across machines.
  void set_hardware_prefetch(bool enabled) noexcept { hardware_prefetch_ = enabled; }

  const Counters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = Counters{}; }

  const Bucket<WithTimers>& bucket_meta(std::uint32_t b) const { return buckets_.at(b); }
  const Entry& entry(std::uint32_t b, int slot) const {
    return entries_.at(static_cast<std::size_t>(b) * kSlotsPerBucket + slot);
  }
  std::uint32_t alt_index(std::uint32_t b, int slot) const {
    if constexpr (WithTimers) return alt_rows_.at(b).alt_index[slot];
    else return buckets_.at(b).alt_index[slot];
  }

  /// Test hook: forge a bucket's moved counter to exercise consistency
  /// checkers. Never called by the table itself.
  void debug_set_moved_counter(std::uint32_t b, std::uint16_t v) {
    buckets_.at(b).moved_counter = v;
  }

  // ---- lookup ----

  std::optional<Value> lookup(const Key& key) const
    requires(!WithTimers)
  {
    return lookup_impl(key, Timestamp16{0});
  }

  std::optional<Value> lookup(const Key& key, Timestamp16 now) const
    requires(WithTimers)
  {
    return lookup_impl(key, now);
  }

  void lookup_batch(std::span<const Key> keys, std::span<std::optional<Value>> out) const
    requires(!WithTimers)
  {
    lookup_batch_impl(keys, out, Timestamp16{0});
  }

  void lookup_batch(std::span<const Key> keys, std::span<std::optional<Value>> out,
                    Timestamp16 now) const
    requires(WithTimers)
  {
    lookup_batch_impl(keys, out, now);
  }

  // ---- insert / erase ----

  InsertResult insert(const Key& key, const Value& value)
    requires(!WithTimers)
  {
    return insert_impl(key, value, Timestamp16{0}, Timestamp16{0});
  }

  /// expiration must lie strictly in the future, at most kMaxExpiryDelay
  /// units after now (in wrapping 16-bit arithmetic).
  InsertResult insert(const Key& key, const Value& value, Timestamp16 expiration,
                      Timestamp16 now)
    requires(WithTimers)
  {
    if (!is_valid(expiration, now)) {
      throw std::invalid_argument(
          "insert: expiration must be within (now, now + 1024]");
    }
    return insert_impl(key, value, expiration, now);
  }

  bool erase(const Key& key)
    requires(!WithTimers)
  {
    return erase_impl(key, Timestamp16{0});
  }

  bool erase(const Key& key, Timestamp16 now)
    requires(WithTimers)
  {
    return erase_impl(key, now);
  }

  /// Reclaims every expired slot. Must run at least every kScanPeriod units;
  /// returns the number of slots reclaimed.
  std::size_t scan_expire(Timestamp16 now)
    requires(WithTimers)
  {
#ifndef NDEBUG
    if (have_last_scan_) {
      const auto gap = static_cast<std::uint16_t>(now.value - last_scan_.value);
      if (gap > kScanPeriod) {
        std::fprintf(stderr,
                     "cuckoopp: scan_expire gap %u exceeds %u units; expired "
                     "entries may have revived\n",
                     unsigned{gap}, unsigned{kScanPeriod});
      }
    }
#endif
    have_last_scan_ = true;
    last_scan_ = now;
    std::size_t reclaimed = 0;
    for (std::uint32_t b = 0; b < buckets_.size(); ++b) {
      const std::uint8_t expired =
          buckets_[b].busy_mask &
          static_cast<std::uint8_t>(~timer_valid_mask(buckets_[b].timers, now));
      for (std::uint8_t m = expired; m != 0; m &= m - 1) {
        reclaim_slot(b, std::countr_zero(m));
        ++reclaimed;
      }
    }
    return reclaimed;
  }

  /// Finds a displacement path from `start` to some bucket with a free (or
  /// expired) slot, breadth-first, at most kMaxPathDepth moves. Returns the
  /// steps root-first, or an empty vector when no path exists. Does not
  /// modify the table apart from transient scratch marks.
  std::vector<PathStep> find_cuckoo_path(std::uint32_t start)
    requires(!WithTimers)
  {
    return find_path_impl(start, Timestamp16{0});
  }

  std::vector<PathStep> find_cuckoo_path(std::uint32_t start, Timestamp16 now)
    requires(WithTimers)
  {
    return find_path_impl(start, now);
  }

  /// Walks the whole table. Entries are classified by re-deriving their hash,
  /// so the walk is O(capacity) and touches every cacheline.
  TableStats stats() const {
    TableStats st;
    st.num_buckets = buckets_.size();
    for (std::uint32_t b = 0; b < buckets_.size(); ++b) {
      const auto& bk = buckets_[b];
      const std::uint16_t mc = bk.moved_counter;
      ++st.moved_counter_hist[mc < 16 ? mc : 16];
      if (mc == 0) ++st.buckets_moved_zero;
      for (std::uint8_t m = bk.busy_mask; m != 0; m &= m - 1) {
        const int s = std::countr_zero(m);
        const HashedKey h = derive_key(entries_[idx(b, s)].key);
        ++st.occupied;
        if (h.primary_index == b) ++st.in_primary;
        else ++st.in_secondary;
      }
    }
    st.load_factor = static_cast<double>(st.occupied) / static_cast<double>(capacity());
    st.ratio_in_secondary =
        st.occupied == 0 ? 0.0
                         : static_cast<double>(st.in_secondary) / static_cast<double>(st.occupied);
    return st;
  }

 private:
  static std::size_t idx(std::uint32_t b, int slot) noexcept {
    return static_cast<std::size_t>(b) * kSlotsPerBucket + slot;
  }

  HashedKey derive_key(const Key& key) const noexcept {
    return detail::derive_from_raw(hasher_(key), index_mask_);
  }

  std::uint32_t alt_of(std::uint32_t b, int slot) const noexcept {
    if constexpr (WithTimers) return alt_rows_[b].alt_index[slot];
    else return buckets_[b].alt_index[slot];
  }

  void set_alt(std::uint32_t b, int slot, std::uint32_t v) noexcept {
    if constexpr (WithTimers) alt_rows_[b].alt_index[slot] = v;
    else buckets_[b].alt_index[slot] = v;
  }

  /// Busy slots whose timer is still valid; all busy slots without timers.
  std::uint8_t live_mask(const Bucket<WithTimers>& bk, Timestamp16 now) const noexcept {
    if constexpr (WithTimers) return bk.busy_mask & timer_valid_mask(bk.timers, now);
    else return bk.busy_mask;
  }

  /// Lowest slot that is either free or holds an expired entry, -1 when the
  /// bucket is fully live. Expired slots count as free everywhere; the caller
  /// must reclaim_slot() before overwriting one.
  int free_or_expired_slot(std::uint32_t b, Timestamp16 now) const noexcept {
    const std::uint8_t usable = static_cast<std::uint8_t>(~live_mask(buckets_[b], now));
    return usable == 0 ? -1 : std::countr_zero(usable);
  }

  void inc_moved(std::uint32_t b) noexcept {
    auto& bk = buckets_[b];
    if (bk.moved_counter == 0xffff) {
      bk.flags |= kFlagFilterUnresettable;  // a lost increment can never be undone
      return;
    }
    ++bk.moved_counter;
  }

  void dec_moved(std::uint32_t b) noexcept {
    auto& bk = buckets_[b];
    if (bk.moved_counter == 0) return;
    --bk.moved_counter;
    if (bk.moved_counter == 0 && !(bk.flags & kFlagFilterUnresettable)) bk.bloom = 0;
  }

  /// Frees a busy slot. If the resident lived in its secondary bucket, its
  /// primary bucket's moved counter is decremented (this is the lazy half of
  /// the filter-reset scheme; expired entries keep their counter contribution
  /// until reclaimed here).
  void reclaim_slot(std::uint32_t b, int slot) noexcept {
    const HashedKey h = derive_key(entries_[idx(b, slot)].key);
    if (h.primary_index != b) dec_moved(h.primary_index);
    buckets_[b].busy_mask &= static_cast<std::uint8_t>(~(1u << slot));
    --size_;
  }

  void place(std::uint32_t b, int slot, const Key& key, const Value& value,
             std::uint16_t tag, std::uint32_t alt, Timestamp16 expiration) noexcept {
    entries_[idx(b, slot)] = Entry{key, value};
    buckets_[b].tags[slot] = tag;
    if constexpr (WithTimers) buckets_[b].timers[slot] = expiration.value;
    set_alt(b, slot, alt);
    buckets_[b].busy_mask |= static_cast<std::uint8_t>(1u << slot);
    ++size_;
  }

  /// Slot of the live entry equal to `key` in bucket b, or -1. No counters;
  /// this is the insert/erase path.
  int find_live(std::uint32_t b, const HashedKey& h, const Key& key,
                Timestamp16 now) const noexcept {
    const auto& bk = buckets_[b];
    std::uint8_t cand = live_mask(bk, now) & tag_match_mask(bk.tags, h.tag);
    for (; cand != 0; cand &= cand - 1) {
      const int s = std::countr_zero(cand);
      if (entries_[idx(b, s)].key == key) return s;
    }
    return -1;
  }

  void prefetch(const void* p, std::uint64_t& counter) const noexcept {
    ++counter;
    if (hardware_prefetch_) __builtin_prefetch(p, 0, 3);
  }

  // ---- lookup internals ----

  /// Scans one bucket for `key` among live tag matches, charging one kv read
  /// per full-key compare.
  std::optional<Value> probe_bucket(std::uint32_t b, const HashedKey& h, const Key& key,
                                    Timestamp16 now) const noexcept {
    const auto& bk = buckets_[b];
    std::uint8_t cand = live_mask(bk, now) & tag_match_mask(bk.tags, h.tag);
    for (; cand != 0; cand &= cand - 1) {
      const int s = std::countr_zero(cand);
      ++counters_.kv_reads;
      if (entries_[idx(b, s)].key == key) return entries_[idx(b, s)].value;
    }
    return std::nullopt;
  }

  std::optional<Value> lookup_impl(const Key& key, Timestamp16 now) const noexcept {
    const HashedKey h = derive_key(key);
    ++counters_.lookups;
    ++counters_.primary_bucket_reads;
    if (auto v = probe_bucket(h.primary_index, h, key, now)) {
      ++counters_.lookup_hits;
      return v;
    }
    // One candidate bucket only: nothing was ever displaced out of it.
    if (h.secondary_index == h.primary_index) {
      ++counters_.lookup_misses;
      return std::nullopt;
    }
    if (strategy_ == LookupStrategy::BloomGuided) {
      const std::uint64_t mask = h.bloom_mask();
      if ((buckets_[h.primary_index].bloom & mask) != mask) {
        ++counters_.lookup_misses;
        return std::nullopt;
      }
      ++counters_.bloom_positive;
      ++counters_.secondary_bucket_reads;
      if (auto v = probe_bucket(h.secondary_index, h, key, now)) {
        ++counters_.bloom_true_positive;
        ++counters_.lookup_hits;
        return v;
      }
      ++counters_.bloom_false_positive;
      ++counters_.lookup_misses;
      return std::nullopt;
    }
    ++counters_.secondary_bucket_reads;
    if (auto v = probe_bucket(h.secondary_index, h, key, now)) {
      ++counters_.lookup_hits;
      return v;
    }
    ++counters_.lookup_misses;
    return std::nullopt;
  }

  static constexpr std::size_t kBatchChunk = 64;

  /// Four-stage pipeline over chunks of at most kBatchChunk keys:
  ///   1. derive hashes, prefetch every primary bucket
  ///   2. strategy-dependent secondary prefetch (Pessimistic: all;
  ///      BloomGuided: read primary metadata and prefetch on filter positive)
  ///   3. read primary metadata where stage 2 did not, prefetch candidate kv
  ///   4. resolve with full-key compares
  /// Hit/miss results and non-prefetch counters match scalar lookups exactly.
  void lookup_batch_impl(std::span<const Key> keys, std::span<std::optional<Value>> out,
                         Timestamp16 now) const {
    if (keys.size() != out.size()) {
      throw std::invalid_argument("lookup_batch: out must match keys in size");
    }
    for (std::size_t base = 0; base < keys.size(); base += kBatchChunk) {
      const std::size_t n = std::min(kBatchChunk, keys.size() - base);
      chunk_lookup(keys.subspan(base, n), out.subspan(base, n), now);
    }
  }

  void chunk_lookup(std::span<const Key> keys, std::span<std::optional<Value>> out,
                    Timestamp16 now) const {
    const std::size_t n = keys.size();
    HashedKey hs[kBatchChunk];
    std::uint8_t cand[kBatchChunk] = {};
    bool consult[kBatchChunk] = {};

    for (std::size_t i = 0; i < n; ++i) {
      hs[i] = derive_key(keys[i]);
      prefetch(&buckets_[hs[i].primary_index], counters_.prefetch_primary);
    }

    switch (strategy_) {
      case LookupStrategy::Pessimistic:
        for (std::size_t i = 0; i < n; ++i) {
          prefetch(&buckets_[hs[i].secondary_index], counters_.prefetch_secondary);
        }
        break;
      case LookupStrategy::Optimistic:
        break;
      case LookupStrategy::BloomGuided:
        for (std::size_t i = 0; i < n; ++i) {
          const auto& bk = buckets_[hs[i].primary_index];
          ++counters_.primary_bucket_reads;
          cand[i] = live_mask(bk, now) & tag_match_mask(bk.tags, hs[i].tag);
          const std::uint64_t mask = hs[i].bloom_mask();
          consult[i] = hs[i].secondary_index != hs[i].primary_index &&
                       (bk.bloom & mask) == mask;
          if (consult[i]) {
            prefetch(&buckets_[hs[i].secondary_index], counters_.prefetch_secondary);
          }
        }
        break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (strategy_ != LookupStrategy::BloomGuided) {
        const auto& bk = buckets_[hs[i].primary_index];
        ++counters_.primary_bucket_reads;
        cand[i] = live_mask(bk, now) & tag_match_mask(bk.tags, hs[i].tag);
      }
      for (std::uint8_t m = cand[i]; m != 0; m &= m - 1) {
        prefetch(&entries_[idx(hs[i].primary_index, std::countr_zero(m))],
                 counters_.prefetch_kv);
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      ++counters_.lookups;
      out[i] = std::nullopt;
      bool hit = false;
      for (std::uint8_t m = cand[i]; m != 0; m &= m - 1) {
        const int s = std::countr_zero(m);
        ++counters_.kv_reads;
        if (entries_[idx(hs[i].primary_index, s)].key == keys[i]) {
          out[i] = entries_[idx(hs[i].primary_index, s)].value;
          hit = true;
          break;
        }
      }
      if (hit) {
        ++counters_.lookup_hits;
        continue;
      }
      if (hs[i].secondary_index == hs[i].primary_index) {
        ++counters_.lookup_misses;
        continue;
      }
      if (strategy_ == LookupStrategy::BloomGuided) {
        if (!consult[i]) {
          ++counters_.lookup_misses;
          continue;
        }
        ++counters_.bloom_positive;
        ++counters_.secondary_bucket_reads;
        if (auto v = probe_bucket(hs[i].secondary_index, hs[i], keys[i], now)) {
          out[i] = *v;
          ++counters_.bloom_true_positive;
          ++counters_.lookup_hits;
        } else {
          ++counters_.bloom_false_positive;
          ++counters_.lookup_misses;
        }
        continue;
      }
      ++counters_.secondary_bucket_reads;
      if (auto v = probe_bucket(hs[i].secondary_index, hs[i], keys[i], now)) {
        out[i] = *v;
        ++counters_.lookup_hits;
      } else {
        ++counters_.lookup_misses;
      }
    }
  }

  // ---- insert internals ----

  InsertResult insert_impl(const Key& key, const Value& value, Timestamp16 expiration,
                           Timestamp16 now) {
    const HashedKey h = derive_key(key);
    const std::uint32_t p = h.primary_index;
    const std::uint32_t sec = h.secondary_index;

    if (int s = find_live(p, h, key, now); s >= 0) {
      entries_[idx(p, s)].value = value;
      if constexpr (WithTimers) buckets_[p].timers[s] = expiration.value;
      return InsertResult::Updated;
    }
    if (sec != p) {
      if (int s = find_live(sec, h, key, now); s >= 0) {
        entries_[idx(sec, s)].value = value;
        if constexpr (WithTimers) buckets_[sec].timers[s] = expiration.value;
        return InsertResult::Updated;
      }
    }

    if (int s = free_or_expired_slot(p, now); s >= 0) {
      if (buckets_[p].busy_mask & (1u << s)) reclaim_slot(p, s);
      place(p, s, key, value, h.tag, sec, expiration);
      ++counters_.inserts_primary;
      return InsertResult::Inserted;
    }
    if (sec != p) {
      if (int s = free_or_expired_slot(sec, now); s >= 0) {
        if (buckets_[sec].busy_mask & (1u << s)) reclaim_slot(sec, s);
        place_secondary(h, key, value, expiration, s);
        return InsertResult::Inserted;
      }
    }

    bool rooted_primary = true;
    std::vector<PathStep> path = find_path_impl(p, now);
    if (path.empty() && sec != p) {
      path = find_path_impl(sec, now);
      rooted_primary = false;
    }
    if (path.empty()) {
      ++counters_.insert_failures;
      return InsertResult::Failed;
    }
    apply_path(path);
    const int slot0 = path.front().slot;
    if (rooted_primary) {
      place(p, slot0, key, value, h.tag, sec, expiration);
      ++counters_.inserts_primary;
    } else {
      place_secondary(h, key, value, expiration, slot0);
    }
    return InsertResult::Inserted;
  }

  /// Placement in the key's secondary bucket: publish the key in its primary
  /// bucket's filter and bump the moved counter that guards the reset.
  void place_secondary(const HashedKey& h, const Key& key, const Value& value,
                       Timestamp16 expiration, int slot) noexcept {
    place(h.secondary_index, slot, key, value, h.tag, h.primary_index, expiration);
    buckets_[h.primary_index].bloom |= h.bloom_mask();
    inc_moved(h.primary_index);
    ++counters_.inserts_secondary;
  }

  std::vector<PathStep> find_path_impl(std::uint32_t start, Timestamp16 now) {
    struct Node {
      std::uint32_t bucket;
      std::int32_t parent;
      std::int8_t slot_from_parent;
      std::uint8_t depth;
    };
    std::vector<Node> nodes;
    nodes.reserve(128);
    std::vector<std::uint32_t> marked;
    marked.reserve(128);
    const auto mark = [&](std::uint32_t b) {
      buckets_[b].scratch_mask = 1;
      marked.push_back(b);
    };
    nodes.push_back(Node{start, -1, -1, 0});
    mark(start);

    std::int32_t found = -1;
    int landing = -1;
    for (std::size_t head = 0; head < nodes.size(); ++head) {
      const Node nd = nodes[head];
      if (const int fs = free_or_expired_slot(nd.bucket, now); fs >= 0) {
        found = static_cast<std::int32_t>(head);
        landing = fs;
        break;
      }
      if (nd.depth >= kMaxPathDepth) continue;
      // Every slot of a fully live bucket is a move candidate; lowest slots
      // enqueue first, so the shortest path breaks ties toward low slots.
      for (int s = 0; s < kSlotsPerBucket; ++s) {
        const std::uint32_t alt = alt_of(nd.bucket, s);
        if (alt == nd.bucket) continue;  // degenerate entry, nowhere to go
        if (buckets_[alt].scratch_mask) continue;
        mark(alt);
        nodes.push_back(Node{alt, static_cast<std::int32_t>(head),
                             static_cast<std::int8_t>(s),
                             static_cast<std::uint8_t>(nd.depth + 1)});
      }
    }
    for (const std::uint32_t b : marked) buckets_[b].scratch_mask = 0;
    if (found < 0) return {};

    std::vector<PathStep> steps;
    steps.push_back(PathStep{nodes[found].bucket, landing});
    for (std::int32_t cur = found; nodes[cur].parent >= 0; cur = nodes[cur].parent) {
      steps.push_back(PathStep{nodes[nodes[cur].parent].bucket, nodes[cur].slot_from_parent});
    }
    std::reverse(steps.begin(), steps.end());
    return steps;
  }

  /// Executes a path back to front so each move lands in a slot the previous
  /// move just vacated. Afterwards the root step's slot is free for the
  /// caller (reclaimed here if it held an expired entry).
  void apply_path(const std::vector<PathStep>& steps) {
    for (std::size_t j = steps.size() - 1; j-- > 0;) {
      move_entry(steps[j].bucket, steps[j].slot, steps[j + 1].bucket, steps[j + 1].slot);
    }
    const auto root = steps.front();
    if (buckets_[root.bucket].busy_mask & (1u << root.slot)) {
      reclaim_slot(root.bucket, root.slot);
    }
  }

  /// Moves one entry to its alternate bucket and keeps the filter metadata
  /// exact: entering the secondary sets the key's filter bits and bumps the
  /// moved counter, returning home undoes one count (and possibly resets the
  /// filter). The destination slot must be free or expired.
  void move_entry(std::uint32_t src_b, int src_s, std::uint32_t dst_b, int dst_s) {
    if (buckets_[dst_b].busy_mask & (1u << dst_s)) reclaim_slot(dst_b, dst_s);

    const Entry e = entries_[idx(src_b, src_s)];
    const std::uint16_t tag = buckets_[src_b].tags[src_s];
    Timestamp16 expiration{0};
    if constexpr (WithTimers) expiration.value = buckets_[src_b].timers[src_s];

    buckets_[src_b].busy_mask &= static_cast<std::uint8_t>(~(1u << src_s));
    --size_;
    place(dst_b, dst_s, e.key, e.value, tag, src_b, expiration);

    const HashedKey h = derive_key(e.key);
    if (dst_b == h.secondary_index && dst_b != h.primary_index) {
      buckets_[h.primary_index].bloom |= h.bloom_mask();
      inc_moved(h.primary_index);
    } else if (dst_b == h.primary_index && src_b != h.primary_index) {
      dec_moved(h.primary_index);
    }
    ++counters_.cuckoo_moves;
  }

  bool erase_impl(const Key& key, Timestamp16 now) {
    const HashedKey h = derive_key(key);
    if (int s = find_live(h.primary_index, h, key, now); s >= 0) {
      buckets_[h.primary_index].busy_mask &= static_cast<std::uint8_t>(~(1u << s));
      --size_;
      return true;
    }
    if (h.secondary_index != h.primary_index) {
      if (int s = find_live(h.secondary_index, h, key, now); s >= 0) {
        buckets_[h.secondary_index].busy_mask &= static_cast<std::uint8_t>(~(1u << s));
        --size_;
        dec_moved(h.primary_index);
        return true;
      }
    }
    return false;
  }

  std::vector<Bucket<WithTimers>> buckets_;
  std::vector<AltRow> alt_rows_;  // populated only when WithTimers
  std::vector<Entry> entries_;
  Hasher hasher_;
  std::uint32_t index_mask_ = 0;
  std::size_t size_ = 0;
  LookupStrategy strategy_ = LookupStrategy::BloomGuided;
  bool hardware_prefetch_ = true;
  bool have_last_scan_ = false;
  Timestamp16 last_scan_{0};
  mutable Counters counters_;
};

using PlainTable = CuckooTable<false>;
using TimerTable = CuckooTable<true>;

}  // namespace cuckoopp

#endif  // CUCKOOPP_TABLE_HPP
