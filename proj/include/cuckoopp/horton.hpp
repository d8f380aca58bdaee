#ifndef CUCKOOPP_HORTON_HPP
#define CUCKOOPP_HORTON_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cuckoopp/bucket.hpp"
#include "cuckoopp/counters.hpp"
#include "cuckoopp/hashing.hpp"
#include "cuckoopp/key.hpp"
#include "cuckoopp/table.hpp"

namespace cuckoopp {

inline constexpr int kHortonRemapEntries = 21;
inline constexpr int kHortonFunctions = 7;

/// Fixed odd multipliers for the seven secondary candidate functions.
/// Candidate j of secondary hash s is (u64(s) * kHortonMultipliers[j]) >>
/// (64 - log2(num_buckets)).
inline constexpr std::array<std::uint64_t, kHortonFunctions> kHortonMultipliers = {
    0x9e3779b97f4a7c15ULL, 0xc2b2ae3d27d4eb4fULL, 0x165667b19e3779f9ULL,
    0x27d4eb2f165667c5ULL, 0x85ebca6bc2b2ae35ULL, 0xff51afd7ed558ccdULL,
    0xc4ceb9fe1a85ec53ULL,
};

struct HortonDerived {
  std::uint64_t raw = 0;
  std::uint32_t primary_index = 0;
  std::uint16_t tag = 0;
  std::uint8_t rtag = 0;  // secondary hash mod 21, indexes the remap array
  std::array<std::uint32_t, kHortonFunctions> candidates{};
};

struct HortonStats {
  std::size_t occupied = 0;
  std::size_t in_primary = 0;
  std::size_t in_secondary = 0;
  double load_factor = 0.0;
  double ratio_in_secondary = 0.0;
  std::size_t remap_entries_set = 0;
  std::size_t num_buckets = 0;
};

/// Single-array baseline with remapped overflow. Every key has one primary
/// bucket; a bucket that overflows records, per remainder class (rtag), which
/// of seven candidate functions its displaced keys went through. Lookups read
/// the second bucket only when the remap entry for the key's rtag is set, so
/// the remap array plays the role the bloom filter plays in CuckooTable, and
/// the same bloom_* counters track its consults.
///
/// Supports insert (with single-level eviction of primary residents) and
/// batched lookup. There is no erase: remap entries are never cleared, so
/// deletions cannot be accounted for.
class HortonTable {
 public:
  /// capacity is the total slot count: a multiple of 8, at least 1024, with
  /// capacity/8 (the bucket count) a power of two.
  explicit HortonTable(std::size_t capacity, Hasher hasher = default_hash)
      : hasher_(hasher) {
    if (hasher_ == nullptr) {
      throw std::invalid_argument("HortonTable: hasher must not be null");
    }
    if (capacity < 1024 || capacity % kSlotsPerBucket != 0) {
      throw std::invalid_argument(
          "HortonTable: capacity must be a multiple of 8 and at least 1024");
    }
    const std::size_t nb = capacity / kSlotsPerBucket;
    if (!is_power_of_two(nb) || nb < 128 || nb > (std::size_t{1} << 31)) {
      throw std::invalid_argument(
          "HortonTable: capacity/8 must be a power of two in [128, 2^31]");
    }
    buckets_.resize(nb);
    entries_.resize(capacity);
    index_mask_ = static_cast<std::uint32_t>(nb - 1);
    index_shift_ = 64 - std::countr_zero(nb);
  }

  std::size_t num_buckets() const noexcept { return buckets_.size(); }
  std::size_t capacity() const noexcept { return entries_.size(); }
  std::size_t occupied() const noexcept { return size_; }

  Hasher hasher() const noexcept { return hasher_; }
  const Counters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = Counters{}; }
  void set_hardware_prefetch(bool enabled) noexcept { hardware_prefetch_ = enabled; }

  const HortonBucket& bucket_meta(std::uint32_t b) const { return buckets_.at(b); }
  const Entry& entry(std::uint32_t b, int slot) const {
    return entries_.at(static_cast<std::size_t>(b) * kSlotsPerBucket + slot);
  }
  std::uint8_t remap_entry(std::uint32_t b, int rtag) const {
    return remap_get(buckets_.at(b).remap, rtag);
  }

  HortonDerived derive_key(const Key& key) const noexcept {
    const std::uint64_t raw = hasher_(key);
    const auto s = static_cast<std::uint32_t>(raw >> 32);
    HortonDerived d;
    d.raw = raw;
    d.primary_index = static_cast<std::uint32_t>(raw) & index_mask_;
    d.tag = static_cast<std::uint16_t>(s);
    d.rtag = static_cast<std::uint8_t>(s % kHortonRemapEntries);
    for (int j = 0; j < kHortonFunctions; ++j) {
      d.candidates[j] = static_cast<std::uint32_t>(
          (static_cast<std::uint64_t>(s) * kHortonMultipliers[j]) >> index_shift_);
    }
    return d;
  }

  InsertResult insert(const Key& key, const Value& value) {
    const HortonDerived d = derive_key(key);
    const std::uint32_t p = d.primary_index;
    auto& pb = buckets_[p];

    if (int s = find_in_bucket(p, d.tag, key); s >= 0) {
      entries_[idx(p, s)].value = value;
      return InsertResult::Updated;
    }
    if (const std::uint8_t j = remap_get(pb.remap, d.rtag); j != 0) {
      const std::uint32_t t = d.candidates[j - 1];
      if (int s = find_in_bucket(t, d.tag, key); s >= 0) {
        entries_[idx(t, s)].value = value;
        return InsertResult::Updated;
      }
    }

    if (int s = free_slot(p); s >= 0) {
      place(p, s, key, value, d.tag);
      ++counters_.inserts_primary;
      return InsertResult::Inserted;
    }

    // Primary is full. A set remap entry forces this key's target; otherwise
    // pick the least loaded candidate and record the function used.
    if (const std::uint8_t forced = remap_get(pb.remap, d.rtag); forced != 0) {
      const std::uint32_t t = d.candidates[forced - 1];
      if (int s = free_slot(t); s >= 0) {
        place(t, s, key, value, d.tag);
        ++counters_.inserts_secondary;
        return InsertResult::Inserted;
      }
    } else {
      const int j = least_loaded(d.candidates, p);
      if (j >= 0) {
        const std::uint32_t t = d.candidates[j];
        const int s = free_slot(t);
        pb.remap = remap_set(pb.remap, d.rtag, static_cast<std::uint8_t>(j + 1));
        place(t, s, key, value, d.tag);
        ++counters_.inserts_secondary;
        return InsertResult::Inserted;
      }
    }

    // Evict one primary resident of p to its own target, then take its slot.
    // Remapped guests of other buckets cannot move (their home remap entry is
    // shared with other keys), so only primary residents are candidates.
    for (int v = 0; v < kSlotsPerBucket; ++v) {
      const HortonDerived dv = derive_key(entries_[idx(p, v)].key);
      if (dv.primary_index != p) continue;
      std::uint32_t target;
      std::uint8_t record = 0;
      if (const std::uint8_t forced = remap_get(pb.remap, dv.rtag); forced != 0) {
        target = dv.candidates[forced - 1];
        if (target == p || free_slot(target) < 0) continue;
      } else {
        const int j = least_loaded(dv.candidates, p);
        if (j < 0) continue;
        target = dv.candidates[j];
        record = static_cast<std::uint8_t>(j + 1);
      }
      const int ts = free_slot(target);
      entries_[idx(target, ts)] = entries_[idx(p, v)];
      buckets_[target].tags[ts] = buckets_[p].tags[v];
      buckets_[target].busy_mask |= static_cast<std::uint8_t>(1u << ts);
      if (record != 0) pb.remap = remap_set(pb.remap, dv.rtag, record);
      ++counters_.cuckoo_moves;
      buckets_[p].busy_mask &= static_cast<std::uint8_t>(~(1u << v));
      place(p, v, key, value, d.tag);
      ++counters_.inserts_primary;
      return InsertResult::Inserted;
    }

    ++counters_.insert_failures;
    return InsertResult::Failed;
  }

  /// Batched lookup with the same pipeline shape as CuckooTable's
  /// BloomGuided strategy: prefetch primaries, read primary metadata and
  /// prefetch the remap target when the key's remap entry is set, resolve
  /// with full-key compares. A set remap entry for an absent key is the
  /// analogue of a bloom false positive and is counted as one.
  void lookup_batch(std::span<const Key> keys, std::span<std::optional<Value>> out) const {
    if (keys.size() != out.size()) {
      throw std::invalid_argument("lookup_batch: out must match keys in size");
    }
    for (std::size_t base = 0; base < keys.size(); base += kBatchChunk) {
      const std::size_t n = std::min(kBatchChunk, keys.size() - base);
      chunk_lookup(keys.subspan(base, n), out.subspan(base, n));
    }
  }

  HortonStats stats() const {
    HortonStats st;
    st.num_buckets = buckets_.size();
    for (std::uint32_t b = 0; b < buckets_.size(); ++b) {
      const auto& bk = buckets_[b];
      for (int r = 0; r < kHortonRemapEntries; ++r) {
        if (remap_get(bk.remap, r) != 0) ++st.remap_entries_set;
      }
      for (std::uint8_t m = bk.busy_mask; m != 0; m &= m - 1) {
        const int s = std::countr_zero(m);
        ++st.occupied;
        if (derive_key(entries_[idx(b, s)].key).primary_index == b) ++st.in_primary;
        else ++st.in_secondary;
      }
    }
    st.load_factor = static_cast<double>(st.occupied) / static_cast<double>(capacity());
    st.ratio_in_secondary =
        st.occupied == 0 ? 0.0
                         : static_cast<double>(st.in_secondary) / static_cast<double>(st.occupied);
    return st;
  }

  static std::uint8_t remap_get(std::uint64_t remap, int rtag) noexcept {
    return static_cast<std::uint8_t>((remap >> (3 * rtag)) & 7u);
  }

  static std::uint64_t remap_set(std::uint64_t remap, int rtag, std::uint8_t v) noexcept {
    const int shift = 3 * rtag;
    return (remap & ~(std::uint64_t{7} << shift)) |
           (static_cast<std::uint64_t>(v & 7u) << shift);
  }

 private:
  static constexpr std::size_t kBatchChunk = 64;

  static std::size_t idx(std::uint32_t b, int slot) noexcept {
    return static_cast<std::size_t>(b) * kSlotsPerBucket + slot;
  }

  int free_slot(std::uint32_t b) const noexcept {
    const auto usable = static_cast<std::uint8_t>(~buckets_[b].busy_mask);
    return usable == 0 ? -1 : std::countr_zero(usable);
  }

  /// Candidate with the most free slots that can still take an entry; skips
  /// the primary itself. Ties break toward the lowest function index.
  int least_loaded(const std::array<std::uint32_t, kHortonFunctions>& candidates,
                   std::uint32_t primary) const noexcept {
    int best = -1;
    int best_load = kSlotsPerBucket;
    for (int j = 0; j < kHortonFunctions; ++j) {
      if (candidates[j] == primary) continue;
      const int load = std::popcount(buckets_[candidates[j]].busy_mask);
      if (load < best_load) {
        best_load = load;
        best = j;
      }
    }
    return best_load == kSlotsPerBucket ? -1 : best;
  }

  int find_in_bucket(std::uint32_t b, std::uint16_t tag, const Key& key) const noexcept {
    const auto& bk = buckets_[b];
    std::uint8_t cand = bk.busy_mask & tag_match_mask(bk.tags, tag);
    for (; cand != 0; cand &= cand - 1) {
      const int s = std::countr_zero(cand);
      if (entries_[idx(b, s)].key == key) return s;
    }
    return -1;
  }

  void place(std::uint32_t b, int slot, const Key& key, const Value& value,
             std::uint16_t tag) noexcept {
    entries_[idx(b, slot)] = Entry{key, value};
    buckets_[b].tags[slot] = tag;
    buckets_[b].busy_mask |= static_cast<std::uint8_t>(1u << slot);
    ++size_;
  }

  void prefetch(const void* p, std::uint64_t& counter) const noexcept {
    ++counter;
    if (hardware_prefetch_) __builtin_prefetch(p, 0, 3);
  }

  void chunk_lookup(std::span<const Key> keys, std::span<std::optional<Value>> out) const {
    const std::size_t n = keys.size();
    HortonDerived hs[kBatchChunk];
    std::uint8_t cand[kBatchChunk] = {};
    std::uint32_t target[kBatchChunk] = {};
    bool consult[kBatchChunk] = {};

    for (std::size_t i = 0; i < n; ++i) {
      hs[i] = derive_key(keys[i]);
      prefetch(&buckets_[hs[i].primary_index], counters_.prefetch_primary);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& bk = buckets_[hs[i].primary_index];
      ++counters_.primary_bucket_reads;
      cand[i] = bk.busy_mask & tag_match_mask(bk.tags, hs[i].tag);
      const std::uint8_t j = remap_get(bk.remap, hs[i].rtag);
      consult[i] = j != 0;
      if (consult[i]) {
        target[i] = hs[i].candidates[j - 1];
        prefetch(&buckets_[target[i]], counters_.prefetch_secondary);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
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
      if (!consult[i]) {
        ++counters_.lookup_misses;
        continue;
      }
      ++counters_.bloom_positive;
      ++counters_.secondary_bucket_reads;
      bool found = false;
      const auto& tb = buckets_[target[i]];
      std::uint8_t m2 = tb.busy_mask & tag_match_mask(tb.tags, hs[i].tag);
      for (; m2 != 0; m2 &= m2 - 1) {
        const int s = std::countr_zero(m2);
        ++counters_.kv_reads;
        if (entries_[idx(target[i], s)].key == keys[i]) {
          out[i] = entries_[idx(target[i], s)].value;
          found = true;
          break;
        }
      }
      if (found) {
        ++counters_.bloom_true_positive;
        ++counters_.lookup_hits;
      } else {
        ++counters_.bloom_false_positive;
        ++counters_.lookup_misses;
      }
    }
  }

  std::vector<HortonBucket> buckets_;
  std::vector<Entry> entries_;
  Hasher hasher_;
  std::uint32_t index_mask_ = 0;
  int index_shift_ = 0;
  std::size_t size_ = 0;
  bool hardware_prefetch_ = true;
  mutable Counters counters_;
};

}  // namespace cuckoopp

#endif  // CUCKOOPP_HORTON_HPP
