#ifndef CUCKOOPP_BUCKET_HPP
#define CUCKOOPP_BUCKET_HPP

#include <cstdint>

namespace cuckoopp {

inline constexpr int kSlotsPerBucket = 8;

/// Set once moved_counter saturates; from then on the bloom filter is never
/// reset, because entries it covered can no longer be accounted for.
inline constexpr std::uint8_t kFlagFilterUnresettable = 0x01;

template <bool WithTimers>
struct Bucket;

/// Metadata bucket without timers. Tags, bloom filter and the alternate
/// bucket indices all share one cacheline; key/value pairs live in a
/// separate flat array indexed by (bucket, slot).
template <>
struct alignas(64) Bucket<false> {
  std::uint16_t tags[kSlotsPerBucket] = {};
  std::uint64_t bloom = 0;
  std::uint16_t moved_counter = 0;
  std::uint8_t busy_mask = 0;
  std::uint8_t scratch_mask = 0;  // transient visited marks during path search
  std::uint8_t flags = 0;
  std::uint8_t pad_[3] = {};
  std::uint32_t alt_index[kSlotsPerBucket] = {};
};
static_assert(sizeof(Bucket<false>) == 64, "metadata bucket must be one cacheline");

/// Metadata bucket with expiration timers. The timer row displaces the
/// alternate indices, which move to a second cacheline (AltRow) touched only
/// by inserts and path moves, keeping the lookup path at one line per bucket.
template <>
struct alignas(64) Bucket<true> {
  std::uint16_t tags[kSlotsPerBucket] = {};
  std::uint16_t timers[kSlotsPerBucket] = {};
  std::uint64_t bloom = 0;
  std::uint16_t moved_counter = 0;
  std::uint8_t busy_mask = 0;
  std::uint8_t scratch_mask = 0;
  std::uint8_t flags = 0;
};
static_assert(sizeof(Bucket<true>) == 64, "metadata bucket must be one cacheline");

struct alignas(64) AltRow {
  std::uint32_t alt_index[kSlotsPerBucket] = {};
};
static_assert(sizeof(AltRow) == 64);

/// Single-table variant bucket: no alternates, no bloom; a packed remap
/// array records, per remainder class, which secondary candidate function
/// overflowing keys were displaced to (0 means none).
struct alignas(64) HortonBucket {
  std::uint16_t tags[kSlotsPerBucket] = {};
  std::uint64_t remap = 0;  // 21 entries x 3 bits, low 63 bits
  std::uint8_t busy_mask = 0;
};
static_assert(sizeof(HortonBucket) == 64, "bucket must be one cacheline");

}  // namespace cuckoopp

#endif  // CUCKOOPP_BUCKET_HPP
