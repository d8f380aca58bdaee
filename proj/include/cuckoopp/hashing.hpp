#ifndef CUCKOOPP_HASHING_HPP
#define CUCKOOPP_HASHING_HPP

#include <array>
#include <cstdint>
#include <stdexcept>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "cuckoopp/key.hpp"

namespace cuckoopp {

/// Injected hash function. Must be deterministic for the lifetime of the
/// process; the table derives every per-key index from this one 64-bit value.
using Hasher = std::uint64_t (*)(const Key&) noexcept;

/// murmur3 finalizer; full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

/// Default key hash: mixes the two 64-bit halves of the 16-byte key through
/// the murmur finalizer. Any well-mixed 64-bit hash can be plugged in instead.
inline std::uint64_t default_hash(const Key& k) noexcept {
  const std::uint64_t lo = load_le64(k.bytes.data());
  const std::uint64_t hi = load_le64(k.bytes.data() + 8);
  return mix64(mix64(hi) ^ lo);
}

/// Everything lookup and insert need to know about a key, derived once from
/// its 64-bit hash:
///   primary_index   = raw & (num_buckets - 1)
///   secondary hash  = upper 32 bits of raw
///   secondary_index = secondary hash & (num_buckets - 1)
///   tag             = low 16 bits of the secondary hash
///   bloom bits      = bits [0,6) and [6,12) of the secondary hash
/// The bloom bits depend only on the secondary hash, never on bits that feed
/// only the primary index.
struct HashedKey {
  std::uint64_t raw = 0;
  std::uint32_t primary_index = 0;
  std::uint32_t secondary_index = 0;
  std::uint16_t tag = 0;
  std::uint8_t bloom_bit_a = 0;
  std::uint8_t bloom_bit_b = 0;

  std::uint64_t bloom_mask() const noexcept {
    return (std::uint64_t{1} << bloom_bit_a) | (std::uint64_t{1} << bloom_bit_b);
  }
};

namespace detail {

inline HashedKey derive_from_raw(std::uint64_t raw, std::uint32_t index_mask) noexcept {
  const auto secondary_hash = static_cast<std::uint32_t>(raw >> 32);
  HashedKey h;
  h.raw = raw;
  h.primary_index = static_cast<std::uint32_t>(raw) & index_mask;
  h.secondary_index = secondary_hash & index_mask;
  h.tag = static_cast<std::uint16_t>(secondary_hash);
  h.bloom_bit_a = static_cast<std::uint8_t>(secondary_hash & 63u);
  h.bloom_bit_b = static_cast<std::uint8_t>((secondary_hash >> 6) & 63u);
  return h;
}

}  // namespace detail

inline bool is_power_of_two(std::uint64_t v) noexcept {
  return v != 0 && (v & (v - 1)) == 0;
}

/// Derives all per-key indices. num_buckets must be a power of two in
/// [128, 2^31]; a power-of-two count makes index extraction a mask.
inline HashedKey derive(const Key& key, std::size_t num_buckets, Hasher hasher) {
  if (!is_power_of_two(num_buckets) || num_buckets < 128 ||
      num_buckets > (std::size_t{1} << 31)) {
    throw std::invalid_argument(
        "derive: num_buckets must be a power of two in [128, 2^31]");
  }
  return detail::derive_from_raw(hasher(key),
                                 static_cast<std::uint32_t>(num_buckets - 1));
}

/// Replicates a 16-bit tag across 8 lanes so a bucket's tag row can be
/// matched with one data-parallel compare.
inline std::array<std::uint16_t, 8> spread_tags(std::uint16_t tag) noexcept {
  std::array<std::uint16_t, 8> lanes;
  lanes.fill(tag);
  return lanes;
}

/// 8-lane equality between a bucket's tag row and a spread tag. Bit i of the
/// result is set iff tags[i] == tag. False positives are resolved later by
/// the full-key compare; there are never false negatives.
inline std::uint8_t tag_match_mask(const std::uint16_t* tags, std::uint16_t tag) noexcept {
#if defined(__SSE2__)
  const __m128i row = _mm_loadu_si128(reinterpret_cast<const __m128i*>(tags));
  const __m128i eq = _mm_cmpeq_epi16(row, _mm_set1_epi16(static_cast<short>(tag)));
  const __m128i packed = _mm_packs_epi16(eq, _mm_setzero_si128());
  return static_cast<std::uint8_t>(_mm_movemask_epi8(packed) & 0xff);
#else
  std::uint8_t mask = 0;
  for (int i = 0; i < 8; ++i) mask |= static_cast<std::uint8_t>((tags[i] == tag) << i);
  return mask;
#endif
}

}  // namespace cuckoopp

#endif  // CUCKOOPP_HASHING_HPP
