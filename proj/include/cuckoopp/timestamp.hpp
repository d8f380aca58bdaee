#ifndef CUCKOOPP_TIMESTAMP_HPP
#define CUCKOOPP_TIMESTAMP_HPP

#include <cmath>
#include <cstdint>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

namespace cuckoopp {

/// Quantized wrapping 16-bit time. One unit is ExpiryConfig::quantum_seconds
/// of real time (30 s by default). Never compare two timestamps directly;
/// only is_valid() gives a meaningful answer, and only while expirations are
/// kept within kMaxExpiryDelay of the current time.
struct Timestamp16 {
  std::uint16_t value = 0;

  friend bool operator==(const Timestamp16&, const Timestamp16&) = default;
};

/// Expirations may lie at most this many units in the future.
inline constexpr std::uint16_t kMaxExpiryDelay = 1024;

/// An expired-but-unreclaimed entry could wrap back into validity after
/// 65536 - 1024 units; a full-table scan at least this often prevents it.
inline constexpr std::uint32_t kScanPeriod = 65536 - kMaxExpiryDelay;

struct ExpiryConfig {
  std::uint16_t max_delay = kMaxExpiryDelay;
  std::uint32_t scan_period = kScanPeriod;
  double quantum_seconds = 30.0;
};
static_assert(kMaxExpiryDelay + kScanPeriod <= 65536);

/// True iff `expiration` is still in the future as seen from `now`, i.e.
/// (expiration - now) mod 2^16 is in [1, kMaxExpiryDelay]. An expiration
/// exactly equal to now counts as expired. The validity window of a fixed
/// expiration e is exactly the 1024 instants preceding e in wrapping order.
inline bool is_valid(Timestamp16 expiration, Timestamp16 now) noexcept {
  const auto diff_minus_one =
      static_cast<std::uint16_t>(expiration.value - now.value - 1u);
  return diff_minus_one < kMaxExpiryDelay;
}

/// floor(seconds / quantum) mod 2^16.
inline Timestamp16 quantize(double seconds_from_epoch, const ExpiryConfig& cfg) noexcept {
  const auto units = static_cast<std::uint64_t>(seconds_from_epoch / cfg.quantum_seconds);
  return Timestamp16{static_cast<std::uint16_t>(units & 0xffffu)};
}

/// 8-lane is_valid over a bucket's timer row. Bit i set iff timers[i] is
/// valid at `now`.
inline std::uint8_t timer_valid_mask(const std::uint16_t* timers, Timestamp16 now) noexcept {
#if defined(__SSE2__)
  const __m128i row = _mm_loadu_si128(reinterpret_cast<const __m128i*>(timers));
  const __m128i diff_minus_one =
      _mm_sub_epi16(row, _mm_set1_epi16(static_cast<short>(now.value + 1u)));
  // unsigned (diff-1) < 1024  <=>  saturating (diff-1) - 1023 == 0
  const __m128i over = _mm_subs_epu16(diff_minus_one,
                                      _mm_set1_epi16(static_cast<short>(kMaxExpiryDelay - 1)));
  const __m128i valid = _mm_cmpeq_epi16(over, _mm_setzero_si128());
  const __m128i packed = _mm_packs_epi16(valid, _mm_setzero_si128());
  return static_cast<std::uint8_t>(_mm_movemask_epi8(packed) & 0xff);
#else
  std::uint8_t mask = 0;
  for (int i = 0; i < 8; ++i) {
    mask |= static_cast<std::uint8_t>(is_valid(Timestamp16{timers[i]}, now) << i);
  }
  return mask;
#endif
}

}  // namespace cuckoopp

#endif  // CUCKOOPP_TIMESTAMP_HPP
