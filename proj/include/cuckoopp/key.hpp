#ifndef CUCKOOPP_KEY_HPP
#define CUCKOOPP_KEY_HPP

#include <array>
#include <cstdint>
#include <cstring>

namespace cuckoopp {

/// Fixed 16-byte opaque key (connection-tracking 5-tuples fit with room to
/// spare). Compared bitwise; the table never interprets the bytes.
struct Key {
  std::array<std::uint8_t, 16> bytes{};

  friend bool operator==(const Key&, const Key&) = default;
};

/// Fixed 16-byte opaque value stored next to its key.
struct Value {
  std::array<std::uint8_t, 16> bytes{};

  friend bool operator==(const Value&, const Value&) = default;
};

/// One key/value record of the flat kv array. Exactly 32 bytes, two per
/// cacheline; the slot it lives at is implicit (bucket_index * 8 + slot).
struct alignas(32) Entry {
  Key key;
  Value value;
};
static_assert(sizeof(Entry) == 32, "kv array must be exactly 32 bytes/entry");

inline std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store_le64(std::uint8_t* p, std::uint64_t v) {
  std::memcpy(p, &v, sizeof v);
}

/// Builds a key from two 64-bit words (low word first).
inline Key make_key(std::uint64_t lo, std::uint64_t hi) {
  Key k;
  store_le64(k.bytes.data(), lo);
  store_le64(k.bytes.data() + 8, hi);
  return k;
}

inline Value make_value(std::uint64_t lo, std::uint64_t hi) {
  Value v;
  store_le64(v.bytes.data(), lo);
  store_le64(v.bytes.data() + 8, hi);
  return v;
}

}  // namespace cuckoopp

#endif  // CUCKOOPP_KEY_HPP
