#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <vector>

#include "cuckoopp/table.hpp"
#include "support/oracle.hpp"

using namespace cuckoopp;
using namespace cuckoopp::testsupport;

TEST_CASE("the model map expires entries on an unwrapped clock") {
  ModelMap m;
  const Key k = make_key(1, 1);
  const Value v = make_value(10, 10);
  CHECK(m.insert(k, v, 100, 0) == ModelMap::Outcome::Inserted);
  CHECK(m.lookup(k, 0).has_value());
  CHECK(m.lookup(k, 99).has_value());
  CHECK_FALSE(m.lookup(k, 100).has_value());
  // far beyond any 16-bit wrap the model still says dead
  CHECK_FALSE(m.lookup(k, 100 + (1u << 16)).has_value());
  CHECK_FALSE(m.lookup(k, std::uint64_t{1} << 40).has_value());

  CHECK_FALSE(m.erase(k, 100));
  CHECK(m.is_expired_remnant(k, 100));
  CHECK_FALSE(m.is_expired_remnant(k, 99));
  CHECK(m.live_count(99) == 1);
  CHECK(m.live_count(100) == 0);

  // writing over the remnant is a fresh insert
  CHECK(m.insert(k, v, 300, 150) == ModelMap::Outcome::Inserted);
  CHECK(m.lookup(k, 150).has_value());
  CHECK(m.erase(k, 200));
  CHECK_FALSE(m.lookup(k, 200).has_value());
}

TEST_CASE("the model map without deadlines behaves like a plain hash map") {
  ModelMap m;
  const Key a = make_key(1, 2), b = make_key(3, 4);
  CHECK(m.insert(a, make_value(1, 0)) == ModelMap::Outcome::Inserted);
  CHECK(m.insert(a, make_value(2, 0)) == ModelMap::Outcome::Updated);
  CHECK(m.lookup(a)->bytes == make_value(2, 0).bytes);
  CHECK_FALSE(m.lookup(b).has_value());
  CHECK_FALSE(m.erase(b));
  CHECK(m.erase(a));
  CHECK(m.live_count() == 0);
}

TEST_CASE("chi-square helper matches hand computations") {
  const std::uint64_t even[] = {10, 10, 10, 10};
  CHECK(chi_square_uniform(even) == doctest::Approx(0.0));
  const std::uint64_t skew[] = {12, 8};
  CHECK(chi_square_uniform(skew) == doctest::Approx(0.8));

  // 0.999 quantile of chi-square with 20 degrees of freedom is near 45.3
  CHECK(chi_square_threshold(20) > 44.0);
  CHECK(chi_square_threshold(20) < 47.0);
  CHECK(chi_square_threshold(1023) > 1100.0);
  CHECK(chi_square_threshold(1023) < 1250.0);
  // monotone in the degrees of freedom
  CHECK(chi_square_threshold(10) < chi_square_threshold(11));
}

TEST_CASE("directed key helpers pin every derived field") {
  const Key k = raw_key(5, 0x00c30007u, 42);
  CHECK(raw_key_hash(k) == compose_raw(5, 0x00c30007u));
  const HashedKey h = detail::derive_from_raw(raw_key_hash(k), 127);
  CHECK(h.primary_index == 5);
  CHECK(h.secondary_index == 7);
  CHECK(h.tag == 0x0007);
  // the salt lives outside the hashed bytes
  CHECK(raw_key(5, 0x00c30007u, 43) != k);
  CHECK(raw_key_hash(raw_key(5, 0x00c30007u, 43)) == raw_key_hash(k));
}

TEST_CASE("the structural checker accepts displaced corpses until reclaim") {
  TimerTable t(1024, raw_key_hash);
  constexpr std::uint32_t A = 8, B = 99;
  for (std::uint32_t i = 0; i < 8; ++i) {
    REQUIRE(t.insert(raw_key(A, A + 128 * (i + 1)), make_value(i, 0),
                     Timestamp16{1000}, Timestamp16{0}) == InsertResult::Inserted);
  }
  const Key x = raw_key(A, B + 128);
  REQUIRE(t.insert(x, make_value(50, 0), Timestamp16{40}, Timestamp16{0}) ==
          InsertResult::Inserted);
  REQUIRE(t.bucket_meta(A).moved_counter == 1);

  // x is dead at 50 but still occupies its slot; the filter and counter must
  // keep covering it or a later path move would corrupt the bucket state
  CHECK_FALSE(t.lookup(x, Timestamp16{50}).has_value());
  CHECK(full_scan_check(t).empty());
  CHECK(t.bucket_meta(A).moved_counter == 1);

  // reclaim makes the accounting drop to zero and stays consistent
  CHECK(t.scan_expire(Timestamp16{50}) == 1);
  CHECK(t.bucket_meta(A).moved_counter == 0);
  CHECK(full_scan_check(t).empty());
}
