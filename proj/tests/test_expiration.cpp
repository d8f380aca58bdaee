#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <optional>
#include <vector>

#include "cuckoopp/table.hpp"
#include "cuckoopp/workload.hpp"
#include "support/oracle.hpp"

using namespace cuckoopp;
using namespace cuckoopp::testsupport;

namespace {

Key deg_key(std::uint32_t b, std::uint32_t i) {
  return raw_key(b, b + 128 * (i + 1));
}

Key ps_key(std::uint32_t p, std::uint32_t s, std::uint32_t i) {
  return raw_key(p, s + 128 * (i + 1));
}

Value val(std::uint64_t x) { return make_value(x, x * 3); }

constexpr Timestamp16 ts(unsigned v) {
  return Timestamp16{static_cast<std::uint16_t>(v)};
}

}  // namespace

TEST_CASE("insert rejects expirations outside the validity window") {
  TimerTable t(1024);
  const Key k = make_key(1, 2);
  const Timestamp16 now = ts(100);
  CHECK_THROWS_AS(t.insert(k, val(1), ts(100), now), std::invalid_argument);
  CHECK_THROWS_AS(t.insert(k, val(1), ts(100 + kMaxExpiryDelay + 1), now),
                  std::invalid_argument);
  CHECK_THROWS_AS(t.insert(k, val(1), ts(95), now), std::invalid_argument);
  CHECK(t.occupied() == 0);
  CHECK(t.insert(k, val(1), ts(101), now) == InsertResult::Inserted);
  const Key k2 = make_key(3, 4);
  CHECK(t.insert(k2, val(2), ts(100 + kMaxExpiryDelay), now) ==
        InsertResult::Inserted);
}

TEST_CASE("an entry is visible until its expiration time and not after") {
  TimerTable t(1024);
  const Key k = make_key(7, 8);
  REQUIRE(t.insert(k, val(9), ts(110), ts(100)) == InsertResult::Inserted);
  CHECK(t.lookup(k, ts(100)).has_value());
  CHECK(t.lookup(k, ts(109)).has_value());
  CHECK_FALSE(t.lookup(k, ts(110)).has_value());
  CHECK_FALSE(t.lookup(k, ts(111)).has_value());
  // the slot is only logically dead until something reclaims it
  CHECK(t.occupied() == 1);
  // erase also sees it as gone
  CHECK_FALSE(t.erase(k, ts(110)));
  CHECK(t.occupied() == 1);
  CHECK(t.erase(k, ts(109)));
  CHECK(t.occupied() == 0);
}

TEST_CASE("inserts reclaim expired slots in place") {
  TimerTable t(1024, raw_key_hash);
  constexpr std::uint32_t A = 12;
  for (std::uint32_t i = 0; i < 8; ++i) {
    REQUIRE(t.insert(deg_key(A, i), val(i), ts(50), ts(0)) ==
            InsertResult::Inserted);
  }
  CHECK(t.occupied() == 8);
  // bucket A is full of corpses at 60; a new key moves straight in,
  // reclaiming only the slot it takes
  const Key fresh = deg_key(A, 20);
  t.reset_counters();
  CHECK(t.insert(fresh, val(99), ts(200), ts(60)) == InsertResult::Inserted);
  CHECK(t.counters().inserts_primary == 1);
  CHECK(t.counters().cuckoo_moves == 0);
  CHECK(t.occupied() == 8);  // one live entry plus seven unreclaimed corpses
  CHECK(t.lookup(fresh, ts(60)).has_value());
  for (std::uint32_t i = 0; i < 8; ++i) {
    CHECK_FALSE(t.lookup(deg_key(A, i), ts(60)).has_value());
  }
  // a sweep collects the rest
  CHECK(t.scan_expire(ts(60)) == 7);
  CHECK(t.occupied() == 1);
  CHECK(full_scan_check(t).empty());
}

TEST_CASE("reclaiming a displaced corpse releases its primary's filter state") {
  TimerTable t(1024, raw_key_hash);
  constexpr std::uint32_t A = 30, B = 77;
  for (std::uint32_t i = 0; i < 8; ++i) {
    REQUIRE(t.insert(deg_key(A, i), val(i), ts(1000), ts(0)) ==
            InsertResult::Inserted);
  }
  const Key x = ps_key(A, B, 0);  // displaced into B, dies at 40
  REQUIRE(t.insert(x, val(50), ts(40), ts(0)) == InsertResult::Inserted);
  CHECK(t.bucket_meta(A).moved_counter == 1);
  CHECK(t.bucket_meta(A).bloom != 0);

  // fill B at a time when x is already dead; the eighth insert lands on x
  for (std::uint32_t i = 0; i < 8; ++i) {
    REQUIRE(t.insert(deg_key(B, i), val(100 + i), ts(900), ts(50)) ==
            InsertResult::Inserted);
  }
  CHECK(t.bucket_meta(A).moved_counter == 0);
  CHECK(t.bucket_meta(A).bloom == 0);
  CHECK_FALSE(t.lookup(x, ts(50)).has_value());
  CHECK(full_scan_check(t).empty());
}

TEST_CASE("scan_expire reclaims exactly the dead entries") {
  TimerTable t(1024);
  const Key k1 = make_key(1, 1), k2 = make_key(2, 2);
  REQUIRE(t.insert(k1, val(1), ts(100), ts(50)) == InsertResult::Inserted);
  REQUIRE(t.insert(k2, val(2), ts(200), ts(50)) == InsertResult::Inserted);
  CHECK(t.occupied() == 2);

  CHECK(t.scan_expire(ts(150)) == 1);
  CHECK(t.occupied() == 1);
  CHECK_FALSE(t.lookup(k1, ts(150)).has_value());
  CHECK(t.lookup(k2, ts(150)).has_value());

  CHECK(t.scan_expire(ts(150)) == 0);  // nothing left to reclaim
  CHECK(t.occupied() == 1);
  CHECK(full_scan_check(t).empty());
}

TEST_CASE("an unscanned corpse comes back to life when the clock wraps") {
  // This documents the hazard the periodic scan exists to prevent.
  TimerTable t(1024);
  const Key k = make_key(5, 5);
  REQUIRE(t.insert(k, val(1), ts(100), ts(0)) == InsertResult::Inserted);

  CHECK_FALSE(t.lookup(k, ts(100)).has_value());
  CHECK_FALSE(t.lookup(k, ts(64611)).has_value());
  // one tick later the 16-bit window wraps around and the corpse revives
  CHECK(t.lookup(k, ts(64612)).has_value());
  CHECK(t.lookup(k, ts(65535)).has_value());

  // with a scan inside the safe window the revival cannot happen
  TimerTable clean(1024);
  REQUIRE(clean.insert(k, val(1), ts(100), ts(0)) == InsertResult::Inserted);
  CHECK(clean.scan_expire(ts(60000)) == 1);
  CHECK_FALSE(clean.lookup(k, ts(64612)).has_value());
  CHECK_FALSE(clean.lookup(k, ts(65535)).has_value());
}

TEST_CASE("re-inserting a key over its own corpse is a fresh insert") {
  TimerTable t(1024);
  const Key k = make_key(9, 9);
  REQUIRE(t.insert(k, val(1), ts(100), ts(0)) == InsertResult::Inserted);
  // still alive: same key is an update
  CHECK(t.insert(k, val(2), ts(300), ts(50)) == InsertResult::Updated);
  CHECK(*t.lookup(k, ts(50)) == val(2));
  // dead at 300: the new insert replaces the corpse instead of updating it
  CHECK(t.insert(k, val(3), ts(400), ts(300)) == InsertResult::Inserted);
  CHECK(t.occupied() == 1);
  CHECK(*t.lookup(k, ts(300)) == val(3));
  CHECK(full_scan_check(t).empty());
}

TEST_CASE("timer lookups agree between scalar and batched form") {
  TimerTable t(1u << 12);
  workload::SplitMix64 rng(99);
  std::vector<Key> keys;
  for (int i = 0; i < 2500; ++i) keys.push_back(make_key(rng.next(), rng.next()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto exp = ts(1 + static_cast<unsigned>(rng.next_below(kMaxExpiryDelay)));
    REQUIRE(t.insert(keys[i], val(i), exp, ts(0)) == InsertResult::Inserted);
  }
  std::vector<Key> probes = keys;
  for (int i = 0; i < 1000; ++i) probes.push_back(make_key(rng.next(), rng.next()));

  for (const unsigned now : {0u, 500u, 1023u}) {
    CAPTURE(now);
    t.reset_counters();
    std::vector<std::optional<Value>> scalar_out;
    for (const Key& k : probes) scalar_out.push_back(t.lookup(k, ts(now)));
    const Counters sc = t.counters();

    t.reset_counters();
    std::vector<std::optional<Value>> batch_out(probes.size());
    t.lookup_batch(std::span(probes), std::span(batch_out), ts(now));
    const Counters bc = t.counters();

    CHECK(scalar_out == batch_out);
    CHECK(sc.lookup_hits == bc.lookup_hits);
    CHECK(sc.lookup_misses == bc.lookup_misses);
    CHECK(sc.secondary_bucket_reads == bc.secondary_bucket_reads);
    CHECK(sc.bloom_positive == bc.bloom_positive);
    CHECK(sc.kv_reads == bc.kv_reads);
  }

  // at 1023 some entries are dead; the live count must match a manual count
  std::size_t live = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (t.lookup(keys[i], ts(1023)).has_value()) ++live;
  }
  CHECK(live < keys.size());
  CHECK(live > 0);
}

TEST_CASE("scan schedule keeps a wrapped trace equal to the oracle") {
  TimerTable t(2048);
  ModelMap model;
  workload::SplitMix64 rng(2024);
  std::vector<Key> pool;
  for (int i = 0; i < 1200; ++i) pool.push_back(make_key(rng.next(), rng.next()));

  std::uint64_t now = 0;           // unwrapped clock
  std::uint64_t next_scan = 30000; // well inside the anti-revival window
  std::size_t revivals = 0;

  for (int op = 0; op < 20000; ++op) {
    now += rng.next_below(13);
    while (now >= next_scan) {
      t.scan_expire(ts(static_cast<unsigned>(next_scan & 0xffff)));
      next_scan += 30000;
    }
    const auto wrapped = ts(static_cast<unsigned>(now & 0xffff));
    const Key& k = pool[rng.next_below(pool.size())];
    const double r = rng.next_double();
    if (r < 0.45) {
      const auto delta = 1 + rng.next_below(kMaxExpiryDelay);
      const Value v = val(rng.next());
      const auto got = t.insert(k, v, ts(static_cast<unsigned>((now + delta) & 0xffff)), wrapped);
      REQUIRE(got != InsertResult::Failed);
      const auto want = model.insert(k, v, now + delta, now);
      CHECK((got == InsertResult::Updated) == (want == ModelMap::Outcome::Updated));
    } else if (r < 0.8) {
      const auto got = t.lookup(k, wrapped);
      const auto want = model.lookup(k, now);
      CHECK(got == want);
      if (got.has_value() && !want.has_value() && model.is_expired_remnant(k, now)) {
        ++revivals;
      }
    } else {
      CHECK(t.erase(k, wrapped) == model.erase(k, now));
    }
    if (op % 2000 == 0) CHECK(full_scan_check(t).empty());
  }
  CHECK(revivals == 0);
  CHECK(full_scan_check(t).empty());
}
