#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "cuckoopp/hashing.hpp"
#include "cuckoopp/workload.hpp"
#include "support/oracle.hpp"

using namespace cuckoopp;
using namespace cuckoopp::workload;
using cuckoopp::testsupport::chi_square_threshold;
using cuckoopp::testsupport::chi_square_uniform;
using cuckoopp::testsupport::KeyHash;

namespace {
using KeySet = std::unordered_set<Key, KeyHash>;
}

TEST_CASE("splitmix64 reproduces the published sequence") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next() == 0x06c45d188009454fULL);
  CHECK(rng.next() == 0xf88bb8a8724c81ecULL);
  SplitMix64 rng2(1234567);
  CHECK(rng2.next() == 0x599ed017fb08fc85ULL);
  CHECK(rng2.next() == 0x2c73f08458540fa5ULL);
}

TEST_CASE("next_below honours the bound and stays uniform") {
  SplitMix64 rng(5);
  for (const std::uint64_t bound : {1ull, 2ull, 3ull, 10ull, 1000ull}) {
    for (int i = 0; i < 2000; ++i) CHECK(rng.next_below(bound) < bound);
  }
  // 20 bins, 100k draws
  std::vector<std::uint64_t> counts(20, 0);
  for (int i = 0; i < 100000; ++i) ++counts[rng.next_below(20)];
  CHECK(chi_square_uniform(counts) < chi_square_threshold(19));
}

TEST_CASE("next_double stays in the unit interval") {
  SplitMix64 rng(6);
  for (int i = 0; i < 100000; ++i) {
    const double d = rng.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
}

TEST_CASE("workloads are reproducible from their seed") {
  const WorkloadSpec spec{1000, 5000, 0.3, 99};
  const Workload a = make_workload(spec);
  const Workload b = make_workload(spec);
  CHECK(a.insert_keys == b.insert_keys);
  CHECK(a.probe_keys == b.probe_keys);
  CHECK(a.probe_present == b.probe_present);

  WorkloadSpec other = spec;
  other.seed = 100;
  const Workload c = make_workload(other);
  CHECK(a.insert_keys != c.insert_keys);
}

TEST_CASE("insert keys are distinct and probes match their labels") {
  const Workload wl = make_workload({20000, 50000, 0.25, 7});
  REQUIRE(wl.insert_keys.size() == 20000);
  REQUIRE(wl.probe_keys.size() == 50000);
  REQUIRE(wl.probe_present.size() == 50000);

  const KeySet inserted(wl.insert_keys.begin(), wl.insert_keys.end());
  CHECK(inserted.size() == wl.insert_keys.size());

  std::size_t negatives = 0;
  for (std::size_t i = 0; i < wl.probe_keys.size(); ++i) {
    const bool present = inserted.contains(wl.probe_keys[i]);
    CHECK(present == (wl.probe_present[i] != 0));
    negatives += !present;
  }
  // binomial(n, 0.25): allow three standard deviations around the mean
  const double n = 50000.0, p = 0.25;
  const double sd = std::sqrt(n * p * (1 - p));
  CHECK(std::abs(static_cast<double>(negatives) - n * p) < 3.1 * sd);
}

TEST_CASE("edge rates produce all-positive and all-negative probe streams") {
  const Workload pos = make_workload({100, 1000, 0.0, 1});
  for (const auto f : pos.probe_present) CHECK(f == 1);
  const Workload neg = make_workload({100, 1000, 1.0, 1});
  for (const auto f : neg.probe_present) CHECK(f == 0);
  // an all-negative stream needs no insert set at all
  const Workload none = make_workload({0, 100, 1.0, 1});
  CHECK(none.insert_keys.empty());
  CHECK(none.probe_keys.size() == 100);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(make_workload({100, 100, -0.1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(make_workload({100, 100, 1.5, 1}), std::invalid_argument);
  CHECK_THROWS_AS(make_workload({0, 100, 0.5, 1}), std::invalid_argument);
}

TEST_CASE("absent keys avoid the existing set and each other") {
  const Workload wl = make_workload({30000, 0, 0.0, 11});
  const auto absent = make_absent_keys(wl.insert_keys, 30000, 12);
  REQUIRE(absent.size() == 30000);
  const KeySet inserted(wl.insert_keys.begin(), wl.insert_keys.end());
  KeySet seen;
  for (const Key& k : absent) {
    CHECK_FALSE(inserted.contains(k));
    CHECK(seen.insert(k).second);
  }
}

TEST_CASE("generated keys spread uniformly over the buckets") {
  const Workload wl = make_workload({1u << 17, 0, 0.0, 13});
  std::vector<std::uint64_t> counts(1024, 0);
  for (const Key& k : wl.insert_keys) {
    ++counts[derive(k, 1024, default_hash).primary_index];
  }
  CHECK(chi_square_uniform(counts) < chi_square_threshold(1023));

  // secondary indices and tags spread too
  std::vector<std::uint64_t> sec(1024, 0), tags(256, 0);
  for (const Key& k : wl.insert_keys) {
    const HashedKey h = derive(k, 1024, default_hash);
    ++sec[h.secondary_index];
    ++tags[h.tag & 0xff];
  }
  CHECK(chi_square_uniform(sec) < chi_square_threshold(1023));
  CHECK(chi_square_uniform(tags) < chi_square_threshold(255));
}

TEST_CASE("value_for is a stable function of the key") {
  const Key a = make_key(1, 2), b = make_key(2, 1);
  CHECK(value_for(a) == value_for(a));
  CHECK_FALSE(value_for(a) == value_for(b));
  SplitMix64 rng(21);
  std::unordered_set<std::uint64_t> firsts;
  for (int i = 0; i < 10000; ++i) {
    const Value v = value_for(make_key(rng.next(), rng.next()));
    firsts.insert(load_le64(v.bytes.data()));
  }
  CHECK(firsts.size() == 10000);
}

TEST_CASE("worker seeds differ across workers and from the base") {
  std::unordered_set<std::uint64_t> seeds;
  for (unsigned w = 0; w < 64; ++w) {
    const auto s = worker_seed(42, w);
    CHECK(s != 42);
    CHECK(seeds.insert(s).second);
  }
  CHECK(worker_seed(42, 0) == 0x2d1c8760f8047fc7ULL);
  CHECK(worker_seed(42, 3) == 0xfe8930b98846eec4ULL);
}
