#include "cuckoopp/workload.hpp"

#include <stdexcept>
#include <unordered_set>

#include "cuckoopp/hashing.hpp"

namespace cuckoopp::workload {

namespace {

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    return static_cast<std::size_t>(default_hash(k));
  }
};

using KeySet = std::unordered_set<Key, KeyHash>;

Key fresh_key(SplitMix64& rng, const KeySet& avoid) {
  for (;;) {
    const Key k = make_key(rng.next(), rng.next());
    if (!avoid.contains(k)) return k;
  }
}

}  // namespace

std::uint64_t SplitMix64::next_below(std::uint64_t bound) noexcept {
  // rejection keeps the draw exactly uniform
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % bound;
  }
}

Value value_for(const Key& key) noexcept {
  const std::uint64_t lo = load_le64(key.bytes.data());
  const std::uint64_t hi = load_le64(key.bytes.data() + 8);
  return make_value(mix64(lo ^ 0xa0761d6478bd642fULL), mix64(hi + 0xe7037ed1a0b428dbULL));
}

std::uint64_t worker_seed(std::uint64_t base_seed, unsigned worker) noexcept {
  return mix64(base_seed + 0x9e3779b97f4a7c15ULL * (worker + 1));
}

Workload make_workload(const WorkloadSpec& spec) {
  if (spec.negative_rate < 0.0 || spec.negative_rate > 1.0) {
    throw std::invalid_argument("make_workload: negative_rate must be in [0, 1]");
  }
  if (spec.insert_count == 0 && spec.probe_count > 0 && spec.negative_rate < 1.0) {
    throw std::invalid_argument(
        "make_workload: positive probes need a nonempty insert set");
  }
  SplitMix64 rng(spec.seed);
  Workload wl;
  wl.insert_keys.reserve(spec.insert_count);
  KeySet inserted;
  inserted.reserve(spec.insert_count * 2);
  while (wl.insert_keys.size() < spec.insert_count) {
    const Key k = fresh_key(rng, inserted);
    inserted.insert(k);
    wl.insert_keys.push_back(k);
  }
  wl.probe_keys.reserve(spec.probe_count);
  wl.probe_present.reserve(spec.probe_count);
  for (std::size_t i = 0; i < spec.probe_count; ++i) {
    const bool negative = rng.next_double() < spec.negative_rate;
    if (negative) {
      wl.probe_keys.push_back(fresh_key(rng, inserted));
      wl.probe_present.push_back(0);
    } else {
      wl.probe_keys.push_back(wl.insert_keys[rng.next_below(wl.insert_keys.size())]);
      wl.probe_present.push_back(1);
    }
  }
  return wl;
}

std::vector<Key> make_absent_keys(std::span<const Key> existing, std::size_t count,
                                  std::uint64_t seed) {
  KeySet avoid(existing.begin(), existing.end());
  avoid.reserve(existing.size() + count);
  SplitMix64 rng(seed);
  std::vector<Key> out;
  out.reserve(count);
  while (out.size() < count) {
    const Key k = fresh_key(rng, avoid);
    avoid.insert(k);
    out.push_back(k);
  }
  return out;
}

}  // namespace cuckoopp::workload
