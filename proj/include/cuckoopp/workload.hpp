#ifndef CUCKOOPP_WORKLOAD_HPP
#define CUCKOOPP_WORKLOAD_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cuckoopp/key.hpp"

namespace cuckoopp::workload {

/// splitmix64. Small, fast and identical on every platform, so a workload is
/// fully reproducible from its seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_double() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [0, bound); bound must be nonzero.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t state_;
};

/// The value every generated workload stores for a key. A pure function of
/// the key, so any consumer can verify a lookup hit without carrying the
/// insert set around.
Value value_for(const Key& key) noexcept;

/// Independent stream seed for one worker of a share-nothing run.
std::uint64_t worker_seed(std::uint64_t base_seed, unsigned worker) noexcept;

struct WorkloadSpec {
  std::size_t insert_count = 0;
  std::size_t probe_count = 0;
  double negative_rate = 0.0;  // fraction of probes that target absent keys
  std::uint64_t seed = 1;
};

struct Workload {
  std::vector<Key> insert_keys;  // distinct
  std::vector<Key> probe_keys;
  std::vector<std::uint8_t> probe_present;  // 1 iff probe_keys[i] was inserted
};

/// Draws insert_count distinct random keys, then a probe stream where each
/// position independently targets an absent key with probability
/// negative_rate and a uniformly chosen inserted key otherwise.
Workload make_workload(const WorkloadSpec& spec);

/// count distinct random keys, none of which appear in `existing`.
std::vector<Key> make_absent_keys(std::span<const Key> existing, std::size_t count,
                                  std::uint64_t seed);

}  // namespace cuckoopp::workload

#endif  // CUCKOOPP_WORKLOAD_HPP
