#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace noisestab {

/// Mixes a base seed with a stream index (splitmix64 finalizer). Used for
/// per-shard, per-path and per-shift sub-seeds so that results depend only
/// on (seed, stream) and never on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64 with a portable normal generator (Marsaglia polar method), so
/// that streams are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double normal();

  template <typename Derived>
  void fill_normal(Derived&& out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal();
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Number of worker threads used by the sharded estimators. Results never
/// depend on this value. Overridable with NOISESTAB_THREADS.
unsigned worker_count();

/// Calls fn(shard) for shard in [0, shards), spread across worker threads.
/// fn must only write to state owned by its shard.
template <typename Fn>
void for_each_shard(std::uint64_t shards, Fn&& fn);

}  // namespace noisestab

#include "noisestab/detail/shards.hpp"
