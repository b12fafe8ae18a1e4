#pragma once

#include <cstdint>
#include <random>

namespace leap {

/// SplitMix64 finalizer; used to derive engine seeds and child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derive a child seed from a master seed and a label (point index, arm, ...).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) noexcept;

/// One independent random stream, identified by (seed, stream_id).
///
/// The engine is std::mt19937_64 seeded with mix64(seed ^ mix64(stream_id)).
/// Normals come from std::normal_distribution (Marsaglia polar method in
/// libstdc++), so sequences are reproducible within one toolchain build.
/// Streams are plain values: copying one snapshots its state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  double normal() { return normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace leap
