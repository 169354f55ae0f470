#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace crowdal {

/// Seeded random stream with platform-independent output.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// The standard library distributions are implementation-defined, so every
/// derived draw (uniform, index, normal) is computed here from raw 64-bit
/// engine words.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Independent sub-stream keyed by (seed, keys...). Keys are mixed with
  /// splitmix64, so streams for different purposes or indices do not overlap
  /// in any practical sense.
  static RandomStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) from the top 53 bits of one engine word.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n). Consumes exactly one engine word.
  std::size_t uniform_index(std::size_t n);

  /// True with probability p. Consumes exactly one engine word.
  bool bernoulli(double p) { return uniform() < p; }

  /// Box-Muller; consumes exactly two engine words and keeps no cached spare.
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
};

/// Purpose tags for partitioning one experiment seed into independent streams.
enum class StreamPurpose : std::uint64_t {
  Pool = 1,
  Init = 2,
  Task = 3,
  Worker = 4,
  Oracle = 5,
};

inline RandomStream purpose_stream(std::uint64_t seed, StreamPurpose purpose,
                                   std::uint64_t replicate) {
  return RandomStream::derive(seed, {static_cast<std::uint64_t>(purpose), replicate});
}

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace crowdal
