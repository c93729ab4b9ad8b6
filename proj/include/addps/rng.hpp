#pragma once

#include <cstdint>
#include <vector>

namespace addps {

/// Counter-based PRNG (splitmix64). The generator state is a counter advanced
/// by a fixed odd increment and hashed through the splitmix64 finalizer, so an
/// identical (seed, stream) pair reproduces the identical draw sequence.
/// Streams are decorrelated by hashing the stream id into the initial counter.
/// Each sampling chain owns its own SeededRng; they are never shared.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal via Box-Muller (second value of each pair is cached).
  double normal();

  /// Derives an independent stream for a child chain. Deterministic in
  /// (seed, stream, substream).
  SeededRng split(std::uint64_t substream) const;

  std::uint64_t seed_value() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t state_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::vector<double> normal_vector(SeededRng& rng, std::size_t n);

}  // namespace addps
