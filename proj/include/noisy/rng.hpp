#pragma once

#include <cstdint>
#include <vector>

namespace noisy {

// Counter-based generator: the k-th draw of a stream is mix(key + k * gamma),
// so any draw can be reproduced from (key, k) alone. Substreams derive a new
// key from (parent key, stream id) and never overlap with the parent.
//
// Every distribution below is implemented here rather than taken from
// <random>, whose distributions are not bit-stable across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream substream(std::uint64_t stream_id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal (Box-Muller, both variates consumed per call pair).
  double normal();
  bool bernoulli(double p);

  // Draw at an explicit counter without advancing the stream.
  std::uint64_t at(std::uint64_t counter) const;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng);

}  // namespace noisy
