#pragma once

#include <cstdint>
#include <random>

namespace qrng {

// Seeded pseudo-random stream. It stands in for the physical entropy of a
// real detector, and also derives reproducible extractor test seeds; the
// extraction and the statistical battery never draw from it.
//
// Independent substreams are derived from a (seed, stream id) pair through
// std::seed_seq, so every consumer in the simulator owns its own sequence
// and draw order in one consumer never perturbs another.
class SimRandom {
 public:
  SimRandom(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_open_low() { return 1.0 - uniform(); }
  /// Standard normal via Box-Muller (one variate per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

namespace stream {
inline constexpr std::uint64_t photons = 1;
inline constexpr std::uint64_t thinning = 2;
inline constexpr std::uint64_t dark = 3;
inline constexpr std::uint64_t jitter = 4;
inline constexpr std::uint64_t extractor_seed = 16;
}  // namespace stream

}  // namespace qrng
