#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qrng/bits.hpp"
#include "qrng/sim_source.hpp"

namespace qrng {

/// Reference-clock binning. Bins are lower-inclusive, upper-exclusive:
/// bin i covers phases [i * t_bin, (i + 1) * t_bin).
struct BinConfig {
  std::uint64_t clock_period_ps = 16384;
  std::uint32_t bin_count = 256;
  unsigned bits_per_detection = 8;

  /// Builds and validates a config, deriving bits_per_detection.
  static BinConfig make(std::uint64_t clock_period_ps, std::uint32_t bin_count);
  static BinConfig from(const SourceConfig& source) {
    return make(source.clock_period_ps, source.bin_count);
  }

  std::uint64_t bin_width_ps() const { return clock_period_ps / bin_count; }
  void validate() const;

  friend bool operator==(const BinConfig&, const BinConfig&) = default;
};

struct RawBitBlock {
  BitVector bits;
  std::uint64_t source_detection_count = 0;
};

inline std::uint64_t phase_extract(std::uint64_t timestamp_ps, std::uint64_t clock_period_ps) {
  return timestamp_ps % clock_period_ps;
}

/// Throws std::out_of_range when phase_ps >= clock_period_ps.
std::uint32_t bin_index(std::uint64_t phase_ps, const BinConfig& config);

std::vector<std::uint32_t> bin_indices(std::span<const DetectionEvent> events,
                                       const BinConfig& config);

/// Each detection contributes its bin index as bits_per_detection bits,
/// most significant first, in event order.
RawBitBlock quantize_stream(std::span<const DetectionEvent> events, const BinConfig& config);
/// Appends to an existing block; used when events arrive in batches.
void quantize_append(std::span<const DetectionEvent> events, const BinConfig& config,
                     RawBitBlock& block);

BitVector pack_indices(std::span<const std::uint32_t> indices, unsigned bits_per_symbol);
std::vector<std::uint32_t> unpack_indices(const BitVector& bits, unsigned bits_per_symbol);

}  // namespace qrng
