#include "qrng/quantizer.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace qrng {

BinConfig BinConfig::make(std::uint64_t clock_period_ps, std::uint32_t bin_count) {
  BinConfig c;
  c.clock_period_ps = clock_period_ps;
  c.bin_count = bin_count;
  c.bits_per_detection = bin_count == 0 ? 0 : static_cast<unsigned>(std::countr_zero(bin_count));
  c.validate();
  return c;
}

void BinConfig::validate() const {
  if (clock_period_ps == 0) {
    throw std::invalid_argument("BinConfig: clock_period_ps must be > 0");
  }
  if (bin_count < 2 || !std::has_single_bit(bin_count)) {
    throw std::invalid_argument("BinConfig: bin_count must be a power of two >= 2");
  }
  if (clock_period_ps % bin_count != 0) {
    throw std::invalid_argument("BinConfig: clock_period_ps " + std::to_string(clock_period_ps) +
                                " is not divisible by bin_count " + std::to_string(bin_count));
  }
  if ((std::uint64_t{1} << bits_per_detection) != bin_count) {
    throw std::invalid_argument("BinConfig: bits_per_detection must equal log2(bin_count)");
  }
}

std::uint32_t bin_index(std::uint64_t phase_ps, const BinConfig& config) {
  if (phase_ps >= config.clock_period_ps) {
    throw std::out_of_range("bin_index: phase " + std::to_string(phase_ps) +
                            " outside [0, clock period)");
  }
  return static_cast<std::uint32_t>(phase_ps / config.bin_width_ps());
}

std::vector<std::uint32_t> bin_indices(std::span<const DetectionEvent> events,
                                       const BinConfig& config) {
  std::vector<std::uint32_t> out;
  out.reserve(events.size());
  for (const DetectionEvent& e : events) {
    out.push_back(bin_index(phase_extract(e.timestamp_ps, config.clock_period_ps), config));
  }
  return out;
}

void quantize_append(std::span<const DetectionEvent> events, const BinConfig& config,
                     RawBitBlock& block) {
  block.bits.reserve(block.bits.size() + events.size() * config.bits_per_detection);
  for (const DetectionEvent& e : events) {
    const std::uint32_t b = bin_index(phase_extract(e.timestamp_ps, config.clock_period_ps), config);
    block.bits.append_msb(b, config.bits_per_detection);
  }
  block.source_detection_count += events.size();
}

RawBitBlock quantize_stream(std::span<const DetectionEvent> events, const BinConfig& config) {
  config.validate();
  RawBitBlock block;
  quantize_append(events, config, block);
  return block;
}

BitVector pack_indices(std::span<const std::uint32_t> indices, unsigned bits_per_symbol) {
  BitVector out;
  out.reserve(indices.size() * bits_per_symbol);
  for (std::uint32_t v : indices) {
    if (bits_per_symbol < 32 && (v >> bits_per_symbol) != 0) {
      throw std::invalid_argument("pack_indices: index does not fit in symbol width");
    }
    out.append_msb(v, bits_per_symbol);
  }
  return out;
}

std::vector<std::uint32_t> unpack_indices(const BitVector& bits, unsigned bits_per_symbol) {
  if (bits_per_symbol == 0 || bits_per_symbol > 32 || bits.size() % bits_per_symbol != 0) {
    throw std::invalid_argument("unpack_indices: bit length is not a whole number of symbols");
  }
  std::vector<std::uint32_t> out(bits.size() / bits_per_symbol);
  std::size_t pos = 0;
  for (std::uint32_t& v : out) {
    std::uint32_t acc = 0;
    for (unsigned k = 0; k < bits_per_symbol; ++k) {
      acc = (acc << 1) | static_cast<std::uint32_t>(bits.get(pos++));
    }
    v = acc;
  }
  return out;
}

}  // namespace qrng
