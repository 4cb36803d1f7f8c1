#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qrng/bits.hpp"
#include "qrng/sim_source.hpp"

namespace qrng::io {

// Timestamp file ("QRTS"), all integers little-endian:
//   "QRTS" | u8 version | u64 clock_period_ps | u64 bin_count | u64 count | u64 timestamp[count]
//
// Bit container ("QRRB"):
//   "QRRB" | u8 version | u8 pad_bits | u32 metadata_len | u64 bit_count
//   | metadata_len bytes of "key=value\n" records | ceil(bit_count / 8) packed bytes
// Bits are packed MSB-first; the final byte carries pad_bits zero bits.

inline constexpr std::uint8_t kFormatVersion = 1;

struct TimestampFile {
  std::uint64_t clock_period_ps = 0;
  std::uint64_t bin_count = 0;
  std::vector<std::uint64_t> timestamps;
};

using Metadata = std::map<std::string, std::string>;

struct BitFile {
  BitVector bits;
  Metadata metadata;
};

/// Origin tags are dropped: hardware timestamps carry no such information.
void write_timestamps(const std::filesystem::path& path, const ArrivalStream& stream);
void write_timestamps(const std::filesystem::path& path, const TimestampFile& file);
TimestampFile read_timestamps(const std::filesystem::path& path);
std::vector<DetectionEvent> to_events(const TimestampFile& file);

void write_bits(const std::filesystem::path& path, const BitVector& bits,
                const Metadata& metadata = {});
BitFile read_bits(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace qrng::io
