#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "qrng/io.hpp"
#include "qrng/quantizer.hpp"

using namespace qrng;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qrng_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(TimestampFile, RoundTripAndLayout) {
  io::TimestampFile f;
  f.clock_period_ps = 16384;
  f.bin_count = 256;
  f.timestamps = {1, 40000, 0x0102030405060708ULL};
  const auto path = scratch("ts.qrts");
  io::write_timestamps(path, f);

  const auto bytes = io::read_file(path);
  ASSERT_EQ(bytes.size(), 4 + 1 + 3 * 8 + 3 * 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QRTS");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0x00);  // 16384 = 0x4000, little-endian
  EXPECT_EQ(bytes[6], 0x40);
  EXPECT_EQ(bytes[bytes.size() - 8], 0x08);

  const auto back = io::read_timestamps(path);
  EXPECT_EQ(back.clock_period_ps, f.clock_period_ps);
  EXPECT_EQ(back.bin_count, f.bin_count);
  EXPECT_EQ(back.timestamps, f.timestamps);
  EXPECT_EQ(io::to_events(back).size(), 3u);
}

TEST(TimestampFile, RejectsCorruptInput) {
  const auto path = scratch("bad.qrts");
  io::write_file(path, {'Q', 'R', 'X', 'S', 1});
  EXPECT_THROW(io::read_timestamps(path), std::runtime_error);
  io::write_file(path, {'Q', 'R', 'T', 'S', 1, 0, 0});
  EXPECT_THROW(io::read_timestamps(path), std::runtime_error);
  EXPECT_THROW(io::read_timestamps(scratch("missing.qrts")), std::runtime_error);
}

TEST(BitFile, RoundTripWithMetadataAndPadding) {
  std::mt19937_64 rng(1);
  BitVector bits;
  for (int i = 0; i < 1003; ++i) bits.push_back(rng() & 1);
  const io::Metadata meta{{"kind", "raw"}, {"n", "11840"}};
  const auto path = scratch("bits.qrrb");
  io::write_bits(path, bits, meta);

  const auto bytes = io::read_file(path);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "QRRB");
  EXPECT_EQ(bytes[5], 5);  // 1003 bits leave 5 pad bits in the last byte

  const auto back = io::read_bits(path);
  EXPECT_EQ(back.bits, bits);
  EXPECT_EQ(back.metadata, meta);
}

TEST(BitFile, WriteCreatesParentDirectories) {
  const auto path = scratch("nested/deeper/x.qrrb");
  fs::remove_all(path.parent_path());
  io::write_bits(path, BitVector(9, true));
  EXPECT_EQ(io::read_bits(path).bits, BitVector(9, true));
}
