#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "qrng/bits.hpp"

using qrng::BitVector;

namespace {

std::vector<bool> random_bools(std::size_t n, std::mt19937_64& rng) {
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (rng() & 1u) != 0;
  }
  return v;
}

BitVector from_bools(const std::vector<bool>& v) {
  BitVector b;
  for (bool x : v) {
    b.push_back(x);
  }
  return b;
}

}  // namespace

TEST(BitVector, MsbFirstByteLayout) {
  const std::vector<std::uint8_t> bytes{0x80, 0x01};
  const BitVector b = BitVector::from_bytes_msb(bytes);
  ASSERT_EQ(b.size(), 16u);
  EXPECT_TRUE(b[0]);
  for (std::size_t i = 1; i < 15; ++i) {
    EXPECT_FALSE(b[i]) << i;
  }
  EXPECT_TRUE(b[15]);
  EXPECT_EQ(b.to_bytes_msb(), bytes);
}

TEST(BitVector, PartialByteIsZeroPadded) {
  BitVector b;
  b.append_msb(0b101, 3);
  EXPECT_EQ(b.to_bytes_msb(), std::vector<std::uint8_t>{0b10100000});
  const BitVector back = BitVector::from_bytes_msb(b.to_bytes_msb(), 3);
  EXPECT_EQ(back, b);
}

TEST(BitVector, AppendMatchesBitwiseOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_bools(rng() % 300, rng);
    const auto c = random_bools(rng() % 300, rng);
    BitVector x = from_bools(a);
    x.append(from_bools(c));
    auto joined = a;
    joined.insert(joined.end(), c.begin(), c.end());
    ASSERT_EQ(x, from_bools(joined));
  }
}

TEST(BitVector, SliceAndReadWord) {
  std::mt19937_64 rng(11);
  const auto v = random_bools(1000, rng);
  const BitVector b = from_bools(v);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t pos = rng() % 900;
    const unsigned len = 1 + static_cast<unsigned>(rng() % 64);
    std::uint64_t want = 0;
    for (unsigned k = 0; k < len; ++k) {
      want |= static_cast<std::uint64_t>(v[pos + k]) << k;
    }
    ASSERT_EQ(b.read_word(pos, len), want);
    const BitVector s = b.slice(pos, len);
    for (unsigned k = 0; k < len; ++k) {
      ASSERT_EQ(s[k], v[pos + k]);
    }
  }
}

TEST(BitVector, CountXorResize) {
  std::mt19937_64 rng(3);
  const auto a = random_bools(777, rng);
  const auto c = random_bools(777, rng);
  std::size_t ones = 0;
  std::vector<bool> x(777);
  for (std::size_t i = 0; i < 777; ++i) {
    ones += a[i];
    x[i] = a[i] != c[i];
  }
  EXPECT_EQ(from_bools(a).count_ones(), ones);
  EXPECT_EQ(from_bools(a) ^ from_bools(c), from_bools(x));

  BitVector r = from_bools(a);
  r.resize(100);
  r.resize(200);
  for (std::size_t i = 100; i < 200; ++i) {
    EXPECT_FALSE(r[i]);
  }
  EXPECT_THROW(from_bools(a) ^= BitVector(5), std::invalid_argument);
}
