#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "qrng/lfsr.hpp"

using namespace qrng;

namespace {

// Brute-force irreducibility over GF(2): no polynomial of degree 1..k/2
// divides f. Polynomials are bit masks including the leading term.
unsigned degree_of(std::uint64_t p) { return 63 - static_cast<unsigned>(__builtin_clzll(p)); }

std::uint64_t poly_mod(std::uint64_t a, std::uint64_t b) {
  const unsigned db = degree_of(b);
  while (a != 0 && degree_of(a) >= db) {
    a ^= b << (degree_of(a) - db);
  }
  return a;
}

bool brute_irreducible(std::uint64_t f) {
  const unsigned k = degree_of(f);
  for (std::uint64_t g = 2; g < (std::uint64_t{1} << (k / 2 + 1)); ++g) {
    if (degree_of(g) >= 1 && degree_of(g) <= k / 2 && poly_mod(f, g) == 0) {
      return false;
    }
  }
  return true;
}

std::uint64_t period_of(const FeedbackPolynomial& p, std::uint64_t seed) {
  Lfsr l(p, seed);
  std::uint64_t steps = 0;
  do {
    l.next();
    ++steps;
  } while (l.state() != seed);
  return steps;
}

}  // namespace

TEST(Lfsr, DegreeThreeSequence) {
  // x^3 + x + 1 from state 001: the recurrence s[t+3] = s[t+1] + s[t] gives
  // 1,0,0,1,0,1,1 and then repeats.
  const FeedbackPolynomial p{3, 0b011};
  const BitVector seq = lfsr_sequence(0b001, p, 14);
  const bool want[7] = {1, 0, 0, 1, 0, 1, 1};
  for (int i = 0; i < 14; ++i) {
    EXPECT_EQ(seq[i], want[i % 7]) << i;
  }
  // Every non-zero start state is visited in one cycle.
  std::set<std::uint64_t> states;
  Lfsr l(p, 1);
  for (int i = 0; i < 7; ++i) {
    states.insert(l.state());
    l.next();
  }
  EXPECT_EQ(states.size(), 7u);
  EXPECT_EQ(l.state(), 1u);
}

TEST(Lfsr, RecurrenceHoldsForEveryDegree) {
  for (const FeedbackPolynomial& p : primitive_polynomials()) {
    const std::uint64_t mask = p.degree == 64 ? ~0ULL : (1ULL << p.degree) - 1;
    const BitVector s = lfsr_sequence((0x9e3779b97f4a7c15ULL & mask) | 1, p, 3 * p.degree);
    for (std::size_t t = 0; t + p.degree < s.size(); ++t) {
      bool v = false;
      for (unsigned i = 0; i < p.degree; ++i) {
        if ((p.taps >> i) & 1u) v ^= s[t + i];
      }
      ASSERT_EQ(s[t + p.degree], v) << p.id() << " t=" << t;
    }
  }
}

TEST(Lfsr, TableIsIrreducibleAndMaximal) {
  const auto table = primitive_polynomials();
  ASSERT_EQ(table.size(), 63u);
  for (const FeedbackPolynomial& p : table) {
    EXPECT_TRUE(p.is_irreducible()) << p.id();
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(default_polynomial(p.degree), p);
    if (p.degree <= 28) {
      EXPECT_TRUE(brute_irreducible((std::uint64_t{1} << p.degree) | p.taps)) << p.id();
    }
    if (p.degree <= 16) {
      EXPECT_EQ(period_of(p, 1), (std::uint64_t{1} << p.degree) - 1) << p.id();
    }
  }
}

TEST(Lfsr, IrreducibilityAgreesWithBruteForce) {
  for (unsigned k = 2; k <= 12; ++k) {
    for (std::uint64_t taps = 0; taps < (std::uint64_t{1} << k); ++taps) {
      const FeedbackPolynomial p{k, taps};
      ASSERT_EQ(p.is_irreducible(), brute_irreducible((std::uint64_t{1} << k) | taps)) << p.id();
    }
  }
}

TEST(Lfsr, ParseAndFormat) {
  const FeedbackPolynomial p = parse_polynomial("x^8+x^4+x^3+x^2+1");
  EXPECT_EQ(p.degree, 8u);
  EXPECT_EQ(p.taps, 0x1du);
  EXPECT_EQ(parse_polynomial("0x11d"), p);
  EXPECT_EQ(p.id(), "x^8+x^4+x^3+x^2+1");
  EXPECT_EQ(parse_polynomial(default_polynomial(64).id()), default_polynomial(64));
  EXPECT_EQ(parse_polynomial(default_polynomial(32).id()), default_polynomial(32));
  EXPECT_THROW(parse_polynomial("x^8+y"), std::invalid_argument);
  EXPECT_THROW((FeedbackPolynomial{4, 0b0000}.validate()), std::invalid_argument);  // x^4
  EXPECT_THROW((FeedbackPolynomial{4, 0b0101}.validate()), std::invalid_argument);  // (x^2+x+1)^2
  EXPECT_THROW(Lfsr(p, 0), std::invalid_argument);
  EXPECT_THROW(default_polynomial(65), std::invalid_argument);
}
