#include "qrng/lfsr.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <stdexcept>
#include <vector>

namespace qrng {

namespace {

__extension__ using u128 = unsigned __int128;

// Generated offline: lowest-weight primitive polynomial per degree (trinomial
// where one exists, otherwise pentanomial), primitivity checked against the
// factorisation of 2^k - 1.
constexpr std::array<FeedbackPolynomial, 63> kPrimitive = {{
    {2, 0x3}, {3, 0x3}, {4, 0x3}, {5, 0x5},
    {6, 0x3}, {7, 0x3}, {8, 0x87}, {9, 0x11},
    {10, 0x9}, {11, 0x5}, {12, 0x107}, {13, 0x27},
    {14, 0x1007}, {15, 0x3}, {16, 0x100b}, {17, 0x9},
    {18, 0x81}, {19, 0x27}, {20, 0x9}, {21, 0x5},
    {22, 0x3}, {23, 0x21}, {24, 0x87}, {25, 0x9},
    {26, 0x47}, {27, 0x27}, {28, 0x9}, {29, 0x5},
    {30, 0x800007}, {31, 0x9}, {32, 0x400007}, {33, 0x2001},
    {34, 0x8000007}, {35, 0x5}, {36, 0x801}, {37, 0x207},
    {38, 0x200b}, {39, 0x11}, {40, 0x800000007}, {41, 0x9},
    {42, 0x20000007}, {43, 0x1007}, {44, 0x400000000b}, {45, 0x1b},
    {46, 0x20b}, {47, 0x21}, {48, 0x1000000b}, {49, 0x201},
    {50, 0x10007}, {51, 0x10000007}, {52, 0x9}, {53, 0x47},
    {54, 0x20007}, {55, 0x1000001}, {56, 0x40000000007}, {57, 0x81},
    {58, 0x80001}, {59, 0x1000007}, {60, 0x3}, {61, 0x27},
    {62, 0x1000000b}, {63, 0x3}, {64, 0x807},
}};

std::uint64_t low_mask(unsigned degree) {
  return degree >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << degree) - 1;
}

// Arithmetic in GF(2)[x] / p(x), elements of degree < k in a u64.
struct Residues {
  unsigned k;
  std::uint64_t taps;

  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    std::uint64_t r = 0;
    for (unsigned i = 0; i < k; ++i) {
      if ((b >> i) & 1u) {
        r ^= a;
      }
      const bool carry = (a >> (k - 1)) & 1u;
      a = (a << 1) & low_mask(k);
      if (carry) {
        a ^= taps;
      }
    }
    return r;
  }
  // x^(2^j) mod p
  std::uint64_t frobenius(unsigned j) const {
    std::uint64_t v = 2 & low_mask(k);
    for (unsigned i = 0; i < j; ++i) {
      v = mul(v, v);
    }
    return v;
  }
};

int degree_of(u128 p) {
  int d = -1;
  for (int i = 0; i < 128; ++i) {
    if ((p >> i) & 1u) {
      d = i;
    }
  }
  return d;
}

u128 poly_mod(u128 a, u128 b) {
  const int db = degree_of(b);
  for (int da = degree_of(a); da >= db; da = degree_of(a)) {
    a ^= b << (da - db);
  }
  return a;
}

u128 poly_gcd(u128 a, u128 b) {
  while (b != 0) {
    const u128 r = poly_mod(a, b);
    a = b;
    b = r;
  }
  return a;
}

std::vector<unsigned> prime_factors(unsigned n) {
  std::vector<unsigned> out;
  for (unsigned p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) {
        n /= p;
      }
    }
  }
  if (n > 1) {
    out.push_back(n);
  }
  return out;
}

}  // namespace

bool FeedbackPolynomial::is_irreducible() const {
  if (degree < 1 || degree > 64 || (taps & ~low_mask(degree)) != 0) {
    return false;
  }
  // Rabin: p of degree k is irreducible iff x^(2^k) = x mod p and
  // gcd(x^(2^(k/r)) - x, p) = 1 for every prime r dividing k.
  const Residues ring{degree, taps};
  const std::uint64_t x = 2 & low_mask(degree);
  if (degree == 1) {
    return true;
  }
  if (ring.frobenius(degree) != x) {
    return false;
  }
  const u128 full = (u128{1} << degree) | taps;
  for (unsigned r : prime_factors(degree)) {
    const std::uint64_t h = ring.frobenius(degree / r) ^ x;
    if (h == 0 || poly_gcd(full, h) != 1) {
      return false;
    }
  }
  return true;
}

void FeedbackPolynomial::validate() const {
  if (degree < 2 || degree > 64) {
    throw std::invalid_argument("feedback polynomial degree must be in [2, 64]");
  }
  if ((taps & ~low_mask(degree)) != 0) {
    throw std::invalid_argument("feedback polynomial taps exceed its degree");
  }
  if (!is_irreducible()) {
    throw std::invalid_argument("feedback polynomial " + id() + " is not irreducible");
  }
}

std::string FeedbackPolynomial::id() const {
  std::string s = "x^" + std::to_string(degree);
  for (int i = static_cast<int>(degree) - 1; i >= 0; --i) {
    if ((taps >> i) & 1u) {
      s += i == 0 ? "+1" : i == 1 ? "+x" : "+x^" + std::to_string(i);
    }
  }
  return s;
}

std::span<const FeedbackPolynomial> primitive_polynomials() { return kPrimitive; }

FeedbackPolynomial default_polynomial(unsigned degree) {
  if (degree < 2 || degree > 64) {
    throw std::invalid_argument("no shipped polynomial for degree " + std::to_string(degree));
  }
  return kPrimitive[degree - 2];
}

FeedbackPolynomial parse_polynomial(std::string_view text) {
  auto fail = [&]() -> FeedbackPolynomial {
    throw std::invalid_argument("cannot parse polynomial '" + std::string(text) + "'");
  };
  if (text.starts_with("0x") || text.starts_with("0X")) {
    u128 mask = 0;
    for (char c : text.substr(2)) {
      unsigned v = 0;
      if (auto [p, ec] = std::from_chars(&c, &c + 1, v, 16); ec != std::errc()) {
        return fail();
      }
      mask = (mask << 4) | v;
    }
    const int d = degree_of(mask);
    if (d < 1 || d > 64) {
      return fail();
    }
    return {static_cast<unsigned>(d), static_cast<std::uint64_t>(mask & low_mask(d))};
  }
  u128 mask = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('+', pos), text.size());
    std::string_view term = text.substr(pos, end - pos);
    unsigned exponent = 0;
    if (term == "1") {
      exponent = 0;
    } else if (term == "x") {
      exponent = 1;
    } else if (term.starts_with("x^")) {
      auto [p, ec] = std::from_chars(term.data() + 2, term.data() + term.size(), exponent);
      if (ec != std::errc() || p != term.data() + term.size() || exponent > 64) {
        return fail();
      }
    } else {
      return fail();
    }
    mask ^= u128{1} << exponent;
    pos = end + 1;
  }
  const int d = degree_of(mask);
  if (d < 1) {
    return fail();
  }
  return {static_cast<unsigned>(d), static_cast<std::uint64_t>(mask & low_mask(d))};
}

Lfsr::Lfsr(const FeedbackPolynomial& polynomial, std::uint64_t state)
    : taps_(polynomial.taps), state_(state & low_mask(polynomial.degree)), top_(polynomial.degree - 1) {
  if (polynomial.degree < 2 || polynomial.degree > 64) {
    throw std::invalid_argument("Lfsr: degree must be in [2, 64]");
  }
  if (state_ == 0) {
    throw std::invalid_argument("Lfsr: zero seed state never leaves the all-zero orbit");
  }
}

bool Lfsr::next() {
  const bool out = state_ & 1u;
  const std::uint64_t feedback = static_cast<std::uint64_t>(std::popcount(state_ & taps_) & 1);
  state_ = (state_ >> 1) | (feedback << top_);
  return out;
}

BitVector lfsr_sequence(std::uint64_t seed_state, const FeedbackPolynomial& polynomial,
                        std::size_t length) {
  Lfsr lfsr(polynomial, seed_state);
  BitVector out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    out.push_back(lfsr.next());
  }
  return out;
}

}  // namespace qrng
