#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "qrng/bits.hpp"

namespace qrng {

/// Feedback polynomial x^degree + c_{degree-1} x^{degree-1} + ... + c_0 over
/// GF(2). `taps` holds c_0 .. c_{degree-1}; the leading term is implicit so
/// degrees up to 64 fit.
struct FeedbackPolynomial {
  unsigned degree = 0;
  std::uint64_t taps = 0;

  /// Throws unless 2 <= degree <= 64 and the polynomial is irreducible.
  void validate() const;
  bool is_irreducible() const;
  /// Canonical text form, e.g. "x^32+x^22+x^2+x+1".
  std::string id() const;

  friend bool operator==(const FeedbackPolynomial&, const FeedbackPolynomial&) = default;
};

/// Minimum-weight primitive polynomials for degrees 2..64, indexed by
/// degree - 2.
std::span<const FeedbackPolynomial> primitive_polynomials();
FeedbackPolynomial default_polynomial(unsigned degree);

/// Accepts the id() form ("x^8+x^4+x^3+x^2+1") or a hex mask that includes
/// the leading term ("0x11d").
FeedbackPolynomial parse_polynomial(std::string_view text);

/// Fibonacci LFSR. Each step outputs the state LSB, then shifts right and
/// inserts parity(state & taps) at bit degree - 1. With state bit i holding
/// s[t + i], the output obeys s[t + degree] = sum_i c_i s[t + i].
class Lfsr {
 public:
  Lfsr(const FeedbackPolynomial& polynomial, std::uint64_t state);

  bool next();
  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t taps_;
  std::uint64_t state_;
  unsigned top_;
};

/// Throws std::invalid_argument for a zero seed state.
BitVector lfsr_sequence(std::uint64_t seed_state, const FeedbackPolynomial& polynomial,
                        std::size_t length);

}  // namespace qrng
