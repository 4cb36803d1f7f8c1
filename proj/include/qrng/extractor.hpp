#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qrng/bits.hpp"
#include "qrng/lfsr.hpp"

namespace qrng {

/// Block and security constants of the reference implementation: 9712 blocks
/// of 11840 raw bits, each hashed to 11219 bits, at epsilon = 2^-15 with a
/// worst-case min-entropy of 0.95 per bit.
namespace reference_extraction {
inline constexpr std::uint64_t input_bits = 11840;
inline constexpr std::uint64_t output_bits = 11219;
inline constexpr std::uint64_t blocks = 9712;
inline constexpr unsigned epsilon_log2 = 15;
inline constexpr double worst_case_h_min = 0.95;
}  // namespace reference_extraction

/// Leftover-hash-lemma output length floor(n * h - 2 * epsilon_log2),
/// clamped at zero.
std::uint64_t lhl_output_length(std::uint64_t input_bits_n, double h_min_per_bit,
                                unsigned epsilon_log2);

enum class ToeplitzConstruction : std::uint8_t {
  /// Seed supplies all m + n - 1 diagonals.
  explicit_seed = 0,
  /// Seed supplies the m-bit first column and the LFSR start state; the LFSR
  /// generates the rest of the first row.
  lfsr = 1,
};

const char* to_string(ToeplitzConstruction c);
ToeplitzConstruction parse_construction(std::string_view text);

struct ExtractorParams {
  std::uint64_t input_bits_n = 0;
  std::uint64_t output_bits_m = 0;
  unsigned epsilon_log2 = 15;
  /// Min-entropy per raw bit the output length is sized against.
  double declared_h_min = 1.0;
  ToeplitzConstruction construction = ToeplitzConstruction::lfsr;
  FeedbackPolynomial feedback_polynomial = default_polynomial(32);
  BitVector seed_bits;

  /// m chosen as the largest length the leftover hash lemma allows.
  static ExtractorParams sized(std::uint64_t n, double h_min_per_bit, unsigned epsilon_log2,
                               ToeplitzConstruction construction = ToeplitzConstruction::lfsr);

  std::uint64_t required_seed_bits() const;
  /// Checks 0 < m <= n, the leftover-hash bound for declared_h_min, and the
  /// polynomial (lfsr construction). Does not look at seed_bits.
  void validate() const;
};

/// Toeplitz matrix described by its first column and first row; entry (0,0)
/// appears in both. t[i][j] = first_column[i - j] when i >= j, otherwise
/// first_row[j - i].
struct ToeplitzSpec {
  BitVector first_column;
  BitVector first_row;
  ToeplitzConstruction construction = ToeplitzConstruction::explicit_seed;

  std::size_t rows() const { return first_column.size(); }
  std::size_t cols() const { return first_row.size(); }
  bool at(std::size_t i, std::size_t j) const {
    return i >= j ? first_column.get(i - j) : first_row.get(j - i);
  }

  std::vector<std::uint8_t> serialize() const;
  static ToeplitzSpec deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const ToeplitzSpec&, const ToeplitzSpec&) = default;
};

/// Throws std::invalid_argument when the seed is too short for the
/// construction or the LFSR start state is zero.
ToeplitzSpec build_toeplitz(const ExtractorParams& params);

/// Precomputes 64 bit-shifted copies of the diagonal sequence so that each set
/// input bit XORs one word-aligned window into the accumulator.
class ToeplitzHasher {
 public:
  explicit ToeplitzHasher(const ToeplitzSpec& spec);

  std::size_t input_bits() const { return n_; }
  std::size_t output_bits() const { return m_; }

  BitVector hash(const BitVector& block) const;
  /// Hashes bits [offset, offset + n) of `stream` without copying the block.
  BitVector hash(const BitVector& stream, std::size_t offset) const;

 private:
  std::size_t m_;
  std::size_t n_;
  std::size_t out_words_;
  std::size_t copy_words_;
  std::vector<std::uint64_t> shifted_;
};

BitVector toeplitz_hash(const BitVector& block, const ToeplitzSpec& spec);

struct ExtractionResult {
  BitVector bits;
  std::uint64_t blocks = 0;
  std::uint64_t dropped_bits = 0;
  double extraction_ratio = 0.0;
};

/// Splits `raw` into consecutive n-bit blocks, hashes each with the same
/// Toeplitz matrix and concatenates the outputs in block order. A trailing
/// partial block is dropped. When `measured_h_min` is given it must be at
/// least params.declared_h_min.
ExtractionResult extract_stream(const BitVector& raw, const ExtractorParams& params,
                                std::optional<double> measured_h_min = std::nullopt,
                                unsigned threads = 1,
                                std::optional<std::uint64_t> max_blocks = std::nullopt);

/// Deterministic seed bits for tests and reproducible runs. Seed quality is an
/// input assumption of seeded extraction; production use should load a seed
/// file from an independent source.
BitVector deterministic_seed(std::uint64_t seed, std::size_t bits);

}  // namespace qrng
