#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qrng {

/// Packed bit sequence. Bit i lives in word i / 64 at position i % 64
/// (LSB-first inside a word); bits past size() in the last word are always
/// zero. Byte-level import/export is MSB-first, which is what the file
/// formats and the external test suites use.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size, bool value = false);

  static BitVector from_bytes_msb(std::span<const std::uint8_t> bytes, std::size_t bit_count);
  static BitVector from_bytes_msb(std::span<const std::uint8_t> bytes) {
    return from_bytes_msb(bytes, bytes.size() * 8);
  }
  std::vector<std::uint8_t> to_bytes_msb() const;

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t word_count() const { return words_.size(); }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  bool operator[](std::size_t i) const { return get(i); }
  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }

  void push_back(bool value);
  /// Appends the low `count` bits of `value`, most significant first.
  void append_msb(std::uint64_t value, unsigned count);
  void append(const BitVector& other);
  void resize(std::size_t size);
  void reserve(std::size_t bits) { words_.reserve((bits + 63) / 64); }
  void clear() {
    words_.clear();
    size_ = 0;
  }

  /// Copy of bits [pos, pos + len).
  BitVector slice(std::size_t pos, std::size_t len) const;
  /// Reads up to 64 bits starting at `pos` into the low bits of the result
  /// (bit pos -> result bit 0).
  std::uint64_t read_word(std::size_t pos, unsigned len = 64) const;

  std::size_t count_ones() const;

  BitVector& operator^=(const BitVector& other);
  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }
  friend bool operator==(const BitVector& a, const BitVector& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> mutable_words() { return words_; }
  /// Clears the unused high bits of the final word.
  void trim();

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

}  // namespace qrng
