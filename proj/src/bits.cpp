#include "qrng/bits.hpp"

#include <bit>
#include <stdexcept>

namespace qrng {

BitVector::BitVector(std::size_t size, bool value)
    : words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(size) {
  trim();
}

BitVector BitVector::from_bytes_msb(std::span<const std::uint8_t> bytes, std::size_t bit_count) {
  if (bit_count > bytes.size() * 8) {
    throw std::invalid_argument("BitVector: bit count exceeds byte buffer");
  }
  BitVector out(bit_count);
  for (std::size_t i = 0; i < bit_count; ++i) {
    if ((bytes[i >> 3] >> (7 - (i & 7))) & 1u) {
      out.words_[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
  }
  return out;
}

std::vector<std::uint8_t> BitVector::to_bytes_msb() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
  for (std::size_t i = 0; i < size_; ++i) {
    if (get(i)) {
      out[i >> 3] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
    }
  }
  return out;
}

void BitVector::push_back(bool value) {
  if ((size_ & 63) == 0) {
    words_.push_back(0);
  }
  if (value) {
    words_.back() |= std::uint64_t{1} << (size_ & 63);
  }
  ++size_;
}

void BitVector::append_msb(std::uint64_t value, unsigned count) {
  for (unsigned k = count; k-- > 0;) {
    push_back((value >> k) & 1u);
  }
}

void BitVector::append(const BitVector& other) {
  if (other.empty()) {
    return;
  }
  const std::size_t offset = size_ & 63;
  if (offset == 0) {
    words_.insert(words_.end(), other.words_.begin(), other.words_.end());
    size_ += other.size_;
    return;
  }
  const std::size_t new_size = size_ + other.size_;
  words_.resize((new_size + 63) / 64, 0);
  std::size_t w = size_ >> 6;
  for (std::uint64_t src : other.words_) {
    words_[w] |= src << offset;
    if (w + 1 < words_.size()) {
      words_[w + 1] |= src >> (64 - offset);
    }
    ++w;
  }
  size_ = new_size;
  trim();
}

void BitVector::resize(std::size_t size) {
  words_.resize((size + 63) / 64, 0);
  size_ = size;
  trim();
}

BitVector BitVector::slice(std::size_t pos, std::size_t len) const {
  if (pos + len > size_) {
    throw std::out_of_range("BitVector::slice out of range");
  }
  BitVector out(len);
  const std::size_t nwords = out.words_.size();
  for (std::size_t w = 0; w < nwords; ++w) {
    const std::size_t start = pos + w * 64;
    const unsigned take = static_cast<unsigned>(std::min<std::size_t>(64, len - w * 64));
    out.words_[w] = read_word(start, take);
  }
  out.trim();
  return out;
}

std::uint64_t BitVector::read_word(std::size_t pos, unsigned len) const {
  if (len == 0) {
    return 0;
  }
  const std::size_t w = pos >> 6;
  const unsigned off = pos & 63;
  std::uint64_t v = words_[w] >> off;
  if (off != 0 && w + 1 < words_.size()) {
    v |= words_[w + 1] << (64 - off);
  }
  if (len < 64) {
    v &= (std::uint64_t{1} << len) - 1;
  }
  return v;
}

std::size_t BitVector::count_ones() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) {
    n += static_cast<std::size_t>(std::popcount(w));
  }
  return n;
}

BitVector& BitVector::operator^=(const BitVector& other) {
  if (other.size_ != size_) {
    throw std::invalid_argument("BitVector xor: length mismatch");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) {
    words_[i] ^= other.words_[i];
  }
  return *this;
}

void BitVector::trim() {
  if ((size_ & 63) != 0 && !words_.empty()) {
    words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
  }
}

}  // namespace qrng
