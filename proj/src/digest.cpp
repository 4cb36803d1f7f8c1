#include "qrng/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace qrng {

std::string sha256_hex(std::span<const std::uint8_t> data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string bits_digest(const BitVector& bits) {
  auto bytes = bits.to_bytes_msb();
  const std::uint64_t n = bits.size();
  for (int i = 0; i < 8; ++i) {
    bytes.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  }
  return sha256_hex(bytes);
}

}  // namespace qrng
