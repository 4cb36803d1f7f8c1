#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "qrng/bits.hpp"

namespace qrng {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
/// SHA-256 of the MSB-first packed bytes followed by the bit count, so
/// sequences differing only in trailing zero bits do not collide.
std::string bits_digest(const BitVector& bits);

}  // namespace qrng
