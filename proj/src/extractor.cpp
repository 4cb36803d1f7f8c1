#include "qrng/extractor.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "qrng/random.hpp"

namespace qrng {

std::uint64_t lhl_output_length(std::uint64_t input_bits_n, double h_min_per_bit,
                                unsigned epsilon_log2) {
  if (!(h_min_per_bit >= 0.0 && h_min_per_bit <= 1.0)) {
    throw std::invalid_argument("lhl_output_length: h_min_per_bit must lie in [0, 1]");
  }
  if (epsilon_log2 == 0) {
    throw std::invalid_argument("lhl_output_length: epsilon_log2 must be > 0");
  }
  const double bound = static_cast<double>(input_bits_n) * h_min_per_bit - 2.0 * epsilon_log2;
  // Absorb representation error in decimal h (e.g. 0.95) without ever
  // rounding a genuinely fractional bound upward.
  const double floored = std::floor(bound + 1e-9 * std::max(1.0, std::abs(bound)));
  return floored <= 0.0 ? 0 : static_cast<std::uint64_t>(floored);
}

const char* to_string(ToeplitzConstruction c) {
  return c == ToeplitzConstruction::lfsr ? "lfsr" : "explicit";
}

ToeplitzConstruction parse_construction(std::string_view text) {
  if (text == "lfsr") {
    return ToeplitzConstruction::lfsr;
  }
  if (text == "explicit") {
    return ToeplitzConstruction::explicit_seed;
  }
  throw std::invalid_argument("unknown Toeplitz construction '" + std::string(text) + "'");
}

ExtractorParams ExtractorParams::sized(std::uint64_t n, double h_min_per_bit, unsigned epsilon_log2,
                                       ToeplitzConstruction construction) {
  ExtractorParams p;
  p.input_bits_n = n;
  p.output_bits_m = lhl_output_length(n, h_min_per_bit, epsilon_log2);
  p.epsilon_log2 = epsilon_log2;
  p.declared_h_min = h_min_per_bit;
  p.construction = construction;
  return p;
}

std::uint64_t ExtractorParams::required_seed_bits() const {
  return construction == ToeplitzConstruction::explicit_seed
             ? output_bits_m + input_bits_n - 1
             : output_bits_m + feedback_polynomial.degree;
}

void ExtractorParams::validate() const {
  if (input_bits_n == 0 || output_bits_m == 0) {
    throw std::invalid_argument("ExtractorParams: n and m must be > 0");
  }
  if (output_bits_m > input_bits_n) {
    throw std::invalid_argument("ExtractorParams: m must not exceed n");
  }
  const std::uint64_t bound = lhl_output_length(input_bits_n, declared_h_min, epsilon_log2);
  if (output_bits_m > bound) {
    throw std::invalid_argument(
        "ExtractorParams: m = " + std::to_string(output_bits_m) +
        " exceeds the leftover-hash bound " + std::to_string(bound) + " for n = " +
        std::to_string(input_bits_n) + ", h = " + std::to_string(declared_h_min) +
        ", epsilon = 2^-" + std::to_string(epsilon_log2));
  }
  if (construction == ToeplitzConstruction::lfsr) {
    feedback_polynomial.validate();
  }
}

std::vector<std::uint8_t> ToeplitzSpec::serialize() const {
  std::vector<std::uint8_t> out{'Q', 'R', 'T', 'P', 1, static_cast<std::uint8_t>(construction)};
  for (std::uint64_t v : {std::uint64_t{rows()}, std::uint64_t{cols()}}) {
    for (int i = 0; i < 8; ++i) {
      out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  for (const BitVector* b : {&first_column, &first_row}) {
    const auto bytes = b->to_bytes_msb();
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

ToeplitzSpec ToeplitzSpec::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 22 || bytes[0] != 'Q' || bytes[1] != 'R' || bytes[2] != 'T' ||
      bytes[3] != 'P' || bytes[4] != 1 || bytes[5] > 1) {
    throw std::invalid_argument("ToeplitzSpec: bad header");
  }
  auto u64_at = [&](std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    }
    return v;
  };
  const std::uint64_t m = u64_at(6);
  const std::uint64_t n = u64_at(14);
  const std::size_t mb = (m + 7) / 8;
  const std::size_t nb = (n + 7) / 8;
  if (bytes.size() != 22 + mb + nb) {
    throw std::invalid_argument("ToeplitzSpec: payload size mismatch");
  }
  ToeplitzSpec spec;
  spec.construction = static_cast<ToeplitzConstruction>(bytes[5]);
  spec.first_column = BitVector::from_bytes_msb(bytes.subspan(22, mb), m);
  spec.first_row = BitVector::from_bytes_msb(bytes.subspan(22 + mb, nb), n);
  if (m > 0 && n > 0 && spec.first_column.get(0) != spec.first_row.get(0)) {
    throw std::invalid_argument("ToeplitzSpec: corner entry disagrees between row and column");
  }
  return spec;
}

ToeplitzSpec build_toeplitz(const ExtractorParams& params) {
  params.validate();
  const std::uint64_t m = params.output_bits_m;
  const std::uint64_t n = params.input_bits_n;
  if (params.seed_bits.size() < params.required_seed_bits()) {
    throw std::invalid_argument("build_toeplitz: seed has " +
                                std::to_string(params.seed_bits.size()) + " bits, " +
                                to_string(params.construction) + " construction needs " +
                                std::to_string(params.required_seed_bits()));
  }
  ToeplitzSpec spec;
  spec.construction = params.construction;
  spec.first_column = params.seed_bits.slice(0, m);
  spec.first_row = BitVector(n);
  spec.first_row.set(0, spec.first_column.get(0));
  if (params.construction == ToeplitzConstruction::explicit_seed) {
    for (std::uint64_t j = 1; j < n; ++j) {
      spec.first_row.set(j, params.seed_bits.get(m - 1 + j));
    }
  } else {
    const unsigned k = params.feedback_polynomial.degree;
    const std::uint64_t state = params.seed_bits.read_word(m, k);
    if (state == 0) {
      throw std::invalid_argument("build_toeplitz: LFSR start state from seed is all zero");
    }
    Lfsr lfsr(params.feedback_polynomial, state);
    for (std::uint64_t j = 1; j < n; ++j) {
      spec.first_row.set(j, lfsr.next());
    }
  }
  return spec;
}

ToeplitzHasher::ToeplitzHasher(const ToeplitzSpec& spec)
    : m_(spec.rows()), n_(spec.cols()), out_words_((m_ + 63) / 64) {
  if (m_ == 0 || n_ == 0) {
    throw std::invalid_argument("ToeplitzHasher: empty matrix");
  }
  // Diagonal sequence d of length m + n - 1 with t[i][j] = d[i - j + n - 1]:
  // d[n - 1 - j] = first_row[j], d[n - 1 + i] = first_column[i].
  const std::size_t d_len = m_ + n_ - 1;
  BitVector d(d_len + 128);
  for (std::size_t j = 0; j < n_; ++j) {
    d.set(n_ - 1 - j, spec.first_row.get(j));
  }
  for (std::size_t i = 1; i < m_; ++i) {
    d.set(n_ - 1 + i, spec.first_column.get(i));
  }
  // copy s, word q holds d[s + 64 q .. s + 64 q + 63]; the largest window
  // offset is n - 1, so (n - 1) / 64 + out_words words suffice.
  copy_words_ = (n_ - 1) / 64 + out_words_;
  shifted_.assign(64 * copy_words_, 0);
  for (std::size_t s = 0; s < 64; ++s) {
    for (std::size_t q = 0; q < copy_words_; ++q) {
      const std::size_t pos = s + 64 * q;
      if (pos < d.size()) {
        shifted_[s * copy_words_ + q] =
            d.read_word(pos, static_cast<unsigned>(std::min<std::size_t>(64, d.size() - pos)));
      }
    }
  }
}

BitVector ToeplitzHasher::hash(const BitVector& block) const {
  if (block.size() != n_) {
    throw std::invalid_argument("toeplitz_hash: block has " + std::to_string(block.size()) +
                                " bits, matrix expects " + std::to_string(n_));
  }
  return hash(block, 0);
}

BitVector ToeplitzHasher::hash(const BitVector& stream, std::size_t offset) const {
  if (offset + n_ > stream.size()) {
    throw std::invalid_argument("toeplitz_hash: block extends past end of stream");
  }
  std::vector<std::uint64_t> acc(out_words_, 0);
  std::uint64_t* __restrict out = acc.data();
  const std::size_t words = out_words_;
  for (std::size_t base = 0; base < n_; base += 64) {
    const unsigned take = static_cast<unsigned>(std::min<std::size_t>(64, n_ - base));
    std::uint64_t bits = stream.read_word(offset + base, take);
    while (bits != 0) {
      const std::size_t j = base + static_cast<std::size_t>(std::countr_zero(bits));
      bits &= bits - 1;
      const std::size_t o = n_ - 1 - j;
      const std::uint64_t* __restrict src = shifted_.data() + (o & 63) * copy_words_ + (o >> 6);
      for (std::size_t w = 0; w < words; ++w) {
        out[w] ^= src[w];
      }
    }
  }
  BitVector result(m_);
  auto dst = result.mutable_words();
  std::copy(acc.begin(), acc.end(), dst.begin());
  result.trim();
  return result;
}

BitVector toeplitz_hash(const BitVector& block, const ToeplitzSpec& spec) {
  return ToeplitzHasher(spec).hash(block);
}

ExtractionResult extract_stream(const BitVector& raw, const ExtractorParams& params,
                                std::optional<double> measured_h_min, unsigned threads,
                                std::optional<std::uint64_t> max_blocks) {
  params.validate();
  if (measured_h_min && *measured_h_min < params.declared_h_min) {
    throw std::invalid_argument("extract_stream: declared min-entropy " +
                                std::to_string(params.declared_h_min) +
                                " exceeds the measured " + std::to_string(*measured_h_min));
  }
  const std::uint64_t n = params.input_bits_n;
  if (raw.size() < n) {
    throw std::invalid_argument("extract_stream: raw stream of " + std::to_string(raw.size()) +
                                " bits is shorter than one " + std::to_string(n) + "-bit block");
  }
  std::uint64_t blocks = raw.size() / n;
  if (max_blocks) {
    blocks = std::min(blocks, *max_blocks);
  }
  const ToeplitzHasher hasher(build_toeplitz(params));

  std::vector<BitVector> outputs(blocks);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::uint64_t>(threads == 0 ? 1 : threads, 1, blocks));
  auto work = [&](unsigned id) {
    for (std::uint64_t b = id; b < blocks; b += workers) {
      outputs[b] = hasher.hash(raw, b * n);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < workers; ++id) {
      pool.emplace_back(work, id);
    }
  }

  ExtractionResult result;
  result.bits.reserve(blocks * params.output_bits_m);
  for (const BitVector& o : outputs) {
    result.bits.append(o);
  }
  result.blocks = blocks;
  result.dropped_bits = raw.size() - blocks * n;
  result.extraction_ratio =
      static_cast<double>(params.output_bits_m) / static_cast<double>(params.input_bits_n);
  return result;
}

BitVector deterministic_seed(std::uint64_t seed, std::size_t bits) {
  SimRandom rng(seed, stream::extractor_seed);
  BitVector out(bits);
  auto words = out.mutable_words();
  for (std::uint64_t& w : words) {
    w = rng.next_u64();
  }
  out.trim();
  return out;
}

}  // namespace qrng
