#include "qrng/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qrng::io {

namespace {

std::runtime_error io_error(const std::filesystem::path& path, const std::string& what) {
  return std::runtime_error(path.string() + ": " + what);
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& data, const std::filesystem::path& path)
      : data_(data), path_(path) {}

  void expect_magic(const char* magic) {
    need(4);
    if (std::memcmp(data_.data() + pos_, magic, 4) != 0) {
      throw io_error(path_, std::string("bad magic, expected ") + magic);
    }
    pos_ += 4;
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    }
    return v;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::span<const std::uint8_t> s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw io_error(path_, "truncated file");
    }
  }
  const std::vector<std::uint8_t>& data_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

void check_version(std::uint8_t v, const std::filesystem::path& path) {
  if (v != kFormatVersion) {
    throw io_error(path, "unsupported format version " + std::to_string(v));
  }
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error(path, "cannot open for reading");
  }
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw io_error(path, "cannot open for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw io_error(path, "write failed");
  }
}

void write_timestamps(const std::filesystem::path& path, const TimestampFile& file) {
  std::vector<std::uint8_t> out;
  out.reserve(29 + 8 * file.timestamps.size());
  out.insert(out.end(), {'Q', 'R', 'T', 'S'});
  out.push_back(kFormatVersion);
  put_u64(out, file.clock_period_ps);
  put_u64(out, file.bin_count);
  put_u64(out, file.timestamps.size());
  for (std::uint64_t t : file.timestamps) {
    put_u64(out, t);
  }
  write_file(path, out);
}

void write_timestamps(const std::filesystem::path& path, const ArrivalStream& stream) {
  TimestampFile file{stream.config.clock_period_ps, stream.config.bin_count, {}};
  file.timestamps.reserve(stream.events.size());
  for (const DetectionEvent& e : stream.events) {
    file.timestamps.push_back(e.timestamp_ps);
  }
  write_timestamps(path, file);
}

TimestampFile read_timestamps(const std::filesystem::path& path) {
  const auto data = read_file(path);
  Reader r(data, path);
  r.expect_magic("QRTS");
  check_version(r.u8(), path);
  TimestampFile file;
  file.clock_period_ps = r.u64();
  file.bin_count = r.u64();
  const std::uint64_t count = r.u64();
  if (r.remaining() != count * 8) {
    throw io_error(path, "event count does not match payload size");
  }
  file.timestamps.resize(count);
  for (std::uint64_t& t : file.timestamps) {
    t = r.u64();
  }
  return file;
}

std::vector<DetectionEvent> to_events(const TimestampFile& file) {
  std::vector<DetectionEvent> events;
  events.reserve(file.timestamps.size());
  for (std::uint64_t t : file.timestamps) {
    events.push_back({t, EventOrigin::photon});
  }
  return events;
}

void write_bits(const std::filesystem::path& path, const BitVector& bits, const Metadata& metadata) {
  std::string meta;
  for (const auto& [key, value] : metadata) {
    if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
      throw std::invalid_argument("write_bits: metadata key/value contains a reserved character");
    }
    meta += key + "=" + value + "\n";
  }
  const auto packed = bits.to_bytes_msb();
  std::vector<std::uint8_t> out;
  out.reserve(18 + meta.size() + packed.size());
  out.insert(out.end(), {'Q', 'R', 'R', 'B'});
  out.push_back(kFormatVersion);
  out.push_back(static_cast<std::uint8_t>((8 - bits.size() % 8) % 8));
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  put_u64(out, bits.size());
  out.insert(out.end(), meta.begin(), meta.end());
  out.insert(out.end(), packed.begin(), packed.end());
  write_file(path, out);
}

BitFile read_bits(const std::filesystem::path& path) {
  const auto data = read_file(path);
  Reader r(data, path);
  r.expect_magic("QRRB");
  check_version(r.u8(), path);
  const std::uint8_t pad = r.u8();
  const std::uint32_t meta_len = r.u32();
  const std::uint64_t bit_count = r.u64();
  if (pad != (8 - bit_count % 8) % 8) {
    throw io_error(path, "pad length inconsistent with bit count");
  }
  BitFile file;
  const auto meta = r.bytes(meta_len);
  std::istringstream lines(std::string(meta.begin(), meta.end()));
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw io_error(path, "malformed metadata record");
    }
    file.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::size_t nbytes = (bit_count + 7) / 8;
  if (r.remaining() != nbytes) {
    throw io_error(path, "bit count does not match payload size");
  }
  file.bits = BitVector::from_bytes_msb(r.bytes(nbytes), bit_count);
  return file;
}

}  // namespace qrng::io
