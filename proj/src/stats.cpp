#include "qrng/stats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "qrng/digest.hpp"
#include "qrng/io.hpp"
#include "qrng/special.hpp"

namespace qrng {

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string num(double v) {
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  return fmt("%.10g", v);
}

std::size_t count_ones_range(const BitVector& bits, std::size_t pos, std::size_t len) {
  std::size_t n = 0;
  while (len > 0) {
    const unsigned take = static_cast<unsigned>(std::min<std::size_t>(64, len));
    n += static_cast<std::size_t>(std::popcount(bits.read_word(pos, take)));
    pos += take;
    len -= take;
  }
  return n;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::weak:
      return "weak";
    case Verdict::fail:
      return "fail";
  }
  return "?";
}

Threshold Threshold::at_least(double pass, double weak, bool on_p_value) {
  Threshold t;
  t.pass_low = pass;
  t.weak_low = std::min(pass, weak);
  t.on_p_value = on_p_value;
  return t;
}

Threshold Threshold::at_most(double pass, double weak) {
  Threshold t;
  t.pass_high = pass;
  t.weak_high = std::max(pass, weak);
  return t;
}

Threshold Threshold::band(double pass_low, double pass_high, double weak_low, double weak_high,
                          bool on_p_value) {
  Threshold t;
  t.pass_low = pass_low;
  t.pass_high = pass_high;
  t.weak_low = std::min(pass_low, weak_low);
  t.weak_high = std::max(pass_high, weak_high);
  t.on_p_value = on_p_value;
  return t;
}

Verdict Threshold::classify(double value) const {
  if (std::isnan(value)) {
    return Verdict::fail;
  }
  if (value >= pass_low && value <= pass_high) {
    return Verdict::pass;
  }
  if (value >= weak_low && value <= weak_high) {
    return Verdict::weak;
  }
  return Verdict::fail;
}

std::string Threshold::describe() const {
  const std::string subject = on_p_value ? "p" : "x";
  auto range = [&](double lo, double hi) {
    if (std::isinf(lo)) {
      return subject + " <= " + num(hi);
    }
    if (std::isinf(hi)) {
      return subject + " >= " + num(lo);
    }
    return num(lo) + " <= " + subject + " <= " + num(hi);
  };
  std::string s = "pass " + range(pass_low, pass_high);
  if (weak_low != pass_low || weak_high != pass_high) {
    s += "; weak " + range(weak_low, weak_high);
  }
  return s;
}

TestRecord TestRecord::judged(std::string name, double statistic, std::optional<double> p_value,
                              const Threshold& threshold) {
  TestRecord r;
  r.name = std::move(name);
  r.statistic = statistic;
  r.p_value = p_value;
  r.threshold = threshold;
  if (threshold.on_p_value && !p_value) {
    throw std::logic_error("TestRecord: threshold on p-value but no p-value given");
  }
  r.verdict = threshold.classify(threshold.on_p_value ? *p_value : statistic);
  return r;
}

bool TestReport::passed() const {
  return std::none_of(records.begin(), records.end(),
                      [](const TestRecord& r) { return r.verdict == Verdict::fail; });
}

const TestRecord* TestReport::find(std::string_view name) const {
  for (const TestRecord& r : records) {
    if (r.name == name) {
      return &r;
    }
  }
  return nullptr;
}

void TestReport::append(const TestReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
}

std::string TestReport::format_table() const {
  std::string s = fmt("input: %llu bits, sha256 %s\n", static_cast<unsigned long long>(bit_count),
                      source_digest.empty() ? "-" : source_digest.c_str());
  s += fmt("%-22s %18s %14s %-6s  %s\n", "test", "statistic", "p-value", "result", "threshold");
  for (const TestRecord& r : records) {
    s += fmt("%-22s %18.10g %14s %-6s  %s\n", r.name.c_str(), r.statistic,
             r.p_value ? fmt("%.6g", *r.p_value).c_str() : "-", to_string(r.verdict),
             r.threshold.describe().c_str());
  }
  s += fmt("overall: %s\n", passed() ? "PASS" : "FAIL");
  return s;
}

std::string TestReport::format_records() const {
  std::string s = fmt("[input]\nbit_count = %llu\nsource_digest = %s\n\n",
                      static_cast<unsigned long long>(bit_count), source_digest.c_str());
  for (const TestRecord& r : records) {
    s += "[test." + r.name + "]\n";
    s += "statistic = " + num(r.statistic) + "\n";
    if (r.p_value) {
      s += "p_value = " + num(*r.p_value) + "\n";
    }
    s += std::string("judged_on = ") + (r.threshold.on_p_value ? "p_value" : "statistic") + "\n";
    s += "pass_low = " + num(r.threshold.pass_low) + "\npass_high = " + num(r.threshold.pass_high) +
         "\nweak_low = " + num(r.threshold.weak_low) + "\nweak_high = " + num(r.threshold.weak_high) +
         "\n";
    s += std::string("verdict = ") + to_string(r.verdict) + "\n\n";
  }
  s += std::string("[summary]\nverdict = ") + (passed() ? "pass" : "fail") + "\n";
  return s;
}

EntMetrics ent_metrics(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6) {
    throw std::invalid_argument("ent_report: needs at least 6 bytes");
  }
  EntMetrics m;
  m.bytes = bytes.size();
  const double n = static_cast<double>(bytes.size());

  std::array<std::uint64_t, 256> hist{};
  std::uint64_t ones = 0;
  std::uint64_t sum = 0;
  for (std::uint8_t b : bytes) {
    ++hist[b];
    ones += static_cast<std::uint64_t>(std::popcount(b));
    sum += b;
  }

  const double expected = n / 256.0;
  for (std::uint64_t c : hist) {
    if (c > 0) {
      const double p = static_cast<double>(c) / n;
      m.entropy_per_byte -= p * std::log2(p);
    }
    const double d = static_cast<double>(c) - expected;
    m.chi_square += d * d / expected;
  }
  m.chi_square_p = special::chi_square_upper_tail(m.chi_square, 255.0);

  const double p1 = static_cast<double>(ones) / (8.0 * n);
  for (double p : {p1, 1.0 - p1}) {
    if (p > 0.0) {
      m.entropy_per_bit -= p * std::log2(p);
    }
  }
  m.mean_byte = static_cast<double>(sum) / n;
  m.mean_bit = p1;

  // 24-bit coordinates from consecutive non-overlapping 6-byte groups,
  // strictly inside the quarter circle of radius 2^24 - 1.
  constexpr std::uint64_t radius = (std::uint64_t{1} << 24) - 1;
  std::uint64_t inside = 0;
  const std::size_t points = bytes.size() / 6;
  for (std::size_t i = 0; i < points; ++i) {
    const std::uint8_t* g = bytes.data() + 6 * i;
    const std::uint64_t x = (std::uint64_t{g[0]} << 16) | (std::uint64_t{g[1]} << 8) | g[2];
    const std::uint64_t y = (std::uint64_t{g[3]} << 16) | (std::uint64_t{g[4]} << 8) | g[5];
    if (x * x + y * y < radius * radius) {
      ++inside;
    }
  }
  m.monte_carlo_points = points;
  m.monte_carlo_pi = 4.0 * static_cast<double>(inside) / static_cast<double>(points);

  // Lag-1 Pearson correlation over (b[i], b[i+1]), no wrap-around.
  std::uint64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i + 1 < bytes.size(); ++i) {
    const std::uint64_t x = bytes[i];
    const std::uint64_t y = bytes[i + 1];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const long double pairs = static_cast<long double>(bytes.size() - 1);
  const long double num = pairs * sxy - static_cast<long double>(sx) * sy;
  const long double vx = pairs * sxx - static_cast<long double>(sx) * sx;
  const long double vy = pairs * syy - static_cast<long double>(sy) * sy;
  // Constant input has no defined correlation; report full dependence.
  m.serial_correlation = (vx <= 0 || vy <= 0) ? 1.0 : static_cast<double>(num / std::sqrt(vx * vy));
  return m;
}

TestReport ent_report(std::span<const std::uint8_t> bytes, const BatteryThresholds& t) {
  const EntMetrics m = ent_metrics(bytes);
  const double n = static_cast<double>(m.bytes);
  TestReport report;
  report.bit_count = m.bytes * 8;

  report.records.push_back(TestRecord::judged("entropy_per_bit", m.entropy_per_bit, std::nullopt,
                                              Threshold::at_least(t.entropy_per_bit, 0.999)));
  report.records.push_back(TestRecord::judged("entropy_per_byte", m.entropy_per_byte,
                                              std::nullopt, Threshold::at_least(7.9, 7.5)));
  report.records.push_back(
      TestRecord::judged("chi_square", m.chi_square, m.chi_square_p,
                         Threshold::band(t.chi_square_pass_low, t.chi_square_pass_high, 0.01, 0.99,
                                         true)));

  const double sigma_bit = 0.5 / std::sqrt(8.0 * n);
  report.records.push_back(TestRecord::judged(
      "mean_bit", m.mean_bit, std::nullopt,
      Threshold::band(0.5 - 4 * sigma_bit, 0.5 + 4 * sigma_bit, 0.5 - 6 * sigma_bit,
                      0.5 + 6 * sigma_bit)));
  const double sigma_byte = std::sqrt((65536.0 - 1.0) / 12.0) / std::sqrt(n);
  report.records.push_back(TestRecord::judged(
      "mean_byte", m.mean_byte, std::nullopt,
      Threshold::band(127.5 - 4 * sigma_byte, 127.5 + 4 * sigma_byte, 127.5 - 6 * sigma_byte,
                      127.5 + 6 * sigma_byte)));

  const double q = std::numbers::pi / 4.0;
  const double sigma_pi = 4.0 * std::sqrt(q * (1 - q) / static_cast<double>(m.monte_carlo_points));
  const double tol = std::max(t.monte_carlo_pi_tolerance, 4.0 * sigma_pi);
  report.records.push_back(TestRecord::judged(
      "monte_carlo_pi", m.monte_carlo_pi, std::nullopt,
      Threshold::band(std::numbers::pi - tol, std::numbers::pi + tol, std::numbers::pi - 2 * tol,
                      std::numbers::pi + 2 * tol)));
  report.records.push_back(TestRecord::judged(
      "serial_correlation", m.serial_correlation, std::nullopt,
      Threshold::band(-t.serial_correlation, t.serial_correlation, -2 * t.serial_correlation,
                      2 * t.serial_correlation)));
  return report;
}

double AutocorrResult::bound_at(std::size_t lag) const {
  return 2.576 / std::sqrt(static_cast<double>(length - lag));
}

AutocorrResult autocorrelation(const BitVector& bits, std::size_t max_lag) {
  if (max_lag == 0) {
    throw std::invalid_argument("autocorrelation: max_lag must be >= 1");
  }
  if (bits.size() < 100 * max_lag) {
    throw std::invalid_argument("autocorrelation: stream of " + std::to_string(bits.size()) +
                                " bits is shorter than 100 * max_lag");
  }
  const std::size_t n = bits.size();
  const std::size_t total_ones = bits.count_ones();
  AutocorrResult result;
  result.length = n;
  result.bound_99 = 2.576 / std::sqrt(static_cast<double>(n));
  result.coefficients.assign(max_lag + 1, 0.0);
  result.coefficients[0] = 1.0;

  const auto words = bits.words();
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const std::size_t m = n - k;
    const double sa = static_cast<double>(total_ones - count_ones_range(bits, m, k));
    const double sb = static_cast<double>(total_ones - count_ones_range(bits, 0, k));
    std::uint64_t sab = 0;
    const std::size_t full = m / 64;
    for (std::size_t w = 0; w < full; ++w) {
      sab += static_cast<std::uint64_t>(std::popcount(words[w] & bits.read_word(64 * w + k)));
    }
    if (const unsigned rest = static_cast<unsigned>(m % 64); rest != 0) {
      sab += static_cast<std::uint64_t>(
          std::popcount(bits.read_word(64 * full, rest) & bits.read_word(64 * full + k, rest)));
    }
    const double md = static_cast<double>(m);
    const double pa = sa / md;
    const double pb = sb / md;
    const double var = pa * (1 - pa) * pb * (1 - pb);
    // A constant window has no defined correlation; treat as full dependence.
    const double r = var <= 0.0 ? 1.0 : (static_cast<double>(sab) / md - pa * pb) / std::sqrt(var);
    result.coefficients[k] = r;
    if (std::abs(r) > result.bound_at(k)) {
      ++result.excursions;
    }
  }
  return result;
}

TestRecord autocorrelation_record(const AutocorrResult& result, double fraction) {
  const double lags = static_cast<double>(result.coefficients.size() - 1);
  return TestRecord::judged("autocorrelation", static_cast<double>(result.excursions), std::nullopt,
                            Threshold::at_most(std::ceil(fraction * lags),
                                               std::ceil(2 * fraction * lags)));
}

TestRecord autocorrelation_record(const AutocorrResult& result) {
  return autocorrelation_record(result, BatteryThresholds{}.max_autocorr_excursion_fraction);
}

std::pair<double, double> nist_proportion_interval(double significance_alpha,
                                                   std::uint64_t sample_count) {
  if (!(significance_alpha > 0.0 && significance_alpha < 1.0)) {
    throw std::invalid_argument("nist_proportion_interval: alpha must lie in (0, 1)");
  }
  if (sample_count == 0) {
    throw std::invalid_argument("nist_proportion_interval: sample_count must be > 0");
  }
  const double p = 1.0 - significance_alpha;
  const double half = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(sample_count));
  return {p - half, p + half};
}

MonobitRuns monobit_and_runs_values(const BitVector& bits) {
  if (bits.size() < 100) {
    throw std::invalid_argument("monobit_and_runs: needs at least 100 bits");
  }
  MonobitRuns out;
  const double n = static_cast<double>(bits.size());
  const double ones = static_cast<double>(bits.count_ones());
  const double s = 2.0 * ones - n;
  out.monobit_statistic = std::abs(s) / std::sqrt(n);
  out.monobit_p = std::erfc(out.monobit_statistic / std::numbers::sqrt2);

  const double pi = ones / n;
  std::uint64_t transitions = 0;
  const std::size_t pairs = bits.size() - 1;
  for (std::size_t pos = 0; pos < pairs; pos += 64) {
    const unsigned take = static_cast<unsigned>(std::min<std::size_t>(64, pairs - pos));
    transitions += static_cast<std::uint64_t>(
        std::popcount(bits.read_word(pos, take) ^ bits.read_word(pos + 1, take)));
  }
  out.runs_statistic = static_cast<double>(transitions + 1);
  out.runs_applicable = std::abs(pi - 0.5) < 2.0 / std::sqrt(n);
  if (out.runs_applicable) {
    const double expected = 2.0 * n * pi * (1.0 - pi);
    out.runs_p = std::erfc(std::abs(out.runs_statistic - expected) /
                           (2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi)));
  }
  return out;
}

std::vector<TestRecord> monobit_and_runs(const BitVector& bits) {
  return monobit_and_runs(bits, BatteryThresholds{}.alpha);
}

std::vector<TestRecord> monobit_and_runs(const BitVector& bits, double alpha) {
  const MonobitRuns v = monobit_and_runs_values(bits);
  const Threshold t = Threshold::at_least(alpha, alpha / 10.0, true);
  return {TestRecord::judged("monobit", v.monobit_statistic, v.monobit_p, t),
          TestRecord::judged("runs", v.runs_statistic, v.runs_p, t)};
}

TestRecord p_value_uniformity(std::span<const double> p_values) {
  if (p_values.empty()) {
    throw std::invalid_argument("p_value_uniformity: no p-values");
  }
  std::array<double, 10> cells{};
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("p_value_uniformity: p-value outside [0, 1]");
    }
    cells[std::min<std::size_t>(9, static_cast<std::size_t>(p * 10.0))] += 1.0;
  }
  const double expected = static_cast<double>(p_values.size()) / 10.0;
  double chi = 0.0;
  for (double c : cells) {
    chi += (c - expected) * (c - expected) / expected;
  }
  return TestRecord::judged("p_value_uniformity", chi, special::chi_square_upper_tail(chi, 9.0),
                            Threshold::at_least(1e-4, 1e-4, true));
}

TestReport run_battery(const BitVector& bits, const BatteryOptions& options) {
  TestReport report;
  report.bit_count = bits.size();
  report.source_digest = bits_digest(bits);
  if (options.ent && bits.size() >= 48) {
    auto bytes = bits.to_bytes_msb();
    bytes.resize(bits.size() / 8);
    report.append(ent_report(bytes, options.thresholds));
  }
  if (options.nist && bits.size() >= 100) {
    for (TestRecord& r : monobit_and_runs(bits, options.thresholds.alpha)) {
      report.records.push_back(std::move(r));
    }
  }
  if (options.autocorrelation && options.max_lag > 0 && bits.size() >= 100 * options.max_lag) {
    report.records.push_back(autocorrelation_record(
        autocorrelation(bits, options.max_lag), options.thresholds.max_autocorr_excursion_fraction));
  }
  return report;
}

ExportFormat parse_export_format(std::string_view text) {
  if (text == "raw-binary") {
    return ExportFormat::raw_binary;
  }
  if (text == "ascii-01") {
    return ExportFormat::ascii_01;
  }
  throw std::invalid_argument("unknown export format '" + std::string(text) +
                              "' (expected raw-binary or ascii-01)");
}

std::uint64_t export_for_external(const BitVector& bits, ExportFormat format,
                                  const std::filesystem::path& path) {
  if (format == ExportFormat::raw_binary) {
    const auto bytes = bits.to_bytes_msb();
    io::write_file(path, bytes);
    return bytes.size();
  }
  std::vector<std::uint8_t> text(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    text[i] = bits.get(i) ? '1' : '0';
  }
  io::write_file(path, text);
  return text.size();
}

BitVector import_external(const std::filesystem::path& path, ExportFormat format) {
  const auto data = io::read_file(path);
  if (format == ExportFormat::raw_binary) {
    return BitVector::from_bytes_msb(data);
  }
  BitVector bits;
  bits.reserve(data.size());
  for (std::uint8_t c : data) {
    if (c == '0' || c == '1') {
      bits.push_back(c == '1');
    } else if (c != '\n' && c != '\r' && c != ' ') {
      throw std::runtime_error(path.string() + ": unexpected character in ascii-01 file");
    }
  }
  return bits;
}

}  // namespace qrng
