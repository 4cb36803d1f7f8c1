#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrng/bits.hpp"

namespace qrng {

enum class Verdict { pass, weak, fail };
const char* to_string(Verdict v);

/// Acceptance region for one test. `pass_*` bounds the pass region and the
/// wider `weak_*` bounds the weak region; anything outside is a fail.
/// `on_p_value` selects whether the record's p-value or statistic is judged.
struct Threshold {
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double pass_low = -kInf;
  double pass_high = kInf;
  double weak_low = -kInf;
  double weak_high = kInf;
  bool on_p_value = false;

  static Threshold at_least(double pass, double weak, bool on_p_value = false);
  static Threshold at_most(double pass, double weak);
  static Threshold band(double pass_low, double pass_high, double weak_low, double weak_high,
                        bool on_p_value = false);

  Verdict classify(double value) const;
  std::string describe() const;
};

struct TestRecord {
  std::string name;
  double statistic = 0.0;
  std::optional<double> p_value;
  Threshold threshold;
  Verdict verdict = Verdict::fail;

  /// Derives the verdict from (statistic or p-value, threshold).
  static TestRecord judged(std::string name, double statistic, std::optional<double> p_value,
                           const Threshold& threshold);
};

struct TestReport {
  std::vector<TestRecord> records;
  std::uint64_t bit_count = 0;
  std::string source_digest;

  bool passed() const;  // no record failed; weak is tolerated
  const TestRecord* find(std::string_view name) const;
  void append(const TestReport& other);

  std::string format_table() const;
  std::string format_records() const;
};

/// Raw ENT figures. Byte-level entries follow the classic byte mode; the
/// bit-level entries are its single-bit counterparts.
struct EntMetrics {
  std::uint64_t bytes = 0;
  double entropy_per_byte = 0.0;
  double entropy_per_bit = 0.0;
  double chi_square = 0.0;
  double chi_square_p = 0.0;
  double mean_byte = 0.0;
  double mean_bit = 0.0;
  double monte_carlo_pi = 0.0;
  std::uint64_t monte_carlo_points = 0;
  double serial_correlation = 0.0;
};

/// Requires at least 6 bytes.
EntMetrics ent_metrics(std::span<const std::uint8_t> bytes);

struct AutocorrResult {
  /// coefficients[k] is the lag-k Pearson correlation; coefficients[0] == 1.
  std::vector<double> coefficients;
  /// 2.576 / sqrt(N); each lag k is judged against 2.576 / sqrt(N - k).
  double bound_99 = 0.0;
  std::uint64_t length = 0;
  std::size_t excursions = 0;

  double bound_at(std::size_t lag) const;
};

/// Requires bits.size() >= 100 * max_lag.
AutocorrResult autocorrelation(const BitVector& bits, std::size_t max_lag);
TestRecord autocorrelation_record(const AutocorrResult& result);
/// Allows ceil(fraction * lags) excursions for a pass.
TestRecord autocorrelation_record(const AutocorrResult& result, double fraction);

/// p +/- 3 sqrt(p (1 - p) / m) with p = 1 - alpha.
std::pair<double, double> nist_proportion_interval(double significance_alpha,
                                                   std::uint64_t sample_count);

struct MonobitRuns {
  double monobit_statistic = 0.0;  // |S| / sqrt(N)
  double monobit_p = 0.0;
  double runs_statistic = 0.0;     // observed run count V
  double runs_p = 0.0;
  bool runs_applicable = false;
};

/// Frequency (monobit) and runs tests. Requires >= 100 bits.
MonobitRuns monobit_and_runs_values(const BitVector& bits);
std::vector<TestRecord> monobit_and_runs(const BitVector& bits);
std::vector<TestRecord> monobit_and_runs(const BitVector& bits, double alpha);

/// Chi-square over ten equal-width p-value cells, judged at >= 0.0001.
TestRecord p_value_uniformity(std::span<const double> p_values);

/// Thresholds used by the battery; defaults follow the reference results.
struct BatteryThresholds {
  double entropy_per_bit = 0.9999;
  double chi_square_pass_low = 0.10;
  double chi_square_pass_high = 0.90;
  double serial_correlation = 0.005;
  double monte_carlo_pi_tolerance = 0.01;
  double alpha = 0.01;
  double max_autocorr_excursion_fraction = 0.03;
};

struct BatteryOptions {
  bool ent = true;
  bool nist = true;
  bool autocorrelation = true;
  std::size_t max_lag = 100;
  BatteryThresholds thresholds;
};

TestReport ent_report(std::span<const std::uint8_t> bytes, const BatteryThresholds& thresholds = {});

/// Runs the enabled tests on one bit stream. Short streams skip the tests
/// whose minimum length they do not meet.
TestReport run_battery(const BitVector& bits, const BatteryOptions& options = {});

enum class ExportFormat { raw_binary, ascii_01 };
ExportFormat parse_export_format(std::string_view text);

/// Writes the bits for consumption by external suites and returns the byte
/// count written. raw-binary is MSB-first packed; ascii-01 is one '0'/'1'
/// character per bit.
std::uint64_t export_for_external(const BitVector& bits, ExportFormat format,
                                  const std::filesystem::path& path);
BitVector import_external(const std::filesystem::path& path, ExportFormat format);

}  // namespace qrng
