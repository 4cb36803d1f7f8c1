#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qrng/entropy.hpp"
#include "qrng/extractor.hpp"
#include "qrng/io.hpp"
#include "qrng/quantizer.hpp"
#include "qrng/sim_source.hpp"
#include "qrng/stats.hpp"

namespace qrng {

/// Raised by run_pipeline; what() is "<stage>: <cause>".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ExtractorSettings {
  bool enabled = true;
  std::uint64_t input_bits_n = reference_extraction::input_bits;
  /// Unset: largest length the leftover hash lemma allows for declared_h_min.
  std::optional<std::uint64_t> output_bits_m;
  unsigned epsilon_log2 = reference_extraction::epsilon_log2;
  double declared_h_min = reference_extraction::worst_case_h_min;
  ToeplitzConstruction construction = ToeplitzConstruction::lfsr;
  FeedbackPolynomial polynomial = default_polynomial(32);
  std::uint64_t seed = 0x7e0911;
  /// Seed bits are read from here (MSB-first raw bytes) when set.
  std::optional<std::filesystem::path> seed_file;
  unsigned threads = 1;
};

struct PipelineConfig {
  std::string name = "custom";
  SourceConfig source;
  ExtractorSettings extractor;
  BatteryOptions battery;
  /// Number of n-bit blocks to extract. Ignored when duration_ps is set.
  std::uint64_t target_blocks = 97;
  /// Fixed simulated time; when unset it is derived from target_blocks.
  std::optional<std::uint64_t> duration_ps;
  /// Size the min-entropy check with the upper-confidence estimator.
  bool conservative_h_min = false;
  std::filesystem::path output_dir = "qrng-out";
  bool write_raw = true;

  BinConfig bins() const { return BinConfig::from(source); }
  /// Cross-field validation; throws std::invalid_argument.
  void validate() const;
  ExtractorParams extractor_params() const;

  std::string to_ini() const;
  static PipelineConfig from_ini(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Built-in presets: "reference" (reference hardware parameters, `scale` of
/// the 9712-block volume) and "ideal" (no dark counts, no jitter). When the
/// QRNG_PRESET_DIR environment variable names a directory containing
/// "<name>.ini", that file takes precedence.
PipelineConfig preset(std::string_view name, double scale = 0.01);

/// Volume-derived simulation time: enough for `blocks` blocks, with margin.
std::uint64_t planned_duration_ps(const SourceConfig& source, std::uint64_t raw_bits_needed);

struct PipelineResult {
  BitVector raw_bits;
  std::uint64_t detections = 0;
  std::uint64_t dark_detections = 0;
  std::uint64_t duration_ps = 0;
  BinStats raw_stats;
  double measured_h_min_per_bit = 0.0;
  ExtractionResult extraction;
  TestReport report;
  bool quarantined = false;
  std::filesystem::path output_path;
  std::filesystem::path provenance_path;
  io::Metadata provenance;
  double simulate_seconds = 0.0;
  double extract_seconds = 0.0;
  double validate_seconds = 0.0;

  const BitVector& conditioned() const { return extraction.bits; }
};

/// simulate -> quantize -> entropy estimate -> extract -> validate. The
/// conditioned bits go to <output_dir>/conditioned.qrrb when the battery
/// passes, otherwise to <output_dir>/quarantine/conditioned.qrrb.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Loads the seed for `config`, from file or the deterministic generator.
BitVector resolve_seed(const ExtractorSettings& settings, std::uint64_t bits);

}  // namespace qrng
