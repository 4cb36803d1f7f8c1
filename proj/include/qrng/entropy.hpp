#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrng/sim_source.hpp"

namespace qrng {

/// Empirical bin distribution and the figures derived from it.
struct BinStats {
  std::vector<std::uint64_t> counts;
  std::vector<double> probs;
  std::uint64_t total = 0;
  double h_min_per_symbol = 0.0;
  double h_min_per_bit = 0.0;
  /// Population standard deviation of probs divided by their mean.
  double cov = 0.0;

  /// Throws std::invalid_argument on an empty or all-zero histogram.
  static BinStats from_counts(std::vector<std::uint64_t> counts);
  /// Elementwise sum of two histograms over the same bins.
  BinStats merged(const BinStats& other) const;
};

BinStats bin_histogram(std::span<const std::uint32_t> indices, std::uint32_t bin_count);

double min_entropy(std::span<const double> probs);
double shannon_entropy(std::span<const double> probs);
double coefficient_of_variance(std::span<const double> probs);

/// Min-entropy per symbol with the largest bin probability replaced by its
/// one-sided binomial upper confidence bound p + z * sqrt(p (1 - p) / N).
/// z = 2.326 is the 99% one-sided normal quantile.
double conservative_min_entropy(const BinStats& stats, double z = 2.326);

/// One (T, N_b) configuration to analyse. Rows where T is not a multiple of
/// N_b are evaluated analytically rather than by simulation.
struct SweepSpec {
  std::uint64_t clock_period_ps = 0;
  std::uint32_t bin_count = 0;
  std::optional<double> reference_cov;
};

struct SweepRow {
  std::uint32_t bin_count = 0;
  double t_bin_ps = 0.0;
  double clock_period_ps = 0.0;
  double cov = 0.0;
  double h_min_per_bit = 0.0;
  bool analytic = false;
  std::uint64_t samples = 0;
  std::optional<double> reference_cov;
};

/// The seven configurations and CoV values measured on the reference
/// hardware (T = 20 ns ... 16.384 ns, N_b = 256 ... 1024).
std::vector<SweepSpec> table1_rows();

/// For each row, simulates `samples_per_row` detections with the template's
/// physics (rate, efficiency, dead time, dark rate, jitter, seed) at the
/// row's (T, N_b), then histograms them. Fractional-bin rows instead
/// integrate the jittered phase density over the 1 ps timing lattice.
std::vector<SweepRow> sweep_configurations(const SourceConfig& source_template,
                                           std::span<const SweepSpec> rows,
                                           std::uint64_t samples_per_row);

/// Bin probabilities for a period of `clock_period_ps` whole picoseconds cut
/// into `bin_count` bins of (possibly fractional) width T / N_b.
std::vector<double> analytic_bin_probabilities(std::uint64_t clock_period_ps,
                                               std::uint32_t bin_count);

std::string format_sweep_table(std::span<const SweepRow> rows);
std::string format_sweep_records(std::span<const SweepRow> rows);
std::string format_bin_stats(const BinStats& stats);

}  // namespace qrng
