#include "qrng/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "qrng/quantizer.hpp"

namespace qrng {

namespace {

void check_distribution(std::span<const double> probs) {
  if (probs.empty()) {
    throw std::invalid_argument("probability vector is empty");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("probability vector has a negative or NaN entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("probability vector is not normalized");
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

}  // namespace

BinStats BinStats::from_counts(std::vector<std::uint64_t> counts) {
  BinStats s;
  s.total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (counts.empty() || s.total == 0) {
    throw std::invalid_argument("bin_histogram: no samples");
  }
  s.counts = std::move(counts);
  s.probs.resize(s.counts.size());
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    s.probs[i] = static_cast<double>(s.counts[i]) / static_cast<double>(s.total);
  }
  const std::uint64_t max_count = *std::max_element(s.counts.begin(), s.counts.end());
  s.h_min_per_symbol = -std::log2(static_cast<double>(max_count) / static_cast<double>(s.total));
  const double symbol_bits = std::log2(static_cast<double>(s.counts.size()));
  s.h_min_per_bit = symbol_bits > 0 ? s.h_min_per_symbol / symbol_bits : 0.0;
  s.cov = coefficient_of_variance(s.probs);
  return s;
}

BinStats BinStats::merged(const BinStats& other) const {
  if (other.counts.size() != counts.size()) {
    throw std::invalid_argument("BinStats::merged: bin count mismatch");
  }
  std::vector<std::uint64_t> sum(counts);
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] += other.counts[i];
  }
  return from_counts(std::move(sum));
}

BinStats bin_histogram(std::span<const std::uint32_t> indices, std::uint32_t bin_count) {
  if (indices.empty()) {
    throw std::invalid_argument("bin_histogram: empty input");
  }
  if (bin_count == 0) {
    throw std::invalid_argument("bin_histogram: bin_count must be > 0");
  }
  std::vector<std::uint64_t> counts(bin_count, 0);
  for (std::uint32_t i : indices) {
    if (i >= bin_count) {
      throw std::out_of_range("bin_histogram: index " + std::to_string(i) + " >= bin_count");
    }
    ++counts[i];
  }
  return BinStats::from_counts(std::move(counts));
}

double min_entropy(std::span<const double> probs) {
  check_distribution(probs);
  return -std::log2(*std::max_element(probs.begin(), probs.end()));
}

double shannon_entropy(std::span<const double> probs) {
  check_distribution(probs);
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) {
      h -= p * std::log2(p);
    }
  }
  return h;
}

double coefficient_of_variance(std::span<const double> probs) {
  check_distribution(probs);
  const double n = static_cast<double>(probs.size());
  const double mean = 1.0 / n;
  double ss = 0.0;
  for (double p : probs) {
    ss += (p - mean) * (p - mean);
  }
  return std::sqrt(ss / n) / mean;
}

double conservative_min_entropy(const BinStats& stats, double z) {
  const double p = *std::max_element(stats.probs.begin(), stats.probs.end());
  const double upper =
      std::min(1.0, p + z * std::sqrt(p * (1.0 - p) / static_cast<double>(stats.total)));
  return -std::log2(upper);
}

std::vector<SweepSpec> table1_rows() {
  return {
      {20000, 256, 0.018093926}, {19968, 256, 0.009843709}, {19968, 512, 0.012292352},
      {19456, 1024, 0.022475629}, {16384, 256, 0.009436647}, {16384, 512, 0.011936302},
      {16384, 1024, 0.019921429},
  };
}

std::vector<double> analytic_bin_probabilities(std::uint64_t clock_period_ps,
                                               std::uint32_t bin_count) {
  if (clock_period_ps == 0 || bin_count == 0 || bin_count > clock_period_ps) {
    throw std::invalid_argument("analytic_bin_probabilities: need 0 < bin_count <= period");
  }
  // A stationary arrival phase is uniform on the circle, and convolving a
  // uniform circular density with any jitter kernel leaves it uniform. The
  // only remaining structure is the 1 ps timestamp lattice: each picosecond
  // cell [k, k + 1) carries mass 1/T and belongs to the bin containing k,
  // i.e. floor(k * N_b / T) against real-valued bin edges.
  std::vector<std::uint64_t> cells(bin_count, 0);
  for (std::uint64_t k = 0; k < clock_period_ps; ++k) {
    ++cells[k * bin_count / clock_period_ps];
  }
  std::vector<double> probs(bin_count);
  for (std::uint32_t i = 0; i < bin_count; ++i) {
    probs[i] = static_cast<double>(cells[i]) / static_cast<double>(clock_period_ps);
  }
  return probs;
}

std::vector<SweepRow> sweep_configurations(const SourceConfig& source_template,
                                           std::span<const SweepSpec> rows,
                                           std::uint64_t samples_per_row) {
  std::vector<SweepRow> out;
  for (const SweepSpec& spec : rows) {
    SweepRow row;
    row.bin_count = spec.bin_count;
    row.clock_period_ps = static_cast<double>(spec.clock_period_ps);
    row.t_bin_ps = row.clock_period_ps / spec.bin_count;
    row.reference_cov = spec.reference_cov;

    if (spec.clock_period_ps % spec.bin_count != 0) {
      const auto probs = analytic_bin_probabilities(spec.clock_period_ps, spec.bin_count);
      row.analytic = true;
      row.cov = coefficient_of_variance(probs);
      row.h_min_per_bit = min_entropy(probs) / std::log2(static_cast<double>(spec.bin_count));
      out.push_back(row);
      continue;
    }

    SourceConfig config = source_template;
    config.clock_period_ps = spec.clock_period_ps;
    config.bin_count = spec.bin_count;
    config.validate();
    const BinConfig bins = BinConfig::from(config);

    const double rate = expected_detection_rate_hz(config);
    if (!(rate > 0.0)) {
      throw std::invalid_argument("sweep_configurations: template yields no detections");
    }
    double duration = static_cast<double>(samples_per_row) / rate * kPicosecondsPerSecond * 1.1;
    std::vector<std::uint64_t> counts;
    std::uint64_t got = 0;
    for (;;) {
      counts.assign(spec.bin_count, 0);
      got = 0;
      DetectionSimulator sim(config, static_cast<std::uint64_t>(duration) + 1);
      std::vector<DetectionEvent> batch;
      while (got < samples_per_row) {
        batch.clear();
        if (sim.next_batch(batch, std::min<std::uint64_t>(1 << 16, samples_per_row - got)) == 0) {
          break;
        }
        for (const DetectionEvent& e : batch) {
          ++counts[bin_index(phase_extract(e.timestamp_ps, bins.clock_period_ps), bins)];
        }
        got += batch.size();
      }
      if (got == samples_per_row) {
        break;
      }
      duration *= 1.5;
    }
    const BinStats stats = BinStats::from_counts(std::move(counts));
    row.cov = stats.cov;
    row.h_min_per_bit = stats.h_min_per_bit;
    row.samples = stats.total;
    out.push_back(row);
  }
  return out;
}

std::string format_sweep_table(std::span<const SweepRow> rows) {
  std::string s = fmt("%-5s %6s %11s %9s %12s %10s %-10s %13s\n", "row", "N_b", "t_bin(ps)",
                      "T(ns)", "CoV", "Hmin/bit", "mode", "reference");
  int i = 1;
  for (const SweepRow& r : rows) {
    s += fmt("%-5d %6u %11.3f %9.3f %12.9f %10.6f %-10s %13s\n", i++, r.bin_count, r.t_bin_ps,
             r.clock_period_ps / 1000.0, r.cov, r.h_min_per_bit,
             r.analytic ? "analytic" : "simulated",
             r.reference_cov ? fmt("%.9f", *r.reference_cov).c_str() : "-");
  }
  return s;
}

std::string format_sweep_records(std::span<const SweepRow> rows) {
  std::string s;
  int i = 1;
  for (const SweepRow& r : rows) {
    s += fmt("[row.%d]\nbin_count = %u\nt_bin_ps = %.6f\nclock_period_ps = %.3f\ncov = %.12g\n"
             "h_min_per_bit = %.12g\nmode = %s\nsamples = %llu\n",
             i++, r.bin_count, r.t_bin_ps, r.clock_period_ps, r.cov, r.h_min_per_bit,
             r.analytic ? "analytic" : "simulated", static_cast<unsigned long long>(r.samples));
    if (r.reference_cov) {
      s += fmt("reference_cov = %.9f\n", *r.reference_cov);
    }
    s += "\n";
  }
  return s;
}

std::string format_bin_stats(const BinStats& stats) {
  return fmt("bins = %zu\nsamples = %llu\nh_min_per_symbol = %.6f\nh_min_per_bit = %.6f\n"
             "cov = %.9f\n",
             stats.counts.size(), static_cast<unsigned long long>(stats.total),
             stats.h_min_per_symbol, stats.h_min_per_bit, stats.cov);
}

}  // namespace qrng
