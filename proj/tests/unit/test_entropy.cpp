#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "qrng/entropy.hpp"

using namespace qrng;

TEST(MinEntropy, ClosedFormExamples) {
  const std::vector<double> p{0.5, 0.25, 0.125, 0.125};
  EXPECT_DOUBLE_EQ(min_entropy(p), 1.0);
  EXPECT_DOUBLE_EQ(shannon_entropy(p), 1.75);
  const std::vector<double> uniform(256, 1.0 / 256);
  EXPECT_DOUBLE_EQ(min_entropy(uniform), 8.0);
  EXPECT_DOUBLE_EQ(coefficient_of_variance(uniform), 0.0);
  const std::vector<double> two{0.3, 0.7};
  EXPECT_NEAR(coefficient_of_variance(two), 0.4, 1e-15);
}

TEST(MinEntropy, RejectsBadDistributions) {
  const std::vector<double> empty;
  const std::vector<double> not_normal{0.5, 0.6};
  const std::vector<double> negative{1.5, -0.5};
  EXPECT_THROW(min_entropy(empty), std::invalid_argument);
  EXPECT_THROW(min_entropy(not_normal), std::invalid_argument);
  EXPECT_THROW(coefficient_of_variance(negative), std::invalid_argument);
  const std::vector<std::uint32_t> none;
  EXPECT_THROW(bin_histogram(none, 256), std::invalid_argument);
  EXPECT_THROW(BinStats::from_counts({0, 0}), std::invalid_argument);
}

TEST(MinEntropy, PropertiesOnRandomDistributions) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(2 + rng() % 300);
    double s = 0;
    for (auto& x : p) s += (x = u(rng));
    for (auto& x : p) x /= s;
    const double h = min_entropy(p);
    EXPECT_LE(h, shannon_entropy(p) + 1e-12);
    EXPECT_LE(h, std::log2(static_cast<double>(p.size())) + 1e-12);
    auto q = p;
    std::shuffle(q.begin(), q.end(), rng);
    EXPECT_DOUBLE_EQ(min_entropy(q), h);
    EXPECT_NEAR(coefficient_of_variance(q), coefficient_of_variance(p), 1e-12);
  }
}

TEST(BinStats, HistogramDerivedFigures) {
  const std::vector<std::uint32_t> idx{0, 0, 1, 2, 3, 3, 3, 3};
  const BinStats s = bin_histogram(idx, 4);
  EXPECT_EQ(s.total, 8u);
  EXPECT_EQ(s.counts, (std::vector<std::uint64_t>{2, 1, 1, 4}));
  EXPECT_DOUBLE_EQ(s.h_min_per_symbol, 1.0);
  EXPECT_DOUBLE_EQ(s.h_min_per_bit, 0.5);
  // probs 1/4, 1/8, 1/8, 1/2: sd about 1/4 is sqrt(0.09375/4), over mean 0.25.
  EXPECT_NEAR(s.cov, std::sqrt((0.0 + 2 * 0.015625 + 0.0625) / 4) / 0.25, 1e-12);
  EXPECT_EQ(s.merged(s).counts, (std::vector<std::uint64_t>{4, 2, 2, 8}));
  const std::vector<std::uint32_t> bad{7};
  EXPECT_THROW(bin_histogram(bad, 4), std::out_of_range);
}

TEST(BinStats, MultinomialCovScale) {
  std::mt19937_64 rng(8);
  for (std::uint32_t nb : {256u, 512u, 1024u}) {
    const std::size_t n = 400000;
    std::vector<std::uint32_t> idx(n);
    for (auto& v : idx) v = static_cast<std::uint32_t>(rng() % nb);
    const BinStats s = bin_histogram(idx, nb);
    const double expected = std::sqrt((nb - 1.0) / n);
    EXPECT_GT(s.cov, expected / 3) << nb;
    EXPECT_LT(s.cov, expected * 3) << nb;
  }
}

TEST(BinStats, ConservativeEstimateIsLower) {
  const BinStats s = BinStats::from_counts({500, 300, 200});
  const double p = 0.5;
  const double want = -std::log2(p + 2.326 * std::sqrt(p * (1 - p) / 1000));
  EXPECT_NEAR(conservative_min_entropy(s), want, 1e-12);
  EXPECT_LT(conservative_min_entropy(s), s.h_min_per_symbol);
}

TEST(Sweep, AnalyticLatticeProbabilities) {
  // Oracle: integers inside [b T / N_b, (b + 1) T / N_b) counted via ceilings.
  for (auto [t, nb] : {std::pair<std::uint64_t, std::uint32_t>{20000, 256},
                       {19968, 1024}, {16384, 256}, {1000, 7}}) {
    const auto p = analytic_bin_probabilities(t, nb);
    ASSERT_EQ(p.size(), nb);
    auto ceil_div = [](std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; };
    for (std::uint32_t b = 0; b < nb; ++b) {
      const double cells = static_cast<double>(ceil_div((b + 1) * t, nb) - ceil_div(b * t, nb));
      ASSERT_DOUBLE_EQ(p[b], cells / t) << t << "/" << nb << " bin " << b;
    }
  }
  // T = 20000 over 256 bins: widths are 78 or 79 cells.
  const auto p = analytic_bin_probabilities(20000, 256);
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  EXPECT_DOUBLE_EQ(*lo, 78.0 / 20000);
  EXPECT_DOUBLE_EQ(*hi, 79.0 / 20000);
}

TEST(Sweep, RowSetAndModes) {
  const auto rows = table1_rows();
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0].clock_period_ps, 20000u);
  EXPECT_EQ(rows[6].bin_count, 1024u);
  SourceConfig tmpl;
  tmpl.jitter_sigma_ps = 20.0;
  const auto out = sweep_configurations(tmpl, rows, 20000);
  ASSERT_EQ(out.size(), 7u);
  EXPECT_TRUE(out[0].analytic);
  for (std::size_t i = 1; i < 7; ++i) {
    EXPECT_FALSE(out[i].analytic) << i;
    EXPECT_EQ(out[i].samples, 20000u) << i;
    EXPECT_TRUE(out[i].reference_cov.has_value());
  }
  EXPECT_NE(format_sweep_table(out).find("analytic"), std::string::npos);
  EXPECT_NE(format_sweep_records(out).find("[row.7]"), std::string::npos);
}
