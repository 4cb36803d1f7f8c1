#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qrng/sim_source.hpp"

using namespace qrng;

namespace {

// Erlang CDF written out term by term: P(S_n <= t) = 1 - sum_{i<n} e^{-x} x^i / i!.
double erlang_cdf(unsigned n, double rate, double t) {
  const double x = rate * t;
  double term = std::exp(-x);
  double sum = 0.0;
  for (unsigned i = 0; i < n; ++i) {
    sum += term;
    term *= x / (i + 1);
  }
  return 1.0 - sum;
}

double poisson_pmf_oracle(unsigned n, double mean) {
  double v = std::exp(-mean);
  for (unsigned i = 1; i <= n; ++i) {
    v *= mean / i;
  }
  return v;
}

SourceConfig ideal(double mean_photons = 0.7) {
  SourceConfig c;
  c.dark_rate_hz = 0.0;
  c.jitter_sigma_ps = 0.0;
  c.set_mean_photon_number(mean_photons);
  return c;
}

}  // namespace

TEST(Interarrival, InverseCdfExamples) {
  // -ln(1/e) * 1 ps = 1 ps.
  EXPECT_EQ(interarrival_from_uniform(1e12, std::exp(-1.0)), 1u);
  // u = 1 is a zero-length draw, floored to one tick.
  EXPECT_EQ(interarrival_from_uniform(1e12, 1.0), 1u);
  // At 42.7 MHz, -ln(1/e) scales the mean 23419.2 ps.
  EXPECT_EQ(interarrival_from_uniform(42.7e6, std::exp(-1.0)), 23419u);
  EXPECT_EQ(interarrival_from_uniform(42.7e6, std::exp(-2.0)), 46838u);
}

TEST(Interarrival, RejectsBadInput) {
  EXPECT_THROW(interarrival_from_uniform(0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(interarrival_from_uniform(2e12, 0.5), std::invalid_argument);
  EXPECT_THROW(interarrival_from_uniform(1e9, 0.0), std::invalid_argument);
  EXPECT_THROW(interarrival_from_uniform(1e9, 1.5), std::invalid_argument);
}

TEST(Interarrival, SampleMeanMatchesRate) {
  SimRandom rng(99, 1);
  const double rate = 42.7e6;
  const int n = 400000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += static_cast<double>(sample_interarrival(rate, rng));
  }
  EXPECT_NEAR(sum / n, 1e12 / rate, 0.01 * 1e12 / rate);
}

TEST(PhotonArrivals, NthArrivalEpochFollowsErlang) {
  SourceConfig c;
  c.photon_rate_hz = 1e9;  // 1000 ps mean spacing
  const auto arrivals = generate_photon_arrivals(c, 300'000'000);
  ASSERT_GT(arrivals.size(), 250'000u);
  const double rate_per_ps = 1e-3;
  for (unsigned n : {1u, 2u, 5u}) {
    // Non-overlapping windows of n gaps give independent S_n samples.
    std::vector<double> s;
    std::uint64_t prev = 0;
    for (std::size_t k = n - 1; k < arrivals.size(); k += n) {
      s.push_back(static_cast<double>(arrivals[k] - prev));
      prev = arrivals[k];
    }
    std::sort(s.begin(), s.end());
    double d = 0.0;
    const double m = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double f = erlang_cdf(n, rate_per_ps, s[i]);
      d = std::max({d, std::abs(f - i / m), std::abs((i + 1) / m - f)});
    }
    EXPECT_LT(d, 0.01) << "n = " << n << " samples " << s.size();
    EXPECT_LT(d, 1.63 / std::sqrt(m)) << "n = " << n;
  }
}

TEST(PhotonArrivals, GammaDensityValues) {
  EXPECT_NEAR(arrival_density_gamma(2, 1.0, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(arrival_density_gamma(1, 3.0, 0.0), 3.0, 1e-15);
  EXPECT_EQ(arrival_density_gamma(4, 3.0, 0.0), 0.0);
  EXPECT_THROW(arrival_density_gamma(0, 1.0, 1.0), std::invalid_argument);
  // Simpson integration: the density integrates to 1 and its CDF matches the
  // closed-form Erlang expression.
  for (unsigned n : {1u, 2u, 5u, 12u}) {
    const double rate = 2.5;
    const double upper = (n + 40.0 * std::sqrt(n) + 40.0) / rate;
    const int steps = 200000;
    const double h = upper / steps;
    double total = 0.0;
    double partial = 0.0;
    const double mid = n / rate;
    for (int i = 0; i <= steps; ++i) {
      const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      total += w * arrival_density_gamma(n, rate, i * h);
    }
    total *= h / 3.0;
    const int msteps = 100000;
    const double mh = mid / msteps;
    for (int i = 0; i <= msteps; ++i) {
      const double w = (i == 0 || i == msteps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      partial += w * arrival_density_gamma(n, rate, i * mh);
    }
    partial *= mh / 3.0;
    EXPECT_NEAR(total, 1.0, 1e-9) << n;
    EXPECT_NEAR(partial, erlang_cdf(n, rate, mid), 1e-9) << n;
  }
}

TEST(PhotonArrivals, PeriodCountsArePoisson) {
  SourceConfig c;
  c.clock_period_ps = 16384;
  c.photon_rate_hz = 0.7 / (16384e-12);
  const std::uint64_t periods = 400'000;
  const auto arrivals = generate_photon_arrivals(c, periods * c.clock_period_ps);
  std::vector<std::uint64_t> per(periods, 0);
  for (std::uint64_t t : arrivals) {
    ++per[t / c.clock_period_ps];
  }
  std::vector<double> freq(8, 0.0);
  for (auto k : per) {
    ++freq[std::min<std::uint64_t>(k, 7)];
  }
  const double mean = 0.7;
  double chi = 0.0;
  for (unsigned n = 0; n < 5; ++n) {
    const double p = poisson_pmf_oracle(n, mean);
    EXPECT_NEAR(period_count_pmf(n, mean), p, 1e-15);
    const double observed = freq[n] / periods;
    const double sigma = std::sqrt(p * (1 - p) / periods);
    if (n < 3) {
      EXPECT_NEAR(observed, p, 3 * sigma) << "n = " << n;
    }
    chi += std::pow(freq[n] - p * periods, 2) / (p * periods);
  }
  double tail = 1.0;
  for (unsigned n = 0; n < 5; ++n) tail -= poisson_pmf_oracle(n, mean);
  double observed_tail = 0;
  for (unsigned n = 5; n < 8; ++n) observed_tail += freq[n];
  chi += std::pow(observed_tail - tail * periods, 2) / (tail * periods);
  // 5 degrees of freedom; 20.52 is the 0.999 quantile.
  EXPECT_LT(chi, 20.52);
}

TEST(Detector, EmptyAndIdentityCases) {
  SourceConfig c = ideal();
  c.dead_time_ps = 0;
  c.allow_multi_detection = true;
  c.detector_efficiency = 1.0;
  const std::vector<std::uint64_t> none;
  EXPECT_TRUE(apply_detector(none, c, 1000).events.empty());

  // Perfect detector, no dead time, no noise: output equals input.
  const std::vector<std::uint64_t> in{3, 10, 11, 500, 90000};
  const auto out = apply_detector(in, c, 100000);
  ASSERT_EQ(out.events.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out.events[i].timestamp_ps, in[i]);
    EXPECT_EQ(out.events[i].origin, EventOrigin::photon);
  }

  c.detector_efficiency = 0.0;
  EXPECT_TRUE(apply_detector(in, c, 100000).events.empty());

  const std::vector<std::uint64_t> unsorted{5, 3};
  EXPECT_THROW(apply_detector(unsorted, c), std::invalid_argument);
}

TEST(Detector, DeadTimeIsNonParalyzable) {
  SourceConfig c = ideal();
  c.detector_efficiency = 1.0;
  c.dead_time_ps = 100;
  c.allow_multi_detection = true;
  // 0 accepted; 50 and 99 blocked; 100 accepted (gap measured from 0, not
  // extended by the blocked clicks); 150 blocked; 260 accepted.
  const std::vector<std::uint64_t> in{0, 50, 99, 100, 150, 260};
  const auto out = apply_detector(in, c, 1000);
  std::vector<std::uint64_t> ts;
  for (const auto& e : out.events) ts.push_back(e.timestamp_ps);
  EXPECT_EQ(ts, (std::vector<std::uint64_t>{0, 100, 260}));
}

TEST(Detector, GapsAndOnePerPeriodUnderNoise) {
  SourceConfig c;  // reference hardware, dead time > period
  c.jitter_sigma_ps = 40.0;
  c.dark_rate_hz = 2e6;
  const auto s = simulate(c, 3'000'000'000);
  ASSERT_GT(s.events.size(), 50'000u);
  std::size_t dark = 0;
  for (std::size_t i = 1; i < s.events.size(); ++i) {
    const auto a = s.events[i - 1].timestamp_ps;
    const auto b = s.events[i].timestamp_ps;
    ASSERT_GE(b - a, c.dead_time_ps);
    ASSERT_GT(b / c.clock_period_ps, a / c.clock_period_ps);
  }
  for (const auto& e : s.events) dark += e.origin == EventOrigin::dark;
  EXPECT_GT(dark, 0u);
  // Detection rate r / (1 + r T_d) within 1%.
  const double expected = expected_detection_rate_hz(c) * 3e-3;
  EXPECT_NEAR(static_cast<double>(s.events.size()), expected, 0.01 * expected);
}

TEST(Detector, StreamingMatchesBatch) {
  for (double sigma : {0.0, 3.0, 250.0}) {
    SourceConfig c;
    c.jitter_sigma_ps = sigma;
    c.dark_rate_hz = 5e6;
    c.sim_seed = 1234 + static_cast<std::uint64_t>(sigma);
    const std::uint64_t duration = 300'000'000;
    const auto batch = apply_detector(generate_photon_arrivals(c, duration), c, duration);
    const auto streamed = simulate(c, duration);
    ASSERT_GT(batch.events.size(), 1000u);
    EXPECT_EQ(batch.events, streamed.events) << "sigma " << sigma;
  }
}

TEST(Detector, DeterministicAndSeedSensitive) {
  SourceConfig c;
  c.jitter_sigma_ps = 20.0;
  const auto a = simulate(c, 100'000'000);
  const auto b = simulate(c, 100'000'000);
  EXPECT_EQ(a.events, b.events);
  c.sim_seed += 1;
  EXPECT_NE(simulate(c, 100'000'000).events, a.events);
}

TEST(SourceConfig, ValidationAndMeanPhotonNumber) {
  SourceConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_NEAR(c.mean_photon_number(), 0.7, 1e-12);
  c.set_mean_photon_number(0.25);
  EXPECT_NEAR(c.detector_efficiency * c.photon_rate_hz * 16384e-12, 0.25, 1e-12);

  SourceConfig bad = c;
  bad.dead_time_ps = 1000;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.allow_multi_detection = true;
  EXPECT_NO_THROW(bad.validate());
  bad = c;
  bad.bin_count = 100;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.detector_efficiency = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.jitter_sigma_ps = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Detector, JitterOffsetIsTruncated) {
  SimRandom rng(5, 4);
  std::int64_t worst = 0;
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto o = jitter_offset_ps(100.0, rng);
    worst = std::max<std::int64_t>(worst, std::abs(o));
    sum += o;
    sum2 += static_cast<double>(o) * o;
  }
  EXPECT_LE(worst, 800);
  EXPECT_NEAR(sum / n, 0.0, 1.0);
  EXPECT_NEAR(std::sqrt(sum2 / n), 100.0, 1.0);
}
