#include "qrng/sim_source.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qrng {

namespace {

constexpr double kJitterTruncation = 8.0;

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw std::invalid_argument("SourceConfig: " + what);
  }
}

bool is_rate(double r) { return std::isfinite(r) && r >= 0.0; }

}  // namespace

void SourceConfig::validate() const {
  require(is_rate(photon_rate_hz), "photon_rate_hz must be finite and >= 0");
  require(is_rate(dark_rate_hz), "dark_rate_hz must be finite and >= 0");
  require(photon_rate_hz <= kPicosecondsPerSecond && dark_rate_hz <= kPicosecondsPerSecond,
          "rates above 1e12 Hz fall below the 1 ps timing resolution");
  require(std::isfinite(detector_efficiency) && detector_efficiency >= 0.0 &&
              detector_efficiency <= 1.0,
          "detector_efficiency must lie in [0, 1]");
  require(std::isfinite(jitter_sigma_ps) && jitter_sigma_ps >= 0.0,
          "jitter_sigma_ps must be finite and >= 0");
  require(clock_period_ps > 0, "clock_period_ps must be > 0");
  require(bin_count >= 2 && std::has_single_bit(bin_count), "bin_count must be a power of two >= 2");
  require(clock_period_ps % bin_count == 0,
          "clock_period_ps must be an exact multiple of bin_count");
  require(allow_multi_detection || dead_time_ps >= clock_period_ps,
          "dead_time_ps < clock_period_ps allows two detections per period "
          "(set allow_multi_detection to study this)");
}

double SourceConfig::mean_photon_number() const {
  return detector_efficiency * photon_rate_hz * static_cast<double>(clock_period_ps) /
         kPicosecondsPerSecond;
}

SourceConfig& SourceConfig::set_mean_photon_number(double mu) {
  if (!(detector_efficiency > 0.0) || !(mu >= 0.0)) {
    throw std::invalid_argument("set_mean_photon_number: needs efficiency > 0 and mu >= 0");
  }
  photon_rate_hz =
      mu * kPicosecondsPerSecond / (detector_efficiency * static_cast<double>(clock_period_ps));
  return *this;
}

double expected_detection_rate_hz(const SourceConfig& config) {
  const double r = config.detector_efficiency * config.photon_rate_hz + config.dark_rate_hz;
  return r / (1.0 + r * static_cast<double>(config.dead_time_ps) / kPicosecondsPerSecond);
}

std::uint64_t interarrival_from_uniform(double rate_hz, double u) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw std::invalid_argument("sample_interarrival: rate must be > 0");
  }
  const double mean_ps = kPicosecondsPerSecond / rate_hz;
  if (mean_ps < 1.0) {
    throw std::invalid_argument("sample_interarrival: mean interval below 1 ps resolution");
  }
  if (!(u > 0.0 && u <= 1.0)) {
    throw std::invalid_argument("sample_interarrival: uniform draw must lie in (0, 1]");
  }
  const double delta = std::round(-std::log(u) * mean_ps);
  return delta < 1.0 ? 1 : static_cast<std::uint64_t>(delta);
}

std::uint64_t sample_interarrival(double rate_hz, SimRandom& rng) {
  return interarrival_from_uniform(rate_hz, rng.uniform_open_low());
}

std::vector<std::uint64_t> generate_photon_arrivals(const SourceConfig& config,
                                                    std::uint64_t duration_ps) {
  std::vector<std::uint64_t> out;
  if (config.photon_rate_hz <= 0.0) {
    return out;
  }
  SimRandom rng(config.sim_seed, stream::photons);
  out.reserve(static_cast<std::size_t>(
      std::min(1e8, config.photon_rate_hz * static_cast<double>(duration_ps) /
                        kPicosecondsPerSecond * 1.05)));
  std::uint64_t t = 0;
  for (;;) {
    t += sample_interarrival(config.photon_rate_hz, rng);
    if (t >= duration_ps) {
      break;
    }
    out.push_back(t);
  }
  return out;
}

std::int64_t jitter_offset_ps(double sigma_ps, SimRandom& rng) {
  const double z = std::clamp(rng.normal(), -kJitterTruncation, kJitterTruncation);
  return std::llround(sigma_ps * z);
}

ArrivalStream apply_detector(std::span<const std::uint64_t> arrivals, const SourceConfig& config,
                             std::optional<std::uint64_t> duration_ps) {
  if (!std::is_sorted(arrivals.begin(), arrivals.end())) {
    throw std::invalid_argument("apply_detector: arrivals must be sorted ascending");
  }
  const std::uint64_t duration =
      duration_ps.value_or(arrivals.empty() ? 0 : arrivals.back() + 1);

  // (1) efficiency thinning
  std::vector<std::uint64_t> kept;
  kept.reserve(static_cast<std::size_t>(static_cast<double>(arrivals.size()) *
                                        config.detector_efficiency) + 16);
  {
    SimRandom rng(config.sim_seed, stream::thinning);
    for (std::uint64_t t : arrivals) {
      if (rng.uniform() < config.detector_efficiency) {
        kept.push_back(t);
      }
    }
  }

  // (2) dark counts, merged with photons first on equal timestamps
  std::vector<std::uint64_t> dark;
  if (config.dark_rate_hz > 0.0) {
    SimRandom rng(config.sim_seed, stream::dark);
    std::uint64_t t = 0;
    for (;;) {
      t += sample_interarrival(config.dark_rate_hz, rng);
      if (t >= duration) {
        break;
      }
      dark.push_back(t);
    }
  }

  struct Tagged {
    std::int64_t timestamp;
    std::uint64_t sequence;
    EventOrigin origin;
  };
  std::vector<Tagged> merged;
  merged.reserve(kept.size() + dark.size());
  {
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < kept.size() || j < dark.size()) {
      const bool take_photon = j == dark.size() || (i < kept.size() && kept[i] <= dark[j]);
      const std::uint64_t t = take_photon ? kept[i++] : dark[j++];
      merged.push_back({static_cast<std::int64_t>(t), merged.size(),
                        take_photon ? EventOrigin::photon : EventOrigin::dark});
    }
  }

  // (3) jitter, then re-sort on the measured time
  if (config.jitter_sigma_ps > 0.0) {
    SimRandom rng(config.sim_seed, stream::jitter);
    for (Tagged& e : merged) {
      e.timestamp += jitter_offset_ps(config.jitter_sigma_ps, rng);
    }
    std::sort(merged.begin(), merged.end(), [](const Tagged& a, const Tagged& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.sequence < b.sequence;
    });
  }

  // (4) non-paralyzable dead time
  ArrivalStream out{config, {}, duration};
  const std::uint64_t min_gap = std::max<std::uint64_t>(config.dead_time_ps, 1);
  std::optional<std::uint64_t> last;
  for (const Tagged& e : merged) {
    if (e.timestamp < 0 || static_cast<std::uint64_t>(e.timestamp) >= duration) {
      continue;
    }
    const auto t = static_cast<std::uint64_t>(e.timestamp);
    if (last && t - *last < min_gap) {
      continue;
    }
    last = t;
    out.events.push_back({t, e.origin});
  }
  return out;
}

double arrival_density_gamma(unsigned n, double rate, double t) {
  if (n == 0) {
    throw std::invalid_argument("arrival_density_gamma: n must be >= 1");
  }
  if (!(rate > 0.0) || !(t >= 0.0)) {
    throw std::invalid_argument("arrival_density_gamma: needs rate > 0 and t >= 0");
  }
  if (t == 0.0) {
    return n == 1 ? rate : 0.0;
  }
  const double log_density = n * std::log(rate) + (n - 1.0) * std::log(t) - rate * t -
                             std::lgamma(static_cast<double>(n));
  return std::exp(log_density);
}

double period_count_pmf(unsigned n, double mean) {
  if (!(mean >= 0.0)) {
    throw std::invalid_argument("period_count_pmf: mean must be >= 0");
  }
  if (mean == 0.0) {
    return n == 0 ? 1.0 : 0.0;
  }
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

DetectionSimulator::DetectionSimulator(const SourceConfig& config, std::uint64_t duration_ps)
    : config_(config),
      duration_ps_(duration_ps),
      photon_rng_(config.sim_seed, stream::photons),
      thinning_rng_(config.sim_seed, stream::thinning),
      dark_rng_(config.sim_seed, stream::dark),
      jitter_rng_(config.sim_seed, stream::jitter) {
  if (config_.jitter_sigma_ps > 0.0) {
    jitter_reach_ =
        static_cast<std::int64_t>(std::ceil(kJitterTruncation * config_.jitter_sigma_ps)) + 1;
  }
  advance_photon();
  advance_dark();
}

void DetectionSimulator::advance_photon() {
  next_photon_.reset();
  if (config_.photon_rate_hz <= 0.0 || config_.detector_efficiency <= 0.0) {
    return;
  }
  while (photon_clock_ < duration_ps_) {
    photon_clock_ += sample_interarrival(config_.photon_rate_hz, photon_rng_);
    if (photon_clock_ >= duration_ps_) {
      break;
    }
    if (thinning_rng_.uniform() < config_.detector_efficiency) {
      next_photon_ = photon_clock_;
      return;
    }
  }
}

void DetectionSimulator::advance_dark() {
  next_dark_.reset();
  if (config_.dark_rate_hz <= 0.0 || dark_clock_ >= duration_ps_) {
    return;
  }
  dark_clock_ += sample_interarrival(config_.dark_rate_hz, dark_rng_);
  if (dark_clock_ < duration_ps_) {
    next_dark_ = dark_clock_;
  }
}

std::optional<DetectionSimulator::Pending> DetectionSimulator::pull_jittered() {
  for (;;) {
    const bool have_raw = next_photon_ || next_dark_;
    if (!pending_.empty()) {
      if (!have_raw) {
        Pending p = pending_.top();
        pending_.pop();
        return p;
      }
      const std::uint64_t next_raw = std::min(next_photon_.value_or(UINT64_MAX),
                                              next_dark_.value_or(UINT64_MAX));
      if (pending_.top().timestamp <= static_cast<std::int64_t>(next_raw) - jitter_reach_) {
        Pending p = pending_.top();
        pending_.pop();
        return p;
      }
    } else if (!have_raw) {
      return std::nullopt;
    }

    const bool take_photon =
        !next_dark_ || (next_photon_ && *next_photon_ <= *next_dark_);
    Pending raw{0, sequence_++, take_photon ? EventOrigin::photon : EventOrigin::dark};
    if (take_photon) {
      raw.timestamp = static_cast<std::int64_t>(*next_photon_);
      advance_photon();
    } else {
      raw.timestamp = static_cast<std::int64_t>(*next_dark_);
      advance_dark();
    }
    if (jitter_reach_ == 0) {
      return raw;
    }
    raw.timestamp += jitter_offset_ps(config_.jitter_sigma_ps, jitter_rng_);
    pending_.push(raw);
  }
}

bool DetectionSimulator::gate(const Pending& event) {
  if (event.timestamp < 0 || static_cast<std::uint64_t>(event.timestamp) >= duration_ps_) {
    return false;
  }
  const auto t = static_cast<std::uint64_t>(event.timestamp);
  const std::uint64_t min_gap = std::max<std::uint64_t>(config_.dead_time_ps, 1);
  if (last_accepted_ && t - *last_accepted_ < min_gap) {
    return false;
  }
  last_accepted_ = t;
  return true;
}

std::size_t DetectionSimulator::next_batch(std::vector<DetectionEvent>& out,
                                           std::size_t max_events) {
  std::size_t produced = 0;
  while (produced < max_events) {
    auto event = pull_jittered();
    if (!event) {
      break;
    }
    if (gate(*event)) {
      out.push_back({static_cast<std::uint64_t>(event->timestamp), event->origin});
      ++produced;
    }
  }
  return produced;
}

ArrivalStream simulate(const SourceConfig& config, std::uint64_t duration_ps) {
  config.validate();
  DetectionSimulator sim(config, duration_ps);
  ArrivalStream out{config, {}, duration_ps};
  while (sim.next_batch(out.events, 1 << 16) > 0) {
  }
  return out;
}

}  // namespace qrng
