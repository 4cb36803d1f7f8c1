#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "qrng/random.hpp"

namespace qrng {

inline constexpr double kPicosecondsPerSecond = 1e12;

/// Physical-model parameters of the simulated source and detector.
/// Defaults are the reference hardware: 38% efficiency, 24 ns dead time,
/// 64 cps dark counts, 16.384 ns reference clock split into 256 bins, and a
/// photon rate chosen so that efficiency * rate * period = 0.7.
struct SourceConfig {
  double photon_rate_hz = 0.7 / (0.38 * 16384e-12);
  double detector_efficiency = 0.38;
  std::uint64_t dead_time_ps = 24000;
  double dark_rate_hz = 64.0;
  double jitter_sigma_ps = 0.0;
  std::uint64_t clock_period_ps = 16384;
  std::uint32_t bin_count = 256;
  std::uint64_t sim_seed = 0x5eed2022;
  /// Permits dead_time_ps < clock_period_ps (multi-detection bias studies).
  bool allow_multi_detection = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Mean detected photons per reference period, eta * lambda * T.
  double mean_photon_number() const;
  /// Rescales photon_rate_hz so that eta * lambda * T equals `mu`.
  SourceConfig& set_mean_photon_number(double mu);

  friend bool operator==(const SourceConfig&, const SourceConfig&) = default;
};

/// Detection rate after thinning, dark-count merge and non-paralyzable dead
/// time: r / (1 + r * T_d) with r = eta * lambda + dark.
double expected_detection_rate_hz(const SourceConfig& config);

enum class EventOrigin : std::uint8_t { photon = 0, dark = 1 };

struct DetectionEvent {
  std::uint64_t timestamp_ps = 0;
  EventOrigin origin = EventOrigin::photon;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct ArrivalStream {
  SourceConfig config;
  std::vector<DetectionEvent> events;
  std::uint64_t duration_ps = 0;
};

/// Inverse-CDF exponential interval for a uniform draw u in (0, 1], rounded to
/// the nearest picosecond with a floor of 1 ps.
std::uint64_t interarrival_from_uniform(double rate_hz, double u);
std::uint64_t sample_interarrival(double rate_hz, SimRandom& rng);

/// Homogeneous Poisson arrivals on [0, duration_ps) at config.photon_rate_hz.
std::vector<std::uint64_t> generate_photon_arrivals(const SourceConfig& config,
                                                    std::uint64_t duration_ps);

/// Runs the detector model over sorted photon arrivals. Stage order is fixed:
/// efficiency thinning, merge with dark counts, Gaussian jitter and re-sort,
/// then dead-time gating. Events jittered outside [0, duration_ps) are lost.
/// When duration_ps is omitted it defaults to one past the last arrival.
ArrivalStream apply_detector(std::span<const std::uint64_t> arrivals, const SourceConfig& config,
                             std::optional<std::uint64_t> duration_ps = std::nullopt);

/// Gamma density of the n-th arrival epoch of a rate-`rate` Poisson process.
/// `rate` and `t` must use reciprocal units (e.g. Hz and seconds).
double arrival_density_gamma(unsigned n, double rate, double t);

/// Probability of exactly n arrivals in a window with mean count `mean`.
double period_count_pmf(unsigned n, double mean);

/// Streaming form of generate_photon_arrivals + apply_detector. Produces the
/// same events, in order, without materialising the photon arrival list.
///
/// Jitter is truncated at +/-8 sigma so that an event can be released as soon
/// as no later raw arrival can overtake it.
class DetectionSimulator {
 public:
  DetectionSimulator(const SourceConfig& config, std::uint64_t duration_ps);

  /// Appends up to `max_events` gated events. Returns the number appended;
  /// zero means the stream is exhausted.
  std::size_t next_batch(std::vector<DetectionEvent>& out, std::size_t max_events);

  const SourceConfig& config() const { return config_; }
  std::uint64_t duration_ps() const { return duration_ps_; }

 private:
  struct Pending {
    std::int64_t timestamp;
    std::uint64_t sequence;
    EventOrigin origin;
    bool operator>(const Pending& o) const {
      return timestamp != o.timestamp ? timestamp > o.timestamp : sequence > o.sequence;
    }
  };

  void advance_photon();
  void advance_dark();
  std::optional<Pending> pull_jittered();
  bool gate(const Pending& event);

  SourceConfig config_;
  std::uint64_t duration_ps_;
  SimRandom photon_rng_;
  SimRandom thinning_rng_;
  SimRandom dark_rng_;
  SimRandom jitter_rng_;

  std::uint64_t photon_clock_ = 0;
  std::uint64_t dark_clock_ = 0;
  std::optional<std::uint64_t> next_photon_;
  std::optional<std::uint64_t> next_dark_;
  std::uint64_t sequence_ = 0;
  std::int64_t jitter_reach_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending_;
  std::optional<std::uint64_t> last_accepted_;
};

/// Convenience: full simulated detector output over [0, duration_ps).
ArrivalStream simulate(const SourceConfig& config, std::uint64_t duration_ps);

/// Shared by the batch and streaming paths so both draw identically.
std::int64_t jitter_offset_ps(double sigma_ps, SimRandom& rng);

}  // namespace qrng
