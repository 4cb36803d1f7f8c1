#include "qrng/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qrng/digest.hpp"

namespace qrng {

namespace pt = boost::property_tree;

namespace {

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
  source.validate();
  const BinConfig b = bins();
  if (b.clock_period_ps != source.clock_period_ps) {
    throw std::invalid_argument("PipelineConfig: bin clock period disagrees with source");
  }
  if (!duration_ps && target_blocks == 0) {
    throw std::invalid_argument("PipelineConfig: target_blocks must be > 0");
  }
  if (extractor.enabled) {
    extractor_params().validate();
  }
}

ExtractorParams PipelineConfig::extractor_params() const {
  ExtractorParams p;
  p.input_bits_n = extractor.input_bits_n;
  p.epsilon_log2 = extractor.epsilon_log2;
  p.declared_h_min = extractor.declared_h_min;
  p.output_bits_m = extractor.output_bits_m.value_or(
      lhl_output_length(extractor.input_bits_n, extractor.declared_h_min, extractor.epsilon_log2));
  p.construction = extractor.construction;
  p.feedback_polynomial = extractor.polynomial;
  return p;
}

std::string PipelineConfig::to_ini() const {
  pt::ptree tree;
  tree.put("pipeline.name", name);
  tree.put("pipeline.target_blocks", target_blocks);
  if (duration_ps) {
    tree.put("pipeline.duration_ps", *duration_ps);
  }
  tree.put("pipeline.conservative_h_min", yes_no(conservative_h_min));
  tree.put("pipeline.output_dir", output_dir.string());
  tree.put("pipeline.write_raw", yes_no(write_raw));

  tree.put("source.photon_rate_hz", exact(source.photon_rate_hz));
  tree.put("source.detector_efficiency", exact(source.detector_efficiency));
  tree.put("source.dead_time_ps", source.dead_time_ps);
  tree.put("source.dark_rate_hz", exact(source.dark_rate_hz));
  tree.put("source.jitter_sigma_ps", exact(source.jitter_sigma_ps));
  tree.put("source.clock_period_ps", source.clock_period_ps);
  tree.put("source.bin_count", source.bin_count);
  tree.put("source.sim_seed", source.sim_seed);
  tree.put("source.allow_multi_detection", yes_no(source.allow_multi_detection));

  tree.put("extractor.enabled", yes_no(extractor.enabled));
  tree.put("extractor.input_bits", extractor.input_bits_n);
  tree.put("extractor.output_bits", extractor.output_bits_m.value_or(0));
  tree.put("extractor.epsilon_log2", extractor.epsilon_log2);
  tree.put("extractor.declared_h_min", exact(extractor.declared_h_min));
  tree.put("extractor.construction", to_string(extractor.construction));
  tree.put("extractor.polynomial", extractor.polynomial.id());
  tree.put("extractor.seed", extractor.seed);
  if (extractor.seed_file) {
    tree.put("extractor.seed_file", extractor.seed_file->string());
  }
  tree.put("extractor.threads", extractor.threads);

  tree.put("battery.ent", yes_no(battery.ent));
  tree.put("battery.nist", yes_no(battery.nist));
  tree.put("battery.autocorrelation", yes_no(battery.autocorrelation));
  tree.put("battery.max_lag", battery.max_lag);
  const BatteryThresholds& t = battery.thresholds;
  tree.put("battery.entropy_per_bit", exact(t.entropy_per_bit));
  tree.put("battery.chi_square_pass_low", exact(t.chi_square_pass_low));
  tree.put("battery.chi_square_pass_high", exact(t.chi_square_pass_high));
  tree.put("battery.serial_correlation", exact(t.serial_correlation));
  tree.put("battery.monte_carlo_pi_tolerance", exact(t.monte_carlo_pi_tolerance));
  tree.put("battery.alpha", exact(t.alpha));
  tree.put("battery.max_autocorr_excursion_fraction", exact(t.max_autocorr_excursion_fraction));

  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

PipelineConfig PipelineConfig::from_ini(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.message());
  }
  static const std::map<std::string, std::vector<std::string>> known = {
      {"pipeline",
       {"name", "target_blocks", "duration_ps", "conservative_h_min", "output_dir", "write_raw"}},
      {"source",
       {"photon_rate_hz", "mean_photon_number", "detector_efficiency", "dead_time_ps",
        "dark_rate_hz", "jitter_sigma_ps", "clock_period_ps", "bin_count", "sim_seed",
        "allow_multi_detection"}},
      {"extractor",
       {"enabled", "input_bits", "output_bits", "epsilon_log2", "declared_h_min", "construction",
        "polynomial", "seed", "seed_file", "threads"}},
      {"battery",
       {"ent", "nist", "autocorrelation", "max_lag", "entropy_per_bit", "chi_square_pass_low",
        "chi_square_pass_high", "serial_correlation", "monte_carlo_pi_tolerance", "alpha",
        "max_autocorr_excursion_fraction"}},
  };
  for (const auto& [section, body] : tree) {
    if (section == "provenance") {
      continue;  // run record appended by run_pipeline; not configuration
    }
    auto it = known.find(section);
    if (it == known.end()) {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw std::invalid_argument("config: unknown key " + section + "." + key);
      }
    }
  }

  PipelineConfig c;
  try {
    c.name = tree.get("pipeline.name", c.name);
    c.target_blocks = tree.get("pipeline.target_blocks", c.target_blocks);
    if (auto d = tree.get_optional<std::uint64_t>("pipeline.duration_ps")) {
      c.duration_ps = *d;
    }
    c.conservative_h_min = tree.get("pipeline.conservative_h_min", c.conservative_h_min);
    c.output_dir = tree.get("pipeline.output_dir", c.output_dir.string());
    c.write_raw = tree.get("pipeline.write_raw", c.write_raw);

    SourceConfig& s = c.source;
    s.photon_rate_hz = tree.get("source.photon_rate_hz", s.photon_rate_hz);
    s.detector_efficiency = tree.get("source.detector_efficiency", s.detector_efficiency);
    s.dead_time_ps = tree.get("source.dead_time_ps", s.dead_time_ps);
    s.dark_rate_hz = tree.get("source.dark_rate_hz", s.dark_rate_hz);
    s.jitter_sigma_ps = tree.get("source.jitter_sigma_ps", s.jitter_sigma_ps);
    s.clock_period_ps = tree.get("source.clock_period_ps", s.clock_period_ps);
    s.bin_count = tree.get("source.bin_count", s.bin_count);
    s.sim_seed = tree.get("source.sim_seed", s.sim_seed);
    s.allow_multi_detection = tree.get("source.allow_multi_detection", s.allow_multi_detection);
    if (auto mu = tree.get_optional<double>("source.mean_photon_number")) {
      s.set_mean_photon_number(*mu);
    }

    ExtractorSettings& e = c.extractor;
    e.enabled = tree.get("extractor.enabled", e.enabled);
    e.input_bits_n = tree.get("extractor.input_bits", e.input_bits_n);
    if (auto m = tree.get("extractor.output_bits", std::uint64_t{0}); m != 0) {
      e.output_bits_m = m;
    }
    e.epsilon_log2 = tree.get("extractor.epsilon_log2", e.epsilon_log2);
    e.declared_h_min = tree.get("extractor.declared_h_min", e.declared_h_min);
    e.construction = parse_construction(
        tree.get<std::string>("extractor.construction", to_string(e.construction)));
    if (auto p = tree.get_optional<std::string>("extractor.polynomial")) {
      e.polynomial = parse_polynomial(*p);
    }
    e.seed = tree.get("extractor.seed", e.seed);
    if (auto f = tree.get_optional<std::string>("extractor.seed_file")) {
      e.seed_file = *f;
    }
    e.threads = tree.get("extractor.threads", e.threads);

    BatteryOptions& b = c.battery;
    b.ent = tree.get("battery.ent", b.ent);
    b.nist = tree.get("battery.nist", b.nist);
    b.autocorrelation = tree.get("battery.autocorrelation", b.autocorrelation);
    b.max_lag = tree.get("battery.max_lag", b.max_lag);
    BatteryThresholds& t = b.thresholds;
    t.entropy_per_bit = tree.get("battery.entropy_per_bit", t.entropy_per_bit);
    t.chi_square_pass_low = tree.get("battery.chi_square_pass_low", t.chi_square_pass_low);
    t.chi_square_pass_high = tree.get("battery.chi_square_pass_high", t.chi_square_pass_high);
    t.serial_correlation = tree.get("battery.serial_correlation", t.serial_correlation);
    t.monte_carlo_pi_tolerance =
        tree.get("battery.monte_carlo_pi_tolerance", t.monte_carlo_pi_tolerance);
    t.alpha = tree.get("battery.alpha", t.alpha);
    t.max_autocorr_excursion_fraction =
        tree.get("battery.max_autocorr_excursion_fraction", t.max_autocorr_excursion_fraction);
  } catch (const pt::ptree_bad_data& e) {
    throw std::invalid_argument(std::string("config: bad value: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(path.string() + ": cannot open config");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_ini(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void PipelineConfig::save(const std::filesystem::path& path) const {
  const std::string text = to_ini();
  io::write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

PipelineConfig preset(std::string_view name, double scale) {
  if (const char* dir = std::getenv("QRNG_PRESET_DIR"); dir != nullptr && *dir != '\0') {
    const auto path = std::filesystem::path(dir) / (std::string(name) + ".ini");
    if (std::filesystem::exists(path)) {
      return PipelineConfig::load(path);
    }
  }
  if (!(scale > 0.0)) {
    throw std::invalid_argument("preset: scale must be > 0");
  }
  PipelineConfig c;
  c.name = std::string(name);
  c.target_blocks = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(reference_extraction::blocks * scale)));
  if (name == "reference") {
    // SourceConfig and ExtractorSettings defaults already carry the
    // reference hardware and extraction parameters.
    return c;
  }
  if (name == "ideal") {
    c.source.dark_rate_hz = 0.0;
    c.source.jitter_sigma_ps = 0.0;
    return c;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) +
                              "' (built-in: reference, ideal)");
}

std::uint64_t planned_duration_ps(const SourceConfig& source, std::uint64_t raw_bits_needed) {
  const BinConfig bins = BinConfig::from(source);
  const double detections =
      std::ceil(static_cast<double>(raw_bits_needed) / bins.bits_per_detection);
  const double rate = expected_detection_rate_hz(source);
  if (!(rate > 0.0)) {
    throw std::invalid_argument("source configuration produces no detections");
  }
  const double want = detections + 6.0 * std::sqrt(detections) + 16.0;
  return static_cast<std::uint64_t>(want / rate * kPicosecondsPerSecond * 1.05) + 1;
}

BitVector resolve_seed(const ExtractorSettings& settings, std::uint64_t bits) {
  if (settings.seed_file) {
    const auto bytes = io::read_file(*settings.seed_file);
    if (bytes.size() * 8 < bits) {
      throw std::invalid_argument(settings.seed_file->string() + ": seed file holds " +
                                  std::to_string(bytes.size() * 8) + " bits, need " +
                                  std::to_string(bits));
    }
    return BitVector::from_bytes_msb(bytes, bits);
  }
  return deterministic_seed(settings.seed, bits);
}

namespace {

struct Simulated {
  RawBitBlock raw;
  std::vector<std::uint64_t> counts;
  std::uint64_t dark = 0;
  std::uint64_t duration = 0;
};

Simulated simulate_and_quantize(const SourceConfig& source, std::uint64_t duration) {
  const BinConfig bins = BinConfig::from(source);
  Simulated out;
  out.duration = duration;
  out.counts.assign(bins.bin_count, 0);
  DetectionSimulator sim(source, duration);
  std::vector<DetectionEvent> batch;
  for (;;) {
    batch.clear();
    if (sim.next_batch(batch, 1 << 16) == 0) {
      break;
    }
    quantize_append(batch, bins, out.raw);
    for (const DetectionEvent& e : batch) {
      ++out.counts[bin_index(phase_extract(e.timestamp_ps, bins.clock_period_ps), bins)];
      out.dark += e.origin == EventOrigin::dark;
    }
  }
  return out;
}

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  PipelineResult result;
  const BinConfig bins = config.bins();
  const ExtractorParams base_params = config.extractor_params();

  auto t0 = std::chrono::steady_clock::now();
  Simulated sim = stage("simulate", [&] {
    if (config.duration_ps) {
      return simulate_and_quantize(config.source, *config.duration_ps);
    }
    const std::uint64_t needed = config.target_blocks * config.extractor.input_bits_n;
    std::uint64_t duration = planned_duration_ps(config.source, needed);
    for (;;) {
      Simulated s = simulate_and_quantize(config.source, duration);
      if (s.raw.bits.size() >= needed) {
        return s;
      }
      duration += duration / 2;
    }
  });
  result.simulate_seconds = seconds_since(t0);

  stage("quantize", [&] {
    if (sim.raw.source_detection_count == 0) {
      throw std::runtime_error("empty stream");
    }
    return 0;
  });
  result.detections = sim.raw.source_detection_count;
  result.dark_detections = sim.dark;
  result.duration_ps = sim.duration;
  result.raw_bits = std::move(sim.raw.bits);

  stage("entropy", [&] {
    result.raw_stats = BinStats::from_counts(std::move(sim.counts));
    result.measured_h_min_per_bit =
        config.conservative_h_min
            ? conservative_min_entropy(result.raw_stats) / bins.bits_per_detection
            : result.raw_stats.h_min_per_bit;
    return 0;
  });

  t0 = std::chrono::steady_clock::now();
  std::string seed_digest = "-";
  stage("extract", [&] {
    if (!config.extractor.enabled) {
      result.extraction.bits = result.raw_bits;
      result.extraction.extraction_ratio = 1.0;
      return 0;
    }
    ExtractorParams params = base_params;
    params.seed_bits = resolve_seed(config.extractor, params.required_seed_bits());
    seed_digest = bits_digest(params.seed_bits);
    const std::optional<std::uint64_t> max_blocks =
        config.duration_ps ? std::nullopt : std::optional(config.target_blocks);
    result.extraction = extract_stream(result.raw_bits, params, result.measured_h_min_per_bit,
                                       config.extractor.threads, max_blocks);
    return 0;
  });
  result.extract_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  result.report = stage("validate", [&] { return run_battery(result.conditioned(), config.battery); });
  result.validate_seconds = seconds_since(t0);

  stage("persist", [&] {
    const std::string raw_digest = bits_digest(result.raw_bits);
    const std::string cond_digest = result.report.source_digest;
    result.quarantined = !result.report.passed();
    const auto dir = result.quarantined ? config.output_dir / "quarantine" : config.output_dir;
    result.output_path = dir / "conditioned.qrrb";

    io::Metadata meta{{"kind", config.extractor.enabled ? "conditioned" : "raw-unconditioned"},
                      {"bits_per_detection", std::to_string(bins.bits_per_detection)}};
    if (config.extractor.enabled) {
      meta["n"] = std::to_string(base_params.input_bits_n);
      meta["m"] = std::to_string(base_params.output_bits_m);
      meta["epsilon_log2"] = std::to_string(base_params.epsilon_log2);
      meta["construction"] = to_string(base_params.construction);
      meta["polynomial"] = base_params.feedback_polynomial.id();
      meta["seed_digest"] = seed_digest;
    }
    io::write_bits(result.output_path, result.conditioned(), meta);
    if (config.write_raw) {
      io::write_bits(config.output_dir / "raw.qrrb", result.raw_bits,
                     {{"kind", "raw"},
                      {"bits_per_detection", std::to_string(bins.bits_per_detection)},
                      {"clock_period_ps", std::to_string(bins.clock_period_ps)},
                      {"bin_count", std::to_string(bins.bin_count)}});
    }
    const std::string table = result.report.format_table();
    const std::string records = result.report.format_records();
    io::write_file(dir / "report.txt", {table.begin(), table.end()});
    io::write_file(dir / "report.ini", {records.begin(), records.end()});

    io::Metadata& p = result.provenance;
    p["duration_ps"] = std::to_string(result.duration_ps);
    p["detections"] = std::to_string(result.detections);
    p["dark_detections"] = std::to_string(result.dark_detections);
    p["raw_bits"] = std::to_string(result.raw_bits.size());
    p["raw_digest"] = raw_digest;
    p["raw_h_min_per_bit"] = exact(result.raw_stats.h_min_per_bit);
    p["raw_cov"] = exact(result.raw_stats.cov);
    p["measured_h_min_per_bit"] = exact(result.measured_h_min_per_bit);
    p["blocks"] = std::to_string(result.extraction.blocks);
    p["dropped_bits"] = std::to_string(result.extraction.dropped_bits);
    p["extraction_ratio"] = exact(result.extraction.extraction_ratio);
    p["conditioned_bits"] = std::to_string(result.conditioned().size());
    p["conditioned_digest"] = cond_digest;
    p["seed_digest"] = seed_digest;
    p["verdict"] = result.quarantined ? "fail" : "pass";
    p["output_path"] = result.output_path.string();

    std::string prov = config.to_ini() + "\n[provenance]\n";
    for (const auto& [k, v] : p) {
      prov += k + " = " + v + "\n";
    }
    result.provenance_path = config.output_dir / "provenance.ini";
    io::write_file(result.provenance_path, {prov.begin(), prov.end()});
    return 0;
  });
  return result;
}

}  // namespace qrng
