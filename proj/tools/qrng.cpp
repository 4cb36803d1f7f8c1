#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "qrng/digest.hpp"
#include "qrng/entropy.hpp"
#include "qrng/extractor.hpp"
#include "qrng/io.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/quantizer.hpp"
#include "qrng/sim_source.hpp"
#include "qrng/stats.hpp"

namespace {

using namespace qrng;

struct SourceFlags {
  SourceConfig config;
  std::optional<double> mean_photon_number;
  CLI::Option* rate = nullptr;

  void attach(CLI::App& app) {
    rate = app.add_option("--photon-rate-hz", config.photon_rate_hz,
                          "Photon arrival rate before the detector")
               ->capture_default_str();
    app.add_option("--mean-photon-number", mean_photon_number,
                   "Detected photons per clock period (sets the rate)")
        ->excludes(rate);
    app.add_option("--efficiency", config.detector_efficiency, "Detector efficiency")
        ->capture_default_str();
    app.add_option("--dead-time-ps", config.dead_time_ps)->capture_default_str();
    app.add_option("--dark-rate-hz", config.dark_rate_hz)->capture_default_str();
    app.add_option("--jitter-sigma-ps", config.jitter_sigma_ps)->capture_default_str();
    app.add_option("--clock-period-ps", config.clock_period_ps)->capture_default_str();
    app.add_option("--bin-count", config.bin_count)->capture_default_str();
    app.add_option("--sim-seed", config.sim_seed, "Simulation seed")->capture_default_str();
    app.add_flag("--allow-multi-detection", config.allow_multi_detection,
                 "Permit dead time shorter than the clock period");
  }

  SourceConfig resolve() const {
    SourceConfig c = config;
    if (mean_photon_number) {
      c.set_mean_photon_number(*mean_photon_number);
    }
    c.validate();
    return c;
  }
};

struct BatteryFlags {
  BatteryOptions options;
  bool no_ent = false;
  bool no_nist = false;
  bool no_autocorr = false;

  void attach(CLI::App& app) {
    app.add_flag("--no-ent", no_ent, "Skip the ENT-style tests");
    app.add_flag("--no-nist", no_nist, "Skip monobit and runs");
    app.add_flag("--no-autocorrelation", no_autocorr, "Skip the autocorrelation scan");
    app.add_option("--max-lag", options.max_lag)->capture_default_str();
    app.add_option("--alpha", options.thresholds.alpha)->capture_default_str();
  }

  BatteryOptions resolve() const {
    BatteryOptions o = options;
    o.ent = !no_ent;
    o.nist = !no_nist;
    o.autocorrelation = !no_autocorr;
    return o;
  }
};

void print_report(const TestReport& report, const std::string& format) {
  std::cout << (format == "records" ? report.format_records() : report.format_table());
}

int cmd_simulate(const SourceFlags& flags, std::optional<std::uint64_t> duration,
                 std::optional<std::uint64_t> detections, const std::string& out) {
  const SourceConfig cfg = flags.resolve();
  std::uint64_t d = 0;
  if (duration) {
    d = *duration;
  } else {
    const auto bins = BinConfig::from(cfg);
    d = planned_duration_ps(cfg, *detections * bins.bits_per_detection);
  }
  ArrivalStream stream = simulate(cfg, d);
  if (detections && stream.events.size() > *detections) {
    stream.events.resize(*detections);
  }
  io::write_timestamps(out, stream);
  std::size_t dark = 0;
  for (const auto& e : stream.events) {
    dark += e.origin == EventOrigin::dark;
  }
  std::cout << "duration_ps = " << d << "\n"
            << "detections = " << stream.events.size() << "\n"
            << "dark_detections = " << dark << "\n"
            << "output = " << out << "\n";
  return 0;
}

int cmd_quantize(const std::string& in, const std::string& out) {
  const io::TimestampFile ts = io::read_timestamps(in);
  const BinConfig bins = BinConfig::make(ts.clock_period_ps, static_cast<std::uint32_t>(ts.bin_count));
  const auto events = io::to_events(ts);
  if (events.empty()) {
    throw StageError("quantize", "empty stream");
  }
  const RawBitBlock block = quantize_stream(events, bins);
  io::write_bits(out, block.bits,
                 {{"kind", "raw"},
                  {"bits_per_detection", std::to_string(bins.bits_per_detection)},
                  {"clock_period_ps", std::to_string(bins.clock_period_ps)},
                  {"bin_count", std::to_string(bins.bin_count)}});
  const BinStats stats = bin_histogram(bin_indices(events, bins), bins.bin_count);
  std::cout << "detections = " << block.source_detection_count << "\n"
            << "raw_bits = " << block.bits.size() << "\n"
            << format_bin_stats(stats);
  return 0;
}

BitVector load_bits(const std::string& path, const std::string& input_format,
                    io::Metadata* metadata = nullptr) {
  if (input_format == "qrrb") {
    io::BitFile f = io::read_bits(path);
    if (metadata != nullptr) {
      *metadata = std::move(f.metadata);
    }
    return std::move(f.bits);
  }
  return import_external(path, parse_export_format(input_format));
}

int cmd_analyze(const std::string& in, const std::string& input_format,
                const BatteryFlags& flags, const std::string& format) {
  const BitVector bits = load_bits(in, input_format);
  const TestReport report = run_battery(bits, flags.resolve());
  print_report(report, format);
  return report.passed() ? 0 : 1;
}

struct ExtractFlags {
  std::string in;
  std::string out;
  std::optional<std::string> preset;
  std::uint64_t n = reference_extraction::input_bits;
  std::optional<std::uint64_t> m;
  unsigned epsilon_log2 = reference_extraction::epsilon_log2;
  double hmin = reference_extraction::worst_case_h_min;
  std::optional<double> measured_hmin;
  std::optional<std::string> seed_file;
  std::uint64_t extractor_seed = ExtractorSettings{}.seed;
  std::string construction = "lfsr";
  std::string polynomial = default_polynomial(32).id();
  unsigned threads = 1;
  std::optional<std::uint64_t> max_blocks;
};

int cmd_extract(ExtractFlags f, const CLI::App& app) {
  if (f.preset) {
    // A preset only supplies parameters the user did not set explicitly.
    const PipelineConfig p = preset(*f.preset);
    if (app.count("--n") == 0) f.n = p.extractor.input_bits_n;
    if (app.count("--m") == 0) f.m = p.extractor.output_bits_m;
    if (app.count("--epsilon-log2") == 0) f.epsilon_log2 = p.extractor.epsilon_log2;
    if (app.count("--hmin") == 0) f.hmin = p.extractor.declared_h_min;
    if (app.count("--construction") == 0) f.construction = to_string(p.extractor.construction);
    if (app.count("--polynomial") == 0) f.polynomial = p.extractor.polynomial.id();
    if (app.count("--extractor-seed") == 0) f.extractor_seed = p.extractor.seed;
  }
  ExtractorSettings settings;
  settings.input_bits_n = f.n;
  settings.output_bits_m = f.m;
  settings.epsilon_log2 = f.epsilon_log2;
  settings.declared_h_min = f.hmin;
  settings.construction = parse_construction(f.construction);
  settings.polynomial = parse_polynomial(f.polynomial);
  settings.seed = f.extractor_seed;
  if (f.seed_file) {
    settings.seed_file = *f.seed_file;
  }

  PipelineConfig cfg;
  cfg.extractor = settings;
  ExtractorParams params = cfg.extractor_params();
  params.validate();
  params.seed_bits = resolve_seed(settings, params.required_seed_bits());

  io::Metadata in_meta;
  const BitVector raw = load_bits(f.in, "qrrb", &in_meta);

  // Measure the raw symbol distribution when the file says how it was binned.
  std::optional<double> measured = f.measured_hmin;
  if (!measured && in_meta.count("bits_per_detection") != 0 && in_meta.count("bin_count") != 0) {
    const unsigned bpd = static_cast<unsigned>(std::stoul(in_meta.at("bits_per_detection")));
    const auto nb = static_cast<std::uint32_t>(std::stoul(in_meta.at("bin_count")));
    measured = bin_histogram(unpack_indices(raw, bpd), nb).h_min_per_bit;
  }

  const ExtractionResult result = extract_stream(raw, params, measured, f.threads, f.max_blocks);
  io::write_bits(f.out, result.bits,
                 {{"kind", "conditioned"},
                  {"bits_per_detection", in_meta.count("bits_per_detection") != 0
                                             ? in_meta.at("bits_per_detection")
                                             : "8"},
                  {"n", std::to_string(params.input_bits_n)},
                  {"m", std::to_string(params.output_bits_m)},
                  {"epsilon_log2", std::to_string(params.epsilon_log2)},
                  {"construction", to_string(params.construction)},
                  {"polynomial", params.feedback_polynomial.id()},
                  {"seed_digest", bits_digest(params.seed_bits)}});
  std::cout << "n = " << params.input_bits_n << "\n"
            << "m = " << params.output_bits_m << "\n"
            << "blocks = " << result.blocks << "\n"
            << "dropped_bits = " << result.dropped_bits << "\n"
            << "extraction_ratio = " << result.extraction_ratio << "\n";
  if (measured) {
    std::cout << "measured_h_min_per_bit = " << *measured << "\n";
  }
  std::cout << "output_bits = " << result.bits.size() << "\n"
            << "digest = " << bits_digest(result.bits) << "\n";
  return 0;
}

int cmd_sweep(const SourceFlags& flags, const std::string& preset_name,
              std::uint64_t samples, const std::string& format) {
  if (preset_name != "table1") {
    throw CLI::ValidationError("--preset", "unknown sweep preset '" + preset_name + "'");
  }
  const auto rows = table1_rows();
  const auto result = sweep_configurations(flags.resolve(), rows, samples);
  std::cout << (format == "records" ? format_sweep_records(result) : format_sweep_table(result));
  return 0;
}

int cmd_export(const std::string& in, const std::string& out, const std::string& format) {
  const BitVector bits = io::read_bits(in).bits;
  const std::uint64_t bytes = export_for_external(bits, parse_export_format(format), out);
  std::cout << "bits = " << bits.size() << "\nbytes = " << bytes << "\noutput = " << out << "\n";
  return 0;
}

int cmd_run(const std::string& preset_name, double scale, const std::optional<std::string>& config,
            const std::optional<std::string>& out_dir, std::optional<std::uint64_t> extractor_seed,
            std::optional<std::uint64_t> sim_seed, std::optional<unsigned> threads,
            bool no_extract, const std::optional<std::string>& save_config,
            const std::string& format) {
  PipelineConfig cfg = config ? PipelineConfig::load(*config) : preset(preset_name, scale);
  if (out_dir) cfg.output_dir = *out_dir;
  if (extractor_seed) cfg.extractor.seed = *extractor_seed;
  if (sim_seed) cfg.source.sim_seed = *sim_seed;
  if (threads) cfg.extractor.threads = *threads;
  if (no_extract) cfg.extractor.enabled = false;
  cfg.validate();
  if (save_config) {
    cfg.save(*save_config);
  }
  const PipelineResult r = run_pipeline(cfg);
  print_report(r.report, format);
  const double out_bits = static_cast<double>(r.conditioned().size());
  std::printf("\nduration_ps        %llu\n", static_cast<unsigned long long>(r.duration_ps));
  std::printf("detections         %llu (dark %llu)\n",
              static_cast<unsigned long long>(r.detections),
              static_cast<unsigned long long>(r.dark_detections));
  std::printf("raw bits           %zu\n", r.raw_bits.size());
  std::printf("raw h_min/bit      %.6f\n", r.raw_stats.h_min_per_bit);
  std::printf("raw CoV            %.6f\n", r.raw_stats.cov);
  std::printf("blocks             %llu\n", static_cast<unsigned long long>(r.extraction.blocks));
  std::printf("conditioned bits   %.0f\n", out_bits);
  std::printf("throughput         simulate %.2fs, extract %.2fs (%.1f Mbit/s), validate %.2fs\n",
              r.simulate_seconds, r.extract_seconds,
              r.extract_seconds > 0 ? out_bits / r.extract_seconds / 1e6 : 0.0,
              r.validate_seconds);
  std::printf("verdict            %s\n", r.quarantined ? "FAIL (quarantined)" : "PASS");
  std::printf("output             %s\n", r.output_path.string().c_str());
  std::printf("provenance         %s\n", r.provenance_path.string().c_str());
  return r.quarantined ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-bin quantum random number generator toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qrng 0.1.0");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate detector timestamps to a QRTS file");
  SourceFlags sim_flags;
  sim_flags.attach(*sim);
  std::optional<std::uint64_t> sim_duration;
  std::optional<std::uint64_t> sim_detections;
  std::string sim_out;
  auto* dur_opt = sim->add_option("--duration-ps", sim_duration, "Simulated time span");
  sim->add_option("--detections", sim_detections, "Stop after this many detections")
      ->excludes(dur_opt);
  sim->add_option("-o,--out", sim_out, "Output timestamp file")->required();
  sim->callback([&] {
    if (!sim_duration && !sim_detections) {
      throw CLI::RequiredError("--duration-ps or --detections");
    }
  });

  // quantize
  auto* quant = app.add_subcommand("quantize", "Bin timestamps into raw bits (QRRB)");
  std::string q_in, q_out;
  quant->add_option("-i,--in", q_in, "Input timestamp file")->required()->check(CLI::ExistingFile);
  quant->add_option("-o,--out", q_out, "Output raw-bit file")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Run the statistical battery; exit 1 on failure");
  std::string a_in, a_input_format = "qrrb", a_format = "table";
  BatteryFlags a_flags;
  analyze->add_option("-i,--in", a_in, "Bit file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--input-format", a_input_format)
      ->check(CLI::IsMember({"qrrb", "raw-binary", "ascii-01"}))
      ->capture_default_str();
  analyze->add_option("--format", a_format)->check(CLI::IsMember({"table", "records"}))
      ->capture_default_str();
  a_flags.attach(*analyze);

  // extract
  auto* extract = app.add_subcommand("extract", "Toeplitz-hash raw bits into conditioned bits");
  ExtractFlags ef;
  extract->add_option("-i,--in", ef.in, "Raw-bit file")->required()->check(CLI::ExistingFile);
  extract->add_option("-o,--out", ef.out, "Conditioned-bit file")->required();
  extract->add_option("--preset", ef.preset, "Parameter preset (reference)");
  extract->add_option("--n", ef.n, "Input block length")->capture_default_str();
  extract->add_option("--m", ef.m, "Output block length (default: leftover hash bound)");
  extract->add_option("--epsilon-log2", ef.epsilon_log2)->capture_default_str();
  extract->add_option("--hmin", ef.hmin, "Declared min-entropy per raw bit")
      ->capture_default_str();
  extract->add_option("--measured-hmin", ef.measured_hmin,
                      "Override the min-entropy measured from the input");
  auto* seed_file_opt = extract->add_option("--seed-file", ef.seed_file, "Seed bits (raw bytes)")
                            ->check(CLI::ExistingFile);
  extract->add_option("--extractor-seed,--seed", ef.extractor_seed,
                      "Deterministic extractor seed")
      ->excludes(seed_file_opt)
      ->capture_default_str();
  extract->add_option("--construction", ef.construction)
      ->check(CLI::IsMember({"lfsr", "explicit"}))
      ->capture_default_str();
  extract->add_option("--polynomial", ef.polynomial, "LFSR feedback polynomial")
      ->capture_default_str();
  extract->add_option("--threads", ef.threads)->capture_default_str()->check(CLI::PositiveNumber);
  extract->add_option("--max-blocks", ef.max_blocks, "Hash at most this many blocks");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Bin-uniformity sweep over (T, N_b) configurations");
  SourceFlags sw_flags;
  sw_flags.attach(*sweep);
  std::string sw_preset = "table1", sw_format = "table";
  std::uint64_t sw_samples = 2'000'000;
  sweep->add_option("--preset", sw_preset, "Row set")->capture_default_str();
  sweep->add_option("--samples", sw_samples, "Detections per simulated row")
      ->capture_default_str();
  sweep->add_option("--format", sw_format)->check(CLI::IsMember({"table", "records"}))
      ->capture_default_str();

  // export
  auto* exp = app.add_subcommand("export", "Export bits for external test suites");
  std::string x_in, x_out, x_format = "raw-binary";
  exp->add_option("-i,--in", x_in, "Bit file")->required()->check(CLI::ExistingFile);
  exp->add_option("-o,--out", x_out, "Output path")->required();
  exp->add_option("--format", x_format)->check(CLI::IsMember({"raw-binary", "ascii-01"}))
      ->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Full pipeline with pass/fail-gated output");
  std::string r_preset = "reference", r_format = "table";
  double r_scale = 0.01;
  std::optional<std::string> r_config, r_out, r_save;
  std::optional<std::uint64_t> r_xseed, r_sseed;
  std::optional<unsigned> r_threads;
  bool r_no_extract = false;
  auto* preset_opt = run->add_option("--preset", r_preset, "Built-in or QRNG_PRESET_DIR preset")
                         ->capture_default_str();
  run->add_option("--scale", r_scale, "Fraction of the reference 9712-block volume")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  run->add_option("--config", r_config, "INI configuration file")
      ->check(CLI::ExistingFile)
      ->excludes(preset_opt);
  run->add_option("--out-dir", r_out, "Output directory");
  run->add_option("--extractor-seed", r_xseed);
  run->add_option("--sim-seed", r_sseed);
  run->add_option("--threads", r_threads)->check(CLI::PositiveNumber);
  run->add_flag("--no-extract", r_no_extract, "Validate the raw bits directly");
  run->add_option("--save-config", r_save, "Write the effective configuration");
  run->add_option("--format", r_format)->check(CLI::IsMember({"table", "records"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags, sim_duration, sim_detections, sim_out);
    if (quant->parsed()) return cmd_quantize(q_in, q_out);
    if (analyze->parsed()) return cmd_analyze(a_in, a_input_format, a_flags, a_format);
    if (extract->parsed()) return cmd_extract(ef, *extract);
    if (sweep->parsed()) return cmd_sweep(sw_flags, sw_preset, sw_samples, sw_format);
    if (exp->parsed()) return cmd_export(x_in, x_out, x_format);
    if (run->parsed()) {
      return cmd_run(r_preset, r_scale, r_config, r_out, r_xseed, r_sseed, r_threads,
                     r_no_extract, r_save, r_format);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
