#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qrng/digest.hpp"
#include "qrng/pipeline.hpp"

using namespace qrng;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qrng_test_pipeline" / name;
  fs::remove_all(dir);
  return dir;
}

PipelineConfig small(const std::string& name) {
  PipelineConfig c = preset("reference", 0.002);
  c.output_dir = scratch(name);
  return c;
}

}  // namespace

TEST(Config, IniRoundTrip) {
  PipelineConfig c = preset("reference");
  c.source.jitter_sigma_ps = 12.5;
  c.extractor.output_bits_m = 9000;
  c.extractor.construction = ToeplitzConstruction::explicit_seed;
  c.battery.max_lag = 50;
  c.duration_ps = 123456789;
  const PipelineConfig back = PipelineConfig::from_ini(c.to_ini());
  EXPECT_EQ(back.to_ini(), c.to_ini());
  EXPECT_EQ(back.source, c.source);
  EXPECT_EQ(back.extractor.output_bits_m, 9000u);
  EXPECT_EQ(back.extractor.construction, ToeplitzConstruction::explicit_seed);
  EXPECT_EQ(back.duration_ps, c.duration_ps);
}

TEST(Config, RejectsUnknownKeysAndInconsistency) {
  EXPECT_THROW(PipelineConfig::from_ini("[source]\nphoton_rate = 3\n"), std::invalid_argument);
  EXPECT_THROW(PipelineConfig::from_ini("[nope]\nx = 1\n"), std::invalid_argument);
  EXPECT_THROW(PipelineConfig::from_ini("[source]\nbin_count = 300\n"), std::invalid_argument);
  EXPECT_THROW(PipelineConfig::from_ini("[source]\ndead_time_ps = 1000\n"), std::invalid_argument);
  // Output length above the bound for the declared min-entropy.
  EXPECT_THROW(PipelineConfig::from_ini("[extractor]\noutput_bits = 11219\n"),
               std::invalid_argument);
  EXPECT_NO_THROW(
      PipelineConfig::from_ini("[extractor]\noutput_bits = 11219\ndeclared_h_min = 0.9501\n"));
  const PipelineConfig mu = PipelineConfig::from_ini("[source]\nmean_photon_number = 0.3\n");
  EXPECT_NEAR(mu.source.mean_photon_number(), 0.3, 1e-12);
}

TEST(Config, PresetsAndPresetDirectory) {
  const PipelineConfig ref = preset("reference", 1.0);
  EXPECT_EQ(ref.target_blocks, 9712u);
  EXPECT_EQ(preset("reference").target_blocks, 97u);
  EXPECT_EQ(ref.source.dead_time_ps, 24000u);
  EXPECT_NEAR(ref.source.mean_photon_number(), 0.7, 1e-12);
  EXPECT_EQ(ref.extractor.input_bits_n, 11840u);
  EXPECT_EQ(ref.extractor_params().output_bits_m, 11218u);
  EXPECT_EQ(preset("ideal").source.dark_rate_hz, 0.0);
  EXPECT_THROW(preset("unknown"), std::invalid_argument);

  const fs::path dir = scratch("presets");
  fs::create_directories(dir);
  PipelineConfig custom = preset("ideal");
  custom.name = "mine";
  custom.target_blocks = 3;
  custom.save(dir / "mine.ini");
  ::setenv("QRNG_PRESET_DIR", dir.c_str(), 1);
  EXPECT_EQ(preset("mine").target_blocks, 3u);
  ::unsetenv("QRNG_PRESET_DIR");
  EXPECT_THROW(preset("mine"), std::invalid_argument);
}

TEST(Pipeline, EndToEndWritesGatedOutput) {
  const PipelineConfig c = small("e2e");
  const PipelineResult r = run_pipeline(c);
  EXPECT_FALSE(r.quarantined) << r.report.format_table();
  EXPECT_EQ(r.extraction.blocks, c.target_blocks);
  EXPECT_EQ(r.conditioned().size(), c.target_blocks * 11218);
  EXPECT_EQ(r.output_path, c.output_dir / "conditioned.qrrb");
  const io::BitFile f = io::read_bits(r.output_path);
  EXPECT_EQ(f.bits, r.conditioned());
  EXPECT_EQ(f.metadata.at("n"), "11840");
  EXPECT_EQ(f.metadata.at("m"), "11218");
  EXPECT_EQ(f.metadata.at("epsilon_log2"), "15");
  EXPECT_EQ(f.metadata.at("polynomial"), default_polynomial(32).id());
  EXPECT_EQ(f.metadata.at("seed_digest").size(), 64u);
  EXPECT_EQ(io::read_bits(c.output_dir / "raw.qrrb").bits, r.raw_bits);
  EXPECT_TRUE(fs::exists(c.output_dir / "report.txt"));

  // The provenance record parses back to the same configuration.
  const PipelineConfig again = PipelineConfig::load(r.provenance_path);
  EXPECT_EQ(again.source, c.source);
  EXPECT_EQ(r.provenance.at("conditioned_digest"), bits_digest(r.conditioned()));
}

TEST(Pipeline, EmptyStreamFailsInQuantizeStage) {
  PipelineConfig c = small("empty");
  c.duration_ps = 0;
  try {
    run_pipeline(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "quantize");
    EXPECT_STREQ(e.what(), "quantize: empty stream");
  }
}

TEST(Pipeline, EntropyGateAbortsInExtractStage) {
  PipelineConfig c = small("gate");
  c.source.jitter_sigma_ps = 3000;
  c.extractor.declared_h_min = 0.999;
  c.extractor.output_bits_m = 100;
  try {
    run_pipeline(c);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "extract");
  }
}

TEST(Pipeline, FailingBatteryQuarantines) {
  // Heavy illumination makes each click land one dead time after the last,
  // so consecutive raw symbols are strongly correlated; extraction is off.
  PipelineConfig c = small("quarantine");
  c.source.set_mean_photon_number(20.0);
  c.source.jitter_sigma_ps = 2000;
  c.extractor.enabled = false;
  c.target_blocks = 20;
  const PipelineResult r = run_pipeline(c);
  EXPECT_TRUE(r.quarantined);
  EXPECT_FALSE(r.report.passed());
  EXPECT_EQ(r.output_path, c.output_dir / "quarantine" / "conditioned.qrrb");
  EXPECT_TRUE(fs::exists(r.output_path));
  EXPECT_FALSE(fs::exists(c.output_dir / "conditioned.qrrb"));
  EXPECT_EQ(r.provenance.at("verdict"), "fail");
}

TEST(Pipeline, FixedDurationAndDeterminism) {
  PipelineConfig c = small("fixed_a");
  c.duration_ps = 2'000'000'000;
  const PipelineResult a = run_pipeline(c);
  c.output_dir = scratch("fixed_b");
  const PipelineResult b = run_pipeline(c);
  EXPECT_EQ(a.duration_ps, 2'000'000'000u);
  EXPECT_EQ(a.conditioned(), b.conditioned());
  EXPECT_EQ(a.report.format_records(), b.report.format_records());
  EXPECT_EQ(a.extraction.blocks, a.raw_bits.size() / 11840);
}
