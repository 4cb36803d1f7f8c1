#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qrng/digest.hpp"
#include "qrng/entropy.hpp"
#include "qrng/extractor.hpp"
#include "qrng/io.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/quantizer.hpp"
#include "qrng/sim_source.hpp"
#include "qrng/stats.hpp"

namespace py = pybind11;
using namespace qrng;

namespace {

py::bytes to_pybytes(const BitVector& bits) {
  const auto bytes = bits.to_bytes_msb();
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

BitVector from_pybytes(const py::bytes& data, std::optional<std::size_t> bit_count) {
  const std::string_view view = data;
  const std::span<const std::uint8_t> span(reinterpret_cast<const std::uint8_t*>(view.data()),
                                           view.size());
  return BitVector::from_bytes_msb(span, bit_count.value_or(view.size() * 8));
}

py::dict record_dict(const TestRecord& r) {
  py::dict d;
  d["name"] = r.name;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value ? py::cast(*r.p_value) : py::none();
  d["verdict"] = std::string(to_string(r.verdict));
  d["threshold"] = r.threshold.describe();
  return d;
}

py::dict report_dict(const TestReport& report) {
  py::list records;
  for (const auto& r : report.records) {
    records.append(record_dict(r));
  }
  py::dict d;
  d["records"] = records;
  d["bit_count"] = report.bit_count;
  d["digest"] = report.source_digest;
  d["passed"] = report.passed();
  return d;
}

py::dict stats_dict(const BinStats& s) {
  py::dict d;
  d["counts"] = s.counts;
  d["total"] = s.total;
  d["h_min_per_symbol"] = s.h_min_per_symbol;
  d["h_min_per_bit"] = s.h_min_per_bit;
  d["cov"] = s.cov;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qrng, m) {
  m.doc() = "Time-bin QRNG simulation, extraction and validation";

  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

  py::class_<SourceConfig>(m, "SourceConfig")
      .def(py::init<>())
      .def_readwrite("photon_rate_hz", &SourceConfig::photon_rate_hz)
      .def_readwrite("detector_efficiency", &SourceConfig::detector_efficiency)
      .def_readwrite("dead_time_ps", &SourceConfig::dead_time_ps)
      .def_readwrite("dark_rate_hz", &SourceConfig::dark_rate_hz)
      .def_readwrite("jitter_sigma_ps", &SourceConfig::jitter_sigma_ps)
      .def_readwrite("clock_period_ps", &SourceConfig::clock_period_ps)
      .def_readwrite("bin_count", &SourceConfig::bin_count)
      .def_readwrite("sim_seed", &SourceConfig::sim_seed)
      .def_readwrite("allow_multi_detection", &SourceConfig::allow_multi_detection)
      .def_property(
          "mean_photon_number", &SourceConfig::mean_photon_number,
          [](SourceConfig& c, double mu) { c.set_mean_photon_number(mu); })
      .def("validate", &SourceConfig::validate)
      .def("expected_detection_rate_hz",
           [](const SourceConfig& c) { return expected_detection_rate_hz(c); });

  py::class_<BitVector>(m, "Bits")
      .def(py::init([](const py::bytes& data, std::optional<std::size_t> bit_count) {
             return from_pybytes(data, bit_count);
           }),
           py::arg("data"), py::arg("bit_count") = py::none())
      .def("__len__", &BitVector::size)
      .def("__getitem__",
           [](const BitVector& b, std::size_t i) {
             if (i >= b.size()) throw py::index_error();
             return b.get(i);
           })
      .def("__eq__", [](const BitVector& a, const BitVector& b) { return a == b; })
      .def("to_bytes", &to_pybytes)
      .def("count_ones", &BitVector::count_ones)
      .def("digest", [](const BitVector& b) { return bits_digest(b); });

  m.def(
      "simulate",
      [](const SourceConfig& cfg, std::uint64_t duration_ps) {
        const ArrivalStream s = simulate(cfg, duration_ps);
        const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(s.events.size())};
        py::array_t<std::uint64_t> ts(shape);
        py::array_t<std::uint8_t> dark(shape);
        auto t = ts.mutable_unchecked<1>();
        auto o = dark.mutable_unchecked<1>();
        for (std::size_t i = 0; i < s.events.size(); ++i) {
          t(static_cast<py::ssize_t>(i)) = s.events[i].timestamp_ps;
          o(static_cast<py::ssize_t>(i)) = s.events[i].origin == EventOrigin::dark;
        }
        return py::make_tuple(ts, dark);
      },
      py::arg("config"), py::arg("duration_ps"),
      "Detector timestamps (ps) and a dark-count mask over [0, duration_ps).");

  m.def(
      "bin_indices",
      [](py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> ts,
         std::uint64_t clock_period_ps, std::uint32_t bin_count) {
        const BinConfig bins = BinConfig::make(clock_period_ps, bin_count);
        auto t = ts.unchecked<1>();
        py::array_t<std::uint32_t> out(std::vector<py::ssize_t>{t.shape(0)});
        auto o = out.mutable_unchecked<1>();
        for (py::ssize_t i = 0; i < t.shape(0); ++i) {
          o(i) = bin_index(phase_extract(t(i), bins.clock_period_ps), bins);
        }
        return out;
      },
      py::arg("timestamps"), py::arg("clock_period_ps") = 16384, py::arg("bin_count") = 256);

  m.def(
      "quantize",
      [](py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast> ts,
         std::uint64_t clock_period_ps, std::uint32_t bin_count) {
        const BinConfig bins = BinConfig::make(clock_period_ps, bin_count);
        auto t = ts.unchecked<1>();
        std::vector<DetectionEvent> events(static_cast<std::size_t>(t.shape(0)));
        for (py::ssize_t i = 0; i < t.shape(0); ++i) {
          events[static_cast<std::size_t>(i)].timestamp_ps = t(i);
        }
        return quantize_stream(events, bins).bits;
      },
      py::arg("timestamps"), py::arg("clock_period_ps") = 16384, py::arg("bin_count") = 256);

  m.def(
      "bin_stats",
      [](const std::vector<std::uint64_t>& counts) {
        return stats_dict(BinStats::from_counts(counts));
      },
      py::arg("counts"));
  m.def("min_entropy", [](const std::vector<double>& p) { return min_entropy(p); });
  m.def("coefficient_of_variance",
        [](const std::vector<double>& p) { return coefficient_of_variance(p); });
  m.def("lhl_output_length", &lhl_output_length, py::arg("n"), py::arg("h_min_per_bit"),
        py::arg("epsilon_log2"));
  m.def("nist_proportion_interval", &nist_proportion_interval, py::arg("alpha"),
        py::arg("samples"));

  m.def(
      "extract",
      [](const BitVector& raw, std::uint64_t n, std::optional<std::uint64_t> out_bits,
         unsigned epsilon_log2, double declared_h_min, std::uint64_t seed,
         const std::string& construction, std::optional<std::uint64_t> max_blocks,
         unsigned threads) {
        ExtractorSettings s;
        s.input_bits_n = n;
        s.output_bits_m = out_bits;
        s.epsilon_log2 = epsilon_log2;
        s.declared_h_min = declared_h_min;
        s.construction = parse_construction(construction);
        s.seed = seed;
        PipelineConfig cfg;
        cfg.extractor = s;
        ExtractorParams params = cfg.extractor_params();
        params.validate();
        params.seed_bits = resolve_seed(s, params.required_seed_bits());
        py::gil_scoped_release release;
        return extract_stream(raw, params, std::nullopt, threads, max_blocks).bits;
      },
      py::arg("raw"), py::arg("n") = reference_extraction::input_bits,
      py::arg("m") = py::none(), py::arg("epsilon_log2") = reference_extraction::epsilon_log2,
      py::arg("declared_h_min") = reference_extraction::worst_case_h_min,
      py::arg("seed") = ExtractorSettings{}.seed, py::arg("construction") = "lfsr",
      py::arg("max_blocks") = py::none(), py::arg("threads") = 1);

  m.def(
      "toeplitz_hash",
      [](const BitVector& column, const BitVector& row, const BitVector& block) {
        ToeplitzSpec spec{column, row, ToeplitzConstruction::explicit_seed};
        return toeplitz_hash(block, spec);
      },
      py::arg("first_column"), py::arg("first_row"), py::arg("block"));

  m.def(
      "run_battery",
      [](const BitVector& bits, bool ent, bool nist, bool autocorrelation,
         std::size_t max_lag) {
        BatteryOptions o;
        o.ent = ent;
        o.nist = nist;
        o.autocorrelation = autocorrelation;
        o.max_lag = max_lag;
        return report_dict(run_battery(bits, o));
      },
      py::arg("bits"), py::arg("ent") = true, py::arg("nist") = true,
      py::arg("autocorrelation") = true, py::arg("max_lag") = 100);

  m.def(
      "sweep_table1",
      [](const SourceConfig& tmpl, std::uint64_t samples) {
        const auto spec = table1_rows();
        py::list rows;
        for (const auto& r : sweep_configurations(tmpl, spec, samples)) {
          py::dict d;
          d["bin_count"] = r.bin_count;
          d["t_bin_ps"] = r.t_bin_ps;
          d["clock_period_ps"] = r.clock_period_ps;
          d["cov"] = r.cov;
          d["h_min_per_bit"] = r.h_min_per_bit;
          d["analytic"] = r.analytic;
          d["samples"] = r.samples;
          d["reference_cov"] = r.reference_cov ? py::cast(*r.reference_cov) : py::none();
          rows.append(d);
        }
        return rows;
      },
      py::arg("source"), py::arg("samples_per_row") = 1'000'000);

  m.def(
      "run_pipeline",
      [](const std::string& preset_name, double scale, const std::filesystem::path& output_dir,
         std::optional<std::uint64_t> extractor_seed, std::optional<std::uint64_t> sim_seed,
         bool extract, std::optional<std::uint64_t> duration_ps) {
        PipelineConfig cfg = preset(preset_name, scale);
        cfg.output_dir = output_dir;
        cfg.duration_ps = duration_ps;
        if (extractor_seed) cfg.extractor.seed = *extractor_seed;
        if (sim_seed) cfg.source.sim_seed = *sim_seed;
        cfg.extractor.enabled = extract;
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(cfg);
        }
        py::dict d;
        d["report"] = report_dict(r.report);
        d["quarantined"] = r.quarantined;
        d["output_path"] = r.output_path;
        d["provenance_path"] = r.provenance_path;
        d["provenance"] = r.provenance;
        d["raw_stats"] = stats_dict(r.raw_stats);
        d["conditioned_bits"] = r.conditioned().size();
        d["detections"] = r.detections;
        return d;
      },
      py::arg("preset") = "reference", py::arg("scale") = 0.01,
      py::arg("output_dir") = "qrng-out", py::arg("extractor_seed") = py::none(),
      py::arg("sim_seed") = py::none(), py::arg("extract") = true,
      py::arg("duration_ps") = py::none());

  m.def(
      "read_bits", [](const std::filesystem::path& p) { return io::read_bits(p).bits; },
      py::arg("path"));
  m.def(
      "write_bits",
      [](const std::filesystem::path& p, const BitVector& bits) { io::write_bits(p, bits); },
      py::arg("path"), py::arg("bits"));
}
