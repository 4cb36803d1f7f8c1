import math

import numpy as np
import pytest

import qrng


def test_source_config_defaults():
    cfg = qrng.SourceConfig()
    assert cfg.clock_period_ps == 16384
    assert cfg.bin_count == 256
    assert math.isclose(cfg.mean_photon_number, 0.7, rel_tol=1e-12)
    cfg.mean_photon_number = 0.3
    assert math.isclose(cfg.detector_efficiency * cfg.photon_rate_hz * 16384e-12, 0.3)


def test_simulate_quantize_roundtrip():
    cfg = qrng.SourceConfig()
    ts, dark = qrng.simulate(cfg, 200_000_000)
    assert ts.dtype == np.uint64 and len(ts) == len(dark) > 1000
    assert np.all(np.diff(ts.astype(np.int64)) >= cfg.dead_time_ps)
    bits = qrng.quantize(ts)
    assert len(bits) == 8 * len(ts)
    idx = qrng.bin_indices(ts)
    assert np.array_equal(idx, (ts % 16384) // 64)
    packed = np.frombuffer(bits.to_bytes(), dtype=np.uint8)
    assert np.array_equal(packed, idx.astype(np.uint8))


def test_entropy_helpers():
    assert qrng.min_entropy([0.5, 0.25, 0.125, 0.125]) == 1.0
    assert math.isclose(qrng.coefficient_of_variance([0.3, 0.7]), 0.4)
    s = qrng.bin_stats([10] * 256)
    assert s["h_min_per_symbol"] == 8.0
    assert qrng.lhl_output_length(11840, 0.95, 15) == 11218
    lo, hi = qrng.nist_proportion_interval(0.01, 1000)
    assert math.floor((hi - lo) / 2 * 1e7) == 94392


def test_toeplitz_against_numpy():
    rng = np.random.default_rng(1)
    m, n = 23, 57
    col = rng.integers(0, 2, m)
    row = rng.integers(0, 2, n)
    row[0] = col[0]
    x = rng.integers(0, 2, n)
    t = np.array([[col[i - j] if i >= j else row[j - i] for j in range(n)] for i in range(m)])
    want = (t @ x) % 2

    def to_bits(a):
        return qrng.Bits(np.packbits(a.astype(np.uint8)).tobytes(), len(a))

    got = qrng.toeplitz_hash(to_bits(col), to_bits(row), to_bits(x))
    assert [got[i] for i in range(m)] == [bool(v) for v in want]


def test_extract_and_battery():
    rng = np.random.default_rng(2)
    raw = qrng.Bits(rng.integers(0, 256, 11840 * 30 // 8, dtype=np.uint8).tobytes())
    out = qrng.extract(raw)
    assert len(out) == 30 * 11218
    assert out == qrng.extract(raw, threads=2)
    report = qrng.run_battery(out)
    assert report["passed"]
    names = {r["name"] for r in report["records"]}
    assert {"entropy_per_bit", "chi_square", "monobit", "runs", "autocorrelation"} <= names


def test_pipeline_gating(tmp_path):
    good = qrng.run_pipeline("reference", scale=0.002, output_dir=str(tmp_path / "a"))
    assert not good["quarantined"]
    again = qrng.run_pipeline("reference", scale=0.002, output_dir=str(tmp_path / "b"))
    assert good["provenance"]["conditioned_digest"] == again["provenance"]["conditioned_digest"]
    assert qrng.read_bits(good["output_path"]).digest() == good["report"]["digest"]


def test_errors_surface_as_python_exceptions(tmp_path):
    with pytest.raises(ValueError):
        qrng.extract(qrng.Bits(b"\x00" * 2000), m=11219)
    with pytest.raises(qrng.StageError, match="quantize: empty stream"):
        qrng.run_pipeline("reference", duration_ps=0, output_dir=str(tmp_path))
    cfg = qrng.SourceConfig()
    cfg.bin_count = 100
    with pytest.raises(ValueError):
        cfg.validate()
