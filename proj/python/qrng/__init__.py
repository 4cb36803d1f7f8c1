"""Python access to the qrng toolkit core."""

from ._qrng import (
    Bits,
    SourceConfig,
    StageError,
    bin_indices,
    bin_stats,
    coefficient_of_variance,
    extract,
    lhl_output_length,
    min_entropy,
    nist_proportion_interval,
    quantize,
    read_bits,
    run_battery,
    run_pipeline,
    simulate,
    sweep_table1,
    toeplitz_hash,
    write_bits,
)

__all__ = [
    "Bits",
    "SourceConfig",
    "StageError",
    "bin_indices",
    "bin_stats",
    "coefficient_of_variance",
    "extract",
    "lhl_output_length",
    "min_entropy",
    "nist_proportion_interval",
    "quantize",
    "read_bits",
    "run_battery",
    "run_pipeline",
    "simulate",
    "sweep_table1",
    "toeplitz_hash",
    "write_bits",
]
__version__ = "0.1.0"
