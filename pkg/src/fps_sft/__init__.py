"""Sparse multi-dimensional Fourier transform via DFTs along pseudo-random
discrete lines, with Monte Carlo recovery benchmarks and a sparse-image
reconstruction experiment."""

__version__ = "0.1.0"

from .core import (
    CountingSource,
    CubeShape,
    DenseSource,
    FreqIndex,
    SignalSource,
    Sinusoid,
    SparseSpectrum,
    SyntheticSource,
    load_spectrum,
    make_dense_source,
    make_synthetic_source,
    save_spectrum,
    spectra_match,
)
from .decoder import (
    BinGroup,
    construct_recovered_spectrum,
    decode_bin,
    is_one_sparse,
    subtract_recovered,
)
from .driver import (
    FpsSftConfig,
    IterationStats,
    RecoveryReport,
    baseline_sft,
    default_max_iterations,
    fps_sft,
)
from .imaging import (
    GrayImage,
    PgmError,
    nonzero_fraction,
    read_pgm,
    reconstruct_sparse_image,
    sparsify,
    synthetic_phantom,
    threshold_for_fraction,
    write_pgm,
)
from .lines import LineParams, decoding_offsets, extract_line, line_indices, make_line_params
from .numtheory import (
    bezout,
    bin_of_frequency,
    bins_of_frequencies,
    fiber_of_bin,
    gcd,
    is_valid_slope,
    lcm_all,
    sample_slope,
    valid_slopes,
)
from .oracle import (
    GeneratorSpec,
    TrialResult,
    dense_dft,
    generate,
    run_sweep,
    run_trial,
    spectrum_from_dense,
)
from .transform import dft_forward, dft_forward_direct, dft_inverse

__all__ = [
    "BinGroup",
    "CountingSource",
    "CubeShape",
    "DenseSource",
    "FpsSftConfig",
    "FreqIndex",
    "GeneratorSpec",
    "GrayImage",
    "IterationStats",
    "LineParams",
    "PgmError",
    "RecoveryReport",
    "SignalSource",
    "Sinusoid",
    "SparseSpectrum",
    "SyntheticSource",
    "TrialResult",
    "baseline_sft",
    "bezout",
    "bin_of_frequency",
    "bins_of_frequencies",
    "construct_recovered_spectrum",
    "decode_bin",
    "decoding_offsets",
    "default_max_iterations",
    "dense_dft",
    "dft_forward",
    "dft_forward_direct",
    "dft_inverse",
    "extract_line",
    "fiber_of_bin",
    "fps_sft",
    "gcd",
    "generate",
    "is_one_sparse",
    "is_valid_slope",
    "lcm_all",
    "line_indices",
    "load_spectrum",
    "make_dense_source",
    "make_line_params",
    "make_synthetic_source",
    "nonzero_fraction",
    "read_pgm",
    "reconstruct_sparse_image",
    "run_sweep",
    "run_trial",
    "sample_slope",
    "save_spectrum",
    "sparsify",
    "spectra_match",
    "spectrum_from_dense",
    "subtract_recovered",
    "synthetic_phantom",
    "threshold_for_fraction",
    "valid_slopes",
    "write_pgm",
]
