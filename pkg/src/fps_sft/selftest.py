"""Built-in correctness checks runnable from the CLI.

These re-verify the structural guarantees the recovery loop rests on:
uniform disjoint fibers for every valid slope, line spectra matching
projected sinusoid sums, exact single-sinusoid decoding, and an
end-to-end recovery against ground truth.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .core import CubeShape, SparseSpectrum, make_synthetic_source, spectra_match
from .decoder import BinGroup, decode_bin, is_one_sparse, predicted_bin_values
from .driver import FpsSftConfig, fps_sft
from .lines import LineParams, decoding_offsets, extract_line
from .numtheory import bin_of_frequency, bins_of_frequencies, sample_slope, valid_slopes
from .oracle import GeneratorSpec, generate
from .transform import dft_forward, dft_forward_direct

CheckResult = tuple[str, bool, str]

_FAMILY_2D = [
    CubeShape((a, b))
    for a in (2, 3, 4, 6, 8, 9, 12)
    for b in (2, 3, 4, 6, 8, 9, 12)
]
_FAMILY_3D = [CubeShape(d) for d in ((2, 3, 4), (4, 4, 4), (2, 2, 3), (6, 4, 3), (5, 5, 5))]


def _grid(shape: CubeShape) -> np.ndarray:
    return np.stack(
        np.unravel_index(np.arange(shape.n_total), shape.dims), axis=-1
    ).astype(np.int64)


def check_fiber_partition(shapes=None) -> CheckResult:
    """Every valid slope projects the grid onto bins in equal disjoint fibers."""
    shapes = shapes or (_FAMILY_2D + _FAMILY_3D)
    for shape in shapes:
        grid = _grid(shape)
        expected = shape.n_total // shape.line_len
        for alpha in valid_slopes(shape):
            counts = np.bincount(
                bins_of_frequencies(grid, alpha, shape), minlength=shape.line_len
            )
            if not np.all(counts == expected):
                return (
                    "fiber-partition",
                    False,
                    f"shape {shape.dims} slope {alpha}: bin loads {set(counts.tolist())}",
                )
    return ("fiber-partition", True, f"{len(shapes)} shapes, all valid slopes")


def check_bin_map_exact(shapes=None) -> CheckResult:
    """The bin map agrees with exact rational evaluation of the projection
    condition ``frac(sum_k m_k a_k / N_k - m/L) == 0`` on every grid point."""
    shapes = shapes or _FAMILY_2D
    for shape in shapes:
        L = shape.line_len
        for alpha in valid_slopes(shape):
            for m in itertools.product(*(range(n) for n in shape.dims)):
                b = bin_of_frequency(m, alpha, shape)
                total = sum(
                    Fraction(mk * ak, nk) for mk, ak, nk in zip(m, alpha, shape.dims)
                ) - Fraction(b, L)
                if total.denominator != 1:
                    return (
                        "bin-map-exact",
                        False,
                        f"shape {shape.dims} slope {alpha} m={m}: {total} not integral",
                    )
    return ("bin-map-exact", True, f"{len(shapes)} shapes")


def check_projection_identity(n_instances: int = 50, seed: int = 0) -> CheckResult:
    """Line-spectrum bins equal the offset-phased sums of the sinusoids
    whose frequencies project there."""
    rng = np.random.default_rng(seed)
    for trial in range(n_instances):
        dims = tuple(int(rng.integers(2, 13)) for _ in range(2))
        shape = CubeShape(dims)
        k = int(rng.integers(1, 9))
        flat = rng.choice(shape.n_total, size=min(k, shape.n_total), replace=False)
        entries = {}
        for f in flat:
            idx = tuple(int(v) for v in np.unravel_index(int(f), dims))
            entries[idx] = complex(rng.normal(), rng.normal())
        spectrum = SparseSpectrum(shape, entries)
        source = make_synthetic_source(spectrum)
        alpha = sample_slope(shape, rng)
        tau = tuple(int(v) for v in rng.integers(0, shape.dims_array))
        line = extract_line(source, LineParams(alpha, tau, shape.line_len))
        got = dft_forward(line)
        expected = np.zeros(shape.line_len, dtype=np.complex128)
        for freq, amp in entries.items():
            phase = sum(mk * tk / nk for mk, tk, nk in zip(freq, tau, dims))
            expected[bin_of_frequency(freq, alpha, shape)] += amp * np.exp(
                2j * np.pi * phase
            )
        if np.abs(got - expected).max() > 1e-10:
            return (
                "projection-identity",
                False,
                f"trial {trial} shape {dims}: max err {np.abs(got - expected).max():.2e}",
            )
    return ("projection-identity", True, f"{n_instances} random instances")


def check_single_sinusoid_decode(seed: int = 0) -> CheckResult:
    """Any lone sinusoid is detected one-sparse at its bin and decoded exactly."""
    rng = np.random.default_rng(seed)
    for shape in _FAMILY_2D[::3] + _FAMILY_3D[:2]:
        for _ in range(4):
            freq = tuple(int(rng.integers(0, n)) for n in shape.dims)
            amp = complex(rng.uniform(0.5, 2.0) * np.exp(2j * np.pi * rng.random()))
            tau = tuple(int(v) for v in rng.integers(0, shape.dims_array))
            values = predicted_bin_values(amp, freq, tau, shape)
            group = BinGroup(bin=0, values=tuple(values))
            if not is_one_sparse(group):
                return ("decode-round-trip", False, f"{shape.dims} {freq}: magnitude test failed")
            sin = decode_bin(group, tau, shape)
            if sin is None or sin.freq != freq or abs(sin.amp - amp) > 1e-10:
                return ("decode-round-trip", False, f"{shape.dims} {freq}: got {sin}")
    return ("decode-round-trip", True, "single sinusoids across the shape family")


def check_transform_oracle() -> CheckResult:
    """Fast transform matches the quadratic direct sum and inverts cleanly."""
    rng = np.random.default_rng(1)
    for length in (1, 2, 3, 4, 6, 12, 60):
        v = rng.normal(size=length) + 1j * rng.normal(size=length)
        fast = dft_forward(v)
        direct = dft_forward_direct(v)
        if np.abs(fast - direct).max() > 1e-12 * max(1.0, np.abs(direct).max()):
            return ("transform-oracle", False, f"length {length} mismatch")
    return ("transform-oracle", True, "lengths 1..60")


def check_end_to_end(seed: int = 0) -> CheckResult:
    """Small full recovery equals the generated ground truth exactly."""
    spec = GeneratorSpec(shape=CubeShape((16, 12)), k=8, seed=seed)
    truth, source = generate(spec)
    report = fps_sft(source, FpsSftConfig(max_iterations=24, seed=seed + 1))
    if not spectra_match(report.recovered, truth):
        return ("end-to-end", False, f"recovered {report.recovered.k} of {truth.k}")
    return ("end-to-end", True, f"16x12, k=8, {report.iterations_run} iterations")


def run_all(quick: bool = False) -> list[CheckResult]:
    shapes_2d = _FAMILY_2D[::4] if quick else None
    results = [
        check_fiber_partition(shapes_2d),
        check_bin_map_exact(shapes_2d),
        check_projection_identity(12 if quick else 50),
        check_single_sinusoid_decode(),
        check_transform_oracle(),
        check_end_to_end(),
    ]
    return results
