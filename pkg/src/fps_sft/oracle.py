"""Ground-truth machinery and the Monte Carlo recovery benchmark.

``dense_dft`` is the reference multi-dimensional transform (1/N normalized
so a unit sinusoid shows amplitude 1 at its grid point). ``generate`` draws
uniform or clustered sparse spectra. ``run_sweep`` measures perfect-recovery
probability and sample budgets across sparsity levels, in a worker pool.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import (
    CubeShape,
    FreqIndex,
    SignalSource,
    SparseSpectrum,
    make_synthetic_source,
    spectra_match,
)
from .driver import FpsSftConfig, RecoveryReport, baseline_sft, fps_sft

DENSE_MAX_ELEMS = 2**22
CLUSTER_SIZES = {9: 1, 25: 2}  # cluster size -> block radius
_PLACEMENTS = ("uniform", "clustered")
ALGORITHMS = {"fps": fps_sft, "baseline": baseline_sft}


def dense_dft(cube: np.ndarray, *, max_elems: int = DENSE_MAX_ELEMS) -> np.ndarray:
    """Full D-dimensional DFT with 1/N normalization (test-scale only)."""
    cube = np.asarray(cube, dtype=np.complex128)
    if cube.size > max_elems:
        raise ValueError(f"cube of {cube.size} elements exceeds the dense limit {max_elems}")
    if cube.size == 0:
        raise ValueError("empty cube")
    return np.fft.fftn(cube) / cube.size


def spectrum_from_dense(
    xhat: np.ndarray, shape: CubeShape, tol: float = 1e-10
) -> SparseSpectrum:
    """Threshold a dense transform into a sparse spectrum (oracle side)."""
    entries = {}
    for flat in np.nonzero(np.abs(xhat).ravel() > tol)[0]:
        idx = tuple(int(v) for v in np.unravel_index(int(flat), shape.dims))
        entries[idx] = complex(xhat[idx])
    return SparseSpectrum(shape, entries)


@dataclass(frozen=True)
class GeneratorSpec:
    """Sparse-signal generator parameters.

    ``placement`` is "uniform" or "clustered"; clustered draws disjoint
    square blocks of ``cluster_size`` (9 or 25) frequencies with toroidal
    wraparound. Amplitudes have fixed magnitude and uniform random phase.
    """

    shape: CubeShape
    k: int
    placement: str = "uniform"
    cluster_size: int | None = None
    amp_magnitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.placement not in _PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")
        if not 1 <= self.k <= self.shape.n_total:
            raise ValueError(f"k={self.k} out of range for shape {self.shape.dims}")
        if self.placement == "clustered":
            if self.cluster_size not in CLUSTER_SIZES:
                raise ValueError(f"cluster_size must be one of {sorted(CLUSTER_SIZES)}")
            if self.k % self.cluster_size != 0:
                raise ValueError("k must be divisible by cluster_size")
            if self.shape.ndim != 2:
                raise ValueError("clustered placement is defined for 2-D shapes")
        if self.amp_magnitude <= 0:
            raise ValueError("amp_magnitude must be positive")


_CLUSTER_RETRIES = 10_000


def _draw_indices(spec: GeneratorSpec, rng: np.random.Generator) -> list[FreqIndex]:
    shape = spec.shape
    if spec.placement == "uniform":
        flat = rng.choice(shape.n_total, size=spec.k, replace=False)
        return [
            tuple(int(v) for v in np.unravel_index(int(f), shape.dims)) for f in flat
        ]
    radius = CLUSTER_SIZES[spec.cluster_size]
    n_clusters = spec.k // spec.cluster_size
    deltas = [
        (d0, d1)
        for d0 in range(-radius, radius + 1)
        for d1 in range(-radius, radius + 1)
    ]
    chosen: set[FreqIndex] = set()
    blocks: list[FreqIndex] = []
    for _ in range(n_clusters):
        for _attempt in range(_CLUSTER_RETRIES):
            c0, c1 = (
                int(v)
                for v in np.unravel_index(int(rng.integers(0, shape.n_total)), shape.dims)
            )
            block = [
                ((c0 + d0) % shape.dims[0], (c1 + d1) % shape.dims[1])
                for d0, d1 in deltas
            ]
            if len(set(block)) == spec.cluster_size and not chosen.intersection(block):
                chosen.update(block)
                blocks.extend(block)
                break
        else:
            raise ValueError(
                f"could not place {n_clusters} disjoint clusters on {shape.dims}"
            )
    return blocks


def generate(spec: GeneratorSpec) -> tuple[SparseSpectrum, SignalSource]:
    """Draw a sparse spectrum per the spec and wrap it as a lazy source."""
    rng = np.random.default_rng(spec.seed)
    indices = _draw_indices(spec, rng)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(indices))
    entries = {
        idx: spec.amp_magnitude * complex(np.cos(ph), np.sin(ph))
        for idx, ph in zip(indices, phases)
    }
    spectrum = SparseSpectrum(spec.shape, entries)
    return spectrum, make_synthetic_source(spectrum)


@dataclass(frozen=True)
class TrialResult:
    success: bool
    samples_used: int
    percent_samples: float
    iterations: int
    wall_time: float
    terminated_by: str


def run_trial(
    algo: str, gen_spec: GeneratorSpec, config: FpsSftConfig, match_rtol: float = 1e-8
) -> TrialResult:
    """One generation + recovery + exact-match evaluation."""
    truth, source = generate(gen_spec)
    runner = ALGORITHMS[algo]
    t0 = time.perf_counter()
    report: RecoveryReport = runner(source, config)
    wall = time.perf_counter() - t0
    return TrialResult(
        success=spectra_match(report.recovered, truth, rtol=match_rtol),
        samples_used=report.samples_used,
        percent_samples=report.samples_used / gen_spec.shape.n_total,
        iterations=report.iterations_run,
        wall_time=wall,
        terminated_by=report.terminated_by,
    )


@dataclass(frozen=True)
class SweepRow:
    algo: str
    n0: int
    n1: int
    k: int
    placement: str
    trials: int
    p_success: float
    mean_percent_samples: float  # among successful trials; nan if none
    mean_iters: float
    mean_wall_ms: float


SWEEP_CSV_COLUMNS = (
    "algo",
    "N0",
    "N1",
    "K",
    "placement",
    "trials",
    "p_success",
    "mean_percent_samples",
    "mean_iters",
    "mean_wall_ms",
)

_PLACEMENT_NAMES = {
    "uniform": ("uniform", None),
    "clustered9": ("clustered", 9),
    "clustered25": ("clustered", 25),
}


def parse_placement(name: str) -> tuple[str, int | None]:
    """Map a sweep placement name to (placement, cluster_size)."""
    try:
        return _PLACEMENT_NAMES[name]
    except KeyError:
        raise ValueError(
            f"unknown placement {name!r}; expected one of {sorted(_PLACEMENT_NAMES)}"
        ) from None


def _trial_seeds(seed: int, n: int) -> list[tuple[int, int]]:
    """Deterministic (generator, algorithm) seed pairs for n trials."""
    children = np.random.SeedSequence(seed).spawn(n)
    out = []
    for child in children:
        gen_ss, algo_ss = child.spawn(2)
        out.append(
            (
                int(gen_ss.generate_state(1, dtype=np.uint64)[0]),
                int(algo_ss.generate_state(1, dtype=np.uint64)[0]),
            )
        )
    return out


def _run_cell_trial(args) -> TrialResult:
    algo, gen_spec, config = args
    return run_trial(algo, gen_spec, config)


def run_sweep(
    algos: Sequence[str],
    shapes: Sequence[CubeShape],
    k_values: Sequence[int],
    placements: Sequence[str],
    trials: int,
    seed: int,
    *,
    config: FpsSftConfig = FpsSftConfig(),
    threads: int | None = None,
) -> list[SweepRow]:
    """Monte Carlo sweep over (algo, shape, K, placement) cells.

    Per-trial seeds derive deterministically from ``seed``, so results do
    not depend on worker scheduling. Shapes must be 2-D (the CSV schema
    carries N0/N1).
    """
    for shape in shapes:
        if shape.ndim != 2:
            raise ValueError("sweep shapes must be 2-D")
    jobs = []
    cells = []
    for algo in algos:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}")
        for shape in shapes:
            for k in k_values:
                for placement_name in placements:
                    placement, cluster = parse_placement(placement_name)
                    cells.append((algo, shape, k, placement_name))
                    for gen_seed, algo_seed in _trial_seeds(seed, trials):
                        gen_spec = GeneratorSpec(
                            shape=shape,
                            k=k,
                            placement=placement,
                            cluster_size=cluster,
                            seed=gen_seed,
                        )
                        jobs.append((algo, gen_spec, replace(config, seed=algo_seed)))

    if threads is not None and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell_trial, jobs, chunksize=4))
    else:
        results = [_run_cell_trial(job) for job in jobs]

    rows = []
    for i, (algo, shape, k, placement_name) in enumerate(cells):
        cell = results[i * trials : (i + 1) * trials]
        successes = [t for t in cell if t.success]
        rows.append(
            SweepRow(
                algo=algo,
                n0=shape.dims[0],
                n1=shape.dims[1],
                k=k,
                placement=placement_name,
                trials=trials,
                p_success=len(successes) / trials,
                mean_percent_samples=(
                    float(np.mean([t.percent_samples for t in successes]))
                    if successes
                    else float("nan")
                ),
                mean_iters=float(np.mean([t.iterations for t in cell])),
                mean_wall_ms=float(np.mean([t.wall_time for t in cell])) * 1e3,
            )
        )
    return rows


def sweep_rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.algo,
                r.n0,
                r.n1,
                r.k,
                r.placement,
                r.trials,
                f"{r.p_success:.6g}",
                f"{r.mean_percent_samples:.6g}",
                f"{r.mean_iters:.6g}",
                f"{r.mean_wall_ms:.6g}",
            ]
        )
    return buf.getvalue()


def sweep_rows_to_dicts(rows: Sequence[SweepRow]) -> list[dict]:
    return [
        {
            "algo": r.algo,
            "N0": r.n0,
            "N1": r.n1,
            "K": r.k,
            "placement": r.placement,
            "trials": r.trials,
            "p_success": r.p_success,
            "mean_percent_samples": r.mean_percent_samples,
            "mean_iters": r.mean_iters,
            "mean_wall_ms": r.mean_wall_ms,
        }
        for r in rows
    ]
