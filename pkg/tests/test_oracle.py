import cmath
import itertools

import numpy as np
import pytest

from fps_sft.core import CubeShape, SparseSpectrum, make_synthetic_source, spectra_match
from fps_sft.driver import FpsSftConfig
from fps_sft.oracle import (
    GeneratorSpec,
    SWEEP_CSV_COLUMNS,
    dense_dft,
    generate,
    parse_placement,
    run_sweep,
    run_trial,
    spectrum_from_dense,
    sweep_rows_to_csv,
    sweep_rows_to_dicts,
)
from fps_sft.transform import dft_forward

from conftest import random_spectrum


def dense_dft_naive(cube):
    """Quadruple-loop reference transform, independent of any fft code."""
    cube = np.asarray(cube, dtype=complex)
    dims = cube.shape
    out = np.zeros(dims, dtype=complex)
    for m in itertools.product(*(range(n) for n in dims)):
        total = 0j
        for n in itertools.product(*(range(d) for d in dims)):
            phase = sum(mk * nk / dk for mk, nk, dk in zip(m, n, dims))
            total += cube[n] * cmath.exp(-2j * cmath.pi * phase)
        out[m] = total / cube.size
    return out


class TestDenseDft:
    def test_single_sinusoid_recovers_amplitude(self):
        shape = CubeShape((8, 8))
        src = make_synthetic_source(SparseSpectrum(shape, {(2, 3): 2j}))
        grid = np.stack(np.unravel_index(np.arange(64), (8, 8)), axis=-1)
        cube = src.sample_many(grid).reshape(8, 8)
        xhat = dense_dft(cube)
        assert xhat[2, 3] == pytest.approx(2j, abs=1e-12)
        rest = xhat.copy()
        rest[2, 3] = 0
        assert np.abs(rest).max() <= 1e-12

    def test_all_ones_cube(self):
        xhat = dense_dft(np.ones((4, 4), dtype=complex))
        assert xhat[0, 0] == pytest.approx(1.0)
        rest = xhat.copy()
        rest[0, 0] = 0
        assert np.abs(rest).max() <= 1e-12

    def test_matches_naive_reference(self, rng):
        for dims in ((4, 4), (3, 5), (2, 3, 4)):
            cube = rng.normal(size=dims) + 1j * rng.normal(size=dims)
            got = dense_dft(cube)
            want = dense_dft_naive(cube)
            assert np.abs(got - want).max() <= 1e-12 * max(1.0, np.abs(want).max())

    def test_separability_against_1d_transforms(self, rng):
        # applying the normalized 1-D transform along each axis in turn must
        # reproduce the dense transform
        cube = rng.normal(size=(6, 8)) + 1j * rng.normal(size=(6, 8))
        step = np.stack([dft_forward(cube[:, j]) for j in range(8)], axis=1)
        full = np.stack([dft_forward(step[i, :]) for i in range(6)], axis=0)
        assert np.abs(full - dense_dft(cube)).max() <= 1e-12

    def test_size_guard(self):
        with pytest.raises(ValueError):
            dense_dft(np.zeros((1 << 12, 1 << 11)), max_elems=2**22)

    def test_spectrum_from_dense_round_trip(self, rng):
        shape = CubeShape((6, 9))
        spec = random_spectrum(rng, shape, k=5)
        grid = np.stack(np.unravel_index(np.arange(shape.n_total), shape.dims), axis=-1)
        cube = make_synthetic_source(spec).sample_many(grid).reshape(shape.dims)
        recovered = spectrum_from_dense(dense_dft(cube), shape)
        assert spectra_match(recovered, spec, rtol=1e-9)


class TestGenerator:
    def test_single_sinusoid(self):
        spec, source = generate(GeneratorSpec(shape=CubeShape((8, 8)), k=1, seed=0))
        assert spec.k == 1
        ((freq, amp),) = spec.entries.items()
        assert abs(abs(amp) - 1.0) <= 1e-12
        assert source.shape().dims == (8, 8)

    def test_clustered_geometry(self):
        spec, _ = generate(
            GeneratorSpec(
                shape=CubeShape((64, 64)), k=18, placement="clustered", cluster_size=9, seed=1
            )
        )
        assert spec.k == 18
        keys = set(spec.entries)
        # two disjoint full 3x3 blocks (toroidal): each member's block-center
        # count works out to exactly two distinct centers
        centers = [
            f
            for f in keys
            if all(((f[0] + d0) % 64, (f[1] + d1) % 64) in keys
                   for d0 in (-1, 0, 1) for d1 in (-1, 0, 1))
        ]
        assert len(centers) == 2

    def test_exhaustive_cover(self):
        spec, _ = generate(GeneratorSpec(shape=CubeShape((4, 4)), k=16, seed=3))
        assert set(spec.entries) == set(itertools.product(range(4), range(4)))

    def test_deterministic(self):
        a, _ = generate(GeneratorSpec(shape=CubeShape((16, 16)), k=8, seed=9))
        b, _ = generate(GeneratorSpec(shape=CubeShape((16, 16)), k=8, seed=9))
        assert a.entries == b.entries

    def test_magnitude_configurable(self):
        spec, _ = generate(GeneratorSpec(shape=CubeShape((8, 8)), k=4, amp_magnitude=2.5, seed=2))
        assert all(abs(abs(a) - 2.5) <= 1e-12 for a in spec.entries.values())

    def test_invalid_specs(self):
        shape = CubeShape((8, 8))
        with pytest.raises(ValueError):
            GeneratorSpec(shape=shape, k=0)
        with pytest.raises(ValueError):
            GeneratorSpec(shape=shape, k=65)
        with pytest.raises(ValueError):
            GeneratorSpec(shape=shape, k=9, placement="clustered", cluster_size=7)
        with pytest.raises(ValueError):
            GeneratorSpec(shape=shape, k=10, placement="clustered", cluster_size=9)
        with pytest.raises(ValueError):
            GeneratorSpec(shape=CubeShape((4, 4, 4)), k=9, placement="clustered", cluster_size=9)

    def test_infeasible_placement_raises(self):
        # two 3x3 blocks on a 4x5 torus always intersect (3+3 > 4 rows and
        # 3+3 > 5 columns), so the placement can never succeed
        with pytest.raises(ValueError, match="disjoint clusters"):
            generate(
                GeneratorSpec(
                    shape=CubeShape((4, 5)), k=18,
                    placement="clustered", cluster_size=9, seed=0,
                )
            )

    def test_placement_names(self):
        assert parse_placement("uniform") == ("uniform", None)
        assert parse_placement("clustered9") == ("clustered", 9)
        assert parse_placement("clustered25") == ("clustered", 25)
        with pytest.raises(ValueError):
            parse_placement("ring")


class TestSweep:
    def test_run_trial_success(self):
        result = run_trial(
            "fps",
            GeneratorSpec(shape=CubeShape((16, 16)), k=6, seed=2),
            FpsSftConfig(max_iterations=20, seed=3),
        )
        assert result.success
        assert result.samples_used == result.iterations * 3 * 16
        assert result.percent_samples == result.samples_used / 256

    def test_smoke_sweep_schema_and_determinism(self):
        kwargs = dict(
            algos=["fps"],
            shapes=[CubeShape((32, 32))],
            k_values=[8, 16],
            placements=["uniform"],
            trials=5,
            seed=11,
            config=FpsSftConfig(max_iterations=20, stall_limit=8),
        )
        rows = run_sweep(**kwargs)
        again = run_sweep(**kwargs)
        # wall-clock means differ run to run; everything else is deterministic
        stable = lambda r: (r.algo, r.n0, r.n1, r.k, r.placement, r.trials,
                            r.p_success, r.mean_percent_samples, r.mean_iters)
        assert [stable(r) for r in rows] == [stable(r) for r in again]
        assert len(rows) == 2
        assert all(r.p_success == 1.0 for r in rows)
        csv_text = sweep_rows_to_csv(rows)
        header = csv_text.splitlines()[0]
        assert header == ",".join(SWEEP_CSV_COLUMNS)
        dicts = sweep_rows_to_dicts(rows)
        assert set(dicts[0]) == set(SWEEP_CSV_COLUMNS)

    def test_parallel_matches_serial(self):
        kwargs = dict(
            algos=["fps"],
            shapes=[CubeShape((16, 16))],
            k_values=[6],
            placements=["uniform"],
            trials=6,
            seed=21,
            config=FpsSftConfig(max_iterations=20, stall_limit=8),
        )
        serial = run_sweep(**kwargs, threads=1)
        parallel = run_sweep(**kwargs, threads=2)
        # wall-clock fields vary between runs; everything else must agree
        for a, b in zip(serial, parallel):
            assert (a.algo, a.n0, a.n1, a.k, a.placement, a.trials) == (
                b.algo, b.n0, b.n1, b.k, b.placement, b.trials
            )
            assert a.p_success == b.p_success
            assert a.mean_percent_samples == pytest.approx(b.mean_percent_samples, nan_ok=True)
            assert a.mean_iters == b.mean_iters

    def test_rejects_non_2d_shapes(self):
        with pytest.raises(ValueError):
            run_sweep(
                ["fps"], [CubeShape((4, 4, 4))], [4], ["uniform"], 2, 0,
                config=FpsSftConfig(max_iterations=5),
            )
