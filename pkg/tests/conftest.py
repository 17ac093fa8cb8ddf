"""Shared test helpers.

The brute-force evaluators here are deliberately written with plain Python
arithmetic (cmath, fractions) so they stay independent of the library's
numpy code paths.
"""

from __future__ import annotations

import cmath
import itertools

import numpy as np
import pytest

from fps_sft.core import CubeShape, SparseSpectrum

# Shape family used by lemma-style property tests.
FAMILY_SIDES = (2, 3, 4, 6, 8, 9, 12)
FAMILY_2D = [CubeShape((a, b)) for a in FAMILY_SIDES for b in FAMILY_SIDES]
FAMILY_3D = [
    CubeShape(d)
    for d in ((2, 2, 2), (2, 2, 3), (2, 3, 4), (3, 3, 3), (4, 4, 4), (6, 4, 3), (6, 6, 6), (5, 5, 5))
]


def brute_sample(entries: dict, n, dims) -> complex:
    """Independent evaluation of the sinusoid mixture at one grid point."""
    total = 0j
    for freq, amp in entries.items():
        phase = sum(int(nk) * mk / nk_len for nk, mk, nk_len in zip(n, freq, dims))
        total += amp * cmath.exp(2j * cmath.pi * phase)
    return total


def brute_line_bins(entries: dict, alpha, tau, shape: CubeShape) -> np.ndarray:
    """Independent per-bin expectation: each sinusoid lands in the bin where
    the weighted index sum is congruent, carrying its offset phase.

    Uses the common-denominator integer route rather than the library's
    cofactor formula.
    """
    L = shape.line_len
    dims = shape.dims
    out = np.zeros(L, dtype=np.complex128)
    for freq, amp in entries.items():
        # numerator of sum_k m_k a_k / N_k over denominator prod(N_k), scaled to L
        bin_value = None
        for m in range(L):
            num = sum(
                mk * ak * (L // nk) for mk, ak, nk in zip(freq, alpha, dims)
            )
            if (num - m) % L == 0:
                bin_value = m
                break
        assert bin_value is not None
        phase = sum(mk * tk / nk for mk, tk, nk in zip(freq, tau, dims))
        out[bin_value] += amp * cmath.exp(2j * cmath.pi * phase)
    return out


def grid_points(shape: CubeShape):
    return itertools.product(*(range(n) for n in shape.dims))


def random_spectrum(
    rng: np.random.Generator, shape: CubeShape, k: int, amp_low=0.5, amp_high=2.0
) -> SparseSpectrum:
    flat = rng.choice(shape.n_total, size=k, replace=False)
    entries = {}
    for f in flat:
        idx = tuple(int(v) for v in np.unravel_index(int(f), shape.dims))
        mag = rng.uniform(amp_low, amp_high)
        ph = rng.uniform(0, 2 * np.pi)
        entries[idx] = mag * complex(np.cos(ph), np.sin(ph))
    return SparseSpectrum(shape, entries)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
