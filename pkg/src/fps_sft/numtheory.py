"""Modular arithmetic behind line design: slope validity, Bezout
certificates, and the frequency-to-bin projection map.

A slope ``alpha`` is valid for a shape when the projection
``m -> sum_k (L/N_k) * alpha_k * m_k  (mod L)`` maps the full frequency grid
onto the L line bins uniformly: every bin receives exactly ``N/L`` grid
points (its fiber), and fibers are pairwise disjoint.
"""

from __future__ import annotations

import itertools
import math
from math import gcd
from typing import Sequence

import numpy as np

from .core import INT64_SAFE, CubeShape, FreqIndex

__all__ = [
    "gcd",
    "lcm_all",
    "is_valid_slope",
    "sample_slope",
    "valid_slopes",
    "bezout",
    "bin_of_frequency",
    "bins_of_frequencies",
    "fiber_of_bin",
]

SlopeVector = tuple[int, ...]

# Give up on rejection sampling after this many multiples of N draws and
# enumerate the valid set instead (same uniform distribution either way).
_REJECTION_CAP_FACTOR = 10

# fiber_of_bin enumerates the full grid; refuse absurd sizes.
_ENUM_MAX = 2**22


def lcm_all(dims: Sequence[int]) -> int:
    """LCM of all dimension lengths; raises instead of silently wrapping."""
    dims = [int(n) for n in dims]
    if not dims or any(n < 1 for n in dims):
        raise ValueError(f"dimension lengths must be positive, got {dims}")
    lcm = math.lcm(*dims)
    if lcm >= INT64_SAFE:
        raise OverflowError(f"lcm{tuple(dims)} exceeds the machine integer range")
    return lcm


def is_valid_slope(alpha: Sequence[int], shape: CubeShape) -> bool:
    """Check the coprimality conditions that guarantee uniform disjoint fibers.

    For every pair of non-degenerate dimensions (``N_k > 1``) we require
    ``alpha_i`` coprime to ``alpha_j`` and to ``c_j = L/N_j``.  Dimensions of
    length one are inert (``m_k = 0`` contributes nothing) and are skipped;
    a one-point shape accepts its single all-zero slope.  The final gcd test
    makes the projection surjective even when only one dimension is active.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != shape.ndim:
        raise ValueError(f"slope {alpha} has wrong dimensionality for {shape.dims}")
    for a, n in zip(alpha, shape.dims):
        if not 0 <= a < n:
            raise ValueError(f"slope component {a} out of range [0, {n})")
    c = shape.cofactors
    active = [k for k, n in enumerate(shape.dims) if n > 1]
    for i, j in itertools.combinations(active, 2):
        if gcd(alpha[i], alpha[j]) != 1:
            return False
    for i in active:
        for j in active:
            if i != j and gcd(alpha[i], c[j]) != 1:
                return False
    g = shape.line_len
    for k in active:
        g = gcd(g, c[k] * alpha[k])
    return g == 1


def valid_slopes(shape: CubeShape) -> list[SlopeVector]:
    """Enumerate every valid slope for the shape (test/fallback use)."""
    if shape.n_total > _ENUM_MAX:
        raise ValueError(f"refusing to enumerate slopes for {shape.n_total} grid points")
    out = []
    for alpha in itertools.product(*(range(n) for n in shape.dims)):
        if is_valid_slope(alpha, shape):
            out.append(alpha)
    return out


def sample_slope(shape: CubeShape, rng: np.random.Generator) -> SlopeVector:
    """Draw a slope uniformly over the valid set.

    Rejection-samples uniformly over the full grid until the validity check
    passes; the all-ones slope is always valid so the set is never empty.
    A draw cap bounds the worst case, after which the valid set is
    enumerated and sampled directly (identical distribution).
    """
    dims = shape.dims_array
    cap = _REJECTION_CAP_FACTOR * shape.n_total
    for _ in range(cap):
        alpha = tuple(int(a) for a in rng.integers(0, dims))
        if is_valid_slope(alpha, shape):
            return alpha
    candidates = valid_slopes(shape)
    return candidates[int(rng.integers(0, len(candidates)))]


def bezout(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: returns ``(g, u, v)`` with ``u*a + v*b == g == gcd(a, b)``."""
    a, b = int(a), int(b)
    if a < 1 or b < 1:
        raise ValueError("bezout arguments must be positive")
    old_r, r = a, b
    old_u, u = 1, 0
    old_v, v = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_u, u = u, old_u - q * u
        old_v, v = v, old_v - q * v
    return old_r, old_u, old_v


def bin_of_frequency(m: Sequence[int], alpha: Sequence[int], shape: CubeShape) -> int:
    """The unique line-DFT bin that frequency ``m`` projects onto:
    ``sum_k c_k * m_k * alpha_k  (mod L)``.  Python integers keep the
    intermediate products exact at any size."""
    m = shape.validate_index(m)
    c = shape.cofactors
    total = sum(ck * int(mk) * int(ak) for ck, mk, ak in zip(c, m, alpha))
    return total % shape.line_len


def bins_of_frequencies(
    freqs: np.ndarray, alpha: Sequence[int], shape: CubeShape
) -> np.ndarray:
    """Vectorized ``bin_of_frequency`` over a (K, D) index array."""
    freqs = np.asarray(freqs, dtype=np.int64)
    weights = [ck * int(ak) for ck, ak in zip(shape.cofactors, alpha)]
    bound = sum(w * (n - 1) for w, n in zip(weights, shape.dims))
    if bound >= INT64_SAFE:
        out = [
            sum(w * int(mk) for w, mk in zip(weights, row)) % shape.line_len
            for row in freqs
        ]
        return np.asarray(out, dtype=np.int64)
    w = np.asarray(weights, dtype=np.int64)
    return (freqs @ w) % shape.line_len


def fiber_of_bin(bin_index: int, alpha: Sequence[int], shape: CubeShape) -> set[FreqIndex]:
    """All frequency indices projecting onto one line bin, by enumeration.

    Test-support operation: walks the whole grid, so it is gated on size.
    """
    bin_index = int(bin_index)
    if not 0 <= bin_index < shape.line_len:
        raise ValueError(f"bin {bin_index} out of range [0, {shape.line_len})")
    if shape.n_total > _ENUM_MAX:
        raise ValueError(f"refusing to enumerate a grid of {shape.n_total} points")
    grid = np.stack(
        np.unravel_index(np.arange(shape.n_total), shape.dims), axis=-1
    ).astype(np.int64)
    bins = bins_of_frequencies(grid, alpha, shape)
    return {tuple(int(v) for v in row) for row in grid[bins == bin_index]}
