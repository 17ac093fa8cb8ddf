"""Discrete sampling lines: index generation, extraction, and the D+1
offset pattern that makes per-dimension frequency decoding possible."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CubeShape, FreqIndex, SignalSource
from .numtheory import SlopeVector, is_valid_slope


@dataclass(frozen=True)
class LineParams:
    """One discrete line: slope vector, starting offset, and length L."""

    alpha: SlopeVector
    tau: tuple[int, ...]
    length: int


def make_line_params(
    alpha: Sequence[int], tau: Sequence[int], shape: CubeShape
) -> LineParams:
    """Validated constructor; rejects slopes without the uniform-fiber
    guarantee and offsets off the grid."""
    alpha = tuple(int(a) for a in alpha)
    if not is_valid_slope(alpha, shape):
        raise ValueError(f"slope {alpha} is not valid for shape {shape.dims}")
    tau = shape.validate_index(tau)
    return LineParams(alpha=alpha, tau=tau, length=shape.line_len)


def line_indices(params: LineParams, shape: CubeShape) -> np.ndarray:
    """(L, D) index array: row l is ``([alpha_k*l + tau_k] mod N_k)_k``.

    The line wraps around the cube and stays on the grid by construction.
    """
    if params.length != shape.line_len:
        raise ValueError(f"params length {params.length} != line length {shape.line_len}")
    steps = np.arange(params.length, dtype=np.int64)[:, None]
    alpha = np.asarray(params.alpha, dtype=np.int64)
    tau = np.asarray(params.tau, dtype=np.int64)
    return (steps * alpha + tau) % shape.dims_array


def extract_line(source: SignalSource, params: LineParams) -> np.ndarray:
    """Sample the source along the line; uses exactly L samples."""
    shape = source.shape()
    return source.sample_many(line_indices(params, shape))


def decoding_offsets(tau: Sequence[int], shape: CubeShape) -> list[FreqIndex]:
    """The D+1 offsets used per iteration: the base offset, then one copy
    per dimension with that coordinate advanced by one (mod N_k)."""
    tau = shape.validate_index(tau)
    offsets = [tau]
    for k, n in enumerate(shape.dims):
        bumped = list(tau)
        bumped[k] = (bumped[k] + 1) % n
        offsets.append(tuple(bumped))
    return offsets
