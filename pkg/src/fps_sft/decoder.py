"""Per-bin one-sparse detection and sinusoid decoding from D+1 line
spectra, plus projection of an already-recovered set onto line bins for
construction-subtraction.

A bin holding exactly one sinusoid shows the same magnitude in all D+1
spectra; stepping offset k by one rotates its phase by ``2*pi*m_k/N_k``,
which is what the decoder reads off. Decoding is guarded twice: the phase
must round cleanly to an integer index, and the D+1 values re-predicted
from the decoded sinusoid must match the observed ones. Collisions that
slip past the magnitude test get rejected instead of polluting the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import CubeShape, FreqIndex, Sinusoid, SparseSpectrum
from .lines import LineParams, decoding_offsets
from .numtheory import bins_of_frequencies
from .transform import Spectrum1D, dft_inverse

DEFAULT_MAG_TOL = 1e-6
DEFAULT_VERIFY_TOL = 1e-6
DEFAULT_ROUND_TOL = 0.05
DEFAULT_AMP_PRUNE_TOL = 1e-9
DEFAULT_ENERGY_FLOOR_REL = 1e-9
DEFAULT_ENERGY_FLOOR_ABS = 1e-12


@lru_cache(maxsize=64)
def _unit_roots(length: int) -> np.ndarray:
    roots = np.exp(2j * np.pi * np.arange(length) / length)
    roots.setflags(write=False)
    return roots


def _offset_phase_units(freqs: np.ndarray, tau: Sequence[int], shape: CubeShape) -> np.ndarray:
    """Exact phase of ``exp(2j*pi*sum_k m_k*tau_k/N_k)`` in units of 1/L turns."""
    weights = np.asarray(
        [ck * int(tk) for ck, tk in zip(shape.cofactors, tau)], dtype=np.int64
    )
    return (freqs @ weights) % shape.line_len


@dataclass(frozen=True)
class BinGroup:
    """The D+1 spectrum values observed at one bin, ordered like
    ``decoding_offsets``: base offset first, then one per stepped dimension."""

    bin: int
    values: tuple[complex, ...]


def is_one_sparse(
    group: BinGroup,
    *,
    mag_tol: float = DEFAULT_MAG_TOL,
    energy_floor: float = DEFAULT_ENERGY_FLOOR_ABS,
) -> bool:
    """Magnitude test: the bin is occupied and all D+1 magnitudes agree
    pairwise within ``mag_tol`` relative."""
    mags = np.abs(np.asarray(group.values, dtype=np.complex128))
    if mags[0] <= energy_floor:
        return False
    top = mags.max()
    return mags.max() - mags.min() <= mag_tol * top


def predicted_bin_values(
    amp: complex, freq: Sequence[int], tau: Sequence[int], shape: CubeShape
) -> np.ndarray:
    """Values a lone sinusoid ``(amp, freq)`` would show at its bin for each
    of the D+1 decoding offsets derived from ``tau``."""
    freq_row = np.asarray([shape.validate_index(freq)], dtype=np.int64)
    roots = _unit_roots(shape.line_len)
    out = np.empty(shape.ndim + 1, dtype=np.complex128)
    for i, off in enumerate(decoding_offsets(tau, shape)):
        units = int(_offset_phase_units(freq_row, off, shape)[0])
        out[i] = amp * roots[units]
    return out


def decode_bin(
    group: BinGroup,
    tau: Sequence[int],
    shape: CubeShape,
    *,
    round_tol: float = DEFAULT_ROUND_TOL,
    verify_tol: float = DEFAULT_VERIFY_TOL,
) -> Sinusoid | None:
    """Decode the sinusoid in a one-sparse bin, or return None to reject.

    Index k comes from the phase advance between the base spectrum and the
    spectrum with offset k stepped; the amplitude is the base value with the
    offset-induced phase removed. Rejects on a rounding residual above
    ``round_tol`` index units, or when re-predicting the D+1 values from the
    decoded sinusoid misses any observed value by more than ``verify_tol``
    relative to the base magnitude.
    """
    values = np.asarray(group.values, dtype=np.complex128)
    if values.shape != (shape.ndim + 1,):
        raise ValueError(f"expected {shape.ndim + 1} bin values, got {values.shape}")
    base = values[0]
    if base == 0:
        return None
    freq = []
    for k, n in enumerate(shape.dims):
        raw = n * np.angle(values[k + 1] / base) / (2 * np.pi)
        rounded = float(np.rint(raw))
        if abs(raw - rounded) > round_tol:
            return None
        freq.append(int(rounded) % n)
    freq = tuple(freq)
    freq_row = np.asarray([freq], dtype=np.int64)
    units = int(_offset_phase_units(freq_row, tau, shape)[0])
    amp = complex(base * np.conj(_unit_roots(shape.line_len)[units]))
    predicted = predicted_bin_values(amp, freq, tau, shape)
    if np.abs(predicted - values).max() > verify_tol * abs(base):
        return None
    return Sinusoid(amp=amp, freq=freq)


def decode_spectra(
    spectra: np.ndarray,
    tau: Sequence[int],
    shape: CubeShape,
    *,
    mag_tol: float = DEFAULT_MAG_TOL,
    round_tol: float = DEFAULT_ROUND_TOL,
    verify_tol: float = DEFAULT_VERIFY_TOL,
    energy_floor: float = DEFAULT_ENERGY_FLOOR_ABS,
) -> tuple[list[tuple[int, Sinusoid]], int]:
    """Vectorized sweep of ``is_one_sparse`` + ``decode_bin`` over all L bins.

    ``spectra`` has one row per decoding offset, shape (D+1, L). Returns the
    accepted ``(bin, sinusoid)`` pairs and the number of candidate bins that
    passed the magnitude test (accepted + rejected).
    """
    spectra = np.asarray(spectra, dtype=np.complex128)
    if spectra.shape != (shape.ndim + 1, shape.line_len):
        raise ValueError(f"expected ({shape.ndim + 1}, {shape.line_len}) spectra")
    mags = np.abs(spectra)
    top = mags.max(axis=0)
    candidates = (mags[0] > energy_floor) & (top - mags.min(axis=0) <= mag_tol * top)
    bins = np.nonzero(candidates)[0]
    n_candidates = int(bins.size)
    if n_candidates == 0:
        return [], 0
    base = spectra[0, bins]
    dims_col = shape.dims_array[:, None]
    raw = dims_col * np.angle(spectra[1:, bins] / base) / (2 * np.pi)  # (D, n)
    rounded = np.rint(raw)
    ok = np.all(np.abs(raw - rounded) <= round_tol, axis=0)
    freqs = rounded.astype(np.int64) % dims_col  # (D, n)
    roots = _unit_roots(shape.line_len)
    amps = base * np.conj(roots[_offset_phase_units(freqs.T, tau, shape)])
    for i, off in enumerate(decoding_offsets(tau, shape)):
        predicted = amps * roots[_offset_phase_units(freqs.T, off, shape)]
        ok &= np.abs(predicted - spectra[i, bins]) <= verify_tol * np.abs(base)
    accepted = [
        (int(b), Sinusoid(amp=complex(a), freq=tuple(int(v) for v in f)))
        for b, a, f, good in zip(bins, amps, freqs.T, ok)
        if good
    ]
    return accepted, n_candidates


def project_onto_bins(
    freqs: np.ndarray,
    amps: np.ndarray,
    alpha: Sequence[int],
    tau: Sequence[int],
    shape: CubeShape,
) -> Spectrum1D:
    """Length-L spectrum with each sinusoid's offset-phased amplitude added
    to the bin its frequency projects onto. O(K + L)."""
    out_re = np.zeros(shape.line_len)
    out_im = np.zeros(shape.line_len)
    if len(freqs):
        freqs = np.asarray(freqs, dtype=np.int64)
        vals = np.asarray(amps, dtype=np.complex128) * _unit_roots(shape.line_len)[
            _offset_phase_units(freqs, tau, shape)
        ]
        bins = bins_of_frequencies(freqs, alpha, shape)
        out_re = np.bincount(bins, weights=vals.real, minlength=shape.line_len)
        out_im = np.bincount(bins, weights=vals.imag, minlength=shape.line_len)
    return out_re + 1j * out_im


def construct_recovered_spectrum(
    recovered: SparseSpectrum,
    alpha: Sequence[int],
    tau: Sequence[int],
    shape: CubeShape,
) -> Spectrum1D:
    """Line spectrum the recovered set would produce for this slope/offset."""
    if recovered.shape.dims != shape.dims:
        raise ValueError("recovered spectrum shape does not match")
    return project_onto_bins(recovered.freq_array, recovered.amp_array, alpha, tau, shape)


def subtract_recovered(
    line: np.ndarray,
    recovered: SparseSpectrum,
    params: LineParams,
    shape: CubeShape,
) -> np.ndarray:
    """Remove the recovered set's contribution from raw line samples."""
    line = np.asarray(line, dtype=np.complex128)
    if line.size != shape.line_len:
        raise ValueError(f"line length {line.size} != {shape.line_len}")
    shat = construct_recovered_spectrum(recovered, params.alpha, params.tau, shape)
    return line - dft_inverse(shat)
