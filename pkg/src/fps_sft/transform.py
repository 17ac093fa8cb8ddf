"""Length-L forward/inverse DFTs with 1/L normalization on the forward
transform, so sinusoid amplitudes can be read directly off forward bins.

The fast path delegates to pocketfft (mixed-radix with a Bluestein fallback
for large prime factors), which is O(L log L) for arbitrary L, including
lengths like 4608 that arise as LCMs of image extents. A naive quadratic
reference implementation is kept for tests.
"""

from __future__ import annotations

import numpy as np

Spectrum1D = np.ndarray


def dft_forward(s: np.ndarray) -> Spectrum1D:
    """``shat[m] = (1/L) * sum_l s[l] * exp(-2j*pi*l*m/L)``."""
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("expected a nonempty 1-D array")
    return np.fft.fft(s) / s.size


def dft_inverse(shat: Spectrum1D) -> np.ndarray:
    """``s[l] = sum_m shat[m] * exp(2j*pi*l*m/L)`` (no 1/L factor), so that
    ``dft_inverse(dft_forward(v)) == v``."""
    shat = np.asarray(shat, dtype=np.complex128)
    if shat.ndim != 1 or shat.size < 1:
        raise ValueError("expected a nonempty 1-D array")
    return np.fft.ifft(shat) * shat.size


def dft_forward_direct(s: np.ndarray) -> Spectrum1D:
    """O(L^2) direct-sum reference transform, for use as a test oracle only."""
    s = np.asarray(s, dtype=np.complex128)
    L = s.size
    grid = np.arange(L)
    kernel = np.exp(-2j * np.pi * np.outer(grid, grid) / L)
    return (kernel @ s) / L
