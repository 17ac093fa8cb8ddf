"""Domain types: cube shapes, sparse spectra, sinusoids, and sample sources.

Frequencies are always integer grid indices ``m_k`` with ``0 <= m_k < N_k``;
the corresponding radian frequency ``2*pi*m_k/N_k`` is never stored. All
amplitudes are double-precision complex.
"""

from __future__ import annotations

import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

# Largest integer magnitude we allow in index arithmetic before declaring
# that int64-based vectorized paths would overflow.
INT64_SAFE = 2**62

FreqIndex = tuple[int, ...]


@dataclass(frozen=True)
class CubeShape:
    """Extents ``[N_0, ..., N_{D-1}]`` of a D-dimensional data cube."""

    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        dims = tuple(int(n) for n in dims)
        if len(dims) < 1:
            raise ValueError("shape needs at least one dimension")
        if any(n < 1 for n in dims):
            raise ValueError(f"dimension lengths must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @cached_property
    def n_total(self) -> int:
        """Total number of grid points ``N = prod(N_k)``."""
        return math.prod(self.dims)

    @cached_property
    def line_len(self) -> int:
        """Line length ``L = lcm(N_0, ..., N_{D-1})``."""
        lcm = math.lcm(*self.dims)
        if lcm >= INT64_SAFE:
            raise OverflowError(f"line length lcm{self.dims} exceeds the machine integer range")
        return lcm

    @cached_property
    def cofactors(self) -> tuple[int, ...]:
        """Per-dimension factors ``c_k = L / N_k``."""
        return tuple(self.line_len // n for n in self.dims)

    @cached_property
    def dims_array(self) -> np.ndarray:
        return np.asarray(self.dims, dtype=np.int64)

    def contains(self, m: Sequence[int]) -> bool:
        return len(m) == self.ndim and all(0 <= int(v) < n for v, n in zip(m, self.dims))

    def validate_index(self, m: Sequence[int]) -> FreqIndex:
        m = tuple(int(v) for v in m)
        if not self.contains(m):
            raise ValueError(f"index {m} out of range for shape {self.dims}")
        return m


@dataclass(frozen=True)
class Sinusoid:
    """One complex sinusoid: amplitude and integer frequency index vector."""

    amp: complex
    freq: FreqIndex


class SparseSpectrum:
    """Finite map from frequency index vectors to nonzero complex amplitudes.

    Entries are kept in canonical (lexicographic) key order so that derived
    arrays, file output, and source evaluation are deterministic.
    """

    def __init__(self, shape: CubeShape, entries: Mapping[FreqIndex, complex]):
        self.shape = shape
        items = []
        for freq, amp in entries.items():
            freq = shape.validate_index(freq)
            amp = complex(amp)
            if amp == 0:
                raise ValueError(f"zero amplitude at frequency {freq}")
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"non-finite amplitude at frequency {freq}")
            items.append((freq, amp))
        items.sort(key=lambda kv: kv[0])
        if len({f for f, _ in items}) != len(items):
            raise ValueError("duplicate frequency entries")
        self.entries: dict[FreqIndex, complex] = dict(items)

    @classmethod
    def from_sinusoids(cls, shape: CubeShape, sinusoids: Iterable[Sinusoid]) -> "SparseSpectrum":
        return cls(shape, {s.freq: s.amp for s in sinusoids})

    @property
    def k(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseSpectrum)
            and self.shape == other.shape
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"SparseSpectrum(shape={self.shape.dims}, k={self.k})"

    @cached_property
    def freq_array(self) -> np.ndarray:
        """(K, D) int64 array of frequency indices in canonical order."""
        if not self.entries:
            return np.zeros((0, self.shape.ndim), dtype=np.int64)
        return np.asarray(list(self.entries.keys()), dtype=np.int64)

    @cached_property
    def amp_array(self) -> np.ndarray:
        """(K,) complex array of amplitudes, aligned with ``freq_array``."""
        return np.asarray(list(self.entries.values()), dtype=np.complex128)

    def scaled(self, factor: complex) -> "SparseSpectrum":
        if factor == 0:
            raise ValueError("scale factor must be nonzero")
        return SparseSpectrum(self.shape, {f: a * factor for f, a in self.entries.items()})


def spectra_match(
    estimate: SparseSpectrum, truth: SparseSpectrum, rtol: float = 1e-8
) -> bool:
    """True iff both spectra share the exact key set and amplitudes agree
    within ``rtol`` relative to the true amplitudes."""
    if estimate.shape.dims != truth.shape.dims:
        return False
    if estimate.entries.keys() != truth.entries.keys():
        return False
    return all(
        abs(estimate.entries[f] - a) <= rtol * abs(a) for f, a in truth.entries.items()
    )


class SignalSource(ABC):
    """Sample oracle ``n -> x(n)``. Implementations must be pure: repeated
    requests for the same index return the same value, and concurrent use is
    safe."""

    @abstractmethod
    def shape(self) -> CubeShape: ...

    @abstractmethod
    def sample(self, n: Sequence[int]) -> complex: ...

    def sample_many(self, indices: np.ndarray) -> np.ndarray:
        """Evaluate a batch of index vectors, one per row."""
        return np.asarray([self.sample(row) for row in indices], dtype=np.complex128)


class SyntheticSource(SignalSource):
    """Lazy mixture of sinusoids: ``x(n) = sum_i a_i exp(2j*pi*sum_k n_k m_ik / N_k)``.

    Evaluation goes through exact integer phase arithmetic: every phase is a
    multiple of ``1/L`` of a turn, so values come from a length-L table of
    roots of unity instead of per-sample transcendental calls.
    """

    def __init__(self, spectrum: SparseSpectrum):
        self._spectrum = spectrum
        shape = spectrum.shape
        self._cube = shape
        L = shape.line_len
        c = np.asarray(shape.cofactors, dtype=np.int64)
        # c_k * m_ik < L; an index adds a factor < N_k, so guard the sum.
        if shape.ndim * L * max(shape.dims) >= INT64_SAFE:
            raise OverflowError(f"shape {shape.dims} too large for int64 phase arithmetic")
        self._weights_t = np.ascontiguousarray((spectrum.freq_array * c).T)  # (D, K)
        self._amps = spectrum.amp_array
        self._table = np.exp(2j * np.pi * np.arange(L) / L)

    @property
    def spectrum(self) -> SparseSpectrum:
        return self._spectrum

    def shape(self) -> CubeShape:
        return self._cube

    def sample(self, n: Sequence[int]) -> complex:
        row = np.asarray([self._cube.validate_index(n)], dtype=np.int64)
        return complex(self.sample_many(row)[0])

    def sample_many(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        if self._amps.size == 0:
            return np.zeros(len(indices), dtype=np.complex128)
        # Accumulate integer phase units in place; one (n, K) temporary.
        units = indices[:, 0:1] * self._weights_t[0]
        for k in range(1, self._cube.ndim):
            units += indices[:, k : k + 1] * self._weights_t[k]
        units %= self._cube.line_len
        return self._table[units] @ self._amps


class DenseSource(SignalSource):
    """Sample oracle backed by a fully materialized data cube."""

    def __init__(self, cube: np.ndarray, shape: CubeShape):
        cube = np.asarray(cube, dtype=np.complex128)
        if cube.shape != shape.dims:
            raise ValueError(f"cube extents {cube.shape} do not match shape {shape.dims}")
        self._data = cube
        self._cube = shape

    def shape(self) -> CubeShape:
        return self._cube

    def sample(self, n: Sequence[int]) -> complex:
        return complex(self._data[self._cube.validate_index(n)])

    def sample_many(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        return self._data[tuple(indices.T)]


class CountingSource(SignalSource):
    """Wrapper that counts how many samples the algorithm requested.

    The counter is lock-protected so concurrent line extractions stay exact.
    """

    def __init__(self, inner: SignalSource):
        self._inner = inner
        self._lock = threading.Lock()
        self._count = 0

    @property
    def samples_used(self) -> int:
        return self._count

    def shape(self) -> CubeShape:
        return self._inner.shape()

    def sample(self, n: Sequence[int]) -> complex:
        with self._lock:
            self._count += 1
        return self._inner.sample(n)

    def sample_many(self, indices: np.ndarray) -> np.ndarray:
        with self._lock:
            self._count += len(indices)
        return self._inner.sample_many(indices)


def make_synthetic_source(spec: SparseSpectrum) -> SyntheticSource:
    """Sample oracle that evaluates the sinusoid mixture lazily, without
    materializing the cube."""
    return SyntheticSource(spec)


def make_dense_source(cube: np.ndarray, shape: CubeShape) -> DenseSource:
    """Sample oracle that looks values up in a stored cube."""
    return DenseSource(cube, shape)


# Text format: header "# shape N_0 N_1 ...", then one entry per line,
# "m_0 ... m_{D-1} re im". Amplitudes use 17 significant digits, which
# round-trips doubles exactly.


def save_spectrum(spectrum: SparseSpectrum, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# shape " + " ".join(str(n) for n in spectrum.shape.dims) + "\n")
        for freq, amp in spectrum.entries.items():
            idx = " ".join(str(m) for m in freq)
            fh.write(f"{idx} {amp.real:.17g} {amp.imag:.17g}\n")


def load_spectrum(path) -> SparseSpectrum:
    shape: CubeShape | None = None
    entries: dict[FreqIndex, complex] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                fields = line[1:].split()
                if fields[:1] == ["shape"]:
                    if shape is not None:
                        raise ValueError(f"{path}:{lineno}: duplicate shape header")
                    try:
                        shape = CubeShape(int(v) for v in fields[1:])
                    except ValueError as exc:
                        raise ValueError(f"{path}:{lineno}: bad shape header: {exc}") from None
                continue
            if shape is None:
                raise ValueError(f"{path}:{lineno}: entry before '# shape' header")
            fields = line.split()
            if len(fields) != shape.ndim + 2:
                raise ValueError(
                    f"{path}:{lineno}: expected {shape.ndim + 2} fields, got {len(fields)}"
                )
            try:
                freq = tuple(int(v) for v in fields[: shape.ndim])
                amp = complex(float(fields[-2]), float(fields[-1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not shape.contains(freq):
                raise ValueError(f"{path}:{lineno}: index {freq} out of range {shape.dims}")
            if freq in entries:
                raise ValueError(f"{path}:{lineno}: duplicate frequency {freq}")
            if amp == 0:
                raise ValueError(f"{path}:{lineno}: zero amplitude")
            entries[freq] = amp
    if shape is None:
        raise ValueError(f"{path}: missing '# shape' header")
    return SparseSpectrum(shape, entries)
