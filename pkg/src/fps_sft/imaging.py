"""Sparse-image reconstruction through time/frequency duality.

A pixel-sparse image is pushed once through the dense transform; the
resulting frequency cube is wrapped as a sample source and handed to the
sparse recovery loop. Each recovered sinusoid maps back to one pixel: the
position is the negated frequency index (mod extents) and the value is the
amplitude rescaled by the cube size. Both facts follow from the 1/N
normalization of the dense transform and are pinned by a brute-force
round-trip test on tiny images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import CubeShape, make_dense_source
from .driver import FpsSftConfig, RecoveryReport, default_max_iterations, fps_sft
from .oracle import dense_dft

IMAG_RESIDUE_TOL = 1e-8


class PgmError(ValueError):
    """Malformed PGM input; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class GrayImage:
    """Grayscale image with float pixel values in [0, 1], row-major (H, W)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("pixels must be a nonempty 2-D array")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def nonzero_fraction(img: GrayImage) -> float:
    return float(np.count_nonzero(img.pixels)) / img.pixels.size


def sparsify(img: GrayImage, threshold: float) -> GrayImage:
    """Zero out every pixel strictly below the threshold (>= keeps)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    out = img.pixels.copy()
    out[out < threshold] = 0.0
    return GrayImage(out)


def threshold_for_fraction(img: GrayImage, fraction: float) -> float:
    """Threshold whose >= cut keeps approximately the given pixel fraction."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    return float(np.quantile(img.pixels, 1.0 - fraction))


def synthetic_phantom(dims: tuple[int, int] = (512, 576), seed: int = 0) -> GrayImage:
    """Smooth deterministic test image: a bounded sum of random anisotropic
    Gaussian blobs inside an elliptical support, normalized to [0, 1].

    Pixel values are continuous, so quantile thresholds can hit any target
    sparsity fraction.
    """
    h, w = dims
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    y = (yy - h / 2) / (h / 2)
    x = (xx - w / 2) / (w / 2)
    img = np.zeros((h, w))
    for _ in range(40):
        cy, cx = rng.uniform(-0.75, 0.75, size=2)
        sy, sx = rng.uniform(0.03, 0.25, size=2)
        rho = rng.uniform(-0.5, 0.5)
        amp = rng.uniform(0.2, 1.0)
        dy = (y - cy) / sy
        dx = (x - cx) / sx
        img += amp * np.exp(-0.5 * (dy**2 + dx**2 - 2 * rho * dy * dx) / (1 - rho**2))
    img *= np.exp(-0.5 * ((y / 0.9) ** 2 + (x / 0.9) ** 2) ** 4)
    img -= img.min()
    img /= img.max()
    return GrayImage(img)


def reconstruct_sparse_image(
    img_sparse: GrayImage, config: FpsSftConfig = FpsSftConfig()
) -> tuple[GrayImage, RecoveryReport]:
    """Recover a pixel-sparse image from samples of its frequency cube.

    The absolute amplitude knobs (prune tolerance, absolute energy floor)
    are rescaled by 1/N because dual amplitudes are pixel values divided by
    the cube size. With ``max_iterations=None`` the cap is opened up beyond
    the standard budget based on the observed pixel count, since the goal
    here is completion rather than a fixed sample budget.
    """
    shape = CubeShape(img_sparse.pixels.shape)
    n = shape.n_total
    k = int(np.count_nonzero(img_sparse.pixels))
    cfg = replace(
        config,
        amp_prune_tol=config.amp_prune_tol / n,
        energy_floor_abs=config.energy_floor_abs / n,
    )
    if cfg.max_iterations is None:
        auto = max(
            default_max_iterations(shape),
            math.ceil(4 * k / shape.line_len) + 20,
        )
        cfg = replace(cfg, max_iterations=auto)
    xhat = dense_dft(img_sparse.pixels.astype(np.complex128))
    source = make_dense_source(xhat, shape)
    report = fps_sft(source, cfg)

    out = np.zeros(shape.dims)
    scale = n  # inverse of the 1/N forward normalization
    for freq, amp in report.recovered.entries.items():
        value = amp * scale
        if abs(value.imag) > IMAG_RESIDUE_TOL:
            raise ValueError(
                f"non-real reconstructed pixel value {value!r} at dual index {freq}"
            )
        pos = tuple((-m) % dim for m, dim in zip(freq, shape.dims))
        out[pos] = value.real
    return GrayImage(np.clip(out, 0.0, 1.0)), report


# PGM (portable graymap) I/O: binary P5 and ASCII P2, 8- or 16-bit,
# mapped linearly onto [0, 1].


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmError("unexpected end of file in header", pos)
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    magic, pos = _read_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"not a PGM file (magic {magic!r})", 0)
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _read_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise PgmError(f"invalid {name} {token!r}", pos - len(token)) from None
        if value <= 0:
            raise PgmError(f"{name} must be positive, got {value}", pos - len(token))
        fields.append(value)
    width, height, maxval = fields
    if maxval > 65535:
        raise PgmError(f"maxval {maxval} exceeds 16-bit range", pos)
    count = width * height
    if magic == b"P5":
        pos += 1  # exactly one whitespace byte after maxval
        wide = maxval > 255
        need = count * (2 if wide else 1)
        raster = data[pos : pos + need]
        if len(raster) < need:
            raise PgmError(
                f"raster truncated: need {need} bytes, have {len(raster)}", pos + len(raster)
            )
        dtype = ">u2" if wide else np.uint8
        values = np.frombuffer(raster, dtype=dtype, count=count).astype(np.float64)
    else:
        values = np.empty(count)
        for i in range(count):
            token, pos = _read_token(data, pos)
            try:
                values[i] = int(token)
            except ValueError:
                raise PgmError(f"invalid sample {token!r}", pos - len(token)) from None
    if values.max() > maxval:
        raise PgmError(f"sample exceeds maxval {maxval}", pos)
    return GrayImage((values / maxval).reshape(height, width))


def write_pgm(img: GrayImage, path, *, maxval: int = 65535, ascii_format: bool = False) -> None:
    if not 1 <= maxval <= 65535:
        raise ValueError("maxval must be in [1, 65535]")
    quantized = np.rint(img.pixels * maxval).astype(np.uint32)
    header = f"{'P2' if ascii_format else 'P5'}\n{img.width} {img.height}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if ascii_format:
            lines = []
            for row in quantized:
                lines.append(" ".join(str(int(v)) for v in row))
            fh.write(("\n".join(lines) + "\n").encode("ascii"))
        else:
            dtype = ">u2" if maxval > 255 else np.uint8
            fh.write(quantized.astype(dtype).tobytes())
