import cmath
import itertools

import numpy as np
import pytest

from fps_sft.core import CubeShape
from fps_sft.driver import FpsSftConfig
from fps_sft.imaging import (
    GrayImage,
    PgmError,
    nonzero_fraction,
    read_pgm,
    reconstruct_sparse_image,
    sparsify,
    synthetic_phantom,
    threshold_for_fraction,
    write_pgm,
)


def image_with_pixels(dims, pixels):
    px = np.zeros(dims)
    for pos, val in pixels.items():
        px[pos] = val
    return GrayImage(px)


class TestGrayImage:
    def test_validation(self):
        with pytest.raises(ValueError):
            GrayImage(np.zeros((0, 4)))
        with pytest.raises(ValueError):
            GrayImage(np.full((2, 2), 1.5))
        with pytest.raises(ValueError):
            GrayImage(np.full((2, 2), -0.1))

    def test_dimensions(self):
        img = GrayImage(np.zeros((3, 5)))
        assert img.height == 3
        assert img.width == 5


class TestSparsify:
    def test_zero_threshold_keeps_everything(self, rng):
        img = GrayImage(rng.uniform(0.1, 1.0, size=(4, 4)))
        assert np.array_equal(sparsify(img, 0.0).pixels, img.pixels)

    def test_threshold_one_keeps_only_saturated(self):
        img = image_with_pixels((2, 2), {(0, 0): 1.0, (0, 1): 0.999})
        out = sparsify(img, 1.0)
        assert out.pixels[0, 0] == 1.0
        assert out.pixels[0, 1] == 0.0

    def test_fraction_reporting(self, rng):
        img = GrayImage(rng.uniform(0.0, 1.0, size=(10, 10)))
        sparse = sparsify(img, 0.9)
        assert nonzero_fraction(sparse) == np.count_nonzero(sparse.pixels) / 100

    def test_threshold_for_fraction_hits_target(self):
        phantom = synthetic_phantom((64, 72), seed=5)
        for target in (0.0285, 0.0448, 0.0661):
            t = threshold_for_fraction(phantom, target)
            got = nonzero_fraction(sparsify(phantom, t))
            assert got == pytest.approx(target, rel=0.08)


class TestPhantom:
    def test_deterministic_and_bounded(self):
        a = synthetic_phantom((32, 48), seed=2)
        b = synthetic_phantom((32, 48), seed=2)
        assert np.array_equal(a.pixels, b.pixels)
        assert a.pixels.min() >= 0.0 and a.pixels.max() <= 1.0


class TestPgm:
    @pytest.mark.parametrize("maxval", [255, 65535])
    @pytest.mark.parametrize("ascii_format", [False, True])
    def test_round_trip(self, tmp_path, rng, maxval, ascii_format):
        levels = rng.integers(0, maxval + 1, size=(5, 7))
        img = GrayImage(levels / maxval)
        path = tmp_path / "img.pgm"
        write_pgm(img, path, maxval=maxval, ascii_format=ascii_format)
        back = read_pgm(path)
        assert back.pixels.shape == (5, 7)
        assert np.abs(back.pixels - img.pixels).max() <= 1e-12

    def test_header_comments(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P2\n# a comment\n2 2\n# more\n255\n0 128\n255 64\n")
        img = read_pgm(path)
        assert img.pixels[0, 1] == pytest.approx(128 / 255)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P7\n2 2\n255\n....")
        with pytest.raises(PgmError, match="magic"):
            read_pgm(path)

    def test_truncated_raster_reports_offset(self, tmp_path):
        path = tmp_path / "trunc.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 7)
        with pytest.raises(PgmError, match="truncated") as err:
            read_pgm(path)
        assert err.value.offset == len(b"P5\n4 4\n255\n") + 7

    def test_invalid_header_token(self, tmp_path):
        path = tmp_path / "badw.pgm"
        path.write_bytes(b"P5\nxx 4\n255\n")
        with pytest.raises(PgmError, match="invalid width"):
            read_pgm(path)

    def test_sample_exceeds_maxval(self, tmp_path):
        path = tmp_path / "over.pgm"
        path.write_bytes(b"P2\n2 1\n100\n5 101\n")
        with pytest.raises(PgmError, match="exceeds maxval"):
            read_pgm(path)


class TestDuality:
    def test_scale_pinned_by_brute_force_4x4(self):
        # compute the frequency cube with an explicit double loop, recover,
        # and confirm position negation and the 1/N amplitude convention
        dims = (4, 4)
        img = image_with_pixels(dims, {(1, 3): 0.8})
        xhat = np.zeros(dims, dtype=complex)
        for m0, m1 in itertools.product(range(4), range(4)):
            total = 0j
            for n0, n1 in itertools.product(range(4), range(4)):
                total += img.pixels[n0, n1] * cmath.exp(
                    -2j * cmath.pi * (m0 * n0 / 4 + m1 * n1 / 4)
                )
            xhat[m0, m1] = total / 16
        # the frequency cube seen by the recovery loop is exactly a sinusoid
        # mixture with amplitude value/N at index (-position mod N)
        expected_amp = 0.8 / 16
        tone = expected_amp * np.exp(
            2j * np.pi * np.add.outer(np.arange(4) * ((-1) % 4) / 4, np.arange(4) * ((-3) % 4) / 4)
        )
        assert np.abs(xhat - tone).max() <= 1e-12
        recon, report = reconstruct_sparse_image(img, FpsSftConfig(max_iterations=8, seed=0))
        assert np.abs(recon.pixels - img.pixels).max() <= 1e-9
        assert list(report.recovered.entries) == [((-1) % 4, (-3) % 4)]

    def test_single_pixel_at_origin(self):
        img = image_with_pixels((8, 8), {(0, 0): 1.0})
        recon, report = reconstruct_sparse_image(img, FpsSftConfig(max_iterations=8, seed=1))
        assert np.abs(recon.pixels - img.pixels).max() <= 1e-9
        assert report.iterations_run == 1

    def test_single_offset_pixel(self):
        img = image_with_pixels((8, 8), {(2, 3): 0.6})
        recon, _ = reconstruct_sparse_image(img, FpsSftConfig(max_iterations=8, seed=2))
        assert np.abs(recon.pixels - img.pixels).max() <= 1e-9

    @pytest.mark.parametrize("dims", [(4, 4), (8, 8), (8, 12), (16, 16)])
    def test_round_trip_random_sparse_images(self, dims, rng):
        for trial in range(10):
            k = int(rng.integers(1, 7))
            flat = rng.choice(dims[0] * dims[1], size=k, replace=False)
            pixels = {}
            for f in flat:
                pos = tuple(int(v) for v in np.unravel_index(int(f), dims))
                pixels[pos] = float(rng.uniform(0.05, 1.0))
            img = image_with_pixels(dims, pixels)
            recon, report = reconstruct_sparse_image(
                img, FpsSftConfig(max_iterations=40, stall_limit=10, seed=trial)
            )
            assert np.abs(recon.pixels - img.pixels).max() <= 1e-9

    def test_report_counts_frequency_samples(self):
        img = image_with_pixels((8, 12), {(1, 1): 0.5, (5, 7): 0.9})
        _, report = reconstruct_sparse_image(img, FpsSftConfig(max_iterations=10, seed=3))
        assert report.samples_used == report.iterations_run * 3 * 24
