"""Disk round trips and failure modes for image files."""

import numpy as np
import pytest
from numpy.random import default_rng
from PIL import Image

from shotmark.imgio import ImageIOError, load_image, save_image


class TestRoundTrip:
    def test_gray_png(self, tmp_path):
        img = default_rng(0).integers(0, 256, (40, 60)).astype(np.uint8)
        p = tmp_path / "g.png"
        save_image(p, img)
        back = load_image(p)
        np.testing.assert_array_equal(back, img)
        assert back.dtype == np.uint8

    def test_rgb_png(self, tmp_path):
        img = default_rng(1).integers(0, 256, (30, 20, 3)).astype(np.uint8)
        p = tmp_path / "c.png"
        save_image(p, img)
        np.testing.assert_array_equal(load_image(p), img)

    def test_float_input_clipped_and_rounded(self, tmp_path):
        img = np.array([[-20.0, 99.6], [300.0, 0.4]])
        p = tmp_path / "f.png"
        save_image(p, img)
        np.testing.assert_array_equal(load_image(p),
                                      [[0, 100], [255, 0]])

    def test_jpeg_lossy_but_close(self, tmp_path):
        img = np.full((64, 64), 128, dtype=np.uint8)
        p = tmp_path / "j.jpg"
        save_image(p, img)
        back = load_image(p)
        assert np.abs(back.astype(int) - 128).max() <= 2


class TestLoadConversions:
    def test_sixteen_bit_reduced_to_gray(self, tmp_path):
        deep = Image.fromarray(np.full((10, 10), 40000, dtype=np.uint16))
        p = tmp_path / "deep.png"
        deep.save(p)
        back = load_image(p)
        assert back.dtype == np.uint8 and back.ndim == 2

    def test_palette_file_becomes_rgb(self, tmp_path):
        pal = Image.fromarray(
            default_rng(2).integers(0, 256, (12, 12)).astype(np.uint8)
        ).convert("P")
        p = tmp_path / "pal.png"
        pal.save(p)
        assert load_image(p).shape == (12, 12, 3)


class TestFailures:
    def test_missing_file(self, tmp_path):
        p = tmp_path / "nope.png"
        with pytest.raises(ImageIOError, match="nope.png"):
            load_image(p)

    def test_corrupt_file(self, tmp_path):
        p = tmp_path / "bad.png"
        p.write_bytes(b"this is not an image at all")
        with pytest.raises(ImageIOError, match="bad.png"):
            load_image(p)

    def test_unsaveable_shape(self, tmp_path):
        with pytest.raises(ImageIOError, match="shape"):
            save_image(tmp_path / "x.png", np.zeros((2, 2, 2, 2)))

    def test_unwritable_directory(self, tmp_path):
        with pytest.raises(ImageIOError, match="cannot write"):
            save_image(tmp_path / "no" / "dir" / "x.png", np.zeros((4, 4)))
