import numpy as np
import pytest

from shotmark.bbox import Quadrilateral
from shotmark.rectify import (Homography, estimate_dims, rectify,
                              solve_homography)


def random_boxy_quad(rng, span=400.0):
    """A well-conditioned convex quad: rectangle corners with bounded jitter."""
    x0, y0 = rng.uniform(0, span, 2)
    w, h = rng.uniform(60, span / 2, 2)
    jit = rng.uniform(-0.2, 0.2, size=(4, 2)) * (w, h)
    return Quadrilateral(
        (x0 + jit[0, 0], y0 + jit[0, 1]),
        (x0 + w + jit[1, 0], y0 + jit[1, 1]),
        (x0 + jit[2, 0], y0 + h + jit[2, 1]),
        (x0 + w + jit[3, 0], y0 + h + jit[3, 1]))


class TestHomography:
    def test_identity_apply(self):
        hom = Homography(1, 0, 0, 0, 1, 0, 0, 0)
        pts = np.array([(3.0, 4.0), (-1.0, 2.0)])
        assert np.allclose(hom.apply(pts), pts)

    def test_apply_matches_matrix(self):
        rng = np.random.default_rng(12)
        hom = Homography(*rng.uniform(-1, 1, 6), *rng.uniform(-1e-3, 1e-3, 2))
        pts = rng.uniform(0, 100, size=(5, 2))
        m = hom.matrix()
        homo = np.column_stack([pts, np.ones(5)]) @ m.T
        assert np.allclose(hom.apply(pts), homo[:, :2] / homo[:, 2:])


class TestEstimateDims:
    def test_axis_aligned(self):
        q = Quadrilateral((0, 0), (100, 0), (0, 50), (100, 50))
        assert estimate_dims(q) == (100, 50)

    def test_isosceles_trapezoid(self):
        # top 120, bottom 80, legs both 50 -> mean edges (100, 50)
        y = np.sqrt(50.0 ** 2 - 20.0 ** 2)
        q = Quadrilateral((0, 0), (120, 0), (20, y), (100, y))
        assert estimate_dims(q) == (100, 50)

    def test_rigid_invariance(self):
        rng = np.random.default_rng(13)
        base = Quadrilateral((0, 0), (211, 0), (0, 137), (211, 137))
        t = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        shift = rng.uniform(-500, 500, 2)
        moved = Quadrilateral(*(tuple(rot @ np.array(p) + shift)
                                for p in (base.a, base.b, base.c, base.d)))
        assert estimate_dims(moved) == estimate_dims(base)

    def test_degenerate(self):
        q = Quadrilateral((5, 5), (5, 5), (5, 5), (5, 5))
        with pytest.raises(ValueError, match="degenerate"):
            estimate_dims(q)


class TestSolveHomography:
    def test_identity_coefficients(self):
        q = Quadrilateral((0, 0), (99, 0), (0, 49), (99, 49))
        hom = solve_homography(q, 100, 50)
        assert np.allclose((hom.a1, hom.b1, hom.c1), (1, 0, 0), atol=1e-9)
        assert np.allclose((hom.a2, hom.b2, hom.c2), (0, 1, 0), atol=1e-9)
        assert np.allclose((hom.a0, hom.b0), (0, 0), atol=1e-12)

    def test_translation(self):
        q = Quadrilateral((5, 7), (104, 7), (5, 56), (104, 56))
        hom = solve_homography(q, 100, 50)
        assert hom.c1 == pytest.approx(-5.0)
        assert hom.c2 == pytest.approx(-7.0)
        assert hom.a1 == pytest.approx(1.0)

    def test_corner_residuals(self):
        rng = np.random.default_rng(14)
        worst = 0.0
        for _ in range(200):
            q = random_boxy_quad(rng)
            w, h = rng.integers(40, 800), rng.integers(40, 800)
            hom = solve_homography(q, int(w), int(h))
            got = hom.apply(q.corners())
            dst = np.array([(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1)],
                           dtype=np.float64)
            worst = max(worst, float(np.abs(got - dst).max()))
        assert worst < 1e-6

    def test_collinear_corners_rejected(self):
        q = Quadrilateral((0, 0), (1, 1), (2, 2), (3, 3))
        with pytest.raises(ValueError, match="singular"):
            solve_homography(q, 10, 10)


class TestRectify:
    # Quad corners sit on the content's outer boundary (the simulator's truth
    # convention), so a w-wide region rectifies to w samples spanning [x0, x0+w].
    # Bilinear sampling reproduces affine ramps exactly, which pins both the
    # convention and the warp in one analytic check.

    def test_output_size_matches_estimated_dims(self):
        shot = np.zeros((200, 300), dtype=np.uint8)
        q = Quadrilateral((80, 50), (140, 50), (80, 90), (140, 90))
        assert rectify(shot, q).shape == (40, 60)

    def test_axis_aligned_ramp(self):
        ys, xs = np.mgrid[0:200, 0:300]
        shot = 0.5 * xs + 0.25 * ys
        cw, ch, x0, y0 = 60, 40, 80, 50
        q = Quadrilateral((x0, y0), (x0 + cw, y0), (x0, y0 + ch), (x0 + cw, y0 + ch))
        rect = rectify(shot, q)
        vv, uu = np.mgrid[0:ch, 0:cw]
        want = 0.5 * (x0 + uu * cw / (cw - 1.0)) + 0.25 * (y0 + vv * ch / (ch - 1.0))
        assert np.abs(rect - want).max() < 1e-9

    def test_implausible_quad_rejected(self):
        shot = np.zeros((100, 100), dtype=np.uint8)
        q = Quadrilateral((0, 0), (5000, 0), (0, 5000), (5000, 5000))
        with pytest.raises(ValueError, match="implausible"):
            rectify(shot, q)

    def test_color_matches_per_channel(self):
        rng = np.random.default_rng(17)
        gray = rng.integers(0, 256, size=(120, 160)).astype(np.uint8)
        color = np.stack([gray, gray // 2, 255 - gray], axis=-1)
        q = Quadrilateral((10, 10), (150, 12), (8, 100), (148, 105))
        rect = rectify(color, q)
        assert rect.ndim == 3
        assert np.array_equal(rect[..., 0], rectify(gray, q))
