"""Multiscale scan: detection bins, window scoring, scale decision, gate."""

import numpy as np
import pytest
from numpy.random import default_rng

from shotmark.embedder import MarkParams
from shotmark.errors import NoWatermarkFound
from shotmark.imaging import to_luma
from shotmark.localizer import (SCALES, IntensityHeatMap, ScaleSweep,
                                blind_detect_window, build_sweep, compute_ihm,
                                detection_bins, multiscale, scale_decision,
                                strong_cell_counts, watermark_present)


def unwrap(idx, side):
    """Map an unshifted FFT index back to a signed frequency offset."""
    return idx - side if idx > side // 2 else idx


def polar(bins, side):
    dv = np.array([unwrap(v, side) for v in bins[:, 0]], dtype=float)
    du = np.array([unwrap(u, side) for u in bins[:, 1]], dtype=float)
    radius = np.hypot(du, dv)
    angle = np.degrees(np.arctan2(dv, du)) % 180.0
    return du, dv, radius, angle


class TestDetectionBins:
    def test_group_a_band(self):
        params = MarkParams()
        bins = detection_bins(params, 128)
        assert len(bins) > 0
        _, dv, radius, angle = polar(bins, 128)
        assert (dv >= 0).all()
        assert (radius >= 15.0).all() and (radius <= 25.0).all()
        assert (angle >= 30.0).all() and (angle <= 60.0).all()

    def test_radii_scale_with_window(self):
        params = MarkParams()
        bins = detection_bins(params, 64)
        _, _, radius, _ = polar(bins, 64)
        assert (radius >= 7.5).all() and (radius <= 12.5).all()

    def test_group_b_is_group_a_rotated(self):
        params = MarkParams()
        side = 128
        bins_a = detection_bins(params, side)
        bins_b = detection_bins(params, side, group_b=True)
        rotated = set()
        for bv, bu in bins_a:
            dv, du = unwrap(bv, side), unwrap(bu, side)
            rotated.add(((du) % side, (-dv) % side))   # (du,dv) -> (-dv,du)
        assert rotated == {tuple(b) for b in bins_b}

    def test_sorted_and_unique(self):
        bins = detection_bins(MarkParams(), 128)
        as_tuples = [tuple(b) for b in bins]
        assert as_tuples == sorted(as_tuples)
        assert len(set(as_tuples)) == len(as_tuples)

    def test_no_conjugate_mates_enumerated(self):
        side = 128
        bins = {tuple(b) for b in detection_bins(MarkParams(), side)}
        conjugates = {((-v) % side, (-u) % side) for v, u in bins}
        assert not (bins & conjugates)

    def test_zero_expansion_narrows_sector(self):
        params = MarkParams()
        wide = {tuple(b) for b in detection_bins(params, 128)}
        tight = detection_bins(params, 128, expand_deg=0.0)
        assert {tuple(b) for b in tight} < wide
        _, _, _, angle = polar(tight, 128)
        assert (angle >= 35.0).all() and (angle <= 55.0).all()


class TestComputeIhm:
    def test_matches_per_window_scoring(self):
        params = MarkParams()
        side, stride = 32, 16
        bins_a = detection_bins(params, side)
        bins_b = detection_bins(params, side, group_b=True)
        noise = default_rng(3).standard_normal((80, 96))
        ihm = compute_ihm(noise, side, stride, bins_a, bins_b, scale=0.5)
        assert ihm.grid.shape == (4, 5)
        assert ihm.scale == 0.5 and ihm.window_side == side and ihm.stride == stride
        for r in range(4):
            for c in range(5):
                win = noise[r * stride:r * stride + side,
                            c * stride:c * stride + side]
                assert ihm.grid[r, c] == pytest.approx(
                    blind_detect_window(win, bins_a, bins_b), abs=1e-9)

    def test_small_value_differences_are_zeroed(self):
        params = MarkParams()
        bins_a = detection_bins(params, 32)
        bins_b = detection_bins(params, 32, group_b=True)
        noise = default_rng(4).standard_normal((96, 96))
        ihm = compute_ihm(noise, 32, 16, bins_a, bins_b)
        assert (ihm.grid[np.abs(ihm.d) < 4] == 0.0).all()
        live = ihm.grid != 0
        np.testing.assert_array_equal(np.sign(ihm.grid[live]),
                                      np.sign(ihm.d[live]))

    def test_too_small_image_gives_empty_grid(self):
        params = MarkParams()
        bins_a = detection_bins(params, 64)
        bins_b = detection_bins(params, 64, group_b=True)
        ihm = compute_ihm(np.zeros((40, 40)), 64, 32, bins_a, bins_b)
        assert ihm.grid.shape == (0, 0)
        assert ihm.d.shape == (0, 0)


class TestMultiscale:
    def test_pyramid_shapes(self):
        img = default_rng(0).integers(0, 256, (100, 80)).astype(np.uint8)
        pyr = multiscale(img)
        assert len(pyr) == len(SCALES) == 9
        for s, level in zip(SCALES, pyr):
            assert level.shape == (max(1, round(100 * s)), max(1, round(80 * s)))

    def test_full_scale_is_a_copy(self):
        img = np.full((50, 50), 80, dtype=np.uint8)
        pyr = multiscale(img)
        pyr[0][0, 0] = 0
        assert img[0, 0] == 80

    def test_color_input_reduced_to_luma(self):
        rgb = default_rng(1).integers(0, 256, (60, 60, 3)).astype(np.uint8)
        pyr = multiscale(rgb)
        np.testing.assert_allclose(pyr[0], to_luma(rgb))


class TestScaleDecision:
    def make(self, sim):
        return ScaleSweep(SCALES, [], [], np.asarray(sim, dtype=float))

    def test_first_interior_peak_wins(self):
        sweep = self.make([1, 3, 2, 5, 1, 0, 0, 0, 0])
        assert scale_decision(sweep) == 1

    def test_monotone_series_falls_back_to_argmax(self):
        sweep = self.make([0, 1, 2, 3, 4, 5, 6, 7, 8])
        assert scale_decision(sweep) == 8

    def test_endpoint_maximum_is_not_a_peak(self):
        sweep = self.make([9, 1, 2, 1, 0, 0, 0, 0, 0])
        assert scale_decision(sweep) == 2

    def test_zero_response_raises(self):
        with pytest.raises(NoWatermarkFound, match="no watermark"):
            scale_decision(self.make(np.zeros(9)))


def make_ihm_with_d(d):
    d = np.asarray(d, dtype=int)
    return IntensityHeatMap(d.astype(float), d, 1.0, 128, 64)


def make_sweep(*dgrids):
    ihms = [make_ihm_with_d(d) for d in dgrids]
    sim = np.array([ihm.grid.std() for ihm in ihms])
    return ScaleSweep(SCALES[:len(ihms)], [], ihms, sim)


class TestPresenceGate:
    def test_strong_cell_counts(self):
        ihm = make_ihm_with_d([[25, -25], [19, -19], [45, 3]])
        assert strong_cell_counts(ihm, strong_d=20) == (2, 1)

    def test_empty_grid_counts_zero(self):
        ihm = IntensityHeatMap(np.zeros((0, 0)), np.zeros((0, 0), dtype=int),
                               1.0, 128, 64)
        assert strong_cell_counts(ihm) == (0, 0)

    def test_both_signs_at_one_scale_required(self):
        hit = [[20, 20, 20, 20], [-20, -20, -20, -20]]
        assert watermark_present(make_sweep(hit), strong_d=20, min_cells=4)

    def test_one_sign_short_fails(self):
        miss = [[20, 20, 20, 20], [-20, -20, -20, 0]]
        assert not watermark_present(make_sweep(miss), strong_d=20, min_cells=4)

    def test_signs_split_across_scales_fail(self):
        pos_only = [[20, 20, 20, 20], [0, 0, 0, 0]]
        neg_only = [[0, 0, 0, 0], [-20, -20, -20, -20]]
        assert not watermark_present(make_sweep(pos_only, neg_only),
                                     strong_d=20, min_cells=4)


class TestBuildSweep:
    def test_marked_image_passes_gate(self, marked, params):
        sweep = build_sweep(marked, params)
        assert len(sweep.ihms) == 9
        assert sweep.ihms[0].grid.shape == (11, 15)
        assert watermark_present(sweep)

    def test_unmarked_image_fails_gate(self, content, params):
        assert not watermark_present(build_sweep(content, params))
