"""Blind multiscale watermark scan.

The shot's luma is rescaled to 9 working scales (1.0 down to 0.2). At each
scale the adaptive Wiener residual is swept by a sliding square window; every
window is scored by comparing DFT magnitudes inside the two orthogonal
detection sectors. The per-scale score grids (intensity heat maps) drive the
scale decision and the downstream bounding-box stage.
"""

from dataclasses import dataclass

import numpy as np

from .embedder import MarkParams
from .errors import NoWatermarkFound
from .imaging import fft2, resize_bilinear, to_luma, wiener_residual

# Detection sectors widen the embedding angle range by this margin on each end.
ANGLE_EXPAND_DEG = 5.0
# Cells with |d| below this are treated as watermark-free (threshold on the
# count difference between the two sectors).
IHM_THRESHOLD = 4
# Top-k magnitudes collected per sector, matching the embedding location count.
TOP_K = 45
# Working scales, scanned largest first.
SCALES = tuple((10 - i) / 10 for i in range(9))

# Presence gate: a watermark is considered present only if some scale shows at
# least MIN_STRONG_CELLS windows with d >= STRONG_D and as many with
# d <= -STRONG_D. Content pasted on a flat backdrop can push a handful of
# boundary-straddling windows past STRONG_D in both signs (up to ~6 pairs
# observed); a real mark saturates whole margins (14+ pairs even at 10% area,
# 50+ at normal sizes), so the cell floor sits in the gap between the two.
STRONG_D = 20
MIN_STRONG_CELLS = 10


@dataclass
class IntensityHeatMap:
    grid: np.ndarray        # signed window scores, shape (rows, cols)
    d: np.ndarray           # raw count differences, same shape
    scale: float
    window_side: int
    stride: int


@dataclass
class ScaleSweep:
    scales: tuple
    lumas: list             # scaled luma images, one per scale
    ihms: list              # IntensityHeatMap per scale
    sim: np.ndarray         # per-scale std of IHM values


def detection_bins(params: MarkParams, window_side: int, group_b: bool = False,
                   expand_deg: float = ANGLE_EXPAND_DEG) -> np.ndarray:
    """Integer bins of the angle-expanded annular sector, upper half-plane.

    Radii scale with window/block ratio so a window of a different size looks
    at the same physical frequencies. Returned as (row, col) indices into the
    unshifted FFT layout; conjugate mates are redundant for magnitudes and are
    not enumerated.
    """
    ratio = window_side / params.block_side
    r_lo, r_hi = params.radius_min * ratio, params.radius_max * ratio
    a_lo = params.angle_min_deg - expand_deg + (90.0 if group_b else 0.0)
    a_hi = params.angle_max_deg + expand_deg + (90.0 if group_b else 0.0)
    lim = int(np.ceil(r_hi))
    bins = []
    for dv in range(0, lim + 1):
        for du in range(-lim, lim + 1):
            if dv == 0 and du <= 0:
                continue
            r = float(np.hypot(du, dv))
            if not (r_lo <= r <= r_hi):
                continue
            ang = np.degrees(np.arctan2(dv, du)) % 180.0
            if a_lo <= ang <= a_hi:
                bins.append((dv % window_side, du % window_side))
    return np.array(sorted(bins), dtype=np.intp)


def _sector_stats(mags_a: np.ndarray, mags_b: np.ndarray):
    """Top-k pivot statistics for one window; returns (score, d)."""
    ka = min(TOP_K, mags_a.shape[-1])
    kb = min(TOP_K, mags_b.shape[-1])
    top_a = np.sort(mags_a)[..., -ka:]
    top_b = np.sort(mags_b)[..., -kb:]
    pivot = (top_a.sum(-1) + top_b.sum(-1)) / (ka + kb)
    qa = top_a >= pivot[..., None]
    qb = top_b >= pivot[..., None]
    n1 = qa.sum(-1)
    n2 = qb.sum(-1)
    c1 = (top_a * qa).sum(-1)
    c2 = (top_b * qb).sum(-1)
    d = n1 - n2
    value = np.where(d < 0, c1 * d, c2 * d)
    value = np.where(np.abs(d) < IHM_THRESHOLD, 0.0, value)
    return value, d


def blind_detect_window(noise_win: np.ndarray, bins_a: np.ndarray, bins_b: np.ndarray,
                        t_ihm: int = IHM_THRESHOLD) -> float:
    """Signed watermark score of one residual window.

    Collects the top-45 magnitudes in each sector, counts entries at or above
    their common mean (N1, N2, with qualifying sums C1, C2) and forms
    d = N1 - N2. Returns 0 when |d| < t_ihm, else C1*d (d negative, GroupB
    signature) or C2*d (d positive, GroupA signature).
    """
    mags = np.abs(fft2(noise_win))
    value, d = _sector_stats(mags[bins_a[:, 0], bins_a[:, 1]],
                             mags[bins_b[:, 0], bins_b[:, 1]])
    if abs(int(d)) < t_ihm:
        return 0.0
    return float(value)


def compute_ihm(noise_img: np.ndarray, window_side: int, stride: int,
                bins_a: np.ndarray, bins_b: np.ndarray,
                scale: float = 1.0) -> IntensityHeatMap:
    """Score every sliding window of the residual image.

    Windows are batched through the FFT in row chunks; the result equals
    calling blind_detect_window per window.
    """
    h, w = noise_img.shape
    if h < window_side or w < window_side:
        empty = np.zeros((0, 0))
        return IntensityHeatMap(empty, empty.astype(int), scale, window_side, stride)
    rows = (h - window_side) // stride + 1
    cols = (w - window_side) // stride + 1
    grid = np.zeros((rows, cols))
    dgrid = np.zeros((rows, cols), dtype=int)
    x = np.ascontiguousarray(noise_img, dtype=np.float64)
    view = np.lib.stride_tricks.sliding_window_view(x, (window_side, window_side))
    view = view[::stride, ::stride]
    flat_a = bins_a[:, 0] * window_side + bins_a[:, 1]
    flat_b = bins_b[:, 0] * window_side + bins_b[:, 1]
    for r in range(rows):
        spec = np.fft.fft2(view[r], axes=(-2, -1))
        mags = np.abs(spec).reshape(cols, -1)
        value, d = _sector_stats(mags[:, flat_a], mags[:, flat_b])
        grid[r] = value
        dgrid[r] = d
    return IntensityHeatMap(grid, dgrid, scale, window_side, stride)


def multiscale(shot: np.ndarray) -> list:
    """Luma pyramid at the 9 working scales, largest (1.0, a plain copy) first."""
    luma = to_luma(shot)
    h, w = luma.shape
    out = []
    for s in SCALES:
        if s == 1.0:
            out.append(luma.copy())
        else:
            out.append(resize_bilinear(luma, max(1, round(w * s)), max(1, round(h * s))))
    return out


def build_sweep(shot: np.ndarray, params: MarkParams, stride: int = None) -> ScaleSweep:
    """Full multiscale scan: luma pyramid -> Wiener residuals -> IHM per scale."""
    window = params.block_side
    if stride is None:
        stride = window // 2
    bins_a = detection_bins(params, window, group_b=False)
    bins_b = detection_bins(params, window, group_b=True)
    lumas = multiscale(shot)
    ihms = []
    for s, luma in zip(SCALES, lumas):
        if min(luma.shape) >= 3:
            residual = wiener_residual(luma)
        else:
            residual = luma.astype(np.float64)
        ihms.append(compute_ihm(residual, window, stride, bins_a, bins_b, scale=s))
    sim = np.array([ihm.grid.std() if ihm.grid.size else 0.0 for ihm in ihms])
    return ScaleSweep(SCALES, lumas, ihms, sim)


def scale_decision(sweep: ScaleSweep) -> int:
    """First-stage NMS over scales.

    Returns the index of the first strict local SIM peak scanning from scale
    1.0 downward; endpoints cannot be peaks. Falls back to argmax when the
    series has no interior peak.
    """
    sim = sweep.sim
    if not np.any(sim > 0):
        raise NoWatermarkFound("no watermark found: scan response is zero at every scale")
    for i in range(1, len(sim) - 1):
        if sim[i] > sim[i - 1] and sim[i] > sim[i + 1]:
            return i
    return int(np.argmax(sim))


def strong_cell_counts(ihm: IntensityHeatMap,
                       strong_d: int = STRONG_D) -> tuple:
    """(positive, negative) counts of decisively strong cells in one IHM."""
    if ihm.d.size == 0:
        return 0, 0
    return int((ihm.d >= strong_d).sum()), int((ihm.d <= -strong_d).sum())


def watermark_present(sweep: ScaleSweep, strong_d: int = STRONG_D,
                      min_cells: int = MIN_STRONG_CELLS) -> bool:
    """Presence gate: some scale must show both sector signatures decisively.

    A real mark produces whole margins of near-saturated |d| in both signs at
    the matching scale; unmarked content essentially never does.
    """
    for ihm in sweep.ihms:
        pos, neg = strong_cell_counts(ihm, strong_d)
        if pos >= min_cells and neg >= min_cells:
            return True
    return False
