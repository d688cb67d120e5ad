"""Bounding-box recovery from intensity heat maps.

Second NMS stage: around the decided scale, peaks of the heat map grids are
clustered into the four margin lines, fitted, and intersected into candidate
quadrilaterals; candidates across (peak count, scale) are scored by a local
cost and the best box wins.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LocalizationFailed
from .imaging import wiener_residual
from .localizer import (IntensityHeatMap, ScaleSweep, compute_ihm,
                        detection_bins)

PEAK_COUNT_MIN = 13
PEAK_COUNT_MAX = 18
LAMBDA = 5.0
BBOX_SCALE_COUNT = 4
REFINE_STRIDE = 32
# Count differences this deep only occur when a window is dominated by one
# marked group; they gate the sign-flip features of the refinement stage.
JUNCTION_D = 35
# Threshold for the strip support crossings; natural content stays below it.
SUPPORT_D = 20
MIN_JUNCTION_COLS = 3
RESID_MAX = 0.40
SLOPE_MAX = 0.10
# How far past the content edge windows keep firing over a quiet backdrop,
# as a fraction of the window: the support threshold sits near half the
# saturated count, so the crossing lands near half-coverage. Measured range
# across scales and corpora is 0.34-0.51.
BETA_MIN = 0.30
BETA_MAX = 0.60


@dataclass
class PeakSets:
    """Grid positions (row, col) and values of extracted peaks."""
    max_peaks: np.ndarray
    min_peaks: np.ndarray
    max_values: np.ndarray
    min_values: np.ndarray


@dataclass(frozen=True)
class Line:
    """Implicit line nx*x + ny*y = d with unit normal."""
    nx: float
    ny: float
    d: float

    def eval(self, x: float, y: float) -> float:
        return self.nx * x + self.ny * y - self.d


@dataclass
class Quadrilateral:
    """Corners in original-shot pixels: a=top-left, b=top-right,
    c=bottom-left, d=bottom-right."""
    a: tuple
    b: tuple
    c: tuple
    d: tuple

    def corners(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=np.float64)

    def perimeter(self) -> np.ndarray:
        """Corners in walk order (a, b, d, c)."""
        return np.array([self.a, self.b, self.d, self.c], dtype=np.float64)

    def as_dict(self) -> dict:
        return {k.upper(): [float(v[0]), float(v[1])]
                for k, v in zip("abcd", (self.a, self.b, self.c, self.d))}

    @classmethod
    def from_dict(cls, data: dict) -> "Quadrilateral":
        return cls(*(tuple(map(float, data[k])) for k in "ABCD"))


@dataclass
class QuadCandidate:
    quad: Quadrilateral
    ap_cost: float
    a_cost: float
    local_cost: float
    peak_count: int
    scale_index: int


def shoelace_area(points: np.ndarray) -> float:
    """Polygon area, points in walk order."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def extract_peaks(ihm: IntensityHeatMap, count: int) -> PeakSets:
    """Greedy peak picking with 3x3 suppression.

    Repeats `count` times on a working copy: take the argmax (argmin for the
    negative set), record it, zero its 3x3 neighborhood. Stops early once the
    best remaining value is no longer strictly positive (negative).
    """
    if not (PEAK_COUNT_MIN <= count <= PEAK_COUNT_MAX):
        raise ValueError(f"peak count {count} outside [{PEAK_COUNT_MIN}, {PEAK_COUNT_MAX}]")
    if ihm.grid.size == 0:
        empty = np.zeros((0, 2), dtype=np.float64)
        return PeakSets(empty, empty.copy(), np.zeros(0), np.zeros(0))

    def pick(grid, sign):
        work = grid * sign
        rows, cols = work.shape
        peaks, values = [], []
        for _ in range(count):
            flat = int(np.argmax(work))
            r, c = divmod(flat, cols)
            v = work[r, c]
            if v <= 0:
                break
            peaks.append((r, c))
            values.append(sign * v)
            work[max(0, r - 1):r + 2, max(0, c - 1):c + 2] = 0
        return (np.array(peaks, dtype=np.float64).reshape(-1, 2),
                np.array(values, dtype=np.float64))

    max_p, max_v = pick(ihm.grid.copy(), 1.0)
    min_p, min_v = pick(ihm.grid.copy(), -1.0)
    return PeakSets(max_p, min_p, max_v, min_v)


def refine_peaks(peaks: PeakSets, ihm: IntensityHeatMap) -> PeakSets:
    """Sub-cell peak positions from intensity-weighted 3x3 centroids.

    Peak rows/cols move to the centroid of the matching-sign mass around them
    in the untouched grid. Sharpens the line fits beyond stride quantization;
    values are kept as extracted.
    """
    grid = ihm.grid
    rows, cols = grid.shape

    def centroid(pts, sign):
        out = pts.copy()
        for i, (r, c) in enumerate(pts.astype(int)):
            r0, r1 = max(0, r - 1), min(rows, r + 2)
            c0, c1 = max(0, c - 1), min(cols, c + 2)
            w = np.clip(grid[r0:r1, c0:c1] * sign, 0, None)
            tot = w.sum()
            if tot <= 0:
                continue
            rr, cc = np.mgrid[r0:r1, c0:c1]
            out[i, 0] = float((w * rr).sum() / tot)
            out[i, 1] = float((w * cc).sum() / tot)
        return out

    return PeakSets(centroid(peaks.max_peaks, 1.0), centroid(peaks.min_peaks, -1.0),
                    peaks.max_values.copy(), peaks.min_values.copy())


def cluster_peaks(peaks: PeakSets) -> dict:
    """Mean splits: max peaks by row into top/bottom, min peaks by column
    into left/right. Points at the mean join the second cluster, so a flat
    set leaves the strict side empty (degenerate)."""
    if peaks.max_peaks.shape[0] == 0 or peaks.min_peaks.shape[0] == 0:
        raise ValueError("empty peak set")
    my = peaks.max_peaks[:, 0].mean()
    mx = peaks.min_peaks[:, 1].mean()
    return {
        "top": peaks.max_peaks[peaks.max_peaks[:, 0] < my],
        "bottom": peaks.max_peaks[peaks.max_peaks[:, 0] >= my],
        "left": peaks.min_peaks[peaks.min_peaks[:, 1] < mx],
        "right": peaks.min_peaks[peaks.min_peaks[:, 1] >= mx],
    }


def _fit_y_on_x(pts: np.ndarray) -> Line:
    # pts are (row, col) = (y, x) in grid coordinates
    x, y = pts[:, 1], pts[:, 0]
    vx = x.var()
    if vx < 1e-12:
        return Line(1.0, 0.0, float(x.mean()))  # vertical: x = const
    m = float(((x - x.mean()) * (y - y.mean())).sum() / ((x - x.mean()) ** 2).sum())
    c = float(y.mean() - m * x.mean())
    norm = float(np.hypot(m, 1.0))
    return Line(-m / norm, 1.0 / norm, c / norm)


def _fit_x_on_y(pts: np.ndarray) -> Line:
    x, y = pts[:, 1], pts[:, 0]
    vy = y.var()
    if vy < 1e-12:
        return Line(0.0, 1.0, float(y.mean()))  # horizontal: y = const
    m = float(((y - y.mean()) * (x - x.mean())).sum() / ((y - y.mean()) ** 2).sum())
    c = float(x.mean() - m * y.mean())
    norm = float(np.hypot(m, 1.0))
    return Line(1.0 / norm, -m / norm, c / norm)


def fit_lines(clusters: dict) -> tuple:
    """Least-squares margin lines (top, bottom, left, right) in grid coords.

    Top/bottom regress y on x; left/right regress x on y so near-vertical
    margins stay well conditioned. Zero-variance regressors fall back to the
    axis-aligned line through the points.
    """
    for name in ("top", "bottom", "left", "right"):
        if clusters[name].shape[0] < 2:
            raise ValueError(f"cluster '{name}' has fewer than 2 points")
    return (_fit_y_on_x(clusters["top"]), _fit_y_on_x(clusters["bottom"]),
            _fit_x_on_y(clusters["left"]), _fit_x_on_y(clusters["right"]))


def _cross(l1: Line, l2: Line) -> tuple:
    det = l1.nx * l2.ny - l1.ny * l2.nx
    if abs(det) < 1e-12:
        raise ValueError("parallel lines")
    x = (l1.d * l2.ny - l2.d * l1.ny) / det
    y = (l1.nx * l2.d - l2.nx * l1.d) / det
    return x, y


def intersect_corners(la: Line, lb: Line, lc: Line, ld: Line,
                      ihm: IntensityHeatMap, expand: float = None) -> Quadrilateral:
    """Corner points of the four margin lines, in original-shot pixels.

    Lines come in grid coordinates; each grid cell sits at its window center,
    so pixel coords are grid*stride + windowSide/2, divided by the working
    scale. The margin lines run through block centers, half a window inside
    the true content edge, so by default each line is pushed outward by
    windowSide/2 before intersecting.

    Raises ValueError when any needed pair is parallel.
    """
    stride, win, scale = ihm.stride, ihm.window_side, ihm.scale
    if expand is None:
        expand = win / 2.0

    # grid -> scaled-shot pixels: p_px = p_grid*stride + win/2 (both axes)
    off = win / 2.0

    def to_px(line: Line) -> Line:
        return Line(line.nx, line.ny, line.d * stride + (line.nx + line.ny) * off)

    pa, pb, pc, pd = (to_px(l) for l in (la, lb, lc, ld))
    raw = [_cross(pa, pc), _cross(pa, pd), _cross(pb, pc), _cross(pb, pd)]
    cx = sum(p[0] for p in raw) / 4.0
    cy = sum(p[1] for p in raw) / 4.0

    def push(line: Line) -> Line:
        side = line.nx * cx + line.ny * cy - line.d
        return Line(line.nx, line.ny, line.d - expand if side > 0 else line.d + expand)

    pa, pb, pc, pd = push(pa), push(pb), push(pc), push(pd)
    a, b, c, d = _cross(pa, pc), _cross(pa, pd), _cross(pb, pc), _cross(pb, pd)
    if a[1] > c[1]:
        a, b, c, d = c, d, a, b
    if a[0] > b[0]:
        a, b, c, d = b, a, d, c
    s = 1.0 / scale
    return Quadrilateral(tuple(v * s for v in a), tuple(v * s for v in b),
                         tuple(v * s for v in c), tuple(v * s for v in d))


def angle_penalty(quad: Quadrilateral) -> float:
    """Squareness score 5*e^-v; v sums the corner dot products of unit edge
    vectors pointing into each corner (0 for a rectangle)."""
    a, b, c, d = (np.asarray(p, dtype=np.float64)
                  for p in (quad.a, quad.b, quad.c, quad.d))

    def unit(v):
        n = float(np.hypot(v[0], v[1]))
        if n < 1e-12:
            raise ValueError("zero-length edge")
        return v / n

    v = (float(np.dot(unit(a - b), unit(a - c)))
         + float(np.dot(unit(b - a), unit(b - d)))
         + float(np.dot(unit(c - d), unit(c - a)))
         + float(np.dot(unit(d - c), unit(d - b))))
    return LAMBDA * float(np.exp(-v))


def area_cost(quad: Quadrilateral, scale: float) -> float:
    """Shoelace area of the quad in working-scale coordinates over the scale.

    The quad argument is interpreted in working-scale pixels (original-shot
    corners must be multiplied by the scale first).
    """
    area = shoelace_area(quad.perimeter())
    if area <= 0:
        raise ValueError("non-positive quad area")
    return area / scale


def local_cost(ap: float, a: float) -> float:
    return a * ap


def choose_bbox_scales(decided_idx: int, n_scales: int,
                       count: int = BBOX_SCALE_COUNT) -> list:
    """Scale indices nearest the decided one, nearer first, lower index on
    ties; at most `count`."""
    order = sorted(range(n_scales), key=lambda i: (abs(i - decided_idx), i))
    return order[:min(count, n_scales)]


def _scaled_copy(quad: Quadrilateral, scale: float) -> Quadrilateral:
    return Quadrilateral(*(tuple(v * scale for v in p)
                           for p in (quad.a, quad.b, quad.c, quad.d)))


def build_candidate(ihm: IntensityHeatMap, count: int, scale_index: int,
                    expand: float = None) -> QuadCandidate:
    """One (peak count, scale) candidate; raises ValueError when degenerate."""
    peaks = extract_peaks(ihm, count)
    peaks = refine_peaks(peaks, ihm)
    clusters = cluster_peaks(peaks)
    la, lb, lc, ld = fit_lines(clusters)
    quad = intersect_corners(la, lb, lc, ld, ihm, expand=expand)
    ap = angle_penalty(quad)
    a = area_cost(_scaled_copy(quad, ihm.scale), ihm.scale)
    return QuadCandidate(quad, ap, a, local_cost(ap, a), count, scale_index)


def select_best(candidates: list, decided_idx: int = None) -> QuadCandidate:
    """Argmax of local cost; ties prefer more peaks, then the scale nearest
    the decided one, then list order."""
    if not candidates:
        raise LocalizationFailed("localization failed: no valid box candidate")

    def key(item):
        i, cand = item
        near = -abs(cand.scale_index - decided_idx) if decided_idx is not None else 0
        return (cand.local_cost, cand.peak_count, near, -i)

    return max(enumerate(candidates), key=key)[1]


def _junction_crossings(d: np.ndarray, sat: float) -> tuple:
    """Sub-cell zero crossings of each column's count-difference profile.

    Walking down a left/right margin column, the window leaves the top
    group's corner block and enters the side group's blocks: the profile
    swings from deep positive to deep negative, crossing zero where both
    groups contribute equally -- exactly on the block boundary between the
    groups. The crossing is interpolated between the adjacent cells; both
    plateaus must reach +-sat nearby so natural texture cannot fake a flip.

    Returns ([(col, row)] for the upper flips, [...] for the lower ones).
    """
    rows, cols = d.shape
    top, bot = [], []
    for c in range(cols):
        p = d[:, c]
        if p.max() < sat or p.min() > -sat:
            continue
        for r in range(rows - 1):
            if p[r] > 0 >= p[r + 1]:
                if (p[max(0, r - 3):r + 1].max() >= sat
                        and p[r + 1:r + 5].min() <= -sat):
                    top.append((c, r + p[r] / (p[r] - p[r + 1])))
            elif p[r] < 0 <= p[r + 1]:
                if (p[max(0, r - 3):r + 1].min() <= -sat
                        and p[r + 1:r + 5].max() >= sat):
                    bot.append((c, r + p[r] / (p[r] - p[r + 1])))
    return top, bot


def _outer_half(points: list) -> list:
    """Keep each margin column cluster's outward-facing half.

    Flip columns whose window straddles the busy content interior cross late
    (pulled toward the content center); the flank over the quiet backdrop
    does not. Clusters split at the largest column gap; points past each
    cluster's midpoint toward the other cluster are dropped.
    """
    if len(points) < 2:
        return list(points)
    pts = sorted(points)
    cols = [c for c, _ in pts]
    gaps = [cols[i + 1] - cols[i] for i in range(len(cols) - 1)]
    gi = int(np.argmax(gaps))
    if gaps[gi] < 3:
        return pts
    lc, rc = pts[:gi + 1], pts[gi + 1:]
    lmid = (lc[0][0] + lc[-1][0]) / 2.0
    rmid = (rc[0][0] + rc[-1][0]) / 2.0
    return ([p for p in lc if p[0] <= lmid + 0.5]
            + [p for p in rc if p[0] >= rmid - 0.5])


def _robust_line(points: list, trim: float = 0.5) -> tuple:
    """Median-slope line fit with residual trimming; returns (m, b) or None.

    Slope is the median of pairwise slopes, the intercept the median offset;
    points further than `trim` from that line are dropped and the survivors
    refit by least squares. Survives the stray late crossings that leak
    through the gates on warped shots.
    """
    if len(points) < 2:
        return None
    a = np.asarray(points, dtype=np.float64)
    x, y = a[:, 0], a[:, 1]
    if np.ptp(x) < 1e-9:
        return None
    slopes = []
    for i in range(len(a)):
        dx = x - x[i]
        keep = np.abs(dx) > 1e-9
        slopes.extend(((y - y[i])[keep] / dx[keep]).tolist())
    m = float(np.median(slopes))
    b = float(np.median(y - m * x))
    res = np.abs(y - (m * x + b))
    good = res <= trim
    if good.sum() >= 2 and np.ptp(x[good]) > 1e-9:
        m, b = (float(v) for v in np.polyfit(x[good], y[good], 1))
    return m, b


def _support_crossing(p: np.ndarray, theta: float, from_left: bool) -> float:
    """Interpolated position where a profile first sustains `theta`, scanning
    inward from one end; None when it never does."""
    n = len(p)
    order = range(n) if from_left else range(n - 1, -1, -1)
    prev = None
    for i in order:
        nxt = i + 1 if from_left else i - 1
        if p[i] >= theta and 0 <= nxt < n and p[nxt] >= 0.5 * theta:
            if prev is None:
                return float(i)
            t = (theta - p[prev]) / (p[i] - p[prev]) if p[i] != p[prev] else 1.0
            return float(prev + (i - prev) * t)
        prev = i
    return None


@dataclass
class RefinedQuad:
    quad: Quadrilateral
    resid: float
    pitch: float                       # solved block pitch, grid cells


def refine_quad(ihm: IntensityHeatMap) -> RefinedQuad:
    """Box from the heat map's sign-flip and support geometry.

    Three spans are measured on the count-difference grid, all in cells:

      S_j  separation of the two junction lines       = (k - 2) * pitch
      S_v  outer vertical extent of the strip support = k * pitch + 2*overhang
      S_h  outer horizontal extent of the support     = kx * pitch + 2*overhang

    where k x kx is the content's block grid and the overhang is how far a
    window keeps firing past the content edge over the quiet backdrop. The
    overhang band [BETA_MIN, BETA_MAX] pins the pitch interval and with it
    the admissible k; the column count kx predicted by each admissible k
    must land on an integer, and `resid` records the miss of the best one.
    Junction lines come from `_junction_crossings` (outward flanks only), so
    the top/bottom edges are the junction lines pushed out by one pitch, and
    the left/right edges the support crossings pulled in by the overhang --
    none of which inherits the interior-vs-backdrop bias of the raw support
    widths.

    Returns None when the flips or supports are too thin to trust.
    """
    d = ihm.d
    if d.size == 0:
        return None
    top_x, bot_x = _junction_crossings(d, JUNCTION_D)
    if len(top_x) < MIN_JUNCTION_COLS or len(bot_x) < MIN_JUNCTION_COLS:
        return None
    top_x, bot_x = _outer_half(top_x), _outer_half(bot_x)
    if len(top_x) < MIN_JUNCTION_COLS or len(bot_x) < MIN_JUNCTION_COLS:
        return None
    jt, jb = _robust_line(top_x), _robust_line(bot_x)
    if jt is None or jb is None:
        return None
    (mt, bt), (mb, bb) = jt, jb
    if abs(mt) > SLOPE_MAX or abs(mb) > SLOPE_MAX:
        return None
    cx_all = float(np.mean([c for c, _ in top_x + bot_x]))
    s_j = (mb * cx_all + bb) - (mt * cx_all + bt)
    if s_j <= 0:
        return None

    # outer vertical support: first/last sustained crossing per flip column
    jcols = sorted({c for c, _ in top_x} | {c for c, _ in bot_x})
    out_top, out_bot = [], []
    for c in range(jcols[0], jcols[-1] + 1):
        p = d[:, c]
        z1 = _support_crossing(p, SUPPORT_D, True)
        z2 = _support_crossing(p, SUPPORT_D, False)
        if z1 is not None and z2 is not None and z2 - z1 > s_j:
            out_top.append((c, z1))
            out_bot.append((c, z2))
    if len(out_top) < MIN_JUNCTION_COLS:
        return None
    ot, ob = _robust_line(out_top), _robust_line(out_bot)
    if ot is None or ob is None:
        return None
    y_out_t = ot[0] * cx_all + ot[1]
    y_out_b = ob[0] * cx_all + ob[1]
    s_v = y_out_b - y_out_t

    # horizontal support: rows inside the two strips
    j_t_c = mt * cx_all + bt
    j_b_c = mb * cx_all + bb
    lefts, rights = [], []
    for r in range(d.shape[0]):
        if not (y_out_t - 0.2 < r < j_t_c - 0.3 or j_b_c + 0.3 < r < y_out_b + 0.2):
            continue
        p = d[r, :]
        xl = _support_crossing(p, SUPPORT_D, True)
        xr = _support_crossing(p, SUPPORT_D, False)
        if xl is not None and xr is not None and xr - xl > 2:
            lefts.append(xl)
            rights.append(xr)
    if len(lefts) < 3:
        return None
    xl_cross = float(np.median(lefts))
    xr_cross = float(np.median(rights))
    s_h = xr_cross - xl_cross

    # The overhang band pins the pitch interval, which usually admits a
    # single block-row count; the column-count residual breaks rare ties.
    w_cells = ihm.window_side / ihm.stride
    half_gap = (s_v - s_j) / 2.0       # = pitch + overhang
    p_hi = half_gap - BETA_MIN * w_cells
    p_lo = max(half_gap - BETA_MAX * w_cells, 0.25 * w_cells)
    if p_hi <= p_lo:
        return None
    best = None
    for km2 in range(max(1, int(np.ceil(s_j / p_hi))),
                     int(np.floor(s_j / p_lo)) + 1):
        pitch = s_j / km2
        o = half_gap - pitch
        kx_f = (s_h - 2 * o) / pitch
        if kx_f < 2.5:
            continue
        resid = abs(kx_f - round(kx_f))
        if best is None or resid < best[2]:
            best = (pitch, o, resid)
    if best is None or best[2] > RESID_MAX:
        return None
    pitch, o, resid = best

    f = 1.0 / round(s_j / pitch)       # = 1/(k-2), robust to float noise
    m_top, b_top = mt - (mb - mt) * f, bt - (bb - bt) * f
    m_bot, b_bot = mb + (mb - mt) * f, bb + (bb - bt) * f
    x_left = xl_cross + o
    x_right = xr_cross - o
    if x_right - x_left < 1:
        return None

    stride, off, scale = ihm.stride, ihm.window_side / 2.0, ihm.scale

    def px(gx, gy):
        return ((gx * stride + off) / scale, (gy * stride + off) / scale)

    a = px(x_left, m_top * x_left + b_top)
    b = px(x_right, m_top * x_right + b_top)
    c = px(x_left, m_bot * x_left + b_bot)
    dd = px(x_right, m_bot * x_right + b_bot)
    if not (a[1] < c[1] and b[1] < dd[1]):
        return None
    return RefinedQuad(Quadrilateral(a, b, c, dd), resid, pitch)


def locate_quad(sweep: ScaleSweep, decided_idx: int, params,
                refine_stride: int = REFINE_STRIDE) -> QuadCandidate:
    """Best box across the 4 scales around the decision.

    Heat maps are recomputed at a finer stride than the scan used, which
    tightens line fits; every peak count in [13, 18] is tried per scale and
    the highest local cost wins. When the sign-flip refinement succeeds on
    any of the maps (best-matched pitch wins) and roughly agrees with the
    winner on area, its box replaces the winner's.
    """
    window = params.block_side
    bins_a = detection_bins(params, window, group_b=False)
    bins_b = detection_bins(params, window, group_b=True)
    candidates = []
    ihms = {}
    for idx in choose_bbox_scales(decided_idx, len(sweep.scales)):
        luma = sweep.lumas[idx]
        if min(luma.shape) < window:
            continue
        residual = wiener_residual(luma)
        ihm = compute_ihm(residual, window, refine_stride, bins_a, bins_b,
                          scale=sweep.scales[idx])
        ihms[idx] = ihm
        # The decided scale brings the content's block pitch to one window, so
        # the half-block push at this scale is half a window times the ratio.
        expand = (window / 2.0) * (sweep.scales[idx] / sweep.scales[decided_idx])
        for count in range(PEAK_COUNT_MIN, PEAK_COUNT_MAX + 1):
            try:
                candidates.append(build_candidate(ihm, count, idx, expand=expand))
            except ValueError:
                continue
    winner = select_best(candidates, decided_idx)
    best_ref = None
    best_score = None
    w_cells = window / refine_stride
    for idx in sorted(ihms):
        ref = refine_quad(ihms[idx])
        if ref is None:
            continue
        # Geometry is cleanest where the window spans one block, so prefer
        # the map whose solved pitch sits nearest one window of cells.
        score = abs(np.log(ref.pitch / w_cells))
        if best_ref is None or score < best_score:
            best_ref, best_score = ref, score
    if best_ref is not None:
        cand_area = shoelace_area(winner.quad.perimeter())
        ref_area = shoelace_area(best_ref.quad.perimeter())
        if cand_area > 0 and 0.4 <= ref_area / cand_area <= 2.5:
            winner.quad = best_ref.quad
    return winner
