"""Geometric agreement scores between located and ground-truth regions."""

import numpy as np

from .bbox import Quadrilateral, shoelace_area


def _walk(quad) -> np.ndarray:
    """Vertices of a quad in walk order as a float (n, 2) array."""
    if isinstance(quad, Quadrilateral):
        return quad.perimeter()
    pts = np.asarray(quad, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("expected a Quadrilateral or an (n>=3, 2) point array")
    return pts


def _is_convex(pts: np.ndarray) -> bool:
    """True when every turn along the walk has the same sign (or is straight)."""
    d = np.roll(pts, -1, axis=0) - pts
    cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    return bool((cross >= 0).all() or (cross <= 0).all())


def _ccw(pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    signed = float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    return pts if signed >= 0 else pts[::-1]


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex subject against a convex window.

    Both walks are normalized to counterclockwise first; each clip edge keeps
    the points on its left half-plane. Returns the (possibly empty) clipped
    walk.
    """
    output = [tuple(p) for p in _ccw(subject)]
    window = _ccw(clip)
    for i in range(len(window)):
        cx1, cy1 = window[i]
        cx2, cy2 = window[(i + 1) % len(window)]
        if not output:
            return np.empty((0, 2))
        polygon, output = output, []
        ex, ey = cx2 - cx1, cy2 - cy1

        def side(p):
            return ex * (p[1] - cy1) - ey * (p[0] - cx1)

        s = polygon[-1]
        for e in polygon:
            if side(e) >= 0:
                if side(s) < 0:
                    output.append(_edge_meet(s, e, (cx1, cy1), (cx2, cy2)))
                output.append(e)
            elif side(s) >= 0:
                output.append(_edge_meet(s, e, (cx1, cy1), (cx2, cy2)))
            s = e
    return np.array(output, dtype=np.float64)


def _edge_meet(p1, p2, q1, q2) -> tuple:
    """Intersection of lines p1-p2 and q1-q2 (callers guarantee a crossing)."""
    dp = (p1[0] - p2[0], p1[1] - p2[1])
    dq = (q1[0] - q2[0], q1[1] - q2[1])
    denom = dp[0] * dq[1] - dp[1] * dq[0]
    np_ = p1[0] * p2[1] - p1[1] * p2[0]
    nq = q1[0] * q2[1] - q1[1] * q2[0]
    return ((np_ * dq[0] - nq * dp[0]) / denom,
            (np_ * dq[1] - nq * dp[1]) / denom)


def _inside_mask(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd membership of sample points in a simple polygon."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > y) != (y2 > y)
        xint = (x2 - x1) * (y - y1) / (y2 - y1) + x1
        inside ^= crosses & (x < xint)
    return inside


def raster_iou(predicted, truth, supersample: int = 4) -> float:
    """Intersection over union measured on a supersampled point grid.

    Handles any simple polygons; used directly for non-convex inputs and as
    the independent cross-check of the polygon-clipping route.
    """
    a, b = _walk(predicted), _walk(truth)
    allp = np.vstack([a, b])
    x0, y0 = np.floor(allp.min(axis=0)) - 1
    x1, y1 = np.ceil(allp.max(axis=0)) + 1
    step = 1.0 / supersample
    xs = np.arange(x0 + step / 2, x1, step)
    ys = np.arange(y0 + step / 2, y1, step)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    in_a = _inside_mask(pts, a)
    in_b = _inside_mask(pts, b)
    union = int(np.count_nonzero(in_a | in_b))
    if union == 0:
        return 0.0
    return float(np.count_nonzero(in_a & in_b) / union)


def iou(predicted, truth) -> float:
    """Intersection over union of two located regions.

    Convex pairs go through exact polygon clipping; anything non-convex falls
    back to the 4x-supersampled raster measurement.
    """
    a, b = _walk(predicted), _walk(truth)
    if not (_is_convex(a) and _is_convex(b)):
        return raster_iou(a, b)
    inter_walk = clip_convex(a, b)
    inter = shoelace_area(inter_walk) if len(inter_walk) >= 3 else 0.0
    union = shoelace_area(a) + shoelace_area(b) - inter
    if union <= 0:
        return 0.0
    return float(min(inter / union, 1.0))


def area_proportion(truth, shot: np.ndarray) -> float:
    """Fraction of the shot's pixel area covered by the ground-truth quad."""
    h, w = shot.shape[:2]
    if h == 0 or w == 0:
        raise ValueError("empty shot image")
    return float(shoelace_area(_walk(truth)) / (h * w))
