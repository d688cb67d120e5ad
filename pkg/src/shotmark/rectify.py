"""Perspective correction of a located quadrilateral.

Estimates the content's rectified size from the quad's edge lengths, solves
the 8-parameter projective mapping onto that rectangle, and warps the shot.
"""

from dataclasses import dataclass

import numpy as np

from .bbox import Quadrilateral
from .imaging import warp_perspective


@dataclass(frozen=True)
class Homography:
    """Projective map u = (a1 x + b1 y + c1)/(a0 x + b0 y + 1),
    v = (a2 x + b2 y + c2)/(a0 x + b0 y + 1)."""
    a1: float
    b1: float
    c1: float
    a2: float
    b2: float
    c2: float
    a0: float
    b0: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.a1, self.b1, self.c1],
                         [self.a2, self.b2, self.c2],
                         [self.a0, self.b0, 1.0]])

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        den = self.a0 * pts[:, 0] + self.b0 * pts[:, 1] + 1.0
        u = (self.a1 * pts[:, 0] + self.b1 * pts[:, 1] + self.c1) / den
        v = (self.a2 * pts[:, 0] + self.b2 * pts[:, 1] + self.c2) / den
        return np.stack([u, v], axis=1)


def estimate_dims(quad: Quadrilateral) -> tuple:
    """(width, length) of the content: mean top/bottom and left/right edge
    lengths, rounded to whole pixels."""
    a, b, c, d = (np.asarray(p, np.float64) for p in (quad.a, quad.b, quad.c, quad.d))
    width = (np.linalg.norm(b - a) + np.linalg.norm(d - c)) / 2.0
    length = (np.linalg.norm(c - a) + np.linalg.norm(d - b)) / 2.0
    width, length = int(round(width)), int(round(length))
    if width < 1 or length < 1:
        raise ValueError("degenerate quad")
    return width, length


def solve_homography(src: Quadrilateral, dst_width: int, dst_height: int) -> Homography:
    """Map the quad corners onto (0,0), (W-1,0), (0,H-1), (W-1,H-1).

    Builds the 8x8 linear system of the projective form with denominator
    a0*x + b0*y + 1 and solves it directly.
    """
    w, h = float(dst_width - 1), float(dst_height - 1)
    dst = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
    rows, rhs = [], []
    for (x, y), (u, v) in zip((src.a, src.b, src.c, src.d), dst):
        rows.append([x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y])
        rhs.append(u)
        rows.append([0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y])
        rhs.append(v)
    try:
        sol = np.linalg.solve(np.array(rows), np.array(rhs))
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular homography system: {exc}") from exc
    return Homography(*sol)


def rectify(shot: np.ndarray, quad: Quadrilateral) -> np.ndarray:
    """Perspective-corrected content image at its estimated dimensions.

    The content sits inside the shot, so its true edges can never exceed the
    shot diagonal; a quad whose estimated size is several times the shot only
    arises from near-parallel fitted lines intersecting far off-frame.  Such
    quads are rejected rather than allowed to demand an absurd warp target.
    """
    width, length = estimate_dims(quad)
    limit = 4 * max(shot.shape[0], shot.shape[1])
    if max(width, length) > limit:
        raise ValueError(f"implausible content size {width}x{length} "
                         f"for a {shot.shape[1]}x{shot.shape[0]} shot")
    hom = solve_homography(quad, width, length)
    inverse = np.linalg.inv(hom.matrix())
    return warp_perspective(shot, inverse, width, length)
