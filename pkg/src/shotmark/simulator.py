"""Camera-shot surrogate.

Composites a marked image into a synthetic photo under controlled distortion:
optional content rescale, single-axis (yaw) perspective, illumination gamma,
sensor noise and JPEG recompression. The canvas is sized 4:3 so the warped
content occupies a requested area proportion, and the exact warped corner
quad is returned as ground truth.
"""

from dataclasses import dataclass
from io import BytesIO

import numpy as np

from .bbox import Quadrilateral, shoelace_area
from .imaging import resize_bilinear, warp_perspective
from .rectify import solve_homography

BACKGROUND_SPECS = ("solid", "texture", "clutter")


@dataclass
class ShotConfig:
    area_proportion: float = 0.5
    angle_offset: float = 0.0         # camera yaw, degrees
    content_scale: float = 1.25       # content size in the shot / native size
    illumination_gain: float = 1.0
    illumination_gamma: float = 1.0
    noise_sigma: float = 0.0          # gray levels
    jpeg_quality: int = None          # 1..100, None = no recompression
    background: str = "texture"
    seed: int = 0

    def validate(self):
        if not 0.0 < self.area_proportion < 1.0:
            raise ValueError("area proportion must be in (0, 1)")
        if not 0.0 <= self.angle_offset < 90.0:
            raise ValueError("angle offset must be in [0, 90)")
        if self.content_scale <= 0:
            raise ValueError("content scale must be positive")
        if self.background not in BACKGROUND_SPECS:
            raise ValueError(f"unknown background spec {self.background!r}")
        if self.jpeg_quality is not None and not 1 <= self.jpeg_quality <= 100:
            raise ValueError("jpeg quality must be in [1, 100]")


def _smooth_noise(rng, w, h, cell, lo, hi):
    """Low-resolution uniform noise upsampled to (h, w)."""
    small = rng.uniform(lo, hi, size=(h // cell + 2, w // cell + 2))
    return resize_bilinear(small, w, h)


def synth_background(rng, w: int, h: int, spec: str) -> np.ndarray:
    """Deterministic photo backdrop: flat, desk-like, or busy."""
    if spec == "solid":
        level = int(rng.integers(90, 170))
        return np.full((h, w), level, dtype=np.uint8)
    if spec == "texture":
        base = float(rng.uniform(110, 180))
        img = np.full((h, w), base)
        img += _smooth_noise(rng, w, h, 64, -9, 9)
        gx = rng.uniform(-12, 12)
        gy = rng.uniform(-12, 12)
        img += np.linspace(-gx, gx, w)[None, :] + np.linspace(-gy, gy, h)[:, None]
        img += rng.normal(0, 1.5, size=(h, w))
        return np.clip(np.round(img), 0, 255).astype(np.uint8)
    # clutter: strong texture plus blobby shapes
    img = _smooth_noise(rng, w, h, 32, 40, 220)
    img += np.linspace(-20, 20, w)[None, :]
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(6):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        r = rng.uniform(30, 160)
        amp = rng.uniform(-50, 50)
        img += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
    img += rng.normal(0, 3.0, size=(h, w))
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def synth_content(rng, w: int, h: int) -> np.ndarray:
    """Naturalish grayscale test image with gradients, blobs and grain."""
    img = _smooth_noise(rng, w, h, 32, 40, 220)
    img += np.linspace(-20, 20, w)[None, :]
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(6):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        r = rng.uniform(30, 160)
        amp = rng.uniform(-50, 50)
        img += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * r * r))
    img += rng.normal(0, 3.0, size=(h, w))
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def _yaw_corners(cw: int, ch: int, angle_deg: float) -> np.ndarray:
    """Pinhole projection of the content corners under a camera yaw.

    Content-plane coords are centered; the camera sits at distance
    D = 2*max(cw, ch). Returns corners (TL, TR, BL, BR) centered at origin.
    """
    phi = np.radians(angle_deg)
    d = 2.0 * max(cw, ch)
    half_w, half_h = cw / 2.0, ch / 2.0
    out = []
    for x, y in ((-half_w, -half_h), (half_w, -half_h),
                 (-half_w, half_h), (half_w, half_h)):
        denom = x * np.sin(phi) + d
        out.append((d * x * np.cos(phi) / denom, d * y / denom))
    return np.array(out, dtype=np.float64)


def _canvas_dims(content_area: float, prop: float) -> tuple:
    area = content_area / prop
    w = int(round(np.sqrt(area * 4.0 / 3.0)))
    h = int(round(w * 3.0 / 4.0))
    return w, h


def simulate_shot(marked: np.ndarray, cfg: ShotConfig):
    """Composite `marked` into a synthetic photo.

    Returns (shot, truth) where truth is the exact corner quad of the pasted
    content in shot pixels. With angle 0 the content is pasted directly so a
    crop at truth is bit-exact (given unit gain/gamma, zero noise, no JPEG,
    content scale 1).
    """
    cfg.validate()
    if marked.ndim not in (2, 3):
        raise ValueError("marked image must be grayscale or RGB")
    rng = np.random.default_rng(cfg.seed)
    nh, nw = marked.shape[:2]
    cw = max(1, int(round(nw * cfg.content_scale)))
    ch = max(1, int(round(nh * cfg.content_scale)))
    content = marked if (cw, ch) == (nw, nh) else resize_bilinear(marked, cw, ch)

    if cfg.angle_offset == 0.0:
        width, height = _canvas_dims(float(cw) * ch, cfg.area_proportion)
        if width < cw or height < ch:
            raise ValueError("area proportion unreachable on a 4:3 canvas")
        shot = synth_background(rng, width, height, cfg.background)
        if content.ndim == 3 and shot.ndim == 2:
            shot = np.repeat(shot[:, :, None], 3, axis=2)
        x0, y0 = (width - cw) // 2, (height - ch) // 2
        shot[y0:y0 + ch, x0:x0 + cw] = content
        truth = Quadrilateral((x0, y0), (x0 + cw, y0),
                              (x0, y0 + ch), (x0 + cw, y0 + ch))
    else:
        corners = _yaw_corners(cw, ch, cfg.angle_offset)
        quad_area = shoelace_area(corners[[0, 1, 3, 2]])
        width, height = _canvas_dims(quad_area, cfg.area_proportion)
        half = corners.max(axis=0) - corners.min(axis=0)
        if width < half[0] or height < half[1]:
            raise ValueError("area proportion unreachable on a 4:3 canvas")
        shift = np.array([width / 2.0, height / 2.0])
        placed = corners + shift
        truth = Quadrilateral(*(tuple(p) for p in placed))
        shot = synth_background(rng, width, height, cfg.background)
        rgb = content.ndim == 3
        if rgb and shot.ndim == 2:
            shot = np.repeat(shot[:, :, None], 3, axis=2)
        hom = solve_homography(truth, cw, ch)
        warped = warp_perspective(content, hom.matrix(), width, height)
        mask = warp_perspective(np.full((ch, cw), 255, np.uint8),
                                hom.matrix(), width, height).astype(np.float64) / 255.0
        if rgb:
            mask = mask[:, :, None]
        shot = np.round(mask * warped + (1.0 - mask) * shot).astype(np.uint8)

    out = shot.astype(np.float64)
    if cfg.illumination_gain != 1.0 or cfg.illumination_gamma != 1.0:
        out = cfg.illumination_gain * np.power(out / 255.0, cfg.illumination_gamma) * 255.0
    if cfg.noise_sigma > 0:
        out = out + rng.normal(0.0, cfg.noise_sigma, size=out.shape)
    shot = np.clip(np.round(out), 0, 255).astype(np.uint8)
    if cfg.jpeg_quality is not None:
        from PIL import Image
        buf = BytesIO()
        Image.fromarray(shot).save(buf, format="JPEG", quality=cfg.jpeg_quality)
        buf.seek(0)
        shot = np.asarray(Image.open(buf).convert("L" if shot.ndim == 2 else "RGB"))
    return shot, truth
