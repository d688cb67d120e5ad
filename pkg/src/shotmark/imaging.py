"""Shared raster primitives: luma, block FFT, PSNR, Wiener residual, warp, resize.

Raster images are numpy arrays, HxW (gray) or HxWx3 (RGB), uint8 at rest and
float64 inside computations. File I/O lives in the CLI layer, not here.
"""

import numpy as np
from scipy.ndimage import uniform_filter

# BT.601 luma weights, full range.
_LUMA = (0.299, 0.587, 0.114)


def to_luma(img: np.ndarray) -> np.ndarray:
    """Convert an RGB image to 8-bit luma (BT.601, rounded).

    Gray input is passed through (rounded to uint8 if it is float).
    """
    if img.ndim == 2:
        return np.clip(np.round(img), 0, 255).astype(np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected HxW or HxWx3 image, got shape {img.shape}")
    r, g, b = _LUMA
    y = r * img[..., 0].astype(np.float64) + g * img[..., 1] + b * img[..., 2]
    return np.clip(np.round(y), 0, 255).astype(np.uint8)


def rgb_to_ycbcr(img: np.ndarray) -> np.ndarray:
    """RGB (any numeric dtype) to float YCbCr, full range, Cb/Cr centered at 128."""
    img = img.astype(np.float64)
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return np.stack([y, cb, cr], axis=-1)


def ycbcr_to_rgb(img: np.ndarray) -> np.ndarray:
    """Float YCbCr back to float RGB (no rounding, no clamp)."""
    y = img[..., 0]
    cb = img[..., 1] - 128.0
    cr = img[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.stack([r, g, b], axis=-1)


def fft2(block: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2D DFT of a square single-channel block.

    DC sits at [0, 0] and equals the sum of the spatial samples.
    """
    if block.ndim != 2:
        raise ValueError("fft2 expects a single-channel 2D block")
    if block.shape[0] != block.shape[1]:
        raise ValueError(f"fft2 expects a square block, got {block.shape}")
    return np.fft.fft2(block.astype(np.float64))


def ifft2(spec: np.ndarray) -> np.ndarray:
    """Inverse of fft2 (1/N^2 normalization); returns the real part."""
    if spec.ndim != 2 or spec.shape[0] != spec.shape[1]:
        raise ValueError("ifft2 expects a square 2D spectrum")
    return np.fft.ifft2(spec).real


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over a 255 peak; +inf for identical inputs."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(255.0 ** 2 / mse))


def wiener_residual(img: np.ndarray, window: int = 3) -> np.ndarray:
    """Image minus its adaptive local-Wiener estimate (float output).

    Local mean/variance over a `window` square, noise variance estimated as the
    mean of the local variances. Local moments use reflected edges: zero-padded
    edges would leave a nonzero residual rim on constant images.
    """
    if img.ndim != 2:
        raise ValueError("wiener_residual expects a single-channel image")
    if window > min(img.shape):
        raise ValueError(f"window {window} larger than image {img.shape}")
    x = img.astype(np.float64)
    lmean = uniform_filter(x, window, mode="reflect")
    lvar = uniform_filter(x * x, window, mode="reflect") - lmean * lmean
    lvar = np.maximum(lvar, 0.0)
    noise = lvar.mean()
    gain = np.maximum(lvar - noise, 0.0) / np.maximum(lvar, 1e-12)
    est = lmean + gain * (x - lmean)
    return x - est


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with half-pixel-center alignment. Identity size is a copy."""
    h, w = img.shape[:2]
    if out_w < 1 or out_h < 1:
        raise ValueError("output size must be positive")
    if (out_w, out_h) == (w, h):
        return img.copy()
    sx, sy = w / out_w, h / out_h
    xs = np.clip((np.arange(out_w) + 0.5) * sx - 0.5, 0, w - 1)
    ys = np.clip((np.arange(out_h) + 0.5) * sy - 0.5, 0, h - 1)
    x0 = np.minimum(xs.astype(int), w - 2) if w > 1 else np.zeros(out_w, int)
    y0 = np.minimum(ys.astype(int), h - 2) if h > 1 else np.zeros(out_h, int)
    fx = (xs - x0)[None, :]
    fy = (ys - y0)[:, None]
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    p = img.astype(np.float64)
    top = p[y0][:, x0] * (1 - fx) + p[y0][:, x1] * fx
    bot = p[y1][:, x0] * (1 - fx) + p[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    if np.issubdtype(img.dtype, np.integer):
        return np.clip(np.round(out), 0, 255).astype(img.dtype)
    return out


def warp_perspective(img: np.ndarray, matrix: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Inverse-mapped perspective warp with bilinear sampling.

    `matrix` is the 3x3 homography taking OUTPUT pixel coordinates to SOURCE
    coordinates; every output pixel pulls its value from the source image.
    Samples falling outside the source are 0.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3) or abs(np.linalg.det(m)) < 1e-12:
        raise ValueError("degenerate homography")
    h, w = img.shape[:2]
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    den = m[2, 0] * xs + m[2, 1] * ys + m[2, 2]
    den = np.where(np.abs(den) < 1e-12, 1e-12, den)
    sx = (m[0, 0] * xs + m[0, 1] * ys + m[0, 2]) / den
    sy = (m[1, 0] * xs + m[1, 1] * ys + m[1, 2]) / den
    inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
    sx = np.clip(sx, 0, w - 1)
    sy = np.clip(sy, 0, h - 1)
    x0 = np.minimum(sx.astype(int), w - 2) if w > 1 else np.zeros_like(sx, int)
    y0 = np.minimum(sy.astype(int), h - 2) if h > 1 else np.zeros_like(sy, int)
    fx, fy = sx - x0, sy - y0
    if img.ndim == 3:
        fx, fy, inside = fx[..., None], fy[..., None], inside[..., None]
    p = img.astype(np.float64)
    val = (p[y0, x0] * (1 - fx) * (1 - fy) + p[y0, np.minimum(x0 + 1, w - 1)] * fx * (1 - fy)
           + p[np.minimum(y0 + 1, h - 1), x0] * (1 - fx) * fy
           + p[np.minimum(y0 + 1, h - 1), np.minimum(x0 + 1, w - 1)] * fx * fy)
    out = np.where(inside, val, 0.0)
    if np.issubdtype(img.dtype, np.integer):
        return np.clip(np.round(out), 0, 255).astype(img.dtype)
    return out
