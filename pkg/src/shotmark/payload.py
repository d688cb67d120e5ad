"""Repeat-embedded payload in the interior blocks.

The margin blocks carry the localization signature; the blocks they enclose
are free to carry data. Payload bits are written as magnitude levels on a
low-mid-frequency half-annulus whose angular span (66..114 degrees) stays clear
of both detection sectors even after their 5-degree expansion, so payload
energy never leaks into the localizer's statistics.

Each lattice bin inside the annulus carries one bit (bit index = position
mod payload length), repeated across every interior block. Extraction sums
per-bin z-scores into one weighted vote per bit, which tolerates blocks that
were blurred, cropped, or resampled unevenly by the camera-shot channel.
"""

from dataclasses import dataclass

import numpy as np

from .imaging import fft2, rgb_to_ycbcr, ycbcr_to_rgb

PAYLOAD_ANGLE_MIN_DEG = 66.0
PAYLOAD_ANGLE_MAX_DEG = 114.0
PAYLOAD_BAND_HALF = 3.0               # annulus half-width around side/8
SYNC_FACTORS = tuple(round(0.92 + 0.004 * i, 3) for i in range(41))
SYNC_TILT_STEPS = 13                  # linear-across-x tilt candidates


@dataclass(frozen=True)
class PayloadLayout:
    """Ordered annulus bins of an l x l block, one payload location each.

    `offsets` are (du, dv) from the spectrum center, dv > 0 only; conjugate
    mates are implied. Order is fixed (angle, then radius), which defines the
    bit index of every location.
    """
    offsets: tuple
    block_side: int

    @property
    def capacity(self) -> int:
        return len(self.offsets)


@dataclass(frozen=True)
class PayloadReadout:
    """Decoded bits plus how firmly the votes backed them.

    `confidence` is the fraction of per-location votes whose sign agrees with
    the decoded value of their bit (chance level ~0.5, clean read 1.0);
    `windows_used` counts the windows that contributed votes.
    """
    bits: np.ndarray
    confidence: float
    windows_used: int

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.bits, dtype=dtype)


def payload_layout(block_side: int = 128) -> PayloadLayout:
    """Enumerate the annulus lattice bins in their canonical order."""
    l = block_side
    r_mid = l / 8.0
    lo, hi = r_mid - PAYLOAD_BAND_HALF, r_mid + PAYLOAD_BAND_HALF
    found = []
    r_top = int(np.ceil(hi))
    for dv in range(1, r_top + 1):
        for du in range(-r_top, r_top + 1):
            r = np.hypot(du, dv)
            if not lo <= r <= hi:
                continue
            ang = np.degrees(np.arctan2(dv, du))
            if PAYLOAD_ANGLE_MIN_DEG <= ang <= PAYLOAD_ANGLE_MAX_DEG:
                found.append((ang, r, du, dv))
    found.sort()
    return PayloadLayout(tuple((du, dv) for _, _, du, dv in found), l)


def interior_blocks(width: int, height: int, block_side: int) -> tuple:
    """Origins of the blocks enclosed by the margin rows and columns."""
    l = block_side
    ncols, nrows = width // l, height // l
    return tuple((x * l, y * l)
                 for y in range(1, nrows - 1) for x in range(1, ncols - 1))


def _bin_indices(layout: PayloadLayout, win_h: int, win_w: int) -> np.ndarray:
    """(row, col) of each location in an unshifted win_h x win_w spectrum.

    The indices are the native offsets regardless of window size: when each
    window axis is scaled with the content (side = native * resample factor
    of that axis), a pattern written at index k reappears at index k, so only
    the window grows or shrinks, never the bin positions. Per-axis windows
    absorb the slight anisotropy a perspective rectification leaves behind.
    """
    rows = [dv % win_h for _, dv in layout.offsets]
    cols = [du % win_w for du, _ in layout.offsets]
    return np.array([rows, cols], dtype=np.intp)


def _spread_bits(bits: np.ndarray, capacity: int) -> np.ndarray:
    reps = np.arange(capacity) % bits.size
    return bits[reps]


def _write_block(block: np.ndarray, layout: PayloadLayout, bits: np.ndarray) -> np.ndarray:
    """Set each location's magnitude to mu+sigma (1) or mu-sigma (0).

    The bins are written at phase zero rather than the block's natural phase:
    neighboring blocks then carry mutually coherent patterns, so a reading
    window that straddles a block boundary sums them in phase instead of
    cancelling, and window placement stops mattering at all.
    """
    l = layout.block_side
    spec = fft2(block)
    idx = _bin_indices(layout, l, l)
    mags = np.abs(spec[idx[0], idx[1]])
    mu, sigma = float(mags.mean()), float(mags.std())
    levels = np.where(_spread_bits(bits, layout.capacity) > 0,
                      mu + sigma, max(mu - sigma, 0.0))
    spec[idx[0], idx[1]] = levels
    spec[(-idx[0]) % l, (-idx[1]) % l] = levels
    out = np.fft.ifft2(spec).real
    return np.clip(np.round(out), 0, 255)


def embed_payload(img: np.ndarray, bits, block_side: int = 128) -> np.ndarray:
    """Write the bit sequence into every interior block of the image."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size == 0 or not np.isin(bits, (0, 1)).all():
        raise ValueError("payload must be a non-empty sequence of 0/1 bits")
    layout = payload_layout(block_side)
    if bits.size > layout.capacity:
        raise ValueError(
            f"payload of {bits.size} bits exceeds capacity {layout.capacity}")
    h, w = img.shape[:2]
    origins = interior_blocks(w, h, block_side)
    if not origins:
        raise ValueError(f"image {w}x{h} has no interior blocks of side {block_side}")
    out = img.copy()
    l = block_side
    for x, y in origins:
        region = img[y:y + l, x:x + l]
        if img.ndim == 2:
            out[y:y + l, x:x + l] = _write_block(region.astype(np.float64),
                                                 layout, bits)
        else:
            ycc = rgb_to_ycbcr(region)
            ycc[..., 0] = _write_block(ycc[..., 0], layout, bits)
            rgb = ycbcr_to_rgb(ycc)
            out[y:y + l, x:x + l] = np.clip(np.round(rgb), 0, 255).astype(np.uint8)
    return out


def extract_payload(rect: np.ndarray, nbits: int, nominal_size: tuple = None,
                    block_side: int = 128) -> PayloadReadout:
    """Read the payload back from a rectified image.

    `nominal_size` is the content's native (width, height). The rectification
    is resampled back to that size first, which snaps every window onto one
    embedded block and every annulus bin onto its native index; the payload
    band sits low enough that the extra resample costs nothing measurable.

    A located box is never pixel-perfect. Window translation costs nothing
    (blocks repeat the same bits and are written phase-coherently), but a
    box height error slides the (dv-dominant) annulus off its bins, and a
    tilted box edge makes the needed correction vary across the image. Each
    window column is therefore re-read over a band of residual height
    rescales, with a linear-across-x model of the rescale factor.

    Raw vote coherence cannot choose the model: a rescale off by one radial
    bin reads every location's energy from its neighbour, which carries a
    different bit, so the votes stay coherent but wrong. Under the true
    alignment all repeats of a bit agree in sign, while under that alias the
    repeat sources are effectively random, so the model is chosen to
    maximize repeat agreement: the per-bit folded vote mass over the raw
    per-location vote mass. Votes are z-scores of each bin against its
    window's annulus statistics.
    """
    from .imaging import resize_bilinear, to_luma

    if nbits < 1:
        raise ValueError("nbits must be >= 1")
    layout = payload_layout(block_side)
    if nbits > layout.capacity:
        raise ValueError(f"nbits {nbits} exceeds capacity {layout.capacity}")
    luma = to_luma(rect)
    h, w = luma.shape
    win = block_side
    idx = _bin_indices(layout, win, win)
    reps = np.arange(layout.capacity) % nbits

    def fold(loc_votes: np.ndarray) -> np.ndarray:
        bit_votes = np.zeros(nbits)
        np.add.at(bit_votes, reps, loc_votes)
        return bit_votes

    def readout(loc_votes: np.ndarray, nwin: int) -> PayloadReadout:
        bit_votes = fold(loc_votes)
        bits = (bit_votes > 0).astype(np.int64)
        live = np.abs(loc_votes) > 0
        if live.any():
            agree = (loc_votes > 0)[live] == (bits[reps] > 0)[live]
            conf = float(agree.mean())
        else:
            conf = 0.0
        return PayloadReadout(bits, conf, nwin)

    def column_votes(strip: np.ndarray) -> tuple:
        votes = np.zeros(layout.capacity)
        nwin = 0
        for by in range(1, strip.shape[0] // win - 1):
            window = strip[by * win:(by + 1) * win]
            mags = np.abs(fft2(window)[idx[0], idx[1]])
            mu, sigma = mags.mean(), mags.std()
            if sigma < 1e-9:
                continue
            votes += (mags - mu) / sigma
            nwin += 1
        return votes, nwin

    if nominal_size is None:
        if w < 3 * win or h < 3 * win:
            raise ValueError(f"image {w}x{h} too small for payload windows "
                             f"of side {win}")
        total = np.zeros(layout.capacity)
        used = 0
        for bx in range(1, w // win - 1):
            votes, nwin = column_votes(luma[:, bx * win:(bx + 1) * win])
            total += votes
            used += nwin
        return readout(total, used)

    nom_w, nom_h = nominal_size
    if nom_w < 3 * win or nom_h < 3 * win:
        raise ValueError(f"nominal size {nom_w}x{nom_h} too small for "
                         f"payload windows of side {win}")
    base = resize_bilinear(luma, nom_w, nom_h) if (w, h) != (nom_w, nom_h) else luma

    cols = range(1, base.shape[1] // win - 1)
    table = []                          # per column: (votes, nwin) per factor
    for bx in cols:
        strip = base[:, bx * win:(bx + 1) * win]
        table.append([column_votes(resize_bilinear(
            strip, win, int(round(strip.shape[0] * f)))) if f != 1.0
            else column_votes(strip) for f in SYNC_FACTORS])

    ncols = len(table)
    nf = len(SYNC_FACTORS)
    tilt_max = (nf - 1) // 2
    tilts = np.linspace(-tilt_max, tilt_max, SYNC_TILT_STEPS)
    best = None
    for fi in range(nf):
        for tilt in tilts:
            total = np.zeros(layout.capacity)
            used = 0
            for ci in range(ncols):
                t = (ci - (ncols - 1) / 2) / max(ncols - 1, 1)
                fj = int(round(fi + tilt * t))
                if not 0 <= fj < nf:
                    break
                votes, nwin = table[ci][fj]
                total += votes
                used += nwin
            else:
                bit_votes = fold(total)
                if nbits < layout.capacity:
                    score = np.abs(bit_votes).sum() / max(np.abs(total).sum(),
                                                          1e-9)
                else:                   # no repeats: agreement is vacuous
                    score = np.abs(bit_votes).mean()
                if best is None or score > best[0]:
                    best = (score, total, used)
    return readout(best[1], best[2])


def nc(expected, recovered) -> float:
    """Similarity of two bit sequences: 1 - mean absolute difference."""
    a = np.asarray(expected, dtype=np.float64).ravel()
    b = np.asarray(recovered, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty bit sequences")
    return float(1.0 - np.abs(a - b).mean())
