"""End-to-end run: presence gate, localization, rectification, extraction."""

import time
from dataclasses import dataclass, field

import numpy as np

from .bbox import QuadCandidate, Quadrilateral, locate_quad
from .embedder import MarkParams
from .errors import LocalizationFailed, NoWatermarkFound
from .localizer import build_sweep, scale_decision, watermark_present
from .payload import PayloadReadout, extract_payload
from .rectify import rectify


@dataclass
class PipelineResult:
    quad: Quadrilateral
    candidate: QuadCandidate
    scale_index: int
    rectified: np.ndarray
    readout: PayloadReadout = None    # present when a payload length was given
    timings: dict = field(default_factory=dict)   # stage -> seconds


def run_pipeline(shot: np.ndarray, params: MarkParams = None, nbits: int = None,
                 nominal_size: tuple = None) -> PipelineResult:
    """Locate the marked region in a shot and, optionally, read its payload.

    Raises NoWatermarkFound when the scale sweep shows no signature and
    LocalizationFailed when no candidate box survives scoring; both are
    structured outcomes, not crashes. Payload extraction runs only when
    `nbits` is given.
    """
    params = params or MarkParams()
    timings = {}
    t0 = time.perf_counter()
    sweep = build_sweep(shot, params)
    timings["sweep"] = time.perf_counter() - t0
    if not watermark_present(sweep):
        raise NoWatermarkFound("no watermark signature at any scale")
    t0 = time.perf_counter()
    decided = scale_decision(sweep)
    cand = locate_quad(sweep, decided, params)
    timings["locate"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        rect = rectify(shot, cand.quad)
    except ValueError as exc:
        raise LocalizationFailed(f"degenerate candidate box: {exc}") from exc
    timings["rectify"] = time.perf_counter() - t0
    readout = None
    if nbits is not None:
        t0 = time.perf_counter()
        readout = extract_payload(rect, nbits, nominal_size=nominal_size,
                                  block_side=params.block_side)
        timings["extract"] = time.perf_counter() - t0
    return PipelineResult(cand.quad, cand, decided, rect, readout, timings)
