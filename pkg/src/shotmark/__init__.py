"""Blind watermark localization and payload recovery for camera-shot images.

Embedding writes an orthogonal-sector DFT signature into the margin blocks of
an image and a repeat-embedded payload into the interior. Detection finds the
marked quadrilateral in a distorted photograph with no prior knowledge,
rectifies it, and reads the payload back.
"""

from .bbox import QuadCandidate, Quadrilateral, locate_quad
from .embedder import MarkParams, MarkReport, mark_image
from .errors import LocalizationFailed, NoWatermarkFound, ShotmarkError
from .imgio import ImageIOError, load_image, save_image
from .localizer import build_sweep, scale_decision, watermark_present
from .metrics import area_proportion, iou, raster_iou
from .payload import (PayloadLayout, PayloadReadout, embed_payload,
                      extract_payload, nc, payload_layout)
from .pipeline import PipelineResult, run_pipeline
from .rectify import Homography, estimate_dims, rectify, solve_homography
from .simulator import ShotConfig, simulate_shot, synth_background, synth_content

__version__ = "0.1.0"

__all__ = [
    "Homography", "ImageIOError", "LocalizationFailed", "MarkParams",
    "MarkReport", "NoWatermarkFound", "PayloadLayout", "PayloadReadout",
    "PipelineResult", "QuadCandidate", "Quadrilateral", "ShotConfig",
    "ShotmarkError", "area_proportion", "build_sweep", "embed_payload",
    "estimate_dims", "extract_payload", "iou", "load_image", "locate_quad",
    "mark_image", "nc", "payload_layout", "raster_iou", "rectify",
    "run_pipeline", "save_image", "scale_decision", "simulate_shot",
    "solve_homography", "synth_background", "synth_content",
    "watermark_present",
]
