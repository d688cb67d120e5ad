"""Error types used across the pipeline."""


class ShotmarkError(Exception):
    """Base class for all library errors."""


class NoWatermarkFound(ShotmarkError):
    """The scale sweep shows no watermark signature anywhere in the image."""


class LocalizationFailed(ShotmarkError):
    """A watermark signature exists but no valid bounding quad survived scoring."""
