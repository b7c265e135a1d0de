"""Exception hierarchy shared across the package."""


class VFMError(Exception):
    """Base class for all package errors."""


class DimensionError(VFMError, ValueError):
    """Array shapes do not agree with a layer or model configuration."""


class ForwardCacheError(VFMError, RuntimeError):
    """Backward pass requested without a matching forward pass."""


class NonFiniteError(VFMError, FloatingPointError):
    """NaN or Inf encountered in a loss or gradient."""


class WindowError(VFMError, ValueError):
    """Series cannot be cut into the requested windows."""


class CoverageGapError(VFMError, ValueError):
    """Stitched forecast sequences leave samples uncovered."""

    def __init__(self, gaps):
        self.gaps = list(gaps)
        ranges = ", ".join(f"[{a}, {b}]" for a, b in self.gaps)
        super().__init__(f"forecast coverage has gaps at samples {ranges}")


class CheckpointError(VFMError):
    """Base class for checkpoint read failures."""


class CheckpointVersionError(CheckpointError):
    """Header line missing or naming an unsupported format version."""


class CheckpointFormatError(CheckpointError):
    """Checkpoint body cannot be parsed."""


class CheckpointShapeError(CheckpointError):
    """Stored tensors disagree with the stored configuration."""


class DataValidationError(VFMError, ValueError):
    """Input records violate the data schema."""
