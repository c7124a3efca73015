"""Exception types shared across the package."""


class HsiCubeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HsiCubeError, ValueError):
    """An argument lies outside its documented domain."""


class ShapeError(HsiCubeError, ValueError):
    """Array dimensions do not satisfy the operation's contract."""


class AlignmentError(HsiCubeError, ValueError):
    """A crop rectangle is not aligned to the 5x5 mosaic grid."""


class BoundsError(HsiCubeError, ValueError):
    """A crop rectangle extends beyond the frame."""


class CalibrationError(HsiCubeError, ValueError):
    """The white reference is unusable for reflectance division."""


class ConfigError(HsiCubeError, ValueError):
    """A configuration file, scene spec, or filter spec failed to validate."""


class StatisticsError(HsiCubeError, ValueError):
    """Degenerate per-band statistics (zero std or empty min-max range)."""


class EvaluationError(HsiCubeError, ValueError):
    """Segmentation metrics cannot be computed from the given inputs."""


class SchemaError(HsiCubeError, ValueError):
    """Two tables or reports do not share the same class set."""


class EstimationError(HsiCubeError, RuntimeError):
    """Illuminant estimation rejected every candidate pixel."""

    def __init__(self, message: str, candidates_examined: int = 0,
                 rejected_count: int = 0):
        super().__init__(message)
        self.candidates_examined = candidates_examined
        self.rejected_count = rejected_count


class StageFailure(HsiCubeError):
    """Error raised inside the frame pipeline, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause
