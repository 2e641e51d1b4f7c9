"""Exception types shared across the package."""


class CurricarError(Exception):
    """Base class for all package-specific errors."""


class FarFromTrack(CurricarError):
    """Point handed to the projector is too far from the centerline.

    This signals a simulator escape or a caller bug; normal off-road
    termination happens well before this threshold.
    """


class OffRoadOrigin(CurricarError):
    """Ray query asked for with an origin outside the road surface."""


class NonFiniteState(CurricarError):
    """Vehicle integration produced NaN or infinity."""


class CalibrationFailure(CurricarError):
    """Simulated braking distances miss their reference values by > 2%."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SteppingTerminatedEnv(CurricarError):
    """step() called on an environment whose episode already ended."""


class ShapeMismatch(CurricarError):
    """Network input or gradient has the wrong dimensions."""


class InsufficientData(CurricarError):
    """Replay buffer does not yet hold enough transitions for an update."""


class CorruptCheckpoint(CurricarError):
    """Checkpoint file is unreadable or missing required entries."""


class VersionMismatch(CurricarError):
    """Checkpoint does not match the expected format version or architecture."""


class InvalidConfig(CurricarError):
    """Run configuration contains unknown keys or out-of-range values."""


class MissingRuns(CurricarError):
    """Report generation pointed at directories without completed runs."""


class IoFailure(CurricarError):
    """Filesystem operation failed while writing or reading run artifacts."""
