"""Exception hierarchy shared by all engine modules.

Everything derives from :class:`SoftBodyError` so callers (CLI, server) can
map engine failures to exit codes / wire errors with one except clause.
I/O failures deliberately stay builtin ``OSError``.
"""


class SoftBodyError(Exception):
    """Base class for all engine errors."""

    #: stable machine-readable identifier used by the wire protocol and CLI
    code = "error"


class InvalidArgument(SoftBodyError, ValueError):
    code = "invalid_argument"


class UnknownObject(SoftBodyError, LookupError):
    code = "unknown_object"


class UnknownParticle(SoftBodyError, LookupError):
    code = "unknown_particle"


class SelfLink(SoftBodyError):
    code = "self_link"


class OpenBoundary(SoftBodyError):
    """Face set of a layer does not form a closed loop/shell."""

    code = "open_boundary"


class EmptyWorld(SoftBodyError):
    code = "empty_world"


class NotRunning(SoftBodyError):
    code = "not_running"


class AlreadyRunning(SoftBodyError):
    code = "already_running"


class NoActiveDrag(SoftBodyError):
    code = "no_active_drag"


class StaleHandle(SoftBodyError):
    """Drag handle refers to a particle that no longer exists."""

    code = "stale_handle"


class SameDimension(SoftBodyError):
    code = "same_dimension"


class UnsupportedDimension(SoftBodyError):
    """No builder registered for the requested dimension."""

    code = "unsupported_dimension"


class NumericalBlowup(SoftBodyError):
    """Integration produced non-finite or absurdly large coordinates."""

    code = "numerical_blowup"


class AlreadyRecording(SoftBodyError):
    code = "already_recording"


class NotRecording(SoftBodyError):
    code = "not_recording"


class NothingToSave(SoftBodyError):
    code = "nothing_to_save"


class CapacityExceeded(SoftBodyError):
    """Recorder frame buffer is full; capture has stopped."""

    code = "capacity_exceeded"


class ParseError(SoftBodyError):
    """A state dump (or other document) could not be parsed."""

    code = "parse_error"


class DecodeError(SoftBodyError):
    """A wire message does not conform to the protocol schema."""

    code = "bad_message"


class SceneError(SoftBodyError):
    """Scene configuration is malformed or violates builder preconditions."""

    code = "scene_error"


class MatrixError(SoftBodyError):
    """Base class for pairwise comparison matrix validation failures."""

    code = "matrix_error"


class NotSquare(MatrixError):
    code = "not_square"


class NonPositiveEntry(MatrixError):
    code = "non_positive_entry"


class NotReciprocal(MatrixError):
    code = "not_reciprocal"


class LabelMismatch(MatrixError):
    code = "label_mismatch"
