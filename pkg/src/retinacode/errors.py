"""Exception types shared across the library.

Plain argument mistakes (unknown tags, out-of-range counts) raise ValueError;
the classes below mark failures that callers may want to handle separately,
such as malformed data files or a diverging optimizer.
"""


class RetinaCodeError(Exception):
    """Base class for library-specific failures."""


class FormatError(RetinaCodeError):
    """A data file does not match its declared binary format."""


class ConsistencyError(RetinaCodeError):
    """Two inputs that must agree (e.g. image/label counts) do not."""


class RenderError(RetinaCodeError):
    """A glyph cannot be placed on the retina without truncation."""


class CorpusError(RetinaCodeError):
    """A corpus lacks material an operation requires (e.g. a digit class)."""


class NumericError(RetinaCodeError):
    """A non-finite value appeared during network evaluation."""


class StratificationError(RetinaCodeError):
    """A labelled split cannot cover every class."""


class CompletenessError(RetinaCodeError):
    """An analysis input is missing required entries."""


class UndefinedCentroidError(RetinaCodeError):
    """Centroid requested for an image with zero total intensity."""


class CheckpointError(RetinaCodeError):
    """Base class for checkpoint load failures."""


class CheckpointFormatError(CheckpointError):
    """Checkpoint magic or header is corrupt."""


class CheckpointTruncatedError(CheckpointError):
    """Checkpoint payload is shorter than the header promises."""


class CheckpointSpecError(CheckpointError):
    """Checkpoint layer shapes do not match the expected layout."""


class TrainingDiverged(RetinaCodeError):
    """Training hit a non-finite loss.

    Carries the failing step, the last finite parameter state, and whatever
    log had accumulated, so callers can resume or report.
    """

    def __init__(self, step, last_good_params=None, log=None, message=None):
        super().__init__(message or f"non-finite loss at step {step}")
        self.step = step
        self.last_good_params = last_good_params
        self.log = log
