"""Exception types raised across the recovery pipeline."""


class RoomframeError(Exception):
    """Base class for all library errors."""


# geometry

class CoincidentLines(RoomframeError):
    """Both lines describe the same locus; their intersection is undefined."""


class DegeneratePencil(RoomframeError):
    """A cross-ratio denominator vanished (coincident bracket members)."""


class NonConcurrentPencil(RoomframeError):
    """The four lines do not share a common apex within tolerance."""


class TransversalThroughApex(RoomframeError):
    """The transversal passes through the pencil apex."""


class EmptyInput(RoomframeError):
    """A normalization was asked of an empty value list."""


class VpAtMidpoint(RoomframeError):
    """The vanishing point coincides with the segment midpoint."""


# camera

class TooFewFiniteVps(RoomframeError):
    """Calibration needs at least two finite vanishing points."""


class NegativeFocalSquare(RoomframeError):
    """The vanishing points are inconsistent with any real focal length."""


class RayParallelToPlane(RoomframeError):
    """A back-projected ray cannot reach the constraint plane."""


class PlaneBehindCamera(RoomframeError):
    """The constraint plane is hit behind the optic center."""


# refinement

class EmptyImageBounds(RoomframeError):
    """Image bounds with non-positive width or height."""


class EmptyGroup(RoomframeError):
    """A candidate group has neither detected nor fitted members."""


# frame assembly and selection

class NotApplicable(RoomframeError):
    """The requested constraint does not exist for this frame category."""


class ParallelDefiningLines(RoomframeError):
    """Two corner-defining lines are parallel; the corner is at infinity."""


class CornerInconsistent(RoomframeError):
    """A designated third line misses its corner by more than the tolerance."""


class CandidateExplosion(RoomframeError):
    """More candidate frames survived than the configured cap."""


class EmptyCandidateSet(RoomframeError):
    """No candidate frame satisfied the constraints."""


class AllCandidatesFailedDepth(RoomframeError):
    """Every candidate frame failed 3D reconstruction."""


# simulation and evaluation

class CategoryUnreachable(RoomframeError):
    """The simulator could not realize the requested category."""


class CategoryMismatch(RoomframeError):
    """Detected and ground-truth frames have different categories."""


class LengthMismatch(RoomframeError):
    """Detected and ground-truth lists have different lengths."""


class PipelineError(RoomframeError):
    """Wraps a stage failure so callers can tell where recovery died."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
