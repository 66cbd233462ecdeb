"""Indoor frame recovery from line segments and orthogonal vanishing points."""

from .camera import Camera, Corner3, VanishingTriplet, backproject, depth_score, intrinsics_from_vps, reconstruct_corners
from .classify import (
    CATEGORY_GROUPS,
    ClassifiedSets,
    Correspondence,
    FrameCategory,
    GroupId,
    PartitionedSegments,
    classify_segments,
    correspondence_table,
    partition_subsets,
)
from .errors import PipelineError, RoomframeError
from .evaluate import BenchmarkReport, EvalRecord, corner_error, run_benchmark
from .frames import (
    CandidateFrame,
    ConstraintConfig,
    Frame,
    RecoverResult,
    assemble_frame,
    cross_ratio_residuals,
    enumerate_candidates,
    recover,
    select_final,
)
from .geometry import (
    HPoint,
    Line2,
    Point2,
    Segment,
    angle_to_vanishing_point,
    cross_ratio_points,
    intersect,
    pencil_cross_ratio,
    proportional_weights,
    reversed_weights,
)
from .refine import (
    CollinearityReport,
    RefineConfig,
    WeightedCandidate,
    collinearity_error,
    connect_collinear,
    fit_missing,
    initial_weights,
    reclassify,
    vote_increment,
    vote_select,
)
from .sim import DegradeParams, SceneTruth, degrade, generate_scene

__version__ = "0.1.0"
