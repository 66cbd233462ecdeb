"""Frame models, constrained candidate enumeration, and final selection.

Cross-ratio brackets are evaluated on a per-pencil transversal chosen only
for numerical conditioning: the bracket value itself is invariant to the
transversal, so the choice never changes a residual beyond float noise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .camera import Camera, VanishingTriplet, depth_score, intrinsics_from_vps
from .classify import (
    CATEGORY_GROUPS,
    ClassifiedSets,
    FrameCategory,
    GroupId,
    PartitionedSegments,
    classify_segments,
    correspondence_table,
    partition_subsets,
)
from .errors import (
    AllCandidatesFailedDepth,
    CandidateExplosion,
    CornerInconsistent,
    DegeneratePencil,
    EmptyCandidateSet,
    NotApplicable,
    ParallelDefiningLines,
    PipelineError,
    PlaneBehindCamera,
    RayParallelToPlane,
    RoomframeError,
)
from .geometry import (
    HPoint,
    Line2,
    Point2,
    Segment,
    _cross_ratio_from_params,
    _transversal_params,
    intersect,
    join,
    point_segment_distance,
)
from .refine import (
    RefineConfig,
    WeightedCandidate,
    connect_collinear,
    fit_missing,
    reclassify,
    vote_select,
)


@dataclass(frozen=True)
class Frame:
    """A frame-model instance: selected box lines and their corners."""

    category: FrameCategory
    box_lines: Dict[GroupId, Segment]
    corners: Tuple[Point2, ...]  # ordered A, B, C, D as applicable


@dataclass
class CandidateFrame:
    frame: Frame
    cross_ratio_residuals: List[float]
    depth: Optional[float] = None
    origins: Dict[GroupId, str] = field(default_factory=dict)
    index: int = 0


@dataclass
class ConstraintConfig:
    """Thresholds for candidate enumeration and corner assembly."""

    cross_ratio_tol: float = 0.05
    corner_tol_px: float = 5.0
    max_candidates: int = 100000

    def __post_init__(self):
        if self.cross_ratio_tol < 0 or self.corner_tol_px <= 0 or self.max_candidates <= 0:
            raise ValueError("constraint thresholds must be positive")


# ---------------------------------------------------------------------------
# cross-ratio brackets
# ---------------------------------------------------------------------------


def _standard_transversal(lines: Sequence[Line2], apex: HPoint, anchor: Point2) -> Line2:
    """Well-conditioned transversal: through the anchor, perpendicular to the
    bisector of the pencil's extreme directions, nudged off the apex."""
    angles = [math.atan2(l.a, -l.b) % math.pi for l in lines]
    best = (0.0, angles[0], angles[0])
    for i in range(len(angles)):
        for j in range(i + 1, len(angles)):
            d = abs(angles[i] - angles[j]) % math.pi
            d = min(d, math.pi - d)
            if d > best[0]:
                best = (d, angles[i], angles[j])
    _, a1, a2 = best
    delta = ((a2 - a1 + math.pi / 2.0) % math.pi) - math.pi / 2.0
    bisector = a1 + delta / 2.0
    tx, ty = math.cos(bisector + math.pi / 2.0), math.sin(bisector + math.pi / 2.0)

    def through(pt: Point2, dx: float, dy: float) -> Line2:
        return Line2(dy, -dx, dx * pt.y - dy * pt.x)

    cand = through(anchor, tx, ty)
    apex_pt = None if apex.is_infinite else apex.to_point()
    if apex_pt is None or abs(cand.eval(apex_pt)) > 1.0:
        return cand
    cand = through(anchor, 0.0, 1.0)  # vertical fallback
    a = Point2(anchor.x, anchor.y)
    for _ in range(8):
        if abs(cand.eval(apex_pt)) > 1.0:
            return cand
        a = Point2(a.x + 2.0, a.y)
        cand = through(a, 0.0, 1.0)
    return cand


def _pencil_member(seg: Segment, apex: HPoint) -> Line2:
    """The pencil line a candidate box line stands for: through the apex
    vanishing point and the segment midpoint.

    Anchoring on the midpoint keeps the pencil exactly concurrent and makes
    the bracket insensitive to the direction noise of short fragments."""
    try:
        return join(apex, HPoint.from_point(seg.midpoint))
    except ValueError as exc:
        raise DegeneratePencil("segment midpoint sits on the vanishing point") from exc


def _bracket(
    seg1: Segment, base1: Line2, seg2: Segment, base2: Line2, apex: HPoint
) -> float:
    """Pencil cross ratio (seg1, base1 : seg2, base2) about the apex."""
    lines = [_pencil_member(seg1, apex), base1, _pencil_member(seg2, apex), base2]
    anchor = Point2(
        (seg1.p.x + seg1.q.x + seg2.p.x + seg2.q.x) / 4.0,
        (seg1.p.y + seg1.q.y + seg2.p.y + seg2.q.y) / 4.0,
    )
    transversal = _standard_transversal(lines, apex, anchor)
    return _cross_ratio_from_params(_transversal_params(lines, transversal))


def cross_ratio_residuals(
    selection: Dict[GroupId, Segment], t: VanishingTriplet, cat: FrameCategory
) -> List[float]:
    """Residuals of the category's cross-ratio constraints for one selection.

    Not defined for the one-corner category, which carries no cross-ratio
    invariance and is filtered by the depth constraint alone.
    """
    g = {str(k): v for k, v in selection.items()}
    if cat is FrameCategory.ONE_C:
        raise NotApplicable("the one-corner model has no cross-ratio constraint")
    if cat is FrameCategory.FOUR_C:
        c_x = _bracket(g["x_c"], t.horizon_line, g["x_f"], t.xy_line, t.vp_x)
        c_clfl = _bracket(g["z_cl"], t.horizon_line, g["z_fl"], t.vertical_line, t.vp_z)
        c_crfr = _bracket(g["z_cr"], t.horizon_line, g["z_fr"], t.vertical_line, t.vp_z)
        c_y = _bracket(g["y_l"], t.vertical_line, g["y_r"], t.xy_line, t.vp_y)
        c_flfr = _bracket(g["z_fl"], t.vertical_line, g["z_fr"], t.horizon_line, t.vp_z)
        c_clcr = _bracket(g["z_cl"], t.vertical_line, g["z_cr"], t.horizon_line, t.vp_z)
        return [
            abs(2.0 * c_x - c_clfl - c_crfr),
            abs(2.0 * c_y - c_flfr - c_clcr),
        ]
    if cat is FrameCategory.TWO_VC:
        c_x = _bracket(g["x_c"], t.horizon_line, g["x_f"], t.xy_line, t.vp_x)
        c_z = _bracket(g["z_c"], t.horizon_line, g["z_f"], t.vertical_line, t.vp_z)
        return [abs(c_x - c_z)]
    # TwoHC
    c_y = _bracket(g["y_l"], t.vertical_line, g["y_r"], t.xy_line, t.vp_y)
    c_z = _bracket(g["z_l"], t.vertical_line, g["z_r"], t.horizon_line, t.vp_z)
    return [abs(c_y - c_z)]


# ---------------------------------------------------------------------------
# frame assembly
# ---------------------------------------------------------------------------


def _corner(a: Segment, b: Segment) -> Point2:
    hp = intersect(a.line(), b.line())
    if hp.is_infinite:
        raise ParallelDefiningLines("corner-defining lines are parallel")
    return hp.to_point()


def _check_consistent(line_seg: Segment, corner: Point2, tol: float, name: str) -> None:
    if abs(line_seg.line().eval(corner)) > tol:
        raise CornerInconsistent(f"{name} misses its corner by more than {tol:.3g} px")


def assemble_frame(
    selection: Dict[GroupId, Segment], cat: FrameCategory, cfg: ConstraintConfig
) -> Frame:
    """Intersect the designated box lines into corners and sanity-check the
    incident third lines against the corner tolerance."""
    g = {str(k): v for k, v in selection.items()}
    tol = cfg.corner_tol_px
    if cat is FrameCategory.FOUR_C:
        a = _corner(g["x_c"], g["y_l"])
        b = _corner(g["x_c"], g["y_r"])
        c = _corner(g["x_f"], g["y_r"])
        d = _corner(g["x_f"], g["y_l"])
        _check_consistent(g["z_cl"], a, tol, "z_cl")
        _check_consistent(g["z_cr"], b, tol, "z_cr")
        _check_consistent(g["z_fr"], c, tol, "z_fr")
        _check_consistent(g["z_fl"], d, tol, "z_fl")
        corners = (a, b, c, d)
    elif cat is FrameCategory.TWO_VC:
        a = _corner(g["y"], g["x_c"])
        b = _corner(g["y"], g["x_f"])
        _check_consistent(g["z_c"], a, tol, "z_c")
        _check_consistent(g["z_f"], b, tol, "z_f")
        corners = (a, b)
    elif cat is FrameCategory.TWO_HC:
        a = _corner(g["x"], g["y_l"])
        b = _corner(g["x"], g["y_r"])
        _check_consistent(g["z_l"], a, tol, "z_l")
        _check_consistent(g["z_r"], b, tol, "z_r")
        corners = (a, b)
    else:
        a = _corner(g["x"], g["y"])
        _check_consistent(g["z"], a, tol, "z")
        corners = (a,)
    return Frame(category=cat, box_lines=dict(selection), corners=corners)


# ---------------------------------------------------------------------------
# candidate enumeration
# ---------------------------------------------------------------------------


def _bracket_grid(
    cands1: Sequence[WeightedCandidate],
    base1: Line2,
    cands2: Sequence[WeightedCandidate],
    base2: Line2,
    apex: HPoint,
) -> np.ndarray:
    out = np.full((len(cands1), len(cands2)), np.nan)
    for i, c1 in enumerate(cands1):
        for j, c2 in enumerate(cands2):
            try:
                out[i, j] = _bracket(c1.segment, base1, c2.segment, base2, apex)
            except (DegeneratePencil, ValueError):
                pass
    return out


_CORNER_INSET_PX = 2.0
_CORNER_EVIDENCE_FRAC = 0.25  # of the image diagonal
_MAX_CORNER_DEPTH = 40.0  # camera heights; indoor plausibility cap

# corner label -> every group whose line is incident to it (defining pair
# first, then the consistency lines)
_INCIDENT = {
    FrameCategory.FOUR_C: (
        ("x_c", "y_l", "z_cl"),
        ("x_c", "y_r", "z_cr"),
        ("x_f", "y_r", "z_fr"),
        ("x_f", "y_l", "z_fl"),
    ),
    FrameCategory.TWO_VC: (("y", "x_c", "z_c"), ("y", "x_f", "z_f")),
    FrameCategory.TWO_HC: (("x", "y_l", "z_l"), ("x", "y_r", "z_r")),
    FrameCategory.ONE_C: (("x", "y", "z"),),
}


def enumerate_candidates(
    groups: Dict[GroupId, List[WeightedCandidate]],
    t: VanishingTriplet,
    cat: FrameCategory,
    cfg: ConstraintConfig,
    image_size: Optional[Tuple[float, float]] = None,
) -> List[CandidateFrame]:
    """All selections passing the cross-ratio residual test that assemble
    into a consistent frame, in canonical per-group index order.

    The residual structure factors over group pairs, so selections are
    pruned as soon as a residual they fully determine fails; the survivor
    set equals brute-force filtering of the full Cartesian product.  When
    the image size is known, corners must land inside the image: the
    categories are defined by corners appearing on it, and intersections of
    fitted lines at clipped segment ends would otherwise fake frames on the
    border.
    """
    order = CATEGORY_GROUPS[cat]
    for g in order:
        if not groups.get(g):
            raise EmptyCandidateSet(f"group {g} has no candidates to enumerate")
    eps = cfg.cross_ratio_tol
    tuples: List[Tuple[int, ...]] = []

    def guard(count: int) -> None:
        if count > cfg.max_candidates:
            raise CandidateExplosion(
                f"more than {cfg.max_candidates} candidate frames survive"
            )

    if cat is FrameCategory.FOUR_C:
        xc, xf, yl, yr, zcl, zcr, zfl, zfr = (groups[g] for g in order)
        c_x = _bracket_grid(xc, t.horizon_line, xf, t.xy_line, t.vp_x)
        c_y = _bracket_grid(yl, t.vertical_line, yr, t.xy_line, t.vp_y)
        c_clfl = _bracket_grid(zcl, t.horizon_line, zfl, t.vertical_line, t.vp_z)
        c_crfr = _bracket_grid(zcr, t.horizon_line, zfr, t.vertical_line, t.vp_z)
        c_flfr = _bracket_grid(zfl, t.vertical_line, zfr, t.horizon_line, t.vp_z)
        c_clcr = _bracket_grid(zcl, t.vertical_line, zcr, t.horizon_line, t.vp_z)
        for icl, icr, ifl, ifr in itertools.product(
            range(len(zcl)), range(len(zcr)), range(len(zfl)), range(len(zfr))
        ):
            r1 = np.abs(2.0 * c_x - (c_clfl[icl, ifl] + c_crfr[icr, ifr]))
            xs = np.argwhere(r1 < eps)
            if xs.size == 0:
                continue
            r2 = np.abs(2.0 * c_y - (c_flfr[ifl, ifr] + c_clcr[icl, icr]))
            ys = np.argwhere(r2 < eps)
            if ys.size == 0:
                continue
            for (ixc, ixf), (iyl, iyr) in itertools.product(xs, ys):
                tuples.append((int(ixc), int(ixf), int(iyl), int(iyr), icl, icr, ifl, ifr))
            guard(len(tuples))
    elif cat is FrameCategory.TWO_VC:
        xc, xf, y, zc, zf = (groups[g] for g in order)
        c_x = _bracket_grid(xc, t.horizon_line, xf, t.xy_line, t.vp_x)
        c_z = _bracket_grid(zc, t.horizon_line, zf, t.vertical_line, t.vp_z)
        res = np.abs(c_x[:, :, None, None] - c_z[None, None, :, :])
        for ixc, ixf, izc, izf in map(tuple, np.argwhere(res < eps)):
            for iy in range(len(y)):
                tuples.append((int(ixc), int(ixf), iy, int(izc), int(izf)))
            guard(len(tuples))
    elif cat is FrameCategory.TWO_HC:
        x, yl, yr, zl, zr = (groups[g] for g in order)
        c_y = _bracket_grid(yl, t.vertical_line, yr, t.xy_line, t.vp_y)
        c_z = _bracket_grid(zl, t.vertical_line, zr, t.horizon_line, t.vp_z)
        res = np.abs(c_y[:, :, None, None] - c_z[None, None, :, :])
        for iyl, iyr, izl, izr in map(tuple, np.argwhere(res < eps)):
            for ix in range(len(x)):
                tuples.append((ix, int(iyl), int(iyr), int(izl), int(izr)))
            guard(len(tuples))
    else:  # OneC: no cross-ratio constraint, keep whatever assembles
        sizes = [range(len(groups[g])) for g in order]
        for combo in itertools.product(*sizes):
            tuples.append(tuple(combo))
            guard(len(tuples))

    tuples.sort()

    def corners_plausible(frame: Frame, origins: Dict[GroupId, str]) -> bool:
        """Corners must appear on the image and carry detected evidence.

        Fitted lines are hypotheses spanning the whole image, so at least
        one incident line per corner must be a detected segment reaching
        within a quarter diagonal of it; detected defining segments must
        also not place the corner absurdly far past their span.  The slack
        is wide enough to survive occluded corner regions.
        """
        if image_size is None:
            return True
        w, h = image_size
        evid = _CORNER_EVIDENCE_FRAC * math.hypot(w, h)
        lines = {str(k): v for k, v in frame.box_lines.items()}
        orig = {str(k): v for k, v in origins.items()}
        for corner, incident in zip(frame.corners, _INCIDENT[cat]):
            if not (
                _CORNER_INSET_PX <= corner.x <= w - _CORNER_INSET_PX
                and _CORNER_INSET_PX <= corner.y <= h - _CORNER_INSET_PX
            ):
                return False
            detected_near = False
            for gname in incident:
                s = lines[gname]
                d = point_segment_distance(corner, s.p, s.q)
                if orig.get(gname) == "detected":
                    if gname in incident[:2] and d > evid:
                        return False  # defining evidence too far from the corner
                    if d <= evid:
                        detected_near = True
            if not detected_near:
                return False
        return True

    out: List[CandidateFrame] = []
    for combo in tuples:
        selection = {g: groups[g][i].segment for g, i in zip(order, combo)}
        origins = {g: groups[g][i].origin for g, i in zip(order, combo)}
        try:
            frame = assemble_frame(selection, cat, cfg)
        except (ParallelDefiningLines, CornerInconsistent):
            continue
        if not corners_plausible(frame, origins):
            continue
        if cat is FrameCategory.ONE_C:
            residuals: List[float] = []
        else:
            try:
                residuals = cross_ratio_residuals(selection, t, cat)
            except (DegeneratePencil, ValueError):
                continue
        out.append(
            CandidateFrame(
                frame=frame,
                cross_ratio_residuals=residuals,
                origins=origins,
                index=len(out),
            )
        )
    if not out:
        raise EmptyCandidateSet("no candidate frame satisfies the constraints")
    if len(out) > cfg.max_candidates:
        raise CandidateExplosion(
            f"more than {cfg.max_candidates} candidate frames survive"
        )
    return out


def select_final(candidates: Sequence[CandidateFrame], camera: Camera) -> CandidateFrame:
    """Pick the candidate frame with the greatest depth score.

    Candidates whose reconstruction fails are skipped; exact ties fall back
    to the smaller total cross-ratio residual, then enumeration order.
    """
    if not candidates:
        raise AllCandidatesFailedDepth("no candidates to select from")
    best: Optional[CandidateFrame] = None
    best_key = None
    for cand in candidates:
        try:
            s = depth_score(cand.frame, camera)
        except (RayParallelToPlane, PlaneBehindCamera):
            continue
        if s > _MAX_CORNER_DEPTH * len(cand.frame.corners):
            continue  # deeper than any plausible room
        cand.depth = s
        key = (s, -math.fsum(cand.cross_ratio_residuals), -cand.index)
        if best_key is None or key > best_key:
            best_key, best = key, cand
    if best is None:
        raise AllCandidatesFailedDepth("every candidate failed 3D reconstruction")
    return best


# ---------------------------------------------------------------------------
# end-to-end pipeline
# ---------------------------------------------------------------------------


@dataclass
class RecoverResult:
    """Final frame plus every intermediate stage, for rendering and tests."""

    frame: Frame
    selected: CandidateFrame
    candidates: List[CandidateFrame]
    camera: Camera
    initial_sets: ClassifiedSets
    reclassified_sets: ClassifiedSets
    connected_sets: ClassifiedSets
    partition: PartitionedSegments
    fitted: Dict[GroupId, List[Segment]]
    vote_selection: Dict[GroupId, List[WeightedCandidate]]


def recover(
    segments: Sequence[Segment],
    t: VanishingTriplet,
    cat: FrameCategory,
    image_size: Tuple[float, float],
    refine_cfg: Optional[RefineConfig] = None,
    constraint_cfg: Optional[ConstraintConfig] = None,
) -> RecoverResult:
    """Run the whole pipeline: classify, reclassify, connect, partition,
    fit, vote, enumerate under the cross-ratio constraint, and select by
    depth.  Stage failures surface as PipelineError with the stage name."""
    rcfg = refine_cfg or RefineConfig()
    ccfg = constraint_cfg or ConstraintConfig()

    def run(stage, fn):
        try:
            return fn()
        except RoomframeError as exc:
            raise PipelineError(stage, exc) from exc
        except ValueError as exc:
            raise PipelineError(stage, exc) from exc

    if not segments:
        raise PipelineError("input", ValueError("segment list is empty"))
    ids = [s.id for s in segments]
    if len(set(ids)) != len(ids):
        raise PipelineError("input", ValueError("segment ids must be unique"))

    diag = math.hypot(*image_size)
    eff_ccfg = ConstraintConfig(
        cross_ratio_tol=ccfg.cross_ratio_tol,
        corner_tol_px=ccfg.corner_tol_px * diag / 800.0,
        max_candidates=ccfg.max_candidates,
    )

    initial = run("classify", lambda: classify_segments(segments, t, rcfg.classify_angle_deg))
    reclassified = run("reclassify", lambda: reclassify(initial, t, rcfg))

    def connect_all() -> ClassifiedSets:
        return ClassifiedSets(
            x=connect_collinear(reclassified.x, rcfg, t.vp_x),
            y=connect_collinear(reclassified.y, rcfg, t.vp_y),
            z=connect_collinear(reclassified.z, rcfg, t.vp_z),
            outliers=list(reclassified.outliers),
        )

    connected = run("connect", connect_all)
    partition = run("partition", lambda: partition_subsets(connected, t, cat))
    corr = correspondence_table(cat)
    fitted = run("fit", lambda: fit_missing(partition, t, corr, image_size, rcfg))
    selection = run(
        "vote", lambda: vote_select(partition, fitted, corr, t, rcfg, image_size)
    )
    candidates = run(
        "enumerate",
        lambda: enumerate_candidates(selection, t, cat, eff_ccfg, image_size),
    )
    camera = run("calibrate", lambda: intrinsics_from_vps(t, image_size))
    chosen = run("select", lambda: select_final(candidates, camera))
    return RecoverResult(
        frame=chosen.frame,
        selected=chosen,
        candidates=candidates,
        camera=camera,
        initial_sets=initial,
        reclassified_sets=reclassified,
        connected_sets=connected,
        partition=partition,
        fitted=fitted,
        vote_selection=selection,
    )
