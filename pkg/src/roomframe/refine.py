"""Segment refinement: reclassifying, connecting, fitting, and voting.

Voting notes: supporters are always detected segments (fitted lines never
supply supporting points), every weight evolves across rounds, and the vote
ratios are pooled per supporter group before scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .camera import VanishingTriplet
from .classify import (
    CATEGORY_GROUPS,
    ClassifiedSets,
    Correspondence,
    GroupId,
    PartitionedSegments,
    endpoint_on_side,
)
from .errors import EmptyGroup, EmptyImageBounds
from .geometry import (
    HPoint,
    Point2,
    Segment,
    angle_to_vanishing_point,
    clip_line_to_rect,
    direction_angle_deg,
    join,
    proportional_weights,
    reversed_weights,
)

_FIT_DEDUP_DEG = 0.2
_VOTE_SLACK_PX = 0.5
# gaps below the endpoint slack are indistinguishable from touching; the
# floor keeps one float-jitter pair from swallowing a whole vote pool
_GAP_FLOOR_PX = 0.5


@dataclass(frozen=True)
class CollinearityReport:
    """Quantities behind the collinearity error of a segment pair."""

    span: float  # longest distance over the four endpoint pairs
    gap: float  # shortest distance between the two closed segments
    total_length: float  # sum of the two segment lengths
    error: float  # |span - gap - total_length|


@dataclass
class RefineConfig:
    """Tunables for the four refinement operations."""

    reclassify_angle_deg: float = 20.0
    reclassify_min_neighbors: int = 3  # strictly more than 2 neighbors
    connect_tol_px: float = 0.3
    length_mix: float = 0.5
    angle_mix: float = 0.5
    top_n: int = 5
    max_vote_rounds: int = 50
    classify_angle_deg: float = 8.0

    def __post_init__(self):
        if abs(self.length_mix + self.angle_mix - 1.0) > 1e-12:
            raise ValueError("length_mix and angle_mix must sum to 1")
        if not 5 <= self.top_n <= 10:
            raise ValueError("top_n must be between 5 and 10")
        for name in ("reclassify_angle_deg", "connect_tol_px", "classify_angle_deg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.reclassify_min_neighbors < 1 or self.max_vote_rounds < 1:
            raise ValueError("counts must be positive")


@dataclass
class WeightedCandidate:
    """A candidate box line with its evolving vote weight."""

    segment: Segment
    origin: str  # "detected" or "fitted"
    weight: float = 0.0
    last_vote: float = 0.0


# ---------------------------------------------------------------------------
# vectorized helpers
# ---------------------------------------------------------------------------


def _endpoint_arrays(segs: Sequence[Segment]) -> Tuple[np.ndarray, np.ndarray]:
    P = np.array([[s.p.x, s.p.y] for s in segs], dtype=float)
    Q = np.array([[s.q.x, s.q.y] for s in segs], dtype=float)
    return P, Q


def _point_segment_dist_matrix(pts: np.ndarray, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    d = Q - P
    L2 = (d * d).sum(axis=1)
    w = pts[:, None, :] - P[None, :, :]
    tt = np.clip((w * d[None, :, :]).sum(axis=2) / L2[None, :], 0.0, 1.0)
    proj = P[None, :, :] + tt[:, :, None] * d[None, :, :]
    return np.linalg.norm(pts[:, None, :] - proj, axis=2)


def _orient_matrix(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    # orientation of C[j] relative to segment A[i]-B[i], shape (i, j)
    ab = B - A
    return ab[:, None, 0] * (C[None, :, 1] - A[:, None, 1]) - ab[:, None, 1] * (
        C[None, :, 0] - A[:, None, 0]
    )


def _segment_dist_matrix(P1, Q1, P2, Q2) -> np.ndarray:
    o1 = _orient_matrix(P1, Q1, P2)
    o2 = _orient_matrix(P1, Q1, Q2)
    o3 = _orient_matrix(P2, Q2, P1).T
    o4 = _orient_matrix(P2, Q2, Q1).T
    proper = (
        ((o1 > 0) != (o2 > 0))
        & ((o3 > 0) != (o4 > 0))
        & (o1 != 0)
        & (o2 != 0)
        & (o3 != 0)
        & (o4 != 0)
    )
    d = np.minimum.reduce(
        [
            _point_segment_dist_matrix(P1, P2, Q2),
            _point_segment_dist_matrix(Q1, P2, Q2),
            _point_segment_dist_matrix(P2, P1, Q1).T,
            _point_segment_dist_matrix(Q2, P1, Q1).T,
        ]
    )
    return np.where(proper, 0.0, d)


# ---------------------------------------------------------------------------
# reclassifying
# ---------------------------------------------------------------------------


def reclassify(sets: ClassifiedSets, t: VanishingTriplet, cfg: RefineConfig) -> ClassifiedSets:
    """Move segments between direction sets using disk-neighborhood evidence.

    A segment nearly parallel to the horizon line is confusable between the
    x and z sets (both vanishing points lie on that line); likewise the
    vertical line for y and z.  When strictly more than two segments of the
    other set cross the disk centered on the segment's midpoint (radius half
    the length), the segment moves.  One pass over a snapshot: counts use
    the input sets and moves never cascade within the pass.
    """
    snapshot = {
        "x": list(sets.x),
        "y": list(sets.y),
        "z": list(sets.z),
    }
    arrays = {axis: _endpoint_arrays(v) if v else None for axis, v in snapshot.items()}
    moves: Dict[str, str] = {}

    rules = (
        ("x", "z", t.horizon_line),
        ("z", "x", t.horizon_line),
        ("y", "z", t.vertical_line),
        ("z", "y", t.vertical_line),
    )
    for src, dst, line in rules:
        cand = [
            s
            for s in snapshot[src]
            if s.id not in moves
            and direction_angle_deg(
                s.q.x - s.p.x, s.q.y - s.p.y, *line.direction()
            )
            < cfg.reclassify_angle_deg
        ]
        if not cand or arrays[dst] is None:
            continue
        mids = np.array([[s.midpoint.x, s.midpoint.y] for s in cand])
        radii = np.array([s.length / 2.0 for s in cand])
        P, Q = arrays[dst]
        dists = _point_segment_dist_matrix(mids, P, Q)
        counts = (dists <= radii[:, None]).sum(axis=1)
        for s, n in zip(cand, counts):
            if n >= cfg.reclassify_min_neighbors:
                moves[s.id] = dst

    out = ClassifiedSets(outliers=list(sets.outliers))
    for axis in ("x", "y", "z"):
        for s in snapshot[axis]:
            out.by_axis(moves.get(s.id, axis)).append(s)
    return out


# ---------------------------------------------------------------------------
# connecting
# ---------------------------------------------------------------------------


def collinearity_error(a: Segment, b: Segment) -> CollinearityReport:
    """Collinearity error |span - gap - total_length| of two segments.

    Exactly zero for collinear segments with disjoint spans regardless of
    the gap size, which is what makes the measure tolerate broken edges.
    """
    from .geometry import dist, segment_distance

    span = max(
        dist(a.p, b.p), dist(a.p, b.q), dist(a.q, b.p), dist(a.q, b.q)
    )
    gap = segment_distance(a, b)
    total = a.length + b.length
    return CollinearityReport(
        span=span, gap=gap, total_length=total, error=abs(span - gap - total)
    )


def _merge_span(a: Segment, b: Segment) -> Segment:
    pts = [a.p, a.q, b.p, b.q]
    best = (0.0, a.p, a.q)
    for i in range(4):
        for j in range(i + 1, 4):
            d = math.hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y)
            if d > best[0]:
                best = (d, pts[i], pts[j])
    _, u, v = best
    if (u.x, u.y) > (v.x, v.y):
        u, v = v, u
    if a.length > b.length or (a.length == b.length and a.id <= b.id):
        keep = a.id
    else:
        keep = b.id
    return Segment(u, v, id=keep)


def _spans_vanishing_point(p: Point2, q: Point2, vp: Optional[HPoint]) -> bool:
    """True when the vanishing point projects strictly inside [p, q] while
    lying close to the segment's line.

    Segments on opposite sides of their vanishing point are images of
    opposite room edges: they can be exactly collinear (both lines pass
    through the vanishing point) but never belong to one physical edge, so
    merging them would destroy both box lines.
    """
    if vp is None or vp.is_infinite:
        return False
    v = vp.to_point()
    dx, dy = q.x - p.x, q.y - p.y
    length = math.hypot(dx, dy)
    s = ((v.x - p.x) * dx + (v.y - p.y) * dy) / length
    if not (1.0 < s < length - 1.0):
        return False
    dist = abs((v.x - p.x) * dy - (v.y - p.y) * dx) / length
    return dist <= max(10.0, 0.05 * length)


def connect_collinear(
    segments: Sequence[Segment], cfg: RefineConfig, vp: Optional[HPoint] = None
) -> List[Segment]:
    """Repeatedly merge the best collinear pair until no pair qualifies.

    Pairs are processed by ascending error with ties broken on segment ids;
    a merged pair is replaced by the segment spanning the farthest endpoint
    pair.  When the set's vanishing point is supplied, merges whose span
    would cross it are rejected.  The result is a fixpoint: running the
    operation twice changes nothing.
    """
    segs = list(segments)
    if len(segs) < 2:
        return segs

    def pair_error(a: Segment, b: Segment) -> float:
        return collinearity_error(a, b).error

    n = len(segs)
    err = np.full((n, n), np.inf)
    P, Q = _endpoint_arrays(segs)
    lens = np.linalg.norm(Q - P, axis=1)
    span = np.maximum.reduce(
        [
            np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2),
            np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2),
            np.linalg.norm(Q[:, None, :] - P[None, :, :], axis=2),
            np.linalg.norm(Q[:, None, :] - Q[None, :, :], axis=2),
        ]
    )
    gap = _segment_dist_matrix(P, Q, P, Q)
    err = np.abs(span - gap - (lens[:, None] + lens[None, :]))
    np.fill_diagonal(err, np.inf)

    alive = [True] * n
    while True:
        m = err.min()
        if not (m < cfg.connect_tol_px):
            break
        pairs = np.argwhere(err == m)
        best_key = None
        best_pair = None
        for i, j in pairs:
            if i >= j:
                continue
            ids = tuple(sorted((segs[i].id, segs[j].id)))
            if best_key is None or ids < best_key:
                best_key, best_pair = ids, (int(i), int(j))
        if best_pair is None:
            break
        i, j = best_pair
        merged = _merge_span(segs[i], segs[j])
        if _spans_vanishing_point(merged.p, merged.q, vp):
            err[i, j] = np.inf
            err[j, i] = np.inf
            continue
        segs[i] = merged
        alive[j] = False
        err[j, :] = np.inf
        err[:, j] = np.inf
        for k in range(len(segs)):
            if k == i or not alive[k]:
                continue
            e = pair_error(merged, segs[k])
            err[i, k] = e
            err[k, i] = e
    return [s for s, a in zip(segs, alive) if a]


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def _line_angle_deg(p: Point2, q: Point2) -> float:
    return math.degrees(math.atan2(q.y - p.y, q.x - p.x)) % 180.0


def _angle_close(a: float, b: float, tol: float) -> bool:
    d = abs(a - b) % 180.0
    return min(d, 180.0 - d) < tol


def fit_missing(
    partition: PartitionedSegments,
    t: VanishingTriplet,
    corr: Correspondence,
    image_size: Tuple[float, float],
    cfg: RefineConfig,
) -> Dict[GroupId, List[Segment]]:
    """Create candidate box lines from vanishing points and supporting points.

    For every group, the designated endpoint of every segment in each
    supporter group is joined to the group's vanishing point; the line is
    clipped to the image and added as a fitted candidate.  Fitted lines
    within 0.2 degrees of an earlier one (about the vanishing point) are
    dropped as duplicates.
    """
    w, h = image_size
    if w <= 0 or h <= 0:
        raise EmptyImageBounds(f"image bounds {image_size} are empty")
    fitted: Dict[GroupId, List[Segment]] = {g: [] for g in CATEGORY_GROUPS[partition.category]}
    for g in CATEGORY_GROUPS[partition.category]:
        vp = t.vp_for_axis(g.axis)
        kept_angles: List[float] = []
        count = 0
        for sg, side in corr.supporters[g]:
            for seg in partition.subsets[sg]:
                pt = endpoint_on_side(seg, side)
                try:
                    line = join(vp, HPoint.from_point(pt))
                except ValueError:
                    continue  # supporting point sits on the vanishing point
                clip = clip_line_to_rect(line, w, h)
                if clip is None:
                    continue
                a, b = clip
                if math.hypot(a.x - b.x, a.y - b.y) < 2.0:
                    continue
                ang = _line_angle_deg(a, b)
                if any(_angle_close(ang, k, _FIT_DEDUP_DEG) for k in kept_angles):
                    continue
                kept_angles.append(ang)
                fitted[g].append(Segment(a, b, id=f"fit:{g}:{count}"))
                count += 1
    return fitted


# ---------------------------------------------------------------------------
# voting
# ---------------------------------------------------------------------------


def initial_weights(
    candidates: Sequence[WeightedCandidate], vp: HPoint, cfg: RefineConfig
) -> np.ndarray:
    """Length/angle mixture weights, normalized within the group.

    Fitted candidates have no meaningful length: they are excluded from the
    length pool and their weight is the angle weight alone.
    """
    if not candidates:
        raise EmptyGroup("cannot weight an empty candidate group")
    angles = [angle_to_vanishing_point(c.segment, vp) for c in candidates]
    w_ang = reversed_weights(angles)
    det_idx = [i for i, c in enumerate(candidates) if c.origin == "detected"]
    w = np.zeros(len(candidates))
    if det_idx:
        w_len = proportional_weights([candidates[i].segment.length for i in det_idx])
        for pos, i in enumerate(det_idx):
            w[i] = cfg.length_mix * w_len[pos] + cfg.angle_mix * w_ang[i]
    for i, c in enumerate(candidates):
        if c.origin == "fitted":
            w[i] = w_ang[i]
    return w


def _vote_geometry(
    candidate: Segment,
    supporter: Segment,
    image_size: Optional[Tuple[float, float]] = None,
) -> Optional[Tuple[int, float]]:
    """(label, raw ratio) of a supporter voting for a candidate, or None.

    A candidate stands for a box-line hypothesis, so the meeting point E is
    taken on the candidate's whole line; when the image size is known E must
    fall inside the image (the line's visible extent, 0.5 px slack).  label
    1 means the supporter itself contains E (a penetration); label 0 means
    only its extension reaches the line, with the ratio length/gap rewarding
    near touches.
    """
    sline = supporter.line()
    f_p = sline.eval(candidate.p)
    f_q = sline.eval(candidate.q)
    denom = f_p - f_q
    if abs(denom) <= 1e-9 * max(1.0, candidate.length):
        return None
    s = f_p / denom
    ex = candidate.p.x + s * (candidate.q.x - candidate.p.x)
    ey = candidate.p.y + s * (candidate.q.y - candidate.p.y)
    if image_size is not None:
        w, h = image_size
        if not (
            -_VOTE_SLACK_PX <= ex <= w + _VOTE_SLACK_PX
            and -_VOTE_SLACK_PX <= ey <= h + _VOTE_SLACK_PX
        ):
            return None
    slen = supporter.length
    dx, dy = (supporter.q.x - supporter.p.x) / slen, (supporter.q.y - supporter.p.y) / slen
    tpos = (ex - supporter.p.x) * dx + (ey - supporter.p.y) * dy
    ec, ed = abs(tpos), abs(tpos - slen)
    if 0.0 <= tpos <= slen:
        return 1, min(ec, ed) / slen
    gap = max(min(ec, ed), _GAP_FLOOR_PX)
    return 0, slen / gap


def vote_increment(
    candidate: Segment,
    supporter: Segment,
    supporter_weight: float,
    lambda_scale: float = 1.0,
    image_size: Optional[Tuple[float, float]] = None,
) -> float:
    """Signed vote of one supporter for one candidate box line.

    Penetrations subtract, clean support adds; ``lambda_scale`` carries the
    pool normalization applied by the caller (1.0 leaves the raw ratio).
    """
    geom = _vote_geometry(candidate, supporter, image_size)
    if geom is None:
        return 0.0
    label, raw = geom
    return (-1.0) ** label * raw * lambda_scale * supporter_weight


def _lambda_table(
    candidates: Sequence[WeightedCandidate],
    supporters: Sequence[Segment],
    image_size: Optional[Tuple[float, float]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched (sign, raw ratio, valid) arrays, supporters x candidates."""
    P, Q = _endpoint_arrays([c.segment for c in candidates])
    clen = np.linalg.norm(Q - P, axis=1)
    C, D = _endpoint_arrays(supporters)
    sd = D - C
    slen = np.linalg.norm(sd, axis=1)
    sdir = sd / slen[:, None]
    a = C[:, 1] - D[:, 1]
    b = D[:, 0] - C[:, 0]
    c = C[:, 0] * D[:, 1] - D[:, 0] * C[:, 1]
    norm = np.hypot(a, b)
    a, b, c = a / norm, b / norm, c / norm

    f_p = a[:, None] * P[None, :, 0] + b[:, None] * P[None, :, 1] + c[:, None]
    f_q = a[:, None] * Q[None, :, 0] + b[:, None] * Q[None, :, 1] + c[:, None]
    denom = f_p - f_q
    not_parallel = np.abs(denom) > 1e-9 * np.maximum(1.0, clen)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(not_parallel, f_p / np.where(not_parallel, denom, 1.0), np.nan)

    ex = P[None, :, 0] + s * (Q[None, :, 0] - P[None, :, 0])
    ey = P[None, :, 1] + s * (Q[None, :, 1] - P[None, :, 1])
    if image_size is not None:
        w, h = image_size
        in_slack = (
            not_parallel
            & (ex >= -_VOTE_SLACK_PX)
            & (ex <= w + _VOTE_SLACK_PX)
            & (ey >= -_VOTE_SLACK_PX)
            & (ey <= h + _VOTE_SLACK_PX)
        )
    else:
        in_slack = not_parallel
    tpos = (ex - C[:, None, 0]) * sdir[:, None, 0] + (ey - C[:, None, 1]) * sdir[:, None, 1]
    ec = np.abs(tpos)
    ed = np.abs(tpos - slen[:, None])
    near = np.minimum(ec, ed)
    contained = (tpos >= 0.0) & (tpos <= slen[:, None])
    lam_pen = near / slen[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_sup = slen[:, None] / np.maximum(near, _GAP_FLOOR_PX)
    lam = np.where(contained, lam_pen, lam_sup)
    sign = np.where(contained, -1.0, 1.0)
    valid = in_slack & np.isfinite(lam)
    lam = np.where(valid, lam, 0.0)
    return sign, lam, valid


def vote_select(
    partition: PartitionedSegments,
    fitted: Dict[GroupId, List[Segment]],
    corr: Correspondence,
    t: VanishingTriplet,
    cfg: RefineConfig,
    image_size: Optional[Tuple[float, float]] = None,
) -> Dict[GroupId, List[WeightedCandidate]]:
    """Iterative weighted voting; returns the top-n candidates per group.

    Each round recomputes every vote from the current weights, updates all
    weights simultaneously, then snapshots the per-group top-n id sets; the
    loop stops when the snapshot repeats or after max_vote_rounds.
    """
    groups = CATEGORY_GROUPS[partition.category]
    cands: Dict[GroupId, List[WeightedCandidate]] = {}
    for g in groups:
        lst = [WeightedCandidate(s, "detected") for s in partition.subsets[g]]
        lst += [WeightedCandidate(s, "fitted") for s in fitted.get(g, [])]
        if not lst:
            raise EmptyGroup(f"group {g} has no detected or fitted candidates")
        cands[g] = lst

    weights = {
        g: initial_weights(cands[g], t.vp_for_axis(g.axis), cfg) for g in groups
    }

    tables: Dict[Tuple[GroupId, GroupId], Tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for g in groups:
        for sg in corr.supporter_groups(g):
            if partition.subsets[sg]:
                tables[(g, sg)] = _lambda_table(
                    cands[g], partition.subsets[sg], image_size
                )

    # pool the raw ratios per supporter group, then scale (uniform fallback
    # when every surviving ratio is zero)
    for sg in groups:
        keys = [k for k in tables if k[1] == sg]
        if not keys:
            continue
        total = sum(tables[k][1][tables[k][2]].sum() for k in keys)
        count = sum(int(tables[k][2].sum()) for k in keys)
        if count == 0:
            continue
        for k in keys:
            sign, lam, valid = tables[k]
            if total > 0.0:
                lam = lam / total
            else:
                lam = np.where(valid, 1.0 / count, 0.0)
            tables[k] = (sign, lam, valid)

    mats: Dict[GroupId, List[Tuple[GroupId, np.ndarray]]] = {g: [] for g in groups}
    for (g, sg), (sign, lam, valid) in tables.items():
        mats[g].append((sg, (sign * lam).T))

    def top_indices(g: GroupId) -> List[int]:
        lst = cands[g]
        order = sorted(
            range(len(lst)),
            key=lambda i: (
                -weights[g][i],
                -lst[i].segment.length,
                (
                    lst[i].segment.p.x,
                    lst[i].segment.p.y,
                    lst[i].segment.q.x,
                    lst[i].segment.q.y,
                ),
                lst[i].segment.id,
            ),
        )
        return order[: cfg.top_n]

    def selection_ids(idx: Dict[GroupId, List[int]]) -> Dict[GroupId, frozenset]:
        return {g: frozenset(cands[g][i].segment.id for i in idx[g]) for g in groups}

    top = {g: top_indices(g) for g in groups}
    prev_ids = selection_ids(top)
    last_votes = {g: np.zeros(len(cands[g])) for g in groups}
    for _ in range(cfg.max_vote_rounds):
        votes = {g: np.zeros(len(cands[g])) for g in groups}
        for g in groups:
            for sg, mat in mats[g]:
                det = len(partition.subsets[sg])
                votes[g] += mat @ weights[sg][:det]
        for g in groups:
            weights[g] = weights[g] + votes[g]
            last_votes[g] = votes[g]
        top = {g: top_indices(g) for g in groups}
        ids = selection_ids(top)
        if ids == prev_ids:
            break
        prev_ids = ids

    out: Dict[GroupId, List[WeightedCandidate]] = {}
    for g in groups:
        chosen = []
        for i in top[g]:
            c = cands[g][i]
            c.weight = float(weights[g][i])
            c.last_vote = float(last_votes[g][i])
            chosen.append(c)
        out[g] = chosen
    return out
