"""Synthetic Manhattan scenes: box rooms, projection, and degradation.

World frame: the optic center at the origin, y up, the floor plane at
y = -1 (camera one unit above the floor).  All randomness flows through
numpy's seeded PCG64 generator so identical seeds reproduce identical
scenes on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .camera import Camera, VanishingTriplet
from .classify import (
    CATEGORY_GROUPS,
    FrameCategory,
    GroupId,
    classify_segments,
    partition_subsets,
    side_left,
)
from .errors import CategoryUnreachable
from .frames import Frame
from .geometry import HPoint, Point2, Segment, clip_segment_to_rect

_NEAR = 0.05
_CORNER_MARGIN = 8.0
_MIN_EDGE_PX = 15.0
_MIN_SEG_PX = 6.0


@dataclass
class DegradeParams:
    """Controlled degradations applied to the true segments."""

    fragments_per_edge: Tuple[int, int] = (2, 4)
    drop_fraction: float = 0.2
    clutter_ratio: float = 3.0
    endpoint_noise_sigma: float = 1.0
    occlusion_level: int = 0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.drop_fraction <= 1.0:
            raise ValueError("drop_fraction must be within [0, 1]")
        if self.endpoint_noise_sigma < 0 or self.clutter_ratio < 0:
            raise ValueError("sigma and clutter_ratio must be nonnegative")
        if self.occlusion_level not in (0, 1, 2):
            raise ValueError("occlusion_level must be 0, 1 or 2")
        lo, hi = self.fragments_per_edge
        if lo < 1 or hi < lo:
            raise ValueError("fragments_per_edge must be a nonempty range")


@dataclass
class SceneTruth:
    """A simulated room with its exact projections and labels."""

    room: Tuple[float, float, float]  # width, height, depth in camera heights
    camera: Camera
    category: FrameCategory
    truth_frame: Frame
    truth_vps: VanishingTriplet
    truth_segments: List[Segment]
    segment_groups: Dict[str, GroupId]
    truth_corners3: Tuple[Tuple[float, float, float], ...]
    image_size: Tuple[int, int]
    seed: int


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


_BASE = np.diag([-1.0, -1.0, 1.0])  # camera x/y flipped against world x/y


def _camera_columns(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Camera axes as columns in world coordinates (proper rotation)."""
    return _rot_y(yaw) @ _BASE @ _rot_x(pitch) @ _rot_z(roll)


def _project(C: np.ndarray, f: float, pp: Point2, pt3: np.ndarray) -> Optional[Point2]:
    p = C.T @ pt3
    if p[2] <= _NEAR:
        return None
    return Point2(f * p[0] / p[2] + pp.x, f * p[1] / p[2] + pp.y)


def _project_edge(
    C: np.ndarray,
    f: float,
    pp: Point2,
    a3: np.ndarray,
    b3: np.ndarray,
    w: float,
    h: float,
) -> Optional[Tuple[Point2, Point2]]:
    pa = C.T @ a3
    pb = C.T @ b3
    if pa[2] <= _NEAR and pb[2] <= _NEAR:
        return None
    if pa[2] <= _NEAR or pb[2] <= _NEAR:
        t = (_NEAR - pa[2]) / (pb[2] - pa[2])
        clipped = pa + t * (pb - pa)
        if pa[2] <= _NEAR:
            pa = clipped
        else:
            pb = clipped
    a = Point2(f * pa[0] / pa[2] + pp.x, f * pa[1] / pa[2] + pp.y)
    b = Point2(f * pb[0] / pb[2] + pp.x, f * pb[1] / pb[2] + pp.y)
    return clip_segment_to_rect(a, b, w, h)


def _vps_from_camera(C: np.ndarray, f: float, pp: Point2) -> Optional[VanishingTriplet]:
    pts = []
    for k in range(3):
        d = C.T @ np.eye(3)[:, k]
        if abs(d[2]) < 1e-6:
            return None  # generated scenes keep all three VPs finite
        pts.append(HPoint(f * d[0] / d[2] + pp.x, f * d[1] / d[2] + pp.y, 1.0))
    try:
        return VanishingTriplet.from_points(*pts)
    except ValueError:
        return None


def _room_edges(x0, x1, yf, yc, z0, z1):
    tl, tr = np.array([x0, yc, z1]), np.array([x1, yc, z1])
    br, bl = np.array([x1, yf, z1]), np.array([x0, yf, z1])
    ftl, ftr = np.array([x0, yc, z0]), np.array([x1, yc, z0])
    fbr, fbl = np.array([x1, yf, z0]), np.array([x0, yf, z0])
    # (name, axis, height tag, endpoints)
    return {
        "back_top": ("x", "c", tl, tr),
        "back_bottom": ("x", "f", bl, br),
        "back_left": ("y", "", tl, bl),
        "back_right": ("y", "", tr, br),
        "rail_tl": ("z", "c", tl, ftl),
        "rail_tr": ("z", "c", tr, ftr),
        "rail_bl": ("z", "f", bl, fbl),
        "rail_br": ("z", "f", br, fbr),
        "front_top": ("x", "c", ftl, ftr),
        "front_bottom": ("x", "f", fbl, fbr),
        "front_left": ("y", "", ftl, fbl),
        "front_right": ("y", "", ftr, fbr),
    }, (tl, tr, br, bl)


_ANGLE_RANGES = {
    FrameCategory.FOUR_C: ((2.5, 12.0), (2.5, 8.0), (0.5, 4.0)),
    FrameCategory.TWO_VC: ((16.0, 38.0), (2.5, 8.0), (0.5, 3.0)),
    FrameCategory.TWO_HC: ((2.5, 8.0), (12.0, 30.0), (0.5, 3.0)),
    FrameCategory.ONE_C: ((14.0, 32.0), (10.0, 26.0), (0.5, 3.0)),
}


def _group_for(
    cat: FrameCategory, axis: str, height_tag: str, mid: Point2, t: VanishingTriplet
) -> GroupId:
    lr = "l" if side_left(t.vertical_line, mid) else "r"
    if cat is FrameCategory.FOUR_C:
        if axis == "x":
            return GroupId("x", height_tag)
        if axis == "y":
            return GroupId("y", lr)
        return GroupId("z", height_tag + lr)
    if cat is FrameCategory.TWO_VC:
        if axis == "y":
            return GroupId("y")
        return GroupId(axis, height_tag)
    if cat is FrameCategory.TWO_HC:
        if axis == "x":
            return GroupId("x")
        return GroupId(axis, lr)
    return GroupId(axis)


def generate_scene(
    seed: int, cat: FrameCategory, image_size: Tuple[int, int] = (640, 480)
) -> SceneTruth:
    """Sample a box room and camera realizing the requested frame category.

    Rooms span [2,6] x [2,4] x [3,10] camera-height units, the focal length
    400..800 px; scenes are resampled until the projected category matches,
    every frame line is visible, and the exact projections classify and
    partition into their labeled groups.
    """
    rng = np.random.default_rng(seed)
    w, h = float(image_size[0]), float(image_size[1])
    for _ in range(100):
        width = rng.uniform(2.0, 6.0)
        height = rng.uniform(2.0, 4.0)
        depth = rng.uniform(3.0, 10.0)
        u = rng.uniform(0.25, 0.75)
        v = rng.uniform(0.12, 0.45)
        x0, x1 = -u * width, (1.0 - u) * width
        z0, z1 = -v * depth, (1.0 - v) * depth
        if z1 < 1.5:
            continue
        yf, yc = -1.0, height - 1.0
        f = rng.uniform(400.0, 800.0)
        pp = Point2(w / 2.0 + rng.uniform(-10, 10), h / 2.0 + rng.uniform(-10, 10))
        (ylo, yhi), (plo, phi), (rlo, rhi) = _ANGLE_RANGES[cat]
        yaw = math.radians(rng.uniform(ylo, yhi)) * rng.choice([-1.0, 1.0])
        pitch = math.radians(rng.uniform(plo, phi)) * rng.choice([-1.0, 1.0])
        roll = math.radians(rng.uniform(rlo, rhi)) * rng.choice([-1.0, 1.0])
        C = _camera_columns(yaw, pitch, roll)
        t = _vps_from_camera(C, f, pp)
        if t is None:
            continue

        edges, back = _room_edges(x0, x1, yf, yc, z0, z1)
        corners_px = [_project(C, f, pp, c) for c in back]

        def inside(p: Optional[Point2]) -> bool:
            return (
                p is not None
                and _CORNER_MARGIN <= p.x <= w - _CORNER_MARGIN
                and _CORNER_MARGIN <= p.y <= h - _CORNER_MARGIN
            )

        vis = [inside(p) for p in corners_px]  # TL, TR, BR, BL
        pattern_ok = {
            FrameCategory.FOUR_C: all(vis),
            FrameCategory.TWO_VC: (vis == [True, False, False, True])
            or (vis == [False, True, True, False]),
            FrameCategory.TWO_HC: (vis == [True, True, False, False])
            or (vis == [False, False, True, True]),
            FrameCategory.ONE_C: sum(vis) == 1,
        }[cat]
        if not pattern_ok:
            continue

        projected: Dict[str, Tuple[Point2, Point2]] = {}
        for name, (axis, htag, a3, b3) in edges.items():
            clip = _project_edge(C, f, pp, a3, b3, w, h)
            if clip is not None and math.hypot(clip[0].x - clip[1].x, clip[0].y - clip[1].y) >= _MIN_SEG_PX:
                projected[name] = clip

        frame_def = _frame_definition(cat, vis, corners_px, back)
        if frame_def is None:
            continue
        box_edge_names, corner_idx = frame_def
        if any(name not in projected for name in box_edge_names.values()):
            continue
        if any(
            math.hypot(
                projected[n][0].x - projected[n][1].x,
                projected[n][0].y - projected[n][1].y,
            )
            < _MIN_EDGE_PX
            for n in box_edge_names.values()
        ):
            continue

        segments: List[Segment] = []
        groups: Dict[str, GroupId] = {}
        by_name: Dict[str, Segment] = {}
        ok = True
        for i, (name, (axis, htag, a3, b3)) in enumerate(edges.items()):
            if name not in projected:
                continue
            a, b = projected[name]
            seg = Segment(a, b, id=f"e{i}")
            gid = _group_for(cat, axis, htag, seg.midpoint, t)
            if gid not in CATEGORY_GROUPS[cat]:
                ok = False
                break
            segments.append(seg)
            groups[seg.id] = gid
            by_name[name] = seg
        if not ok or not segments:
            continue

        box_lines: Dict[GroupId, Segment] = {}
        for gid, name in box_edge_names.items():
            seg = by_name[name]
            if groups[seg.id] != gid:
                ok = False
                break
            box_lines[gid] = seg
        if not ok:
            continue

        # the exact projections must classify and partition into their labels
        sets = classify_segments(segments, t, 8.0)
        if sets.outliers:
            continue
        part = partition_subsets(sets, t, cat)
        placed = {
            s.id: g for g, lst in part.subsets.items() for s in lst
        }
        if any(placed.get(s.id) != groups[s.id] for s in segments):
            continue

        corners = tuple(corners_px[i] for i in corner_idx)
        corners3 = tuple(tuple(map(float, back[i])) for i in corner_idx)
        frame = Frame(category=cat, box_lines=box_lines, corners=corners)
        camera = Camera(focal=f, principal_point=pp, rotation=C.T.copy())
        return SceneTruth(
            room=(width, height, depth),
            camera=camera,
            category=cat,
            truth_frame=frame,
            truth_vps=t,
            truth_segments=segments,
            segment_groups=groups,
            truth_corners3=corners3,
            image_size=(int(image_size[0]), int(image_size[1])),
            seed=seed,
        )
    raise CategoryUnreachable(f"could not realize {cat.value} within 100 attempts")


def _frame_definition(cat, vis, corners_px, back):
    """Map category groups to room edge names plus the corner index order.

    Back-wall corner order is TL, TR, BR, BL; left/right group assignment
    follows the projected x coordinates so mirrored rooms stay consistent.
    """
    tl_px, tr_px, br_px, bl_px = corners_px
    if cat is FrameCategory.FOUR_C:
        left_is_tl = tl_px.x <= tr_px.x
        yl, yr = ("back_left", "back_right") if left_is_tl else ("back_right", "back_left")
        zcl, zcr = ("rail_tl", "rail_tr") if left_is_tl else ("rail_tr", "rail_tl")
        zfl, zfr = ("rail_bl", "rail_br") if left_is_tl else ("rail_br", "rail_bl")
        names = {
            GroupId("x", "c"): "back_top",
            GroupId("x", "f"): "back_bottom",
            GroupId("y", "l"): yl,
            GroupId("y", "r"): yr,
            GroupId("z", "cl"): zcl,
            GroupId("z", "cr"): zcr,
            GroupId("z", "fl"): zfl,
            GroupId("z", "fr"): zfr,
        }
        if left_is_tl:
            corner_idx = (0, 1, 2, 3)  # A=TL, B=TR, C=BR, D=BL
        else:
            corner_idx = (1, 0, 3, 2)
        return names, corner_idx
    if cat is FrameCategory.TWO_VC:
        left_pair = vis[0] and vis[3]
        if left_pair:
            names = {
                GroupId("x", "c"): "back_top",
                GroupId("x", "f"): "back_bottom",
                GroupId("y"): "back_left",
                GroupId("z", "c"): "rail_tl",
                GroupId("z", "f"): "rail_bl",
            }
            corner_idx = (0, 3)  # A=TL (ceiling), B=BL (floor)
        else:
            names = {
                GroupId("x", "c"): "back_top",
                GroupId("x", "f"): "back_bottom",
                GroupId("y"): "back_right",
                GroupId("z", "c"): "rail_tr",
                GroupId("z", "f"): "rail_br",
            }
            corner_idx = (1, 2)
        return names, corner_idx
    if cat is FrameCategory.TWO_HC:
        top_pair = vis[0] and vis[1]
        if top_pair:
            a_px, b_px = corners_px[0], corners_px[1]
            left_is_tl = a_px.x <= b_px.x
            names = {
                GroupId("x"): "back_top",
                GroupId("y", "l"): "back_left" if left_is_tl else "back_right",
                GroupId("y", "r"): "back_right" if left_is_tl else "back_left",
                GroupId("z", "l"): "rail_tl" if left_is_tl else "rail_tr",
                GroupId("z", "r"): "rail_tr" if left_is_tl else "rail_tl",
            }
            corner_idx = (0, 1) if left_is_tl else (1, 0)
        else:
            a_px, b_px = corners_px[3], corners_px[2]
            left_is_bl = a_px.x <= b_px.x
            names = {
                GroupId("x"): "back_bottom",
                GroupId("y", "l"): "back_left" if left_is_bl else "back_right",
                GroupId("y", "r"): "back_right" if left_is_bl else "back_left",
                GroupId("z", "l"): "rail_bl" if left_is_bl else "rail_br",
                GroupId("z", "r"): "rail_br" if left_is_bl else "rail_bl",
            }
            corner_idx = (3, 2) if left_is_bl else (2, 3)
        return names, corner_idx
    # OneC
    which = vis.index(True)
    names_by_corner = {
        0: ("back_top", "back_left", "rail_tl"),
        1: ("back_top", "back_right", "rail_tr"),
        2: ("back_bottom", "back_right", "rail_br"),
        3: ("back_bottom", "back_left", "rail_bl"),
    }[which]
    names = {
        GroupId("x"): names_by_corner[0],
        GroupId("y"): names_by_corner[1],
        GroupId("z"): names_by_corner[2],
    }
    return names, (which,)


def degrade(truth: SceneTruth, params: DegradeParams) -> List[Segment]:
    """Fragment, drop, clutter, perturb and occlude the true segments.

    The order is fragmentation, dropping, clutter, endpoint noise, and
    occlusion last, so the occlusion disks are guaranteed free of output
    endpoints.  Deterministic in params.seed.
    """
    rng = np.random.default_rng(params.seed)
    w, h = truth.image_size
    diag = math.hypot(w, h)
    frags: List[Tuple[str, float, float, float, float]] = []

    lo, hi = params.fragments_per_edge
    for seg in truth.truth_segments:
        k = int(rng.integers(lo, hi + 1))
        if k <= 1:
            frags.append((f"{seg.id}f0", seg.p.x, seg.p.y, seg.q.x, seg.q.y))
            continue
        cuts = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 0.9, k - 1)), [1.0]])
        gaps = rng.uniform(0.01, 0.05, k + 1)
        for i in range(k):
            t0 = cuts[i] + (gaps[i] / 2.0 if i > 0 else 0.0)
            t1 = cuts[i + 1] - (gaps[i + 1] / 2.0 if i + 1 < k else 0.0)
            if t1 - t0 < 0.02:
                continue
            ax = seg.p.x + t0 * (seg.q.x - seg.p.x)
            ay = seg.p.y + t0 * (seg.q.y - seg.p.y)
            bx = seg.p.x + t1 * (seg.q.x - seg.p.x)
            by = seg.p.y + t1 * (seg.q.y - seg.p.y)
            frags.append((f"{seg.id}f{i}", ax, ay, bx, by))

    if params.drop_fraction > 0.0:
        keep_mask = rng.random(len(frags)) >= params.drop_fraction
        frags = [fr for fr, keep in zip(frags, keep_mask) if keep]

    n_clutter = int(round(params.clutter_ratio * len(frags)))
    vps = [truth.truth_vps.vp_x, truth.truth_vps.vp_y, truth.truth_vps.vp_z]
    for i in range(n_clutter):
        mx, my = rng.uniform(0, w), rng.uniform(0, h)
        length = rng.uniform(0.03, 0.12) * diag
        if i % 2 == 0:
            vp = vps[int(rng.integers(0, 3))]
            if vp.is_infinite:
                ang = math.atan2(vp.y, vp.x)
            else:
                p = vp.to_point()
                ang = math.atan2(p.y - my, p.x - mx)
            ang += rng.normal(0.0, math.radians(2.5))
        else:
            ang = rng.uniform(0.0, math.pi)
        dx, dy = math.cos(ang), math.sin(ang)
        a = Point2(mx - dx * length / 2.0, my - dy * length / 2.0)
        b = Point2(mx + dx * length / 2.0, my + dy * length / 2.0)
        clip = clip_segment_to_rect(a, b, w, h)
        if clip is None or math.hypot(clip[0].x - clip[1].x, clip[0].y - clip[1].y) < _MIN_SEG_PX:
            continue
        frags.append((f"c{i}", clip[0].x, clip[0].y, clip[1].x, clip[1].y))

    if params.endpoint_noise_sigma > 0.0:
        noise = rng.normal(0.0, params.endpoint_noise_sigma, (len(frags), 4))
        frags = [
            (fid, ax + n[0], ay + n[1], bx + n[2], by + n[3])
            for (fid, ax, ay, bx, by), n in zip(frags, noise)
        ]

    disks: List[Tuple[Point2, float]] = []
    if params.occlusion_level > 0:
        corners = list(truth.truth_frame.corners)
        count = min(params.occlusion_level, len(corners))
        radius = (0.05 if params.occlusion_level == 1 else 0.10) * diag
        picked = rng.choice(len(corners), size=count, replace=False)
        disks = [(corners[int(i)], radius) for i in picked]

    out: List[Segment] = []
    for fid, ax, ay, bx, by in frags:
        if math.hypot(bx - ax, by - ay) < 1e-6:
            continue
        pieces = _cut_disks([(ax, ay, bx, by)], disks)
        for k, (px, py, qx, qy) in enumerate(pieces):
            if math.hypot(qx - px, qy - py) < _MIN_SEG_PX:
                continue
            pid = fid if len(pieces) == 1 else f"{fid}o{k}"
            out.append(Segment(Point2(px, py), Point2(qx, qy), id=pid))
    return out


def _cut_disks(pieces, disks):
    """Remove the parts of each segment inside any occlusion disk."""
    for c, r in disks:
        nxt = []
        for px, py, qx, qy in pieces:
            dx, dy = qx - px, qy - py
            a = dx * dx + dy * dy
            b = 2.0 * ((px - c.x) * dx + (py - c.y) * dy)
            cc = (px - c.x) ** 2 + (py - c.y) ** 2 - r * r
            disc = b * b - 4.0 * a * cc
            if disc <= 0.0:
                nxt.append((px, py, qx, qy))  # line misses the disk
                continue
            s = math.sqrt(disc)
            t0, t1 = (-b - s) / (2.0 * a), (-b + s) / (2.0 * a)
            if t1 <= 0.0 or t0 >= 1.0:
                nxt.append((px, py, qx, qy))
                continue
            if t0 > 0.0:
                nxt.append((px, py, px + t0 * dx, py + t0 * dy))
            if t1 < 1.0:
                nxt.append((px + t1 * dx, py + t1 * dy, qx, qy))
        pieces = nxt
    return pieces
