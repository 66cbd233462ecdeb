"""Partition segments into vanishing-direction sets and candidate groups.

Groups carry short position tags: c/f for ceiling/floor (above/below the
horizon line), l/r for left/right of the vertical line, and the four
combined corridor tags cl/cr/fl/fr.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

from .camera import VanishingTriplet
from .geometry import Line2, Point2, Segment, angle_to_vanishing_point


class FrameCategory(Enum):
    FOUR_C = "4c"
    TWO_VC = "2vc"
    TWO_HC = "2hc"
    ONE_C = "1c"

    @classmethod
    def parse(cls, text: str) -> "FrameCategory":
        for cat in cls:
            if cat.value == text:
                return cat
        raise ValueError(f"unknown frame category {text!r}")

    @property
    def corner_count(self) -> int:
        return {"4c": 4, "2vc": 2, "2hc": 2, "1c": 1}[self.value]


@dataclass(frozen=True, order=True)
class GroupId:
    """Candidate box-line group: an axis plus a positional tag."""

    axis: str
    tag: str = ""

    def __str__(self) -> str:
        return f"{self.axis}_{self.tag}" if self.tag else self.axis

    @classmethod
    def parse(cls, text: str) -> "GroupId":
        axis, _, tag = text.partition("_")
        if axis not in ("x", "y", "z"):
            raise ValueError(f"bad group id {text!r}")
        return cls(axis, tag)


X_C, X_F = GroupId("x", "c"), GroupId("x", "f")
Y_L, Y_R = GroupId("y", "l"), GroupId("y", "r")
Z_CL, Z_CR = GroupId("z", "cl"), GroupId("z", "cr")
Z_FL, Z_FR = GroupId("z", "fl"), GroupId("z", "fr")
Y_ = GroupId("y")
X_ = GroupId("x")
Z_ = GroupId("z")
Z_C, Z_F = GroupId("z", "c"), GroupId("z", "f")
Z_L, Z_R = GroupId("z", "l"), GroupId("z", "r")

CATEGORY_GROUPS: Dict[FrameCategory, Tuple[GroupId, ...]] = {
    FrameCategory.FOUR_C: (X_C, X_F, Y_L, Y_R, Z_CL, Z_CR, Z_FL, Z_FR),
    FrameCategory.TWO_VC: (X_C, X_F, Y_, Z_C, Z_F),
    FrameCategory.TWO_HC: (X_, Y_L, Y_R, Z_L, Z_R),
    FrameCategory.ONE_C: (X_, Y_, Z_),
}


@dataclass
class ClassifiedSets:
    """Segments split by vanishing direction, plus unassignable outliers."""

    x: List[Segment] = field(default_factory=list)
    y: List[Segment] = field(default_factory=list)
    z: List[Segment] = field(default_factory=list)
    outliers: List[Segment] = field(default_factory=list)

    def by_axis(self, axis: str) -> List[Segment]:
        return getattr(self, axis)

    def total(self) -> int:
        return len(self.x) + len(self.y) + len(self.z) + len(self.outliers)


@dataclass
class PartitionedSegments:
    """Per-category candidate groups over the classified sets."""

    category: FrameCategory
    sets: ClassifiedSets
    subsets: Dict[GroupId, List[Segment]]
    outliers: List[Segment]


@dataclass(frozen=True)
class Correspondence:
    """For each group: which other groups' endpoint sides support it."""

    category: FrameCategory
    supporters: Dict[GroupId, Tuple[Tuple[GroupId, str], ...]]

    def supporter_groups(self, g: GroupId) -> Tuple[GroupId, ...]:
        seen: List[GroupId] = []
        for sg, _ in self.supporters[g]:
            if sg not in seen:
                seen.append(sg)
        return tuple(seen)


_CORRESPONDENCE: Dict[FrameCategory, Dict[GroupId, Tuple[Tuple[GroupId, str], ...]]] = {
    FrameCategory.FOUR_C: {
        X_C: ((Z_CL, "lower"), (Z_CR, "lower"), (Y_L, "upper"), (Y_R, "upper")),
        X_F: ((Z_FL, "upper"), (Z_FR, "upper"), (Y_L, "lower"), (Y_R, "lower")),
        Y_L: ((Z_CL, "lower"), (Z_FL, "upper"), (X_C, "left"), (X_F, "left")),
        Y_R: ((Z_CR, "lower"), (Z_FR, "upper"), (X_C, "right"), (X_F, "right")),
        Z_CL: ((X_C, "left"), (Y_L, "upper")),
        Z_CR: ((X_C, "right"), (Y_R, "upper")),
        Z_FL: ((X_F, "left"), (Y_L, "lower")),
        Z_FR: ((X_F, "right"), (Y_R, "lower")),
    },
    FrameCategory.TWO_VC: {
        X_C: ((Z_C, "lower"), (Y_, "upper")),
        X_F: ((Z_F, "upper"), (Y_, "lower")),
        Y_: (
            (Z_C, "lower"),
            (Z_F, "upper"),
            (X_C, "left"),
            (X_C, "right"),
            (X_F, "left"),
            (X_F, "right"),
        ),
        Z_C: ((X_C, "left"), (X_C, "right"), (Y_, "upper")),
        Z_F: ((X_F, "left"), (X_F, "right"), (Y_, "lower")),
    },
    FrameCategory.TWO_HC: {
        X_: (
            (Z_L, "upper"),
            (Z_L, "lower"),
            (Z_R, "upper"),
            (Z_R, "lower"),
            (Y_L, "upper"),
            (Y_L, "lower"),
            (Y_R, "upper"),
            (Y_R, "lower"),
        ),
        Y_L: ((X_, "left"), (Z_L, "upper"), (Z_L, "lower")),
        Y_R: ((X_, "right"), (Z_R, "upper"), (Z_R, "lower")),
        Z_L: ((X_, "left"), (Y_L, "upper"), (Y_L, "lower")),
        Z_R: ((X_, "right"), (Y_R, "upper"), (Y_R, "lower")),
    },
    FrameCategory.ONE_C: {
        X_: ((Y_, "upper"), (Y_, "lower"), (Z_, "upper"), (Z_, "lower")),
        Y_: ((X_, "left"), (X_, "right"), (Z_, "left"), (Z_, "right")),
        Z_: ((X_, "left"), (X_, "right"), (Y_, "upper"), (Y_, "lower")),
    },
}


def correspondence_table(cat: FrameCategory) -> Correspondence:
    """Static group-to-supporting-endpoint table for a category."""
    return Correspondence(category=cat, supporters=_CORRESPONDENCE[cat])


def endpoint_on_side(seg: Segment, side: str) -> Point2:
    """Pick the endpoint named by an image-coordinate side.

    upper = smaller y, lower = larger y, left = smaller x, right = larger x;
    ties fall back to the other coordinate so that {upper, lower} (and
    {left, right}) always name both endpoints.
    """
    p, q = seg.p, seg.q
    if side == "upper":
        return p if (p.y, p.x) <= (q.y, q.x) else q
    if side == "lower":
        return p if (p.y, p.x) > (q.y, q.x) else q
    if side == "left":
        return p if (p.x, p.y) <= (q.x, q.y) else q
    if side == "right":
        return p if (p.x, p.y) > (q.x, q.y) else q
    raise ValueError(f"unknown endpoint side {side!r}")


def classify_segments(
    segments: Sequence[Segment], t: VanishingTriplet, tau_class: float = 8.0
) -> ClassifiedSets:
    """Assign each segment to the vanishing direction it best aligns with.

    A segment joins the set whose vanishing point minimizes the midpoint-ray
    angle, provided that minimum is at most tau_class degrees; ties break in
    x, y, z order and everything else is an outlier.
    """
    sets = ClassifiedSets()
    for seg in segments:
        best_axis = None
        best_angle = None
        for axis in ("x", "y", "z"):
            ang = angle_to_vanishing_point(seg, t.vp_for_axis(axis))
            if best_angle is None or ang < best_angle:
                best_angle, best_axis = ang, axis
        if best_angle is not None and best_angle <= tau_class:
            sets.by_axis(best_axis).append(seg)
        else:
            sets.outliers.append(seg)
    return sets


def side_above(line: Line2, p: Point2) -> bool:
    """True when p is on the smaller-image-y side of the line."""
    return line.eval(p) * line.b < 0


def side_left(line: Line2, p: Point2) -> bool:
    """True when p is on the smaller-image-x side of the line."""
    return line.eval(p) * line.a < 0


_ON_AXIS_PX = 0.5


def partition_subsets(
    sets: ClassifiedSets, t: VanishingTriplet, cat: FrameCategory
) -> PartitionedSegments:
    """Split the classified sets into the category's candidate groups.

    A segment's side is its midpoint's side; midpoints within 0.5 px of the
    splitting axis are moved to the outliers.
    """
    subsets: Dict[GroupId, List[Segment]] = {g: [] for g in CATEGORY_GROUPS[cat]}
    outliers = list(sets.outliers)

    def place(seg: Segment, axis: str) -> None:
        m = seg.midpoint
        if cat is FrameCategory.ONE_C:
            subsets[GroupId(axis)].append(seg)
            return
        need_h = (cat is FrameCategory.FOUR_C and axis in ("x", "z")) or (
            cat is FrameCategory.TWO_VC and axis in ("x", "z")
        )
        need_v = (cat is FrameCategory.FOUR_C and axis in ("y", "z")) or (
            cat is FrameCategory.TWO_HC and axis in ("y", "z")
        )
        tag = ""
        if need_h:
            if abs(t.horizon_line.eval(m)) < _ON_AXIS_PX:
                outliers.append(seg)
                return
            tag += "c" if side_above(t.horizon_line, m) else "f"
        if need_v:
            if abs(t.vertical_line.eval(m)) < _ON_AXIS_PX:
                outliers.append(seg)
                return
            tag += "l" if side_left(t.vertical_line, m) else "r"
        subsets[GroupId(axis, tag)].append(seg)

    for axis in ("x", "y", "z"):
        for seg in sets.by_axis(axis):
            place(seg, axis)
    return PartitionedSegments(category=cat, sets=sets, subsets=subsets, outliers=outliers)
