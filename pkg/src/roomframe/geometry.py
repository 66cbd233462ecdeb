"""Projective 2D primitives: points, lines, segments, and cross ratios.

Image convention throughout the package: pixel coordinates with the origin
at the top-left corner, x growing rightward and y growing downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from .errors import (
    CoincidentLines,
    DegeneratePencil,
    EmptyInput,
    NonConcurrentPencil,
    TransversalThroughApex,
    VpAtMidpoint,
)

_EPS = 1e-12


@dataclass(frozen=True)
class Point2:
    """Finite image point in pixels."""

    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class HPoint:
    """Homogeneous image point; w == 0 encodes a point at infinity."""

    x: float
    y: float
    w: float = 1.0

    @classmethod
    def from_point(cls, p: Point2) -> "HPoint":
        return cls(p.x, p.y, 1.0)

    @classmethod
    def at_infinity(cls, dx: float, dy: float) -> "HPoint":
        if dx == 0.0 and dy == 0.0:
            raise ValueError("direction of a point at infinity cannot be zero")
        return cls(dx, dy, 0.0)

    @property
    def is_infinite(self) -> bool:
        return abs(self.w) <= _EPS * math.hypot(self.x, self.y)

    def to_point(self) -> Point2:
        if self.is_infinite:
            raise ValueError("point at infinity has no finite coordinates")
        return Point2(self.x / self.w, self.y / self.w)

    def direction(self) -> Tuple[float, float]:
        """Direction of an infinite point (or toward a finite one from origin)."""
        n = math.hypot(self.x, self.y)
        if n == 0.0:
            raise ValueError("degenerate homogeneous point")
        return self.x / n, self.y / n


@dataclass(frozen=True)
class Line2:
    """Line a*x + b*y + c = 0, stored with a**2 + b**2 == 1."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        n = math.hypot(self.a, self.b)
        if n < 1e-15:
            raise ValueError("degenerate line: (a, b) must not be zero")
        object.__setattr__(self, "a", self.a / n)
        object.__setattr__(self, "b", self.b / n)
        object.__setattr__(self, "c", self.c / n)

    @classmethod
    def through(cls, p: Point2, q: Point2) -> "Line2":
        return cls(p.y - q.y, q.x - p.x, p.x * q.y - q.x * p.y)

    def eval(self, p: Point2) -> float:
        """Signed distance of p from the line."""
        return self.a * p.x + self.b * p.y + self.c

    def direction(self) -> Tuple[float, float]:
        return -self.b, self.a

    def foot_from_origin(self) -> Point2:
        return Point2(-self.c * self.a, -self.c * self.b)


def join(p: HPoint, q: HPoint) -> Line2:
    """Line through two homogeneous points (cross product)."""
    a = p.y * q.w - p.w * q.y
    b = p.w * q.x - p.x * q.w
    c = p.x * q.y - p.y * q.x
    return Line2(a, b, c)


@dataclass(frozen=True)
class Segment:
    """2D line segment with two distinct endpoints and an opaque id."""

    p: Point2
    q: Point2
    id: str = ""

    def __post_init__(self):
        if math.hypot(self.q.x - self.p.x, self.q.y - self.p.y) <= 0.0:
            raise ValueError("segment endpoints must be distinct")

    @property
    def length(self) -> float:
        return math.hypot(self.q.x - self.p.x, self.q.y - self.p.y)

    @property
    def midpoint(self) -> Point2:
        return Point2((self.p.x + self.q.x) * 0.5, (self.p.y + self.q.y) * 0.5)

    def line(self) -> Line2:
        return Line2.through(self.p, self.q)

    def endpoints(self) -> Tuple[Point2, Point2]:
        return self.p, self.q


def dist(p: Point2, q: Point2) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def point_segment_distance(pt: Point2, a: Point2, b: Point2) -> float:
    """Distance from pt to the closed segment [a, b]."""
    dx, dy = b.x - a.x, b.y - a.y
    denom = dx * dx + dy * dy
    tnum = (pt.x - a.x) * dx + (pt.y - a.y) * dy
    if tnum <= 0.0:
        return dist(pt, a)
    if tnum >= denom:
        return dist(pt, b)
    t = tnum / denom
    return math.hypot(pt.x - (a.x + t * dx), pt.y - (a.y + t * dy))


def _orient(a: Point2, b: Point2, c: Point2) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def segment_distance(s1: Segment, s2: Segment) -> float:
    """Shortest distance between two closed segments (0 when they cross)."""
    o1 = _orient(s1.p, s1.q, s2.p)
    o2 = _orient(s1.p, s1.q, s2.q)
    o3 = _orient(s2.p, s2.q, s1.p)
    o4 = _orient(s2.p, s2.q, s1.q)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return 0.0
    return min(
        point_segment_distance(s1.p, s2.p, s2.q),
        point_segment_distance(s1.q, s2.p, s2.q),
        point_segment_distance(s2.p, s1.p, s1.q),
        point_segment_distance(s2.q, s1.p, s1.q),
    )


def intersect(l1: Line2, l2: Line2) -> HPoint:
    """Homogeneous intersection of two lines.

    Parallel distinct lines meet at a point at infinity; identical lines
    (within 1e-12 on the normalized coefficients) raise CoincidentLines.
    """
    x = l1.b * l2.c - l1.c * l2.b
    y = l1.c * l2.a - l1.a * l2.c
    w = l1.a * l2.b - l1.b * l2.a
    if abs(x) <= _EPS and abs(y) <= _EPS and abs(w) <= _EPS:
        raise CoincidentLines("the two lines coincide")
    return HPoint(x, y, w)


def _cross_ratio_from_params(uv: Sequence[Tuple[float, float]]) -> float:
    """Cross ratio of four collinear points given homogeneous 1D parameters."""

    def det(i: int, j: int) -> float:
        return uv[i][0] * uv[j][1] - uv[j][0] * uv[i][1]

    def scale(i: int) -> float:
        return math.hypot(uv[i][0], uv[i][1])

    d23, d14 = det(1, 2), det(0, 3)
    if abs(d23) <= _EPS * scale(1) * scale(2):
        raise DegeneratePencil("second and third members coincide")
    if abs(d14) <= _EPS * scale(0) * scale(3):
        raise DegeneratePencil("first and fourth members coincide")
    return (det(0, 2) * det(1, 3)) / (d23 * d14)


def cross_ratio_points(p1: Point2, p2: Point2, p3: Point2, p4: Point2) -> float:
    """Cross ratio (p1, p2 : p3, p4) of four collinear points.

    Points are parameterized by signed position t along their common line;
    the value is ((t1-t3)(t2-t4)) / ((t2-t3)(t1-t4)).
    """
    pts = (p1, p2, p3, p4)
    span = 0.0
    ia = ib = 0
    for i in range(4):
        for j in range(i + 1, 4):
            d = dist(pts[i], pts[j])
            if d > span:
                span, ia, ib = d, i, j
    if span <= 0.0:
        raise ValueError("cross ratio of four coincident points is undefined")
    o = pts[ia]
    dx = (pts[ib].x - o.x) / span
    dy = (pts[ib].y - o.y) / span
    for p in pts:
        off = abs(-dy * (p.x - o.x) + dx * (p.y - o.y))
        if off > 1e-6 * span:
            raise ValueError("points are not collinear within tolerance")
    uv = [((p.x - o.x) * dx + (p.y - o.y) * dy, 1.0) for p in pts]
    return _cross_ratio_from_params(uv)


def _transversal_params(lines: Sequence[Line2], transversal: Line2) -> list:
    """Homogeneous 1D parameters of each line's hit on the transversal."""
    o = transversal.foot_from_origin()
    dx, dy = transversal.direction()
    uv = []
    for line in lines:
        hp = intersect(line, transversal)
        if hp.is_infinite:
            uv.append((hp.x * dx + hp.y * dy, 0.0))
        else:
            p = hp.to_point()
            uv.append(((p.x - o.x) * dx + (p.y - o.y) * dy, 1.0))
    return uv


def pencil_cross_ratio(
    l1: Line2, l2: Line2, l3: Line2, l4: Line2, transversal: Line2
) -> float:
    """Cross ratio of four concurrent lines via their transversal hits."""
    lines = (l1, l2, l3, l4)
    best = -1.0
    bi = bj = 0
    for i in range(4):
        for j in range(i + 1, 4):
            c = abs(lines[i].a * lines[j].b - lines[i].b * lines[j].a)
            if c > best:
                best, bi, bj = c, i, j
    if best < 1e-9:
        # all four lines parallel: apex at infinity
        for i in range(4):
            for j in range(i + 1, 4):
                if abs(lines[i].a * lines[j].b - lines[i].b * lines[j].a) > 1e-9:
                    raise NonConcurrentPencil("parallel pencil with a stray member")
        tdx, tdy = transversal.direction()
        pdx, pdy = lines[0].direction()
        if abs(tdx * pdy - tdy * pdx) <= 1e-9:
            raise TransversalThroughApex("transversal parallel to the pencil")
    else:
        apex_h = intersect(lines[bi], lines[bj])
        if not apex_h.is_infinite:
            apex = apex_h.to_point()
            tol = 1e-6 * max(1.0, math.hypot(apex.x, apex.y))
            for k in range(4):
                if k in (bi, bj):
                    continue
                if abs(lines[k].eval(apex)) > tol:
                    raise NonConcurrentPencil("lines do not meet at a common apex")
            if abs(transversal.eval(apex)) <= tol:
                raise TransversalThroughApex("transversal passes through the apex")
    try:
        uv = _transversal_params(lines, transversal)
    except CoincidentLines as exc:
        raise TransversalThroughApex("transversal coincides with a pencil line") from exc
    return _cross_ratio_from_params(uv)


def proportional_weights(values: Iterable[float]) -> list:
    """Normalize nonnegative values to weights summing to one.

    An all-zero input falls back to uniform weights.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInput("cannot normalize an empty list")
    if any(v < 0.0 for v in vals):
        raise ValueError("proportional weights need nonnegative values")
    total = math.fsum(vals)
    if total <= 0.0:
        return [1.0 / len(vals)] * len(vals)
    return [v / total for v in vals]


def reversed_weights(values: Iterable[float]) -> list:
    """Order-reversing normalization: larger values get smaller weights.

    Weights are proportional to max(values) - value; an all-equal input
    falls back to uniform weights.
    """
    vals = [float(v) for v in values]
    if not vals:
        raise EmptyInput("cannot normalize an empty list")
    top = max(vals)
    diffs = [top - v for v in vals]
    total = math.fsum(diffs)
    if total <= 0.0:
        return [1.0 / len(vals)] * len(vals)
    return [d / total for d in diffs]


def direction_angle_deg(d1x: float, d1y: float, d2x: float, d2y: float) -> float:
    """Angle in [0, 90] degrees between two undirected directions."""
    dot = d1x * d2x + d1y * d2y
    cross = d1x * d2y - d1y * d2x
    return math.degrees(math.atan2(abs(cross), abs(dot)))


def angle_to_vanishing_point(s: Segment, vp: HPoint) -> float:
    """Angle in degrees between a segment and the ray from its midpoint to vp."""
    sx, sy = s.q.x - s.p.x, s.q.y - s.p.y
    if vp.is_infinite:
        vx, vy = vp.x, vp.y
    else:
        m = s.midpoint
        p = vp.to_point()
        vx, vy = p.x - m.x, p.y - m.y
        if math.hypot(vx, vy) < 1e-9:
            raise VpAtMidpoint("vanishing point sits on the segment midpoint")
    return direction_angle_deg(sx, sy, vx, vy)


def clip_line_to_rect(
    line: Line2, width: float, height: float
) -> Optional[Tuple[Point2, Point2]]:
    """Chord of an infinite line inside the rectangle [0, w] x [0, h]."""
    o = line.foot_from_origin()
    dx, dy = line.direction()
    slack = 1e-7 * max(width, height, 1.0)
    ts = []
    if abs(dx) > 1e-15:
        for xb in (0.0, width):
            t = (xb - o.x) / dx
            y = o.y + t * dy
            if -slack <= y <= height + slack:
                ts.append(t)
    if abs(dy) > 1e-15:
        for yb in (0.0, height):
            t = (yb - o.y) / dy
            x = o.x + t * dx
            if -slack <= x <= width + slack:
                ts.append(t)
    if len(ts) < 2:
        return None
    t0, t1 = min(ts), max(ts)
    if t1 - t0 < 1e-9:
        return None
    p0 = Point2(o.x + t0 * dx, o.y + t0 * dy)
    p1 = Point2(o.x + t1 * dx, o.y + t1 * dy)
    return p0, p1


def clip_segment_to_rect(
    p: Point2, q: Point2, width: float, height: float
) -> Optional[Tuple[Point2, Point2]]:
    """Liang-Barsky clip of segment [p, q] against [0, w] x [0, h]."""
    dx, dy = q.x - p.x, q.y - p.y
    t0, t1 = 0.0, 1.0
    for pk, qk in ((-dx, p.x - 0.0), (dx, width - p.x), (-dy, p.y - 0.0), (dy, height - p.y)):
        if pk == 0.0:
            if qk < 0.0:
                return None
            continue
        r = qk / pk
        if pk < 0.0:
            if r > t1:
                return None
            if r > t0:
                t0 = r
        else:
            if r < t0:
                return None
            if r < t1:
                t1 = r
    if t1 - t0 < 1e-12:
        return None
    a = Point2(p.x + t0 * dx, p.y + t0 * dy)
    b = Point2(p.x + t1 * dx, p.y + t1 * dy)
    return a, b
