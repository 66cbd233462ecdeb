"""Camera calibration from orthogonal vanishing points and corner depth.

The Manhattan frame is anchored at the optic center: the camera sits at the
origin, one unit above the floor plane y = -1, with y pointing up.  Only the
ranking of depth scores matters downstream, so this scale convention is all
the reconstruction needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import (
    NegativeFocalSquare,
    PlaneBehindCamera,
    RayParallelToPlane,
    TooFewFiniteVps,
)
from .geometry import HPoint, Line2, Point2, intersect, join


@dataclass(frozen=True)
class VanishingTriplet:
    """The three orthogonal vanishing points and their pairwise joins."""

    vp_x: HPoint
    vp_y: HPoint
    vp_z: HPoint
    horizon_line: Line2  # through vp_x and vp_z; separates ceiling from floor
    vertical_line: Line2  # through vp_y and vp_z; separates left from right
    xy_line: Line2  # through vp_x and vp_y

    @classmethod
    def from_points(cls, vp_x: HPoint, vp_y: HPoint, vp_z: HPoint) -> "VanishingTriplet":
        vps = (vp_x, vp_y, vp_z)
        if sum(vp.is_infinite for vp in vps) > 1:
            raise ValueError("at most one vanishing point may be at infinity")
        for i in range(3):
            for j in range(i + 1, 3):
                a, b = vps[i], vps[j]
                cx = a.y * b.w - a.w * b.y
                cy = a.w * b.x - a.x * b.w
                cw = a.x * b.y - a.y * b.x
                scale = max(1.0, math.hypot(a.x, a.y), math.hypot(b.x, b.y))
                if math.sqrt(cx * cx + cy * cy + cw * cw) <= 1e-9 * scale:
                    raise ValueError("vanishing points must be pairwise distinct")
        return cls(
            vp_x=vp_x,
            vp_y=vp_y,
            vp_z=vp_z,
            horizon_line=join(vp_x, vp_z),
            vertical_line=join(vp_y, vp_z),
            xy_line=join(vp_x, vp_y),
        )

    def vp_for_axis(self, axis: str) -> HPoint:
        return {"x": self.vp_x, "y": self.vp_y, "z": self.vp_z}[axis]


@dataclass
class Camera:
    """Pinhole camera: focal length, principal point, Manhattan orientation.

    ``rotation`` holds the Manhattan axis directions expressed in camera
    coordinates, one per column; camera-to-Manhattan is its transpose.  The
    optic center is the origin of the Manhattan frame.
    """

    focal: float
    principal_point: Point2
    rotation: np.ndarray

    @property
    def optic_center(self) -> np.ndarray:
        return np.zeros(3)


@dataclass(frozen=True)
class Corner3:
    """Reconstructed 3D corner in the Manhattan frame (camera-height units)."""

    position: Tuple[float, float, float]
    source_corner: str


def _orthocenter(a: Point2, b: Point2, c: Point2) -> Point2:
    # altitude from a: through a, perpendicular to bc
    def altitude(v: Point2, p: Point2, q: Point2) -> Line2:
        dx, dy = q.x - p.x, q.y - p.y
        return Line2(dx, dy, -(dx * v.x + dy * v.y))

    h = intersect(altitude(a, b, c), altitude(b, a, c))
    if h.is_infinite:
        raise NegativeFocalSquare("vanishing points are collinear")
    return h.to_point()


def _vp_ray(vp: HPoint, f: float, pp: Point2) -> np.ndarray:
    if vp.is_infinite:
        d = np.array([vp.x, vp.y, 0.0])
    else:
        p = vp.to_point()
        d = np.array([(p.x - pp.x) / f, (p.y - pp.y) / f, 1.0])
    return d / np.linalg.norm(d)


def intrinsics_from_vps(t: VanishingTriplet, image_size: Tuple[float, float]) -> Camera:
    """Calibrate focal, principal point and Manhattan rotation from the VPs.

    With three finite VPs the principal point is the orthocenter of their
    triangle and the focal length comes from the orthogonality constraint
    (vp_i - pp) . (vp_j - pp) + f**2 = 0.  With one VP at infinity the
    principal point falls back to the image center and the two finite VPs
    fix the focal length.
    """
    vps = (t.vp_x, t.vp_y, t.vp_z)
    finite = [vp.to_point() for vp in vps if not vp.is_infinite]
    if len(finite) < 2:
        raise TooFewFiniteVps("need at least two finite vanishing points")
    if len(finite) == 3:
        pp = _orthocenter(*finite)
        f_sqs = []
        for i in range(3):
            for j in range(i + 1, 3):
                vi, vj = finite[i], finite[j]
                f_sqs.append(-((vi.x - pp.x) * (vj.x - pp.x) + (vi.y - pp.y) * (vj.y - pp.y)))
        f_sq = sum(f_sqs) / 3.0
    else:
        pp = Point2(image_size[0] / 2.0, image_size[1] / 2.0)
        vi, vj = finite
        f_sq = -((vi.x - pp.x) * (vj.x - pp.x) + (vi.y - pp.y) * (vj.y - pp.y))
    if not (f_sq > 0.0) or not math.isfinite(f_sq):
        raise NegativeFocalSquare("vanishing points admit no real focal length")
    f = math.sqrt(f_sq)

    m_y = _vp_ray(t.vp_y, f, pp)
    m_z = _vp_ray(t.vp_z, f, pp)
    # z points into the scene, y points up (negative image-y direction)
    if abs(m_z[2]) > 1e-9:
        m_z = m_z * math.copysign(1.0, m_z[2])
    elif abs(m_z[1]) > 1e-9:
        m_z = m_z * -math.copysign(1.0, m_z[1])
    else:
        m_z = m_z * math.copysign(1.0, m_z[0])
    if abs(m_y[1]) > 1e-9:
        m_y = m_y * -math.copysign(1.0, m_y[1])
    else:
        m_y = m_y * math.copysign(1.0, m_y[0])

    z = m_z
    y = m_y - np.dot(m_y, z) * z
    ny = np.linalg.norm(y)
    if ny < 1e-9:
        raise NegativeFocalSquare("vertical and depth directions are degenerate")
    y = y / ny
    x = np.cross(y, z)
    rotation = np.column_stack([x, y, z])
    return Camera(focal=f, principal_point=pp, rotation=rotation)


def backproject(c: Camera, p: Point2) -> np.ndarray:
    """Unit direction of the ray through pixel p, in the Manhattan frame."""
    d = np.array(
        [
            (p.x - c.principal_point.x) / c.focal,
            (p.y - c.principal_point.y) / c.focal,
            1.0,
        ]
    )
    d = d / np.linalg.norm(d)
    return c.rotation.T @ d


def _hit_horizontal_plane(d: np.ndarray, plane_y: float) -> np.ndarray:
    if abs(d[1]) < 1e-9:
        raise RayParallelToPlane("ray is parallel to the horizontal plane")
    t = plane_y / d[1]
    if t <= 1e-9:
        raise PlaneBehindCamera("constraint plane hit behind the optic center")
    return t * d


def _height_on_vertical_line(d: np.ndarray, base_x: float, base_z: float) -> np.ndarray:
    """Point (base_x, h, base_z) with h solved least-squares along ray d."""
    proj = np.eye(3) - np.outer(d, d)
    e_y = proj @ np.array([0.0, 1.0, 0.0])
    den = float(e_y @ e_y)
    if den < 1e-12:
        raise RayParallelToPlane("ray cannot resolve a height on this vertical")
    v0 = proj @ np.array([base_x, 0.0, base_z])
    h = -float(v0 @ e_y) / den
    point = np.array([base_x, h, base_z])
    if float(point @ d) <= 1e-9:
        raise PlaneBehindCamera("vertical line resolved behind the optic center")
    return point


def reconstruct_corners(frame, c: Camera) -> List[Corner3]:
    """Lift a frame's 2D corners to scaled 3D points in the Manhattan frame.

    Floor corners sit on y = -1 (camera one unit above the floor); ceiling
    corners share (x, z) with their vertically paired floor corner with the
    height solved along their ray; single-plane categories pin corners to
    |y| = 1 with the sign given by the corner's side of the horizon.
    """
    labels = "ABCD"
    corners = frame.corners
    rays = [backproject(c, p) for p in corners]
    cat = frame.category.value
    out: List[np.ndarray] = [None] * len(corners)

    if cat == "4c":
        # corners A, B on the ceiling pair with D, C on the floor
        for i in (2, 3):
            out[i] = _hit_horizontal_plane(rays[i], -1.0)
        for ceil_i, floor_i in ((0, 3), (1, 2)):
            base = out[floor_i]
            out[ceil_i] = _height_on_vertical_line(rays[ceil_i], base[0], base[2])
    elif cat == "2vc":
        out[1] = _hit_horizontal_plane(rays[1], -1.0)
        out[0] = _height_on_vertical_line(rays[0], out[1][0], out[1][2])
    else:  # "2hc" and "1c": |y| = 1 plane, sign by side of the horizon
        for i, d in enumerate(rays):
            if abs(d[1]) < 1e-9:
                raise RayParallelToPlane("corner pixel lies on the horizon")
            out[i] = _hit_horizontal_plane(d, math.copysign(1.0, d[1]))

    return [
        Corner3(position=(float(p[0]), float(p[1]), float(p[2])), source_corner=labels[i])
        for i, p in enumerate(out)
    ]


def depth_score(frame, c: Camera) -> float:
    """Sum of optic-center distances to the frame's reconstructed corners."""
    corners = reconstruct_corners(frame, c)
    return float(sum(math.hypot(*cr.position) for cr in corners))
