"""Versioned JSON file formats: scenes, frames, manifests, and run config.

Every document carries an explicit ``schema`` field; readers validate it
and the structural invariants before handing data to the pipeline, so CLI
commands can map malformed input to exit code 2 uniformly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .camera import VanishingTriplet
from .classify import CATEGORY_GROUPS, FrameCategory, GroupId
from .frames import ConstraintConfig, Frame
from .geometry import HPoint, Point2, Segment
from .refine import RefineConfig
from .sim import DegradeParams, SceneTruth


class FileFormatError(ValueError):
    """Malformed or out-of-schema input file."""


@dataclass
class SceneFile:
    image_size: Tuple[int, int]
    segments: List[Segment]
    vps: VanishingTriplet
    category: Optional[FrameCategory] = None
    truth_corners: Optional[List[Point2]] = None
    truth_category: Optional[FrameCategory] = None


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise FileFormatError(msg)


def _vp_to_json(vp: HPoint) -> dict:
    if vp.is_infinite:
        return {"dx": vp.x, "dy": vp.y}
    p = vp.to_point()
    return {"x": p.x, "y": p.y}


def _vp_from_json(obj: dict, name: str) -> HPoint:
    _require(isinstance(obj, dict), f"vanishing point {name} must be an object")
    if "dx" in obj or "dy" in obj:
        _require("dx" in obj and "dy" in obj, f"vanishing point {name}: need dx and dy")
        return HPoint.at_infinity(float(obj["dx"]), float(obj["dy"]))
    _require("x" in obj and "y" in obj, f"vanishing point {name}: need x and y")
    return HPoint(float(obj["x"]), float(obj["y"]), 1.0)


def scene_to_dict(scene: SceneFile) -> dict:
    out = {
        "schema": "scene/1",
        "image": {"width": scene.image_size[0], "height": scene.image_size[1]},
        "category": scene.category.value if scene.category else None,
        "vanishing_points": {
            "x": _vp_to_json(scene.vps.vp_x),
            "y": _vp_to_json(scene.vps.vp_y),
            "z": _vp_to_json(scene.vps.vp_z),
        },
        "segments": [
            {"id": s.id, "x1": s.p.x, "y1": s.p.y, "x2": s.q.x, "y2": s.q.y}
            for s in scene.segments
        ],
    }
    if scene.truth_corners is not None:
        out["truth"] = {
            "category": scene.truth_category.value if scene.truth_category else None,
            "corners": [[c.x, c.y] for c in scene.truth_corners],
        }
    return out


def scene_from_dict(doc: dict) -> SceneFile:
    _require(isinstance(doc, dict), "scene document must be an object")
    _require(doc.get("schema") == "scene/1", "unsupported or missing scene schema")
    img = doc.get("image")
    _require(
        isinstance(img, dict) and "width" in img and "height" in img,
        "scene needs image width/height",
    )
    w, h = int(img["width"]), int(img["height"])
    _require(w > 0 and h > 0, "image size must be positive")
    vp_doc = doc.get("vanishing_points")
    _require(isinstance(vp_doc, dict), "scene needs vanishing_points")
    try:
        vps = VanishingTriplet.from_points(
            _vp_from_json(vp_doc.get("x"), "x"),
            _vp_from_json(vp_doc.get("y"), "y"),
            _vp_from_json(vp_doc.get("z"), "z"),
        )
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc
    segs_doc = doc.get("segments")
    _require(isinstance(segs_doc, list), "scene needs a segments list")
    bound = 10.0 * max(w, h)
    segments: List[Segment] = []
    seen = set()
    for i, s in enumerate(segs_doc):
        _require(isinstance(s, dict), f"segment {i} must be an object")
        try:
            coords = [float(s[k]) for k in ("x1", "y1", "x2", "y2")]
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"segment {i}: bad coordinates") from exc
        _require(
            all(math.isfinite(c) and abs(c) <= bound for c in coords),
            f"segment {i}: coordinates outside 10x image bounds",
        )
        sid = str(s.get("id", f"s{i}"))
        _require(sid not in seen, f"duplicate segment id {sid!r}")
        seen.add(sid)
        try:
            segments.append(
                Segment(Point2(coords[0], coords[1]), Point2(coords[2], coords[3]), id=sid)
            )
        except ValueError as exc:
            raise FileFormatError(f"segment {i}: {exc}") from exc
    category = None
    if doc.get("category"):
        try:
            category = FrameCategory.parse(doc["category"])
        except ValueError as exc:
            raise FileFormatError(str(exc)) from exc
    truth_corners = None
    truth_category = None
    if isinstance(doc.get("truth"), dict):
        tdoc = doc["truth"]
        if tdoc.get("category"):
            truth_category = FrameCategory.parse(tdoc["category"])
        if tdoc.get("corners") is not None:
            truth_corners = [Point2(float(c[0]), float(c[1])) for c in tdoc["corners"]]
    return SceneFile(
        image_size=(w, h),
        segments=segments,
        vps=vps,
        category=category,
        truth_corners=truth_corners,
        truth_category=truth_category,
    )


def scene_from_truth(truth: SceneTruth) -> SceneFile:
    return SceneFile(
        image_size=truth.image_size,
        segments=list(truth.truth_segments),
        vps=truth.truth_vps,
        category=truth.category,
        truth_corners=list(truth.truth_frame.corners),
        truth_category=truth.category,
    )


def frame_to_dict(
    frame: Frame,
    residuals: List[float],
    depth: Optional[float],
    origins: Optional[Dict[GroupId, str]] = None,
) -> dict:
    origins = origins or {}
    box = {}
    for g in CATEGORY_GROUPS[frame.category]:
        s = frame.box_lines[g]
        box[str(g)] = {
            "id": s.id,
            "x1": s.p.x,
            "y1": s.p.y,
            "x2": s.q.x,
            "y2": s.q.y,
            "origin": origins.get(g, "detected"),
        }
    return {
        "schema": "frame/1",
        "category": frame.category.value,
        "box_lines": box,
        "corners": [[c.x, c.y] for c in frame.corners],
        "cross_ratio_residuals": list(residuals),
        "depth_score": depth,
    }


def frame_from_dict(doc: dict) -> Tuple[Frame, Dict[GroupId, str]]:
    _require(isinstance(doc, dict), "frame document must be an object")
    _require(doc.get("schema") == "frame/1", "unsupported or missing frame schema")
    try:
        cat = FrameCategory.parse(doc.get("category", ""))
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc
    box_doc = doc.get("box_lines")
    _require(isinstance(box_doc, dict), "frame needs box_lines")
    box_lines: Dict[GroupId, Segment] = {}
    origins: Dict[GroupId, str] = {}
    for g in CATEGORY_GROUPS[cat]:
        entry = box_doc.get(str(g))
        _require(isinstance(entry, dict), f"frame missing box line {g}")
        try:
            seg = Segment(
                Point2(float(entry["x1"]), float(entry["y1"])),
                Point2(float(entry["x2"]), float(entry["y2"])),
                id=str(entry.get("id", str(g))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"frame box line {g}: {exc}") from exc
        box_lines[g] = seg
        origins[g] = str(entry.get("origin", "detected"))
    corners_doc = doc.get("corners")
    _require(
        isinstance(corners_doc, list) and len(corners_doc) == cat.corner_count,
        "frame corner count does not match the category",
    )
    corners = tuple(Point2(float(c[0]), float(c[1])) for c in corners_doc)
    frame = Frame(category=cat, box_lines=box_lines, corners=corners)
    return frame, origins


@dataclass
class RunConfig:
    """All pipeline tunables, loadable from one JSON document."""

    refine: RefineConfig = field(default_factory=RefineConfig)
    constraints: ConstraintConfig = field(default_factory=ConstraintConfig)
    degrade: DegradeParams = field(default_factory=DegradeParams)
    seed: int = 0

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        _require(isinstance(doc, dict), "config must be an object")
        try:
            refine = RefineConfig(**doc.get("refine", {}))
            constraints = ConstraintConfig(**doc.get("constraints", {}))
            degrade = DegradeParams(**doc.get("degrade", {}))
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"bad config: {exc}") from exc
        return cls(
            refine=refine,
            constraints=constraints,
            degrade=degrade,
            seed=int(doc.get("seed", 0)),
        )


def dump_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc
