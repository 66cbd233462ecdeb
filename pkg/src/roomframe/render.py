"""Deterministic SVG overlays of pipeline stages.

Output is plain text with fixed float formatting and stable element order,
so identical inputs produce byte-identical documents.  Color code: x lines
red, y green, z blue, outliers gray; fitted lines dashed; the final frame
bold with marked corners.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .classify import CATEGORY_GROUPS, ClassifiedSets, GroupId
from .frames import CandidateFrame, Frame, RecoverResult
from .geometry import Point2, Segment

_AXIS_COLORS = {"x": "#d62728", "y": "#2ca02c", "z": "#1f77b4", "outlier": "#999999"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _line_el(s: Segment, color: str, width: float, dashed: bool = False) -> str:
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return (
        f'<line x1="{_fmt(s.p.x)}" y1="{_fmt(s.p.y)}" x2="{_fmt(s.q.x)}" y2="{_fmt(s.q.y)}"'
        f' stroke="{color}" stroke-width="{width}"{dash} />'
    )


def _circle_el(p: Point2, color: str, r: float = 3.0) -> str:
    return f'<circle cx="{_fmt(p.x)}" cy="{_fmt(p.y)}" r="{r}" fill="{color}" />'


def _classified_elements(sets: ClassifiedSets, width: float = 1.0) -> List[str]:
    els = []
    for axis in ("x", "y", "z"):
        for s in sets.by_axis(axis):
            els.append(_line_el(s, _AXIS_COLORS[axis], width))
    for s in sets.outliers:
        els.append(_line_el(s, _AXIS_COLORS["outlier"], width * 0.8))
    return els


def _frame_elements(
    frame: Frame, origins: Optional[Dict[GroupId, str]] = None, bold: bool = True
) -> List[str]:
    origins = origins or {}
    width = 2.5 if bold else 1.0
    els = []
    for g in CATEGORY_GROUPS[frame.category]:
        s = frame.box_lines[g]
        dashed = origins.get(g) == "fitted"
        els.append(_line_el(s, _AXIS_COLORS[g.axis], width, dashed))
    for c in frame.corners:
        els.append(_circle_el(c, "#000000"))
    return els


def svg_document(
    image_size: Tuple[float, float],
    layers: Sequence[Tuple[str, Sequence[str]]],
    include_empty: bool = False,
) -> str:
    w, h = image_size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(w)}" height="{int(h)}"'
        f' viewBox="0 0 {int(w)} {int(h)}">',
        f'<rect width="{int(w)}" height="{int(h)}" fill="#ffffff" />',
    ]
    for name, elements in layers:
        if not elements and not include_empty:
            continue
        out.append(f'<g id="{name}">')
        out.extend(f"  {el}" for el in elements)
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_recovery(
    image_size: Tuple[float, float], result: RecoverResult
) -> str:
    """Four-layer overlay: initial, refined, candidate frames, final frame."""
    refined = _classified_elements(result.connected_sets, width=1.2)
    for g, segs in result.fitted.items():
        for s in segs:
            refined.append(_line_el(s, _AXIS_COLORS[g.axis], 1.2, dashed=True))
    cand_els: List[str] = []
    for cand in result.candidates:
        for g in CATEGORY_GROUPS[cand.frame.category]:
            cand_els.append(_line_el(cand.frame.box_lines[g], "#bbbbbb", 0.8))
    layers = [
        ("segments-initial", _classified_elements(result.initial_sets)),
        ("segments-refined", refined),
        ("candidates", cand_els),
        ("frame", _frame_elements(result.frame, result.selected.origins)),
    ]
    return svg_document(image_size, layers, include_empty=True)


def render_scene_frame(
    image_size: Tuple[float, float],
    sets: ClassifiedSets,
    frame: Frame,
    origins: Optional[Dict[GroupId, str]] = None,
) -> str:
    """Scene segments (classified colors) with the final frame on top."""
    layers = [
        ("segments", _classified_elements(sets)),
        ("frame", _frame_elements(frame, origins)),
    ]
    return svg_document(image_size, layers, include_empty=False)
