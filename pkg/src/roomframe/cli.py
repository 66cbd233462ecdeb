"""Command-line interface: recover, simulate, evaluate, render.

Exit codes: 0 success, 2 malformed input or parameters, 3 pipeline failure
(the failing stage is named on standard error).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

from .classify import FrameCategory, classify_segments
from .errors import PipelineError, RoomframeError
from .evaluate import EvalRecord, _stats_for, BenchmarkReport, frame_offset_norm
from .formats import (
    FileFormatError,
    RunConfig,
    dump_json,
    frame_from_dict,
    frame_to_dict,
    load_json,
    scene_from_dict,
    scene_from_truth,
    scene_to_dict,
)
from .frames import Frame, recover
from .geometry import Point2
from .render import render_recovery, render_scene_frame
from .sim import DegradeParams, degrade, generate_scene


def _load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.from_dict(load_json(Path(path)))


def cmd_recover(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    scene = scene_from_dict(load_json(Path(args.input)))
    cat = scene.category
    if args.category:
        cat = FrameCategory.parse(args.category)
    if cat is None:
        raise FileFormatError(
            "frame category missing: provide a 'category' field or --category"
        )
    try:
        result = recover(
            scene.segments, scene.vps, cat, scene.image_size, cfg.refine, cfg.constraints
        )
    except PipelineError as exc:
        print(f"recovery failed at stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 3
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".frame.json")
    doc = frame_to_dict(
        result.frame,
        result.selected.cross_ratio_residuals,
        result.selected.depth,
        result.selected.origins,
    )
    dump_json(doc, out)
    if args.svg:
        Path(args.svg).write_text(
            render_recovery(scene.image_size, result), encoding="utf-8"
        )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if args.count <= 0:
        raise FileFormatError("count must be positive")
    cat = FrameCategory.parse(args.category)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.preset == "clean":
        preset = DegradeParams(
            fragments_per_edge=(1, 1),
            drop_fraction=0.0,
            clutter_ratio=0.0,
            endpoint_noise_sigma=0.0,
            occlusion_level=0,
        )
    else:
        level = int(args.preset)
        d = cfg.degrade
        preset = DegradeParams(
            fragments_per_edge=d.fragments_per_edge,
            drop_fraction=d.drop_fraction,
            clutter_ratio=d.clutter_ratio,
            endpoint_noise_sigma=d.endpoint_noise_sigma,
            occlusion_level=level,
        )
    entries = []
    for i in range(args.count):
        seed = args.seed + i
        truth = generate_scene(seed, cat, (args.width, args.height))
        params = DegradeParams(
            fragments_per_edge=preset.fragments_per_edge,
            drop_fraction=preset.drop_fraction,
            clutter_ratio=preset.clutter_ratio,
            endpoint_noise_sigma=preset.endpoint_noise_sigma,
            occlusion_level=preset.occlusion_level,
            seed=seed + 1,
        )
        observed = degrade(truth, params)
        scene = scene_from_truth(truth)
        scene.segments = observed
        scene_name = f"scene_{i:04d}.json"
        truth_name = f"truth_{i:04d}.json"
        dump_json(scene_to_dict(scene), out_dir / scene_name)
        dump_json(
            {
                "schema": "truth/1",
                "category": cat.value,
                "corners": [[c.x, c.y] for c in truth.truth_frame.corners],
                "seed": seed,
                "occlusion_level": preset.occlusion_level,
            },
            out_dir / truth_name,
        )
        entries.append(
            {
                "scene": scene_name,
                "truth": truth_name,
                "seed": seed,
                "category": cat.value,
                "occlusion_level": preset.occlusion_level,
            }
        )
    dump_json({"schema": "manifest/1", "scenes": entries}, out_dir / "manifest.json")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    manifest_path = Path(args.manifest)
    doc = load_json(manifest_path)
    if doc.get("schema") != "manifest/1" or not isinstance(doc.get("scenes"), list):
        raise FileFormatError("unsupported or missing manifest schema")
    entries = doc["scenes"]
    if not entries:
        raise FileFormatError("manifest lists no scenes")
    records: List[EvalRecord] = []
    per_level = {}
    for entry in entries:
        scene = scene_from_dict(load_json(manifest_path.parent / entry["scene"]))
        truth_doc = load_json(manifest_path.parent / entry["truth"])
        if truth_doc.get("schema") != "truth/1":
            raise FileFormatError("unsupported truth schema")
        cat = FrameCategory.parse(truth_doc["category"])
        truth_corners = tuple(
            Point2(float(c[0]), float(c[1])) for c in truth_doc["corners"]
        )
        level = int(entry.get("occlusion_level", 0))
        diag = math.hypot(*scene.image_size)
        t0 = time.perf_counter()
        try:
            result = recover(
                scene.segments, scene.vps, cat, scene.image_size, cfg.refine, cfg.constraints
            )
            elapsed = time.perf_counter() - t0
            total = math.fsum(
                math.hypot(d.x - g.x, d.y - g.y)
                for d, g in zip(result.frame.corners, truth_corners)
            )
            rec = EvalRecord(
                scene_id=entry["scene"],
                category=cat.value,
                occlusion_level=level,
                corner_offset_norm=total / diag,
                runtime_sec=elapsed,
            )
        except PipelineError as exc:
            rec = EvalRecord(
                scene_id=entry["scene"],
                category=cat.value,
                occlusion_level=level,
                corner_offset_norm=1.0,
                runtime_sec=time.perf_counter() - t0,
                failed=True,
                failure_stage=exc.stage,
            )
        records.append(rec)
        per_level.setdefault(level, []).append(rec)
    report = BenchmarkReport(
        levels={lvl: _stats_for(recs) for lvl, recs in sorted(per_level.items())},
        aggregate=_stats_for(records),
        records=records,
    )
    print(report.to_text())
    out = Path(args.out) if args.out else manifest_path.parent / "report.json"
    dump_json(report.to_dict(), out)
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    scene = scene_from_dict(load_json(Path(args.scene)))
    frame, origins = frame_from_dict(load_json(Path(args.frame)))
    if scene.category and frame.category != scene.category:
        raise FileFormatError("scene and frame categories do not match")
    sets = classify_segments(scene.segments, scene.vps)
    svg = render_scene_frame(scene.image_size, sets, frame, origins)
    out = Path(args.out) if args.out else Path(args.frame).with_suffix(".svg")
    out.write_text(svg, encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roomframe",
        description="Recover the indoor wall/ceiling/floor frame from line "
        "segments and three orthogonal vanishing points.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recover", help="recover a frame from a scene file")
    p.add_argument("input", help="scene JSON path")
    p.add_argument("--category", choices=["4c", "2vc", "2hc", "1c"])
    p.add_argument("--config", help="run config JSON path")
    p.add_argument("--svg", help="write a stage overlay SVG here")
    p.add_argument("--out", help="frame JSON output path")
    p.set_defaults(fn=cmd_recover)

    p = sub.add_parser("simulate", help="generate synthetic scene files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--category", required=True, choices=["4c", "2vc", "2hc", "1c"])
    p.add_argument("--count", type=int, default=1)
    p.add_argument(
        "--preset",
        default="clean",
        choices=["clean", "0", "1", "2"],
        help="degradation preset: clean or an occlusion level",
    )
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--config", help="run config JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("evaluate", help="run recovery over a manifest and report")
    p.add_argument("manifest", help="manifest JSON path")
    p.add_argument("--config", help="run config JSON path")
    p.add_argument("--out", help="report JSON output path")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("render", help="render a scene plus frame as SVG")
    p.add_argument("scene", help="scene JSON path")
    p.add_argument("frame", help="frame JSON path")
    p.add_argument("--out", help="SVG output path")
    p.set_defaults(fn=cmd_render)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (FileFormatError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"recovery failed at stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 3
    except RoomframeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
