"""Failure postmortem over the degraded benchmark (dev tool, not shipped)."""
import math
from collections import Counter

from roomframe.sim import generate_scene, degrade, DegradeParams
from roomframe.classify import (
    FrameCategory, classify_segments, partition_subsets, correspondence_table,
    CATEGORY_GROUPS, ClassifiedSets,
)
from roomframe.refine import (
    RefineConfig, reclassify, connect_collinear, fit_missing, vote_select,
    WeightedCandidate,
)
from roomframe.frames import (
    cross_ratio_residuals, assemble_frame, ConstraintConfig, recover,
    enumerate_candidates, select_final,
)
from roomframe.camera import intrinsics_from_vps, depth_score
from roomframe.errors import RoomframeError, PipelineError
from roomframe.evaluate import frame_offset_norm


def near(seg, true_seg, max_ang=1.5, max_off=3.0):
    l, tl = seg.line(), true_seg.line()
    ang = math.degrees(math.atan2(abs(l.a * tl.b - l.b * tl.a), abs(l.a * tl.a + l.b * tl.b)))
    return ang <= max_ang and abs(l.eval(true_seg.midpoint)) <= max_off


def postmortem(seed, cat, level):
    truth = generate_scene(seed, cat, (640, 480))
    obs = degrade(truth, DegradeParams(occlusion_level=level, seed=seed + 1))
    t = truth.truth_vps
    cfg = RefineConfig()
    diag = math.hypot(640, 480)
    ccfg = ConstraintConfig(corner_tol_px=5.0 * diag / 800)
    try:
        res = recover(obs, t, cat, truth.image_size)
        e = frame_offset_norm(res.frame, truth.truth_frame, diag)
        if e <= 0.03:
            return 'ok', ''
    except PipelineError as exc:
        res = None
        e = None

    sets2 = reclassify(classify_segments(obs, t, cfg.classify_angle_deg), t, cfg)
    sets3 = ClassifiedSets(
        x=connect_collinear(sets2.x, cfg, t.vp_x),
        y=connect_collinear(sets2.y, cfg, t.vp_y),
        z=connect_collinear(sets2.z, cfg, t.vp_z),
        outliers=sets2.outliers,
    )
    part = partition_subsets(sets3, t, cat)
    corr = correspondence_table(cat)
    fit = fit_missing(part, t, corr, truth.image_size, cfg)
    try:
        sel = vote_select(part, fit, corr, t, cfg)
    except RoomframeError as exc:
        return 'vote_error', type(exc).__name__

    # 1) is a true-ish candidate in every top-n?
    for g, true_seg in truth.truth_frame.box_lines.items():
        if not any(near(c.segment, true_seg) for c in sel[g]):
            pool = [WeightedCandidate(s, 'detected') for s in part.subsets[g]]
            pool += [WeightedCandidate(s, 'fitted') for s in fit.get(g, [])]
            if any(near(c.segment, true_seg) for c in pool):
                return 'true_voted_out', str(g)
            return 'true_not_in_pool', str(g)

    # 2) best true-ish combo: residuals + assembly
    best_sel = {}
    best_org = {}
    for g, true_seg in truth.truth_frame.box_lines.items():
        cands = [c for c in sel[g] if near(c.segment, true_seg)]
        c = min(cands, key=lambda c: abs(c.segment.line().eval(true_seg.midpoint)))
        best_sel[g] = c.segment
        best_org[g] = c.origin
    if cat is not FrameCategory.ONE_C:
        try:
            rs = cross_ratio_residuals(best_sel, t, cat)
        except RoomframeError:
            rs = [9.9]
        if max(rs) >= 0.05:
            return 'true_residual_fail', f'{max(rs):.3f}'
    try:
        fr = assemble_frame(best_sel, cat, ccfg)
    except RoomframeError as exc:
        return 'true_assembly_fail', type(exc).__name__

    if res is None:
        return 'true_ok_but_pipeline_failed', ''
    # 3) lost the depth race
    return 'depth_lost', f'e={e:.3f}'


counts = Counter()
details = []
for level in (0, 1, 2):
    for i in range(16):
        seed = 100 + level * 100003 + i * 17
        cat = list(FrameCategory)[i % 4]
        kind, info = postmortem(seed, cat, level)
        counts[kind] += 1
        if kind != 'ok':
            details.append((level, i, cat.value, kind, info))
print(counts)
for d in details:
    print(d)
