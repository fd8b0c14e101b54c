"""Disparity-shift projection of super-pixel labels between views."""

from __future__ import annotations

from typing import Dict, Mapping, Optional

import numpy as np

from ..errors import DataError, InvariantError
from ..model import HOLE, LabelMap, SuperRayTable, ViewIndex
from ..quality import ssim
from ..synth import round_half_up
from .plans import ProjectionPlan


def shift_for(table: SuperRayTable, src: ViewIndex, dst: ViewIndex):
    """Integer ``(row, col)`` displacement of every label going ``src -> dst``."""
    dr, dc = src.offset_to(dst)
    return round_half_up(-dr * table.median), round_half_up(-dc * table.median)


def fill_holes(labels: np.ndarray) -> np.ndarray:
    """Breadth-first fill of HOLE pixels from their nearest labelled pixels.

    Each BFS wave assigns a hole the smallest label among its already
    assigned 4-neighbours.
    """
    lab = np.array(labels, dtype=np.int64)
    holes = lab == HOLE
    if not holes.any():
        return lab
    if holes.all():
        lab[:] = 0
        return lab
    big = np.iinfo(np.int64).max
    while holes.any():
        cur = np.where(holes, big, lab)
        best = np.full(lab.shape, big, dtype=np.int64)
        best[1:, :] = np.minimum(best[1:, :], cur[:-1, :])
        best[:-1, :] = np.minimum(best[:-1, :], cur[1:, :])
        best[:, 1:] = np.minimum(best[:, 1:], cur[:, :-1])
        best[:, :-1] = np.minimum(best[:, :-1], cur[:, 1:])
        wave = holes & (best != big)
        lab[wave] = best[wave]
        holes &= ~wave
    return lab


def project_labels(src_labels: LabelMap, table: SuperRayTable, src: ViewIndex, dst: ViewIndex,
                   larger_disparity_wins: bool = True, fill: bool = True) -> LabelMap:
    """Move every source pixel by its label's median disparity times the view offset.

    When two labels land on the same pixel the one with larger ``|d_m|``
    wins (flip with ``larger_disparity_wins=False``); remaining ties go to
    the lower label. Uncovered pixels are then filled by :func:`fill_holes`.
    """
    lab = src_labels.labels
    if lab.size and lab.max() >= table.n_labels:
        raise DataError(f"label {int(lab.max())} is not in the super-ray table ({table.n_labels} labels)")
    if src == dst:
        return src_labels
    h, w = lab.shape
    sy, sx = shift_for(table, src, dst)
    valid = lab != HOLE
    yy, xx = np.nonzero(valid)
    ll = lab[yy, xx]
    ty, tx = yy + sy[ll], xx + sx[ll]
    inside = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
    ty, tx, ll = ty[inside], tx[inside], ll[inside]

    mag = np.abs(table.median)[ll]
    key = -mag if larger_disparity_wins else mag
    # best candidate first, then keep the first hit per target pixel
    order = np.lexsort((ll, key))
    flat = (ty * w + tx)[order]
    _, first = np.unique(flat, return_index=True)
    out = np.full(h * w, HOLE, dtype=np.int64)
    out[flat[first]] = ll[order][first]
    out = out.reshape(h, w)
    if fill:
        out = fill_holes(out)
    return LabelMap(out, src_labels.n_labels)


def run_plan(plan: ProjectionPlan, ref_labels: Mapping[ViewIndex, LabelMap],
             tables: Mapping[ViewIndex, SuperRayTable], **kwargs) -> Dict[ViewIndex, LabelMap]:
    """Execute the plan's edges in order, chaining each projection from the
    labels already computed for its source view."""
    problems = plan.validate()
    if problems:
        raise InvariantError("invalid projection plan: " + "; ".join(problems))
    missing = [str(r) for r in plan.references if r not in ref_labels or r not in tables]
    if missing:
        raise DataError(f"no labels/table for reference view(s) {', '.join(missing)}")
    root = plan.root_of()
    out: Dict[ViewIndex, LabelMap] = {r: ref_labels[r] for r in plan.references}
    for src, dst in plan.edges:
        out[dst] = project_labels(out[src], tables[root[src]], src, dst, **kwargs)
    return out


def projection_quality(gt: LabelMap, proj: LabelMap) -> float:
    """SSIM of two label images with dynamic range ``max(n_labels - 1, 1)``."""
    if gt.shape != proj.shape:
        raise DataError(f"label maps differ in size: {gt.shape} vs {proj.shape}")
    n = max(gt.n_labels, proj.n_labels)
    return ssim(gt.labels, proj.labels, dynamic_range=max(n - 1, 1))


def quality_matrix(gt_labels: Mapping[ViewIndex, LabelMap], plan: ProjectionPlan,
                   ref_labels: Mapping[ViewIndex, LabelMap], tables: Mapping[ViewIndex, SuperRayTable],
                   projected: Optional[Mapping[ViewIndex, LabelMap]] = None, **kwargs) -> np.ndarray:
    """Projection quality of every view under ``plan``.

    Returns an ``n_rows x n_cols`` array; reference views score exactly 1.0.
    """
    missing = [str(v) for v in ((ViewIndex(r, c)) for r in range(1, plan.n_rows + 1)
                                for c in range(1, plan.n_cols + 1)) if v not in gt_labels]
    if missing:
        raise DataError(f"missing ground-truth labels for view(s) {', '.join(missing[:8])}")
    if projected is None:
        projected = run_plan(plan, ref_labels, tables, **kwargs)
    q = np.empty((plan.n_rows, plan.n_cols))
    refs = set(plan.references)
    for v, lm in projected.items():
        q[v.row - 1, v.col - 1] = 1.0 if v in refs else projection_quality(gt_labels[v], lm)
    return q
