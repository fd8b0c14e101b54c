"""Synthetic light fields shared by several test modules."""

from __future__ import annotations

from functools import lru_cache

from lfgc.model import ViewIndex
from lfgc.projection import make_plan, quality_matrix, select_spacing_from_matrix
from lfgc.segmentation import SlicParams, median_disparity_per_label, slic_segment
from lfgc.synth import degrade, perturb_disparity, random_scene, render_lf

TL = ViewIndex(1, 1)


@lru_cache(maxsize=None)
def exact_scene(seed: int, grid: int = 9, size: int = 64):
    """Non-overlapping layers with |d| <= 1; labels and disparities are exact."""
    spec = random_scene((grid, grid), (size, size), 5, [-1, 1], seed=seed)
    return render_lf(spec)


def plan_ssim(gt, disparities, plan):
    tables = {r: median_disparity_per_label(gt[r], disparities[r]) for r in plan.references}
    return quality_matrix(gt, plan, {r: gt[r] for r in plan.references}, tables)


@lru_cache(maxsize=None)
def vignetted_means(seed: int):
    """Mean projection SSIM (top-left, center) on a vignetted 13x13 LF whose
    top-left disparity estimate is noisy."""
    spec = random_scene((13, 13), (64, 64), 6, [-0.8, -0.4, 0.4, 0.8], seed=seed, overlap=True)
    lf, disp, _ = render_lf(spec)
    lf = degrade(lf, 0.6)
    params = SlicParams(150, 30)
    gt = {v: slic_segment(lf.view(v), params) for v in lf.indices()}
    disp = dict(disp)
    disp[TL] = perturb_disparity(disp[TL], 0.5, seed)
    tl = plan_ssim(gt, disp, make_plan("topleft", 13, 13)).mean()
    ce = plan_ssim(gt, disp, make_plan("center", 13, 13)).mean()
    return float(tl), float(ce)


@lru_cache(maxsize=None)
def large_disparity_means(seed: int):
    """Mean projection SSIM (top-left, multiview with automatic spacing) on a
    9x9 LF with disparities up to 3 pixels."""
    spec = random_scene((9, 9), (96, 96), 6, [-3, -2, -1, 1, 2, 3], seed=seed, overlap=True, size_range=(8, 20))
    lf, disp, _ = render_lf(spec)
    params = SlicParams(120, 30)
    gt = {v: slic_segment(lf.view(v), params) for v in lf.indices()}
    q_tl = plan_ssim(gt, disp, make_plan("topleft", 9, 9))
    k_h, k_v = select_spacing_from_matrix(q_tl)
    q_mv = plan_ssim(gt, disp, make_plan("multiview", 9, 9, k_h, k_v))
    return float(q_tl.mean()), float(q_mv.mean()), (k_h, k_v)


@lru_cache(maxsize=None)
def smooth_scene(seed: int = 0, grid: int = 5, size: int = 32):
    """Gradient-textured layers, |d| <= 1: the codec's easy case."""
    spec = random_scene((grid, grid), (size, size), 3, [-1, 1], seed=seed)
    return render_lf(spec)
