"""SLIC super-pixels on luminance and per-super-pixel disparity statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import DataError
from .model import DisparityMap, LabelMap, SuperRayTable


@dataclass(frozen=True)
class SlicParams:
    n_segments: int = 2000
    compactness: float = 30.0
    max_iterations: int = 10
    enforce_connectivity: bool = True

    def __post_init__(self):
        if self.n_segments < 1:
            raise DataError("n_segments must be >= 1")
        if not self.compactness > 0:
            raise DataError("compactness must be > 0")


def _grid_shape(h: int, w: int, k: int):
    ny = max(1, min(h, int(math.floor(math.sqrt(k * h / w)))))
    nx = max(1, min(w, k // ny))
    return ny, nx


def slic_segment(view: np.ndarray, params: SlicParams = SlicParams()) -> LabelMap:
    """Segment a luminance plane into at most ``params.n_segments`` super-pixels.

    Cluster centres start on a regular ``ny x nx`` grid (``ny * nx <=
    n_segments``). Each k-means pass assigns every pixel to the closest of
    the centres seeded in its own and the eight neighbouring grid cells,
    using ``D^2 = d_lum^2 + (compactness / S)^2 * d_xy^2`` with
    ``S = sqrt(pixels / n_segments)``; equal distances go to the lower
    cluster id. Labels are renumbered 0..K-1 in raster order of first
    appearance.
    """
    img = np.asarray(view, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise DataError("slic_segment needs a non-empty 2-D view")
    h, w = img.shape
    if params.n_segments > img.size:
        raise DataError(f"n_segments={params.n_segments} exceeds pixel count {img.size}")
    ny, nx = _grid_shape(h, w, params.n_segments)
    s = math.sqrt(img.size / params.n_segments)
    wxy = (params.compactness / s) ** 2

    gy = (np.arange(ny) + 0.5) * h / ny
    gx = (np.arange(nx) + 0.5) * w / nx
    cy = np.repeat(gy, nx)
    cx = np.tile(gx, ny)
    cl = img[np.clip(cy.astype(int), 0, h - 1), np.clip(cx.astype(int), 0, w - 1)]

    yy, xx = np.mgrid[0:h, 0:w]
    cell_y = np.minimum((yy * ny) // h, ny - 1)
    cell_x = np.minimum((xx * nx) // w, nx - 1)
    labels = cell_y * nx + cell_x

    # candidates ordered by increasing cluster id so argmin breaks ties low
    offsets = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
    cand = np.empty((9, h, w), dtype=np.int64)
    valid = np.empty((9, h, w), dtype=bool)
    for n, (dy, dx) in enumerate(offsets):
        ty, tx = cell_y + dy, cell_x + dx
        valid[n] = (ty >= 0) & (ty < ny) & (tx >= 0) & (tx < nx)
        cand[n] = np.where(valid[n], ty * nx + tx, 0)

    n_clusters = ny * nx
    flat_img = img.ravel()
    for _ in range(params.max_iterations):
        dist = ((img[None] - cl[cand]) ** 2
                + wxy * ((yy[None] - cy[cand]) ** 2 + (xx[None] - cx[cand]) ** 2))
        dist[~valid] = np.inf
        new = np.take_along_axis(cand, dist.argmin(axis=0)[None], axis=0)[0]
        changed = not np.array_equal(new, labels)
        labels = new
        flat = labels.ravel()
        cnt = np.bincount(flat, minlength=n_clusters)
        nz = cnt > 0
        cy[nz] = np.bincount(flat, yy.ravel(), n_clusters)[nz] / cnt[nz]
        cx[nz] = np.bincount(flat, xx.ravel(), n_clusters)[nz] / cnt[nz]
        cl[nz] = np.bincount(flat, flat_img, n_clusters)[nz] / cnt[nz]
        if not changed:
            break

    if params.enforce_connectivity:
        labels = enforce_connectivity(labels)
    return relabel_sequential(labels)


def _components(labels: np.ndarray):
    """4-connected components of equal-label pixels."""
    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)
    right = labels[:, :-1] == labels[:, 1:]
    down = labels[:-1, :] == labels[1:, :]
    rows = np.concatenate([idx[:, :-1][right], idx[:-1, :][down]])
    cols = np.concatenate([idx[:, 1:][right], idx[1:, :][down]])
    adj = sparse.coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(h * w, h * w))
    n, comp = connected_components(adj, directed=False)
    return n, comp.reshape(h, w)


def enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Merge every fragment that is not the largest piece of its label.

    Each orphan fragment takes the label of the neighbouring (non-orphan)
    fragment it shares the most boundary with, lowest label on ties.
    Fragments surrounded only by other orphans wait for a later pass.
    """
    labels = np.array(labels, dtype=np.int64)
    while True:
        n, comp = _components(labels)
        comp_label = np.zeros(n, dtype=np.int64)
        comp_label[comp.ravel()] = labels.ravel()
        size = np.bincount(comp.ravel(), minlength=n)
        # largest component per label (lowest component id on ties)
        order = np.lexsort((np.arange(n), -size, comp_label))
        first = np.ones(n, dtype=bool)
        first[1:] = comp_label[order][1:] != comp_label[order][:-1]
        keep = np.zeros(n, dtype=bool)
        keep[order[first]] = True
        if keep.all():
            return labels
        a = np.concatenate([comp[:, :-1].ravel(), comp[:-1, :].ravel(), comp[:, 1:].ravel(), comp[1:, :].ravel()])
        b = np.concatenate([comp[:, 1:].ravel(), comp[1:, :].ravel(), comp[:, :-1].ravel(), comp[:-1, :].ravel()])
        sel = (~keep[a]) & keep[b] & (a != b)
        a, b = a[sel], b[sel]
        if len(a) == 0:
            # orphans only touch orphans: promote the largest one
            orphan = np.flatnonzero(~keep)
            keep[orphan[np.argmax(size[orphan])]] = True
            continue
        nb_label = comp_label[b]
        pairs, counts = np.unique(np.stack([a, nb_label]), axis=1, return_counts=True)
        # per orphan: most shared boundary, then lowest label
        order = np.lexsort((pairs[1], -counts, pairs[0]))
        pa = pairs[0][order]
        head = np.ones(len(pa), dtype=bool)
        head[1:] = pa[1:] != pa[:-1]
        new_label = comp_label.copy()
        new_label[pa[head]] = pairs[1][order][head]
        labels = new_label[comp]


def relabel_sequential(labels: np.ndarray) -> LabelMap:
    """Renumber labels 0..K-1 by raster order of first appearance."""
    flat = np.asarray(labels).ravel()
    uniq, first = np.unique(flat, return_index=True)
    rank = np.empty(len(uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(uniq))
    lut_pos = np.searchsorted(uniq, flat)
    out = rank[lut_pos].reshape(np.asarray(labels).shape)
    return LabelMap(out, len(uniq))


def median_disparity_per_label(labels: LabelMap, dmap: DisparityMap) -> SuperRayTable:
    """Lower-median and mean disparity of every label."""
    if labels.shape != dmap.shape:
        raise DataError(f"label map {labels.shape} and disparity map {dmap.shape} differ in size")
    if labels.has_holes:
        raise DataError("label map contains holes")
    flat = labels.labels.ravel()
    d = dmap.values.ravel()
    counts = np.bincount(flat, minlength=labels.n_labels)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0)
        raise DataError(f"labels {missing[:5].tolist()} have no pixels")
    order = np.lexsort((d, flat))
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    median = d[order][starts + (counts - 1) // 2]
    mean = np.bincount(flat, d, labels.n_labels) / counts
    return SuperRayTable(median, mean, counts)


def median_disparity_error(disparities: Sequence[float], k: float = 1.0) -> float:
    """``(1/n) * sum((k*d_i - mean(k*d))**2)``, i.e. the error scaled to view distance ``k``."""
    d = np.asarray(disparities, dtype=np.float64)
    if d.size == 0:
        raise DataError("median_disparity_error needs at least one disparity")
    kd = k * d
    return float(np.mean((kd - kd.mean()) ** 2))
