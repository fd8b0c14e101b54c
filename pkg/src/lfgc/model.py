"""Core light-field data model.

Views are addressed 1-based as ``(row, col)`` to match the usual ``I_{i,j}``
notation; storage is a dense ``(n_rows, n_cols, height, width)`` array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional

import numpy as np

from .errors import DataError

#: Marker for pixels that received no label during projection.
HOLE = -1

# ITU-R BT.709 luma weights.
BT709 = (0.2126, 0.7152, 0.0722)


@dataclass(frozen=True, order=True)
class ViewIndex:
    row: int
    col: int

    def __post_init__(self):
        if self.row < 1 or self.col < 1:
            raise DataError(f"view index must be 1-based, got {self}")

    def __str__(self):
        return f"({self.row},{self.col})"

    def offset_to(self, other: "ViewIndex"):
        """Return ``(d_row, d_col)`` going from this view to ``other``."""
        return other.row - self.row, other.col - self.col

    def to_list(self):
        return [self.row, self.col]

    @classmethod
    def parse(cls, value) -> "ViewIndex":
        if isinstance(value, ViewIndex):
            return value
        if isinstance(value, str):
            parts = value.strip("() ").split(",")
            return cls(int(parts[0]), int(parts[1]))
        r, c = value
        return cls(int(r), int(c))


def grid_views(n_rows: int, n_cols: int) -> Iterator[ViewIndex]:
    """Iterate views in row-major order."""
    for r in range(1, n_rows + 1):
        for c in range(1, n_cols + 1):
            yield ViewIndex(r, c)


@dataclass(frozen=True, eq=False)
class LightFieldGrid:
    """An ``n_rows x n_cols`` grid of equally sized luminance views.

    ``views`` is indexed ``[row-1, col-1, y, x]``. ``bit_depth`` is 8 for
    integer storage; float grids set ``normalized=True`` and hold values in
    ``[0, 1]``.
    """

    views: np.ndarray
    bit_depth: int = 8
    normalized: bool = False

    def __post_init__(self):
        v = np.asarray(self.views)
        if v.ndim != 4:
            raise DataError(f"views must be 4-D (rows, cols, h, w), got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "views", v)

    @property
    def n_rows(self) -> int:
        return self.views.shape[0]

    @property
    def n_cols(self) -> int:
        return self.views.shape[1]

    @property
    def height(self) -> int:
        return self.views.shape[2]

    @property
    def width(self) -> int:
        return self.views.shape[3]

    @property
    def n_views(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def max_value(self) -> float:
        return 1.0 if self.normalized else float(2**self.bit_depth - 1)

    def view(self, idx: ViewIndex) -> np.ndarray:
        return self.views[idx.row - 1, idx.col - 1]

    def indices(self) -> List[ViewIndex]:
        return list(grid_views(self.n_rows, self.n_cols))

    def as_float(self) -> np.ndarray:
        """Views as float64 on the 0..255 scale."""
        v = self.views.astype(np.float64)
        if self.normalized:
            v = v * 255.0
        return v

    @classmethod
    def from_views(cls, views: Mapping[ViewIndex, np.ndarray], n_rows: int, n_cols: int,
                   bit_depth: int = 8) -> "LightFieldGrid":
        """Assemble a grid from a ``ViewIndex -> plane`` mapping.

        Raises :class:`DataError` listing every problem found (see
        :func:`validate_views`).
        """
        problems = validate_views(views, n_rows, n_cols, bit_depth)
        if problems:
            raise DataError("; ".join(problems))
        first = views[ViewIndex(1, 1)]
        arr = np.empty((n_rows, n_cols) + first.shape, dtype=first.dtype)
        for idx, plane in views.items():
            arr[idx.row - 1, idx.col - 1] = plane
        return cls(arr, bit_depth=bit_depth)


@dataclass(frozen=True, eq=False)
class DisparityMap:
    """Per-pixel horizontal shift (pixels per one-view baseline step)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DataError("disparity map must be 2-D")
        if not np.all(np.isfinite(v)):
            raise DataError("disparity map contains non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @property
    def range(self):
        return float(self.values.min()), float(self.values.max())


@dataclass(frozen=True, eq=False)
class LabelMap:
    """Per-pixel super-pixel labels.

    A map straight out of segmentation holds exactly ``0..n_labels-1``. A
    projected map may contain :data:`HOLE` until holes are filled.
    """

    labels: np.ndarray
    n_labels: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise DataError("label map must be 2-D")
        lab = lab.astype(np.int32, copy=True)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        if lab.size and lab.max() >= self.n_labels:
            raise DataError(f"label {int(lab.max())} exceeds n_labels={self.n_labels}")

    @property
    def shape(self):
        return self.labels.shape

    @property
    def has_holes(self) -> bool:
        return bool((self.labels == HOLE).any())

    @classmethod
    def from_array(cls, labels: np.ndarray) -> "LabelMap":
        labels = np.asarray(labels)
        n = int(labels.max()) + 1 if labels.size else 0
        return cls(labels, max(n, 0))

    def is_contiguous(self) -> bool:
        """True when every label ``0..n_labels-1`` is present and there are no holes."""
        if self.has_holes:
            return False
        counts = np.bincount(self.labels.ravel(), minlength=self.n_labels)
        return len(counts) == self.n_labels and bool(np.all(counts > 0))


@dataclass(frozen=True, eq=False)
class SuperRayTable:
    """Per-label statistics of a reference segmentation.

    ``median`` is the lower median of member disparities (used to shift
    labels); ``mean`` is kept alongside for the error-scaling analysis.
    """

    median: np.ndarray
    mean: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        med = np.asarray(self.median, dtype=np.float64).copy()
        mean = np.asarray(self.mean, dtype=np.float64).copy()
        counts = np.asarray(self.counts, dtype=np.int64).copy()
        if not (med.shape == mean.shape == counts.shape) or med.ndim != 1:
            raise DataError("table columns must be equal-length vectors")
        if not np.all(np.isfinite(med)):
            raise DataError("median disparities must be finite")
        for a in (med, mean, counts):
            a.setflags(write=False)
        object.__setattr__(self, "median", med)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "counts", counts)

    @property
    def n_labels(self) -> int:
        return len(self.median)

    def memberships(self, label_maps: Mapping[ViewIndex, LabelMap]) -> Dict[int, Dict[ViewIndex, np.ndarray]]:
        """Flat pixel indices of each label in each view."""
        out: Dict[int, Dict[ViewIndex, np.ndarray]] = {k: {} for k in range(self.n_labels)}
        for idx, lm in label_maps.items():
            flat = lm.labels.ravel()
            order = np.argsort(flat, kind="stable")
            bounds = np.searchsorted(flat[order], np.arange(self.n_labels + 1))
            for k in range(self.n_labels):
                out[k][idx] = order[bounds[k]:bounds[k + 1]]
        return out

    def to_json(self) -> dict:
        return {
            "n_labels": self.n_labels,
            "median": [float(x) for x in self.median],
            "mean": [float(x) for x in self.mean],
            "counts": [int(x) for x in self.counts],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SuperRayTable":
        return cls(obj["median"], obj["mean"], obj["counts"])


def luminance_of(rgb: np.ndarray) -> np.ndarray:
    """Convert an 8-bit RGB plane (``h x w x 3``) to 8-bit BT.709 luma."""
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DataError(f"expected h x w x 3 RGB plane, got shape {rgb.shape}")
    return _luma(rgb[..., 0], rgb[..., 1], rgb[..., 2])


def luminance_of_channels(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Like :func:`luminance_of` but for separate channel planes."""
    r, g, b = (np.asarray(x) for x in (r, g, b))
    if not (r.shape == g.shape == b.shape):
        raise DataError(f"channel dimension mismatch: {r.shape}, {g.shape}, {b.shape}")
    return _luma(r, g, b)


def _luma(r, g, b):
    y = BT709[0] * r.astype(np.float64) + BT709[1] * g + BT709[2] * b
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def validate_views(views: Mapping[ViewIndex, np.ndarray], n_rows: int, n_cols: int,
                   bit_depth: int = 8, normalized: bool = False) -> List[str]:
    problems: List[str] = []
    ref_shape: Optional[tuple] = None
    hi = 1.0 if normalized else 2**bit_depth - 1
    for idx in grid_views(n_rows, n_cols):
        if idx not in views:
            problems.append(f"missing view {idx}")
            continue
        plane = np.asarray(views[idx])
        if plane.ndim != 2:
            problems.append(f"view {idx} is not a 2-D plane (shape {plane.shape})")
            continue
        if ref_shape is None:
            ref_shape = plane.shape
        elif plane.shape != ref_shape:
            what = "width" if plane.shape[0] == ref_shape[0] else "height"
            problems.append(f"view {idx} has wrong {what}: {plane.shape} != {ref_shape}")
        if plane.size and (plane.min() < 0 or plane.max() > hi):
            problems.append(f"view {idx} has values outside [0, {hi}]")
    for idx in views:
        if not (1 <= idx.row <= n_rows and 1 <= idx.col <= n_cols):
            problems.append(f"view {idx} outside {n_rows}x{n_cols} grid")
    return problems


def validate_grid(lf) -> List[str]:
    """Check a :class:`LightFieldGrid` (or a ``ViewIndex -> plane`` dict).

    Returns an empty list when the grid is well formed, otherwise one
    message per violation. Never raises for bad content.
    """
    if isinstance(lf, LightFieldGrid):
        views = {idx: lf.view(idx) for idx in lf.indices()}
        return validate_views(views, lf.n_rows, lf.n_cols, lf.bit_depth, lf.normalized)
    views, n_rows, n_cols = lf["views"], lf["n_rows"], lf["n_cols"]
    return validate_views(views, n_rows, n_cols, lf.get("bit_depth", 8))
