"""Choosing the spacing between reference views from a quality profile.

The quality of views at distance ``k = 1..n-1`` from a reference, scaled to
percent, is scattered against ``k``. Candidates are the vertices of the
lower convex hull of that scatter; the one picked is the hull vertex whose
distance is closest to the median distance, so that the next reference is
neither too close to nor too far from the current one.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from ..errors import DataError

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class RefSelectionInput:
    k: Tuple[int, ...]
    ssim: Tuple[float, ...]  # already multiplied by 100
    direction: str = HORIZONTAL

    def __post_init__(self):
        if len(self.k) != len(self.ssim):
            raise DataError("k and ssim must have equal lengths")
        if any(b <= a for a, b in zip(self.k, self.k[1:])):
            raise DataError("k must be strictly increasing")

    @classmethod
    def from_profile(cls, quality: Sequence[float], direction: str = HORIZONTAL) -> "RefSelectionInput":
        """Build from a row/column of a quality matrix that starts at the reference."""
        q = list(quality)[1:]
        return cls(tuple(range(1, len(q) + 1)), tuple(float(_exact(v) * 100) for v in q), direction)


def _exact(x) -> Fraction:
    # decimal rendering keeps transcribed values (e.g. 92.4) exact, so
    # collinearity tests are not decided by binary rounding noise
    return Fraction(repr(float(x)))


def lower_hull(points: Sequence[Tuple[float, float]]) -> List[int]:
    """Indices of the lower convex hull (monotone chain, collinear points kept).

    ``points`` must be sorted by strictly increasing x.
    """
    pts = [(_exact(x), _exact(y)) for x, y in points]
    hull: List[int] = []
    for i, (x, y) in enumerate(pts):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = pts[hull[-2]], pts[hull[-1]]
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            if cross < 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def select_reference_spacing(inp: RefSelectionInput) -> int:
    """Distance ``k*`` to the next reference view.

    Ties between two hull vertices equally close to the median distance go
    to the smaller ``k``.
    """
    if len(inp.k) < 2:
        raise DataError("need at least two (k, ssim) points")
    hull = lower_hull(list(zip(inp.k, inp.ssim)))
    ks = [Fraction(inp.k[i]) for i in hull]
    median_k = statistics.median(Fraction(k) for k in inp.k)
    best = min(ks, key=lambda k: (abs(k - median_k), k))
    return int(best)


def select_spacing_from_matrix(quality: np.ndarray) -> Tuple[int, int]:
    """``(k_h, k_v)`` from the first row and first column of a top-left quality matrix."""
    q = np.asarray(quality, dtype=float)
    if q.ndim != 2:
        raise DataError("quality matrix must be 2-D")
    k_h = select_reference_spacing(RefSelectionInput.from_profile(q[0, :], HORIZONTAL)) if q.shape[1] >= 3 else q.shape[1]
    k_v = select_reference_spacing(RefSelectionInput.from_profile(q[:, 0], VERTICAL)) if q.shape[0] >= 3 else q.shape[0]
    return k_h, k_v
