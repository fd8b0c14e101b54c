"""Projection plans: which view projects its labels to which.

A plan is a forest of ``(source, target)`` edges rooted at reference views.
Edges are listed in execution order, so a source is always a reference or a
view targeted by an earlier edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import DataError, InvariantError
from ..model import ViewIndex, grid_views

TOPLEFT = "topleft"
CENTER = "center"
MULTIVIEW = "multiview"
SCHEMES = (TOPLEFT, CENTER, MULTIVIEW)

Edge = Tuple[ViewIndex, ViewIndex]


@dataclass(frozen=True)
class Block:
    """Rectangle of views served by one reference (inclusive, 1-based)."""

    reference: ViewIndex
    rows: Tuple[int, int]
    cols: Tuple[int, int]

    def __contains__(self, idx: ViewIndex) -> bool:
        return self.rows[0] <= idx.row <= self.rows[1] and self.cols[0] <= idx.col <= self.cols[1]

    def views(self) -> List[ViewIndex]:
        return [ViewIndex(r, c) for r in range(self.rows[0], self.rows[1] + 1)
                for c in range(self.cols[0], self.cols[1] + 1)]

    @property
    def shape(self):
        return self.rows[1] - self.rows[0] + 1, self.cols[1] - self.cols[0] + 1


@dataclass(frozen=True)
class ProjectionPlan:
    scheme: str
    n_rows: int
    n_cols: int
    references: Tuple[ViewIndex, ...]
    edges: Tuple[Edge, ...]
    blocks: Tuple[Block, ...] = field(default=())
    spacing: Optional[Tuple[int, int]] = None  # (k_h, k_v) for multi-view plans

    def root_of(self) -> Dict[ViewIndex, ViewIndex]:
        """Map each view to the reference its labels descend from."""
        root = {r: r for r in self.references}
        for src, dst in self.edges:
            root[dst] = root[src]
        return root

    def block_of(self) -> Dict[ViewIndex, int]:
        out = {}
        for b, block in enumerate(self.blocks):
            for v in block.views():
                out[v] = b
        return out

    def distances(self) -> Dict[ViewIndex, Tuple[int, int]]:
        """Per-axis offset of each view from its root reference."""
        root = self.root_of()
        return {v: (abs(v.row - r.row), abs(v.col - r.col)) for v, r in root.items()}

    def hop_counts(self) -> Dict[ViewIndex, int]:
        hops = {r: 0 for r in self.references}
        for src, dst in self.edges:
            hops[dst] = hops[src] + 1
        return hops

    def validate(self) -> List[str]:
        problems = []
        seen = set(self.references)
        targeted = set()
        for src, dst in self.edges:
            if src not in seen:
                problems.append(f"edge {src}->{dst}: source not yet available")
            if dst in seen:
                problems.append(f"edge {src}->{dst}: target {'targeted twice' if dst in targeted else 'is a reference'}")
            seen.add(dst)
            targeted.add(dst)
        for v in grid_views(self.n_rows, self.n_cols):
            if v not in seen:
                problems.append(f"view {v} is never reached")
        for v in seen:
            if not (1 <= v.row <= self.n_rows and 1 <= v.col <= self.n_cols):
                problems.append(f"view {v} outside the grid")
        if self.blocks:
            bmap = self.block_of()
            for src, dst in self.edges:
                if bmap.get(src) != bmap.get(dst):
                    problems.append(f"edge {src}->{dst} crosses a block boundary")
        return problems

    def check(self):
        problems = self.validate()
        if problems:
            raise InvariantError("invalid projection plan: " + "; ".join(problems))
        return self

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "references": [r.to_list() for r in self.references],
            "edges": [[s.to_list(), t.to_list()] for s, t in self.edges],
            "blocks": [{"reference": b.reference.to_list(), "rows": list(b.rows), "cols": list(b.cols)}
                       for b in self.blocks],
            "spacing": list(self.spacing) if self.spacing else None,
        }

    @classmethod
    def from_json(cls, obj) -> "ProjectionPlan":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        try:
            return cls(
                scheme=obj["scheme"],
                n_rows=int(obj["n_rows"]),
                n_cols=int(obj["n_cols"]),
                references=tuple(ViewIndex.parse(r) for r in obj["references"]),
                edges=tuple((ViewIndex.parse(s), ViewIndex.parse(t)) for s, t in obj["edges"]),
                blocks=tuple(Block(ViewIndex.parse(b["reference"]), tuple(b["rows"]), tuple(b["cols"]))
                             for b in obj.get("blocks", [])),
                spacing=tuple(obj["spacing"]) if obj.get("spacing") else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"invalid plan JSON: {exc}") from exc


def _block_edges(ref: ViewIndex, rows: Tuple[int, int], cols: Tuple[int, int]) -> List[Edge]:
    """Row-by-row chain inside a rectangle: left-to-right in each row, one
    vertical step down the first column to start the next row."""
    edges = []
    for r in range(rows[0], rows[1] + 1):
        for c in range(cols[0] + 1, cols[1] + 1):
            edges.append((ViewIndex(r, c - 1), ViewIndex(r, c)))
        if r < rows[1]:
            edges.append((ViewIndex(r, cols[0]), ViewIndex(r + 1, cols[0])))
    return edges


def plan_topleft(n_rows: int, n_cols: int) -> ProjectionPlan:
    if n_rows < 1 or n_cols < 1:
        raise DataError("grid dimensions must be >= 1")
    ref = ViewIndex(1, 1)
    block = Block(ref, (1, n_rows), (1, n_cols))
    return ProjectionPlan(TOPLEFT, n_rows, n_cols, (ref,), tuple(_block_edges(ref, block.rows, block.cols)),
                          (block,)).check()


def _outward(center: int, n: int):
    """Yield ``(from, to)`` steps spreading from ``center`` to ``1`` and ``n``,
    alternating sides at each distance (lower side first)."""
    for dist in range(1, max(center - 1, n - center) + 1):
        if center - dist >= 1:
            yield center - dist + 1, center - dist
        if center + dist <= n:
            yield center + dist - 1, center + dist


def plan_center(n_rows: int, n_cols: int) -> ProjectionPlan:
    """Centre view is the only reference; the centre column is filled first,
    then every row spreads horizontally from its own centre view."""
    if n_rows < 1 or n_cols < 1:
        raise DataError("grid dimensions must be >= 1")
    if n_rows % 2 == 0 or n_cols % 2 == 0:
        raise DataError(f"centre-view plan needs odd grid dimensions, got {n_rows}x{n_cols}")
    cr, cc = (n_rows + 1) // 2, (n_cols + 1) // 2
    ref = ViewIndex(cr, cc)
    edges: List[Edge] = [(ViewIndex(a, cc), ViewIndex(b, cc)) for a, b in _outward(cr, n_rows)]
    for r in [cr] + [r for r in range(1, n_rows + 1) if r != cr]:
        edges.extend((ViewIndex(r, a), ViewIndex(r, b)) for a, b in _outward(cc, n_cols))
    block = Block(ref, (1, n_rows), (1, n_cols))
    return ProjectionPlan(CENTER, n_rows, n_cols, (ref,), tuple(edges), (block,)).check()


def reference_positions(n: int, k: int) -> List[int]:
    """1, 1+k, 1+2k, ... dropping candidates that would have no view after them."""
    if k < 1:
        raise DataError("reference spacing must be >= 1")
    pos = [p for p in range(1, n + 1, k)]
    return [p for p in pos if p == 1 or p < n]


def plan_multiview(n_rows: int, n_cols: int, k_h: int, k_v: int) -> ProjectionPlan:
    """References every ``k_h`` columns and ``k_v`` rows; each reference runs
    a top-left style chain inside its own block."""
    if n_rows < 1 or n_cols < 1:
        raise DataError("grid dimensions must be >= 1")
    ref_rows = reference_positions(n_rows, k_v)
    ref_cols = reference_positions(n_cols, k_h)
    row_spans = [(r, (ref_rows[i + 1] - 1) if i + 1 < len(ref_rows) else n_rows) for i, r in enumerate(ref_rows)]
    col_spans = [(c, (ref_cols[i + 1] - 1) if i + 1 < len(ref_cols) else n_cols) for i, c in enumerate(ref_cols)]
    refs, edges, blocks = [], [], []
    for rows in row_spans:
        for cols in col_spans:
            ref = ViewIndex(rows[0], cols[0])
            refs.append(ref)
            blocks.append(Block(ref, rows, cols))
            edges.extend(_block_edges(ref, rows, cols))
    return ProjectionPlan(MULTIVIEW, n_rows, n_cols, tuple(refs), tuple(edges), tuple(blocks),
                          spacing=(k_h, k_v)).check()


def make_plan(scheme: str, n_rows: int, n_cols: int, k_h: Optional[int] = None,
              k_v: Optional[int] = None) -> ProjectionPlan:
    if scheme == TOPLEFT:
        return plan_topleft(n_rows, n_cols)
    if scheme == CENTER:
        return plan_center(n_rows, n_cols)
    if scheme == MULTIVIEW:
        if k_h is None or k_v is None:
            raise DataError("multi-view plan needs k_h and k_v")
        return plan_multiview(n_rows, n_cols, k_h, k_v)
    raise DataError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
