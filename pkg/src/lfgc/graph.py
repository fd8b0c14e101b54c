"""Super-ray graphs, their Laplacian eigenbasis (the GFT) and size reduction.

A super-ray graph has one node per pixel carrying a given label in any view
of a block. Spatial edges join 4-neighbours with the same label inside a
view; angular edges join a pixel to its disparity-shifted correspondent in
the right and lower neighbouring views when that pixel has the same label.
All edges have unit weight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from .errors import DataError
from .model import LabelMap, LightFieldGrid, SuperRayTable, ViewIndex
from .projection.plans import MULTIVIEW, Block, ProjectionPlan
from .synth import round_half_up

DEFAULT_MAX_NODES = 4096
EIG_TOL = 1e-9
PEAK = 255.0


@dataclass(eq=False)
class SuperRayGraph:
    """Undirected weighted graph over pixels of one super-ray.

    ``nodes`` is an ``(n, 4)`` int array of ``(view_row, view_col, y, x)``;
    ``edges`` an ``(m, 2)`` array with ``edges[:, 0] < edges[:, 1]``.
    """

    nodes: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    signal: Optional[np.ndarray] = None
    label: int = -1

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> sparse.csr_matrix:
        n = self.n_nodes
        if self.n_edges == 0:
            return sparse.csr_matrix((n, n))
        i, j = self.edges[:, 0], self.edges[:, 1]
        a = sparse.coo_matrix((np.concatenate([self.weights, self.weights]),
                               (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
        return a.tocsr()

    def to_json(self) -> str:
        """Debug dump (nodes, edges, weights)."""
        return json.dumps({
            "label": self.label,
            "nodes": self.nodes.tolist(),
            "edges": self.edges.tolist(),
            "weights": self.weights.tolist(),
        })


def _make_graph(nodes, a, b, weights=None, signal=None, label=-1) -> SuperRayGraph:
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keep = lo != hi
    lo, hi = lo[keep], hi[keep]
    w = np.ones(len(lo)) if weights is None else np.asarray(weights, dtype=np.float64)[keep]
    if len(lo):
        key = lo * max(len(nodes), 1) + hi
        uniq, inv = np.unique(key, return_inverse=True)
        w = np.bincount(inv, w, len(uniq))
        lo, hi = uniq // max(len(nodes), 1), uniq % max(len(nodes), 1)
    edges = np.stack([lo, hi], axis=1) if len(lo) else np.zeros((0, 2), dtype=np.int64)
    return SuperRayGraph(np.asarray(nodes, dtype=np.int64).reshape(-1, 4), edges, w, signal, label)


class BlockIndex:
    """Per-view pixel lookup tables for building every super-ray of a block."""

    def __init__(self, views: Sequence[ViewIndex], labels: Mapping[ViewIndex, LabelMap], n_labels: int):
        self.views = list(views)
        self.pos = {v: k for k, v in enumerate(self.views)}
        self.n_labels = n_labels
        self.labels = {}
        self.order = {}
        self.bounds = {}
        self.rank = {}
        for v in self.views:
            if v not in labels:
                raise DataError(f"no labels for view {v}")
            lab = labels[v].labels
            flat = lab.ravel()
            order = np.argsort(flat, kind="stable")
            bounds = np.searchsorted(flat[order], np.arange(n_labels + 1))
            rank = np.empty(flat.size, dtype=np.int64)
            rank[order] = np.arange(flat.size) - bounds[np.clip(flat[order], 0, n_labels)]
            self.labels[v] = lab
            self.order[v] = order
            self.bounds[v] = bounds
            self.rank[v] = rank
        self.shape = labels[self.views[0]].shape

    def members(self, v: ViewIndex, label: int) -> np.ndarray:
        b = self.bounds[v]
        return self.order[v][b[label]:b[label + 1]]

    def graph(self, label: int, disparity: float, lf: Optional[LightFieldGrid] = None) -> SuperRayGraph:
        h, w = self.shape
        offsets = {}
        node_parts, sig_parts = [], []
        total = 0
        for v in self.views:
            pix = self.members(v, label)
            offsets[v] = total
            total += len(pix)
            ys, xs = np.divmod(pix, w)
            node_parts.append(np.stack([np.full(len(pix), v.row), np.full(len(pix), v.col), ys, xs], axis=1))
            if lf is not None:
                sig_parts.append(lf.view(v).ravel()[pix].astype(np.float64))
        if total == 0:
            raise DataError(f"label {label} is absent from the block")
        nodes = np.concatenate(node_parts)
        sa, sb = [], []
        step = int(round_half_up(-disparity))
        for v in self.views:
            pix = self.members(v, label)
            if not len(pix):
                continue
            lab = self.labels[v].ravel()
            base = offsets[v]
            ys, xs = np.divmod(pix, w)
            ids = base + self.rank[v][pix]
            # spatial: right and down neighbours with the same label
            m = (xs + 1 < w)
            m[m] = lab[pix[m] + 1] == label
            sa.append(ids[m]); sb.append(base + self.rank[v][pix[m] + 1])
            m = (ys + 1 < h)
            m[m] = lab[pix[m] + w] == label
            sa.append(ids[m]); sb.append(base + self.rank[v][pix[m] + w])
            # angular: right view shifts columns, lower view shifts rows
            for nv, ty, tx in ((ViewIndex(v.row, v.col + 1), ys, xs + step),
                               (ViewIndex(v.row + 1, v.col), ys + step, xs)):
                if nv not in self.pos:
                    continue
                ok = (ty >= 0) & (ty < h) & (tx >= 0) & (tx < w)
                tp = ty[ok] * w + tx[ok]
                same = self.labels[nv].ravel()[tp] == label
                sa.append(ids[ok][same]); sb.append(offsets[nv] + self.rank[nv][tp[same]])
        sig = np.concatenate(sig_parts) if lf is not None else None
        return _make_graph(nodes, np.concatenate(sa), np.concatenate(sb), signal=sig, label=label)


def build_superray_graph(lf: Optional[LightFieldGrid], labels: Mapping[ViewIndex, LabelMap],
                         table: SuperRayTable, label: int, views: Iterable[ViewIndex]) -> SuperRayGraph:
    """Graph of super-ray ``label`` over ``views``; node signal is luminance when ``lf`` is given."""
    views = list(views)
    if not 0 <= label < table.n_labels:
        raise DataError(f"label {label} absent from table")
    return BlockIndex(views, labels, table.n_labels).graph(label, float(table.median[label]), lf)


# -- spectral -----------------------------------------------------------------

def laplacian(g: SuperRayGraph) -> np.ndarray:
    """Combinatorial Laplacian ``D - A`` as a dense symmetric array."""
    if g.n_nodes == 0:
        raise DataError("empty graph")
    a = g.adjacency().toarray()
    return np.diag(a.sum(axis=1)) - a


@dataclass(eq=False)
class SpectralBasis:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # one column per eigenvalue

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


def canonical_signs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so that each one's first entry above ``tol`` in magnitude is positive."""
    vecs = np.array(vecs)
    big = np.abs(vecs) > tol
    first = np.where(big.any(axis=0), big.argmax(axis=0), 0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def spectral_basis(g_or_lap) -> SpectralBasis:
    """Eigen-decomposition of the Laplacian with deterministic ordering and signs."""
    lap = laplacian(g_or_lap) if isinstance(g_or_lap, SuperRayGraph) else np.asarray(g_or_lap, dtype=float)
    vals, vecs = np.linalg.eigh(lap)
    vecs = canonical_signs(vecs)
    # order columns of numerically equal eigenvalues lexicographically
    n = len(vals)
    start = 0
    perm = np.arange(n)
    while start < n:
        end = start + 1
        while end < n and vals[end] - vals[start] <= EIG_TOL * max(1.0, abs(vals[start])):
            end += 1
        if end - start > 1:
            block = vecs[:, start:end]
            keys = np.round(block, 12)[::-1]  # lexsort uses the last key as primary
            perm[start:end] = start + np.lexsort(keys)
        start = end
    vals, vecs = vals[perm], vecs[:, perm]
    return SpectralBasis(*_exact_null_space(lap, vals, vecs))


def _exact_null_space(lap: np.ndarray, vals: np.ndarray, vecs: np.ndarray):
    """Replace the zero-eigenvalue columns by an exact basis whose first
    vector is constant, so coefficient 0 is always the DC term.

    The null space of a Laplacian is spanned by the indicators of its
    connected components; they are orthonormalised (QR) after the constant
    vector, components taken in order of their lowest node.
    """
    n = len(vals)
    if n == 0:
        return vals, vecs
    adj = sparse.csr_matrix(np.where(np.eye(n, dtype=bool), 0.0, lap) != 0)
    ncomp, comp = connected_components(adj, directed=False)
    first = np.full(ncomp, n)
    np.minimum.at(first, comp, np.arange(n))
    rank = np.argsort(np.argsort(first, kind="stable"), kind="stable")[comp]
    basis = np.empty((n, ncomp))
    basis[:, 0] = 1.0
    for k in range(1, ncomp):
        basis[:, k] = rank == k - 1
    q, _ = np.linalg.qr(basis)
    vecs = vecs.copy()
    vals = vals.copy()
    vecs[:, :ncomp] = canonical_signs(q)
    vals[:ncomp] = 0.0
    return vals, vecs


def gft(basis: SpectralBasis, signal: np.ndarray) -> np.ndarray:
    signal = np.asarray(signal, dtype=np.float64)
    if signal.shape[0] != basis.size:
        raise DataError(f"signal length {signal.shape[0]} != basis size {basis.size}")
    return basis.eigenvectors.T @ signal


def igft(basis: SpectralBasis, coefficients: np.ndarray) -> np.ndarray:
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.shape[0] != basis.size:
        raise DataError(f"coefficient length {coefficients.shape[0]} != basis size {basis.size}")
    return basis.eigenvectors @ coefficients


# -- coarsening / partitioning ------------------------------------------------------

@dataclass(eq=False)
class Piece:
    """A reduced graph plus which original nodes each of its nodes stands for."""

    graph: SuperRayGraph
    groups: List[np.ndarray]

    @property
    def members(self) -> np.ndarray:
        return np.concatenate(self.groups) if self.groups else np.zeros(0, dtype=np.int64)

    def assignment(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(fine_ids, coarse_index)`` pairs for expanding coarse values by copy."""
        fine = self.members
        coarse = np.repeat(np.arange(len(self.groups)), [len(g) for g in self.groups])
        return fine, coarse

    def expand(self, values: np.ndarray, out: np.ndarray):
        fine, coarse = self.assignment()
        out[fine] = np.asarray(values)[coarse]


def _work_graph(n, edges, weights, nodes=None, label=-1):
    if nodes is None:
        nodes = np.zeros((n, 4), dtype=np.int64)
    return SuperRayGraph(nodes, edges, weights, None, label)


def heavy_edge_matching(g: SuperRayGraph) -> np.ndarray:
    """Map each node to its coarse node id.

    Nodes are visited in index order; an unmatched node pairs with the
    unmatched neighbour joined by the heaviest edge (lowest index on ties).
    """
    n = g.n_nodes
    adj = g.adjacency()
    indptr, indices, data = adj.indptr, adj.indices, adj.data
    match = np.full(n, -1, dtype=np.int64)
    coarse = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for u in range(n):
        if coarse[u] >= 0:
            continue
        best, best_w = -1, -np.inf
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if v != u and coarse[v] < 0 and (data[p] > best_w or (data[p] == best_w and v < best)):
                best, best_w = v, data[p]
        coarse[u] = nxt
        if best >= 0:
            coarse[best] = nxt
            match[u] = best
        nxt += 1
    return coarse


def contract(g: SuperRayGraph, coarse: np.ndarray) -> SuperRayGraph:
    """Merge nodes sharing a coarse id; parallel edge weights are summed."""
    nc = int(coarse.max()) + 1 if len(coarse) else 0
    e = g.edges
    return _make_graph(np.zeros((nc, 4), dtype=np.int64), coarse[e[:, 0]], coarse[e[:, 1]],
                       g.weights, label=g.label)


def fiedler_order(g: SuperRayGraph) -> np.ndarray:
    """Node order by Fiedler-vector value (index breaks ties).

    A disconnected graph has a degenerate Fiedler space, so its nodes are
    ordered by connected component (components in order of first node).
    """
    n = g.n_nodes
    adj = g.adjacency()
    ncomp, comp = connected_components(adj, directed=False)
    if ncomp > 1:
        first = np.full(ncomp, n)
        np.minimum.at(first, comp, np.arange(n))
        rank = np.argsort(np.argsort(first, kind="stable"), kind="stable")
        return np.lexsort((np.arange(n), rank[comp]))
    lap = sparse.diags(np.asarray(adj.sum(axis=1)).ravel()) - adj
    if n <= 1500:
        _, vec = scipy.linalg.eigh(lap.toarray(), subset_by_index=[1, 1])
        f = vec[:, 0]
    else:
        v0 = np.linspace(1.0, 2.0, n)
        vals, vecs = eigsh(lap.tocsc(), k=2, sigma=-1e-3, which="LM", v0=v0)
        f = vecs[:, np.argsort(vals)[1]]
    f = canonical_signs(f[:, None])[:, 0]
    return np.lexsort((np.arange(n), np.round(f, 12)))


def induced(g: SuperRayGraph, keep: np.ndarray) -> Tuple[SuperRayGraph, np.ndarray]:
    """Subgraph on node ids ``keep`` (renumbered in the given order)."""
    remap = np.full(g.n_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = g.edges
    m = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    sub = _make_graph(g.nodes[keep], remap[e[m, 0]], remap[e[m, 1]], g.weights[m], label=g.label)
    return sub, keep


def coarsen_or_partition(g: SuperRayGraph, max_nodes: int = DEFAULT_MAX_NODES, psnr_min: float = 40.0,
                         decisions: Optional[Iterable[int]] = None):
    """Reduce ``g`` into pieces of at most ``max_nodes`` nodes.

    An oversized graph is first coarsened by heavy-edge matching; the
    coarsening is kept when copying each merged node's mean value back to its
    pixels reconstructs the signal with PSNR >= ``psnr_min``. Otherwise the
    graph is split in two at the median of its Fiedler vector. Both branches
    recurse.

    The accept/reject choices are the only signal-dependent steps. They are
    returned as a list of 0/1 flags; a decoder without the signal passes them
    back through ``decisions`` to replay the identical structure.

    Returns ``(pieces, decisions)``.
    """
    if max_nodes < 2:
        raise DataError("max_nodes must be >= 2")
    replay = iter(decisions) if decisions is not None else None
    if replay is None and g.signal is None:
        raise DataError("coarsen_or_partition needs a signal or recorded decisions")
    made: List[int] = []
    pieces: List[Piece] = []
    signal = g.signal
    # stack of (work graph, groups of original node ids)
    stack = [(g, [np.array([i]) for i in range(g.n_nodes)])]
    while stack:
        w, groups = stack.pop()
        if w.n_nodes <= max_nodes:
            pieces.append(Piece(w, groups))
            continue
        coarse = heavy_edge_matching(w)
        nc = int(coarse.max()) + 1
        if nc < w.n_nodes:
            new_groups = [[] for _ in range(nc)]
            for i, c in enumerate(coarse):
                new_groups[c].append(groups[i])
            new_groups = [np.concatenate(parts) for parts in new_groups]
            if replay is not None:
                try:
                    accept = bool(next(replay))
                except StopIteration:
                    raise DataError("ran out of coarsening decisions") from None
            else:
                accept = _coarse_psnr(signal, new_groups) >= psnr_min
            made.append(int(accept))
            if accept:
                cg = contract(w, coarse)
                cg.signal = None
                stack.append((cg, new_groups))
                continue
        order = fiedler_order(w)
        half = w.n_nodes // 2
        # second half pushed first so the first half is processed first
        for part in (order[half:], order[:half]):
            part = np.sort(part)
            sub, keep = induced(w, part)
            stack.append((sub, [groups[i] for i in keep]))
    for p in pieces:
        p.graph.signal = None if signal is None else _group_means(signal, p.groups)[0]
    return pieces, made


def _group_means(signal: np.ndarray, groups: List[np.ndarray]):
    sizes = np.array([len(gr) for gr in groups])
    fine = np.concatenate(groups)
    idx = np.repeat(np.arange(len(groups)), sizes)
    return np.bincount(idx, signal[fine], len(groups)) / sizes, fine, idx


def _coarse_psnr(signal: np.ndarray, groups: List[np.ndarray]) -> float:
    means, fine, idx = _group_means(signal, groups)
    rec = means[idx]
    mse = float(np.mean((signal[fine] - rec) ** 2))
    if mse == 0:
        return np.inf
    return 10.0 * np.log10(PEAK * PEAK / mse)


# -- sub-global graphs -------------------------------------------------------------

@dataclass(eq=False)
class SubGlobalGraph:
    block_id: int
    block: Block
    graphs: List[SuperRayGraph] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return sum(g.n_nodes for g in self.graphs)


def build_subglobal_graphs(lf: Optional[LightFieldGrid], plan: ProjectionPlan,
                           labels: Mapping[ViewIndex, LabelMap],
                           tables: Mapping[ViewIndex, SuperRayTable],
                           require_multiview: bool = True) -> List[SubGlobalGraph]:
    """One sub-global graph per block, holding the super-rays of that block's reference."""
    if require_multiview and plan.scheme != MULTIVIEW:
        raise DataError(f"sub-global graphs need a multi-view plan, got {plan.scheme!r}")
    out = []
    for b, block in enumerate(plan.blocks):
        table = tables[block.reference]
        index = BlockIndex(block.views(), labels, table.n_labels)
        graphs = [index.graph(lab, float(table.median[lab]), lf) for lab in range(table.n_labels)]
        out.append(SubGlobalGraph(b, block, graphs))
    return out
