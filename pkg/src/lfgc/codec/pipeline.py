"""Light-field encoder and decoder.

Encoding: segment each reference view, attach median disparities, code
that side information and decode it back so the encoder works from exactly
what the decoder will see. Labels are then propagated to every view along
the projection plan. Each super-ray of each block becomes a graph, which is
reduced to pieces of at most ``max_nodes`` nodes, transformed by its GFT,
quantised per coefficient group and arithmetic coded (one stream per
block).

Super-rays are independent, so both directions farm them out to a process
pool. Results are always reassembled in label order, which keeps the
bitstream independent of the worker count.
"""

from __future__ import annotations

import multiprocessing
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..entropy import ContextSet, Decoder, Encoder
from ..errors import DataError, MalformedStreamError
from ..graph import DEFAULT_MAX_NODES, BlockIndex, coarsen_or_partition, gft, igft, spectral_basis
from ..model import DisparityMap, LabelMap, LightFieldGrid, SuperRayTable, ViewIndex
from ..projection import TOPLEFT, MULTIVIEW, ProjectionPlan, make_plan, quality_matrix, run_plan
from ..projection.refselect import select_spacing_from_matrix
from ..projection.plans import Block
from ..segmentation import SlicParams, median_disparity_per_label, slic_segment
from .bitstream import Bitstream
from .quant import QuantConfig, dequantize_coefficients, quantize_coefficients
from .sideinfo import decode_sideinfo, encode_sideinfo

DEFAULT_PSNR_MIN = 20.0
_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class EncoderParams:
    scheme: str = MULTIVIEW
    k_h: Optional[int] = None
    k_v: Optional[int] = None
    auto_refs: bool = False
    slic: SlicParams = SlicParams()
    quant: QuantConfig = QuantConfig()
    max_nodes: int = DEFAULT_MAX_NODES
    psnr_min: float = DEFAULT_PSNR_MIN
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise DataError("workers must be >= 1")
        if self.max_nodes < 2:
            raise DataError("max_nodes must be >= 2")


@dataclass
class CodecReport:
    seconds: float = 0.0
    timings: Dict[str, float] = field(default_factory=dict)
    n_super_rays: int = 0
    n_nodes: int = 0
    n_pieces: int = 0
    plan: Optional[ProjectionPlan] = None


# -- plan and side information ---------------------------------------------------

def auto_spacing(lf: LightFieldGrid, disparity: DisparityMap, slic: SlicParams,
                 labels: Optional[Mapping[ViewIndex, LabelMap]] = None) -> Tuple[int, int]:
    """Reference spacing ``(k_h, k_v)`` from the top-left quality matrix.

    Ground truth is a SLIC segmentation of every view (or ``labels``); the
    projection starts from the SLIC labels of view (1,1) and ``disparity``.
    """
    if labels is None:
        labels = {v: slic_segment(lf.view(v), slic) for v in lf.indices()}
    ref = ViewIndex(1, 1)
    plan = make_plan(TOPLEFT, lf.n_rows, lf.n_cols)
    table = median_disparity_per_label(labels[ref], disparity)
    q = quality_matrix(labels, plan, {ref: labels[ref]}, {ref: table})
    return select_spacing_from_matrix(q)


def _plan_for(lf: LightFieldGrid, disparities: Mapping[ViewIndex, DisparityMap],
              params: EncoderParams) -> ProjectionPlan:
    if params.scheme != MULTIVIEW:
        return make_plan(params.scheme, lf.n_rows, lf.n_cols)
    if params.auto_refs:
        if ViewIndex(1, 1) not in disparities:
            raise DataError("missing disparity map for view (1,1) (needed by auto reference selection)")
        k_h, k_v = auto_spacing(lf, disparities[ViewIndex(1, 1)], params.slic)
    else:
        k_h, k_v = params.k_h, params.k_v
        if k_h is None or k_v is None:
            raise DataError("multi-view scheme needs k_h and k_v, or auto reference selection")
    return make_plan(MULTIVIEW, lf.n_rows, lf.n_cols, k_h, k_v)


def _block_plan(plan: ProjectionPlan):
    """Blocks of a plan; single-reference plans without blocks get one covering the grid."""
    if plan.blocks:
        return list(plan.blocks)
    return [Block(plan.references[0], (1, plan.n_rows), (1, plan.n_cols))]


# -- per super-ray work ------------------------------------------------------------
# Workers read shared read-only state installed before the pool forks.

_STATE: dict = {}


def _encode_superray(b: int, label: int):
    st = _STATE
    index: BlockIndex = st["index"][b]
    table: SuperRayTable = st["tables"][b]
    g = index.graph(label, float(table.median[label]), st["lf"])
    pieces, decisions = coarsen_or_partition(g, st["max_nodes"], st["psnr_min"])
    quant: QuantConfig = st["quant"]
    sizes, coefs = [], []
    for p in pieces:
        c = gft(spectral_basis(p.graph), p.graph.signal)
        sizes.append(len(c))
        coefs.append(c if quant.lossless else quantize_coefficients(c, quant))
    payload = np.concatenate(coefs) if coefs else np.zeros(0)
    return decisions, sizes, payload, g.n_nodes


def _encode_batch(task):
    b, labels = task
    return [_encode_superray(b, lab) for lab in labels]


def _decode_superray(b: int, label: int, decisions, sizes, payload):
    st = _STATE
    index: BlockIndex = st["index"][b]
    table: SuperRayTable = st["tables"][b]
    g = index.graph(label, float(table.median[label]))
    pieces, used = coarsen_or_partition(g, st["max_nodes"], decisions=decisions)
    if len(used) != len(decisions) or [len(p.groups) for p in pieces] != list(sizes):
        raise MalformedStreamError(st["offsets"][b], f"super-ray {label} structure does not match the stream")
    quant: QuantConfig = st["quant"]
    values = np.empty(g.n_nodes)
    pos = 0
    for p, n in zip(pieces, sizes):
        chunk = payload[pos:pos + n]
        pos += n
        c = chunk if quant.lossless else dequantize_coefficients(chunk, quant)
        p.expand(igft(spectral_basis(p.graph), c), values)
    return g.nodes, values


def _decode_batch(task):
    b, items = task
    return [_decode_superray(b, lab, *rest) for lab, *rest in items]


def _run(fn, tasks, workers: int):
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, tasks))


def _batches(n_blocks_labels: List[int], workers: int):
    """Split every block's labels into contiguous batches (several per worker)."""
    total = sum(n_blocks_labels)
    per = max(1, -(-total // (workers * 8))) if workers > 1 else max(1, total)
    tasks = []
    for b, n in enumerate(n_blocks_labels):
        for s in range(0, n, per):
            tasks.append((b, list(range(s, min(n, s + per)))))
    return tasks


# -- coefficient sections ----------------------------------------------------------

def _encode_block_section(task) -> bytes:
    results, lossless = task
    enc = Encoder()
    ctx_count, ctx_dec = ContextSet(), ContextSet(1)
    ctx_lv = [ContextSet(), ContextSet()]  # DC-heavy first coefficient vs the rest
    raw = []
    for decisions, sizes, payload, _ in results:
        enc.encode_uint(ctx_count, len(decisions))
        for d in decisions:
            enc.encode_bit(ctx_dec, 0, d)
        enc.encode_uint(ctx_count, len(sizes))
        for n in sizes:
            enc.encode_uint(ctx_count, n)
        if lossless:
            raw.append(np.asarray(payload, dtype="<f8").tobytes())
            continue
        pos = 0
        for n in sizes:
            for i, v in enumerate(payload[pos:pos + n].tolist()):
                enc.encode_int(ctx_lv[0 if i == 0 else 1], v)
            pos += n
    ac = enc.finish()
    return _U32.pack(len(ac)) + ac + b"".join(raw)


def _decode_block_section(task):
    data, n_labels, lossless, offset, max_len = task
    if len(data) < _U32.size:
        raise MalformedStreamError(offset + len(data), "block section truncated")
    (ac_len,) = _U32.unpack_from(data, 0)
    if _U32.size + ac_len > len(data):
        raise MalformedStreamError(offset + len(data), "block arithmetic payload truncated")
    dec = Decoder(data[_U32.size:_U32.size + ac_len], offset + _U32.size)
    raw_pos = _U32.size + ac_len
    ctx_count, ctx_dec = ContextSet(), ContextSet(1)
    ctx_lv = [ContextSet(), ContextSet()]
    out = []
    for label in range(n_labels):
        nd = dec.decode_uint(ctx_count)
        if nd > max_len:
            raise MalformedStreamError(offset, f"implausible decision count {nd}")
        decisions = [dec.decode_bit(ctx_dec, 0) for _ in range(nd)]
        npieces = dec.decode_uint(ctx_count)
        if npieces > max_len:
            raise MalformedStreamError(offset, f"implausible piece count {npieces}")
        sizes = [dec.decode_uint(ctx_count) for _ in range(npieces)]
        total = sum(sizes)
        if total > max_len:
            raise MalformedStreamError(offset, f"implausible coefficient count {total}")
        if lossless:
            end = raw_pos + 8 * total
            if end > len(data):
                raise MalformedStreamError(offset + len(data), "raw coefficients truncated")
            payload = np.frombuffer(data[raw_pos:end], dtype="<f8").astype(np.float64)
            raw_pos = end
        else:
            vals = []
            for n in sizes:
                for i in range(n):
                    vals.append(dec.decode_int(ctx_lv[0 if i == 0 else 1]))
            payload = np.array(vals, dtype=np.int64)
        out.append((label, decisions, sizes, payload))
    if lossless and raw_pos != len(data):
        raise MalformedStreamError(offset + raw_pos, "trailing bytes in block section")
    return out


# -- public API --------------------------------------------------------------------

def encode_lightfield(lf: LightFieldGrid, disparities: Mapping[ViewIndex, DisparityMap],
                      params: EncoderParams = EncoderParams(), report: Optional[CodecReport] = None) -> Bitstream:
    """Encode the luminance of ``lf``.

    ``disparities`` must hold a map for every reference view of the plan
    (view (1,1) as well when ``auto_refs`` is set). In lossless mode the
    coefficients are stored as raw doubles and only lossless coarsening is
    allowed.
    """
    if lf.normalized or lf.bit_depth != 8:
        raise DataError("encoder expects 8-bit luminance views")
    t0 = time.perf_counter()
    rep = report if report is not None else CodecReport()
    quant = params.quant
    psnr_min = float("inf") if quant.lossless else params.psnr_min
    plan = _plan_for(lf, disparities, params)
    rep.plan = plan
    rep.timings["plan"] = time.perf_counter() - t0

    t = time.perf_counter()
    side, ref_labels, ref_tables = [], {}, {}
    for r in plan.references:
        if r not in disparities:
            raise DataError(f"missing disparity map for view {r}")
        lm = slic_segment(lf.view(r), params.slic)
        table = median_disparity_per_label(lm, disparities[r])
        chunk = encode_sideinfo(lm, table)
        side.append(chunk)
        ref_labels[r], ref_tables[r] = decode_sideinfo(chunk)
    rep.timings["sideinfo"] = time.perf_counter() - t

    t = time.perf_counter()
    labels = run_plan(plan, ref_labels, ref_tables)
    blocks = _block_plan(plan)
    tables = [ref_tables[b.reference] for b in blocks]
    rep.timings["projection"] = time.perf_counter() - t

    t = time.perf_counter()
    _STATE.clear()
    _STATE.update(lf=lf, tables=tables, max_nodes=params.max_nodes, psnr_min=psnr_min, quant=quant,
                  index=[BlockIndex(b.views(), labels, tables[i].n_labels) for i, b in enumerate(blocks)])
    try:
        tasks = _batches([tb.n_labels for tb in tables], params.workers)
        flat = _run(_encode_batch, tasks, params.workers)
    finally:
        _STATE.clear()
    per_block: List[list] = [[] for _ in blocks]
    for (b, _), res in zip(tasks, flat):
        per_block[b].extend(res)
    rep.timings["transform"] = time.perf_counter() - t

    t = time.perf_counter()
    sections = _run(_encode_block_section, [(res, quant.lossless) for res in per_block], params.workers)
    rep.timings["entropy"] = time.perf_counter() - t

    rep.n_super_rays = sum(len(r) for r in per_block)
    rep.n_nodes = sum(x[3] for r in per_block for x in r)
    rep.n_pieces = sum(len(x[1]) for r in per_block for x in r)
    meta = {
        "plan": plan.to_json(),
        "coding": {
            "qp_first": quant.qp_first,
            "qp_rest": quant.qp_rest,
            "lossless": quant.lossless,
            "max_nodes": params.max_nodes,
            "psnr_min": None if quant.lossless else params.psnr_min,
            "slic": asdict(params.slic),
        },
    }
    stream = Bitstream(lf.n_rows, lf.n_cols, lf.height, lf.width, plan.scheme, meta, side, sections)
    rep.seconds = time.perf_counter() - t0
    return stream


def decode_lightfield(stream, workers: int = 1, report: Optional[CodecReport] = None) -> LightFieldGrid:
    """Rebuild the 8-bit luminance grid from a :class:`Bitstream` or its bytes."""
    t0 = time.perf_counter()
    rep = report if report is not None else CodecReport()
    if isinstance(stream, (bytes, bytearray, memoryview)):
        stream = Bitstream.from_bytes(bytes(stream))
    if workers < 1:
        raise DataError("workers must be >= 1")
    try:
        plan = ProjectionPlan.from_json(stream.meta["plan"])
        coding = stream.meta["coding"]
        quant = QuantConfig(int(coding["qp_first"]), int(coding["qp_rest"]), bool(coding["lossless"]))
        max_nodes = int(coding["max_nodes"])
    except (KeyError, TypeError, ValueError, DataError) as exc:
        raise MalformedStreamError(0, f"bad header: {exc}") from None
    if (plan.n_rows, plan.n_cols) != (stream.n_rows, stream.n_cols) or plan.scheme != stream.scheme:
        raise MalformedStreamError(0, "plan does not match the fixed header")
    rep.plan = plan
    offsets = stream.chunk_offsets()

    t = time.perf_counter()
    ref_labels, ref_tables = {}, {}
    for r, chunk, off in zip(plan.references, stream.sideinfo, offsets["sideinfo"]):
        lm, table = decode_sideinfo(chunk, off)
        if lm.shape != (stream.height, stream.width):
            raise MalformedStreamError(off, f"side info for {r} has size {lm.shape}")
        ref_labels[r], ref_tables[r] = lm, table
    labels = run_plan(plan, ref_labels, ref_tables)
    blocks = _block_plan(plan)
    tables = [ref_tables[b.reference] for b in blocks]
    rep.timings["sideinfo"] = time.perf_counter() - t

    t = time.perf_counter()
    max_len = stream.n_rows * stream.n_cols * stream.height * stream.width
    sec_tasks = [(stream.blocks[i], tables[i].n_labels, quant.lossless, offsets["blocks"][i], max_len)
                 for i in range(len(blocks))]
    parsed = _run(_decode_block_section, sec_tasks, workers)
    rep.timings["entropy"] = time.perf_counter() - t

    t = time.perf_counter()
    _STATE.clear()
    _STATE.update(tables=tables, max_nodes=max_nodes, quant=quant, offsets=offsets["blocks"],
                  index=[BlockIndex(b.views(), labels, tables[i].n_labels) for i, b in enumerate(blocks)])
    try:
        per = max(1, -(-sum(len(p) for p in parsed) // (workers * 8))) if workers > 1 else None
        tasks = []
        for b, items in enumerate(parsed):
            step = per or max(1, len(items))
            for s in range(0, len(items), step):
                tasks.append((b, [(lab, d, sz, pl) for lab, d, sz, pl in items[s:s + step]]))
        flat = _run(_decode_batch, tasks, workers)
    finally:
        _STATE.clear()
    out = np.zeros((stream.n_rows, stream.n_cols, stream.height, stream.width))
    for res in flat:
        for nodes, values in res:
            out[nodes[:, 0] - 1, nodes[:, 1] - 1, nodes[:, 2], nodes[:, 3]] = values
    rep.timings["transform"] = time.perf_counter() - t
    rep.n_super_rays = sum(len(p) for p in parsed)
    rep.seconds = time.perf_counter() - t0
    return LightFieldGrid(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def bitrate_report(stream, lf=None, n_views: Optional[int] = None) -> dict:
    """Bits-per-pixel breakdown of a stream.

    The pixel count is ``n_views * height * width``; ``n_views`` defaults to
    that of ``lf`` and then to the stream's own grid.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = Bitstream.from_bytes(bytes(stream))
    if n_views is None:
        n_views = lf.n_views if lf is not None else stream.n_rows * stream.n_cols
    h = lf.height if lf is not None else stream.height
    w = lf.width if lf is not None else stream.width
    pixels = n_views * h * w
    sizes = stream.section_sizes()
    total = sizes["header"] + sum(sizes["sideinfo"]) + sum(sizes["blocks"])
    bpp = lambda nbytes: 8.0 * nbytes / pixels
    return {
        "bytes": total,
        "bpp": bpp(total),
        "header_bytes": sizes["header"],
        "sideinfo_bytes": sum(sizes["sideinfo"]),
        "coefficient_bytes": sum(sizes["blocks"]),
        "header_bpp": bpp(sizes["header"]),
        "sideinfo_bpp": bpp(sum(sizes["sideinfo"])),
        "coefficient_bpp": bpp(sum(sizes["blocks"])),
        "sideinfo_per_reference": sizes["sideinfo"],
        "per_block": sizes["blocks"],
        "n_blocks": len(sizes["blocks"]),
    }
