"""Reference side information: the segmentation map and per-label disparities.

Layout: ``u16 height, u16 width, u32 n_labels`` followed by one arithmetic
coded payload. Each pixel (raster order) is coded as "same as left", "same
as above" or "other"; an "other" pixel then codes its label, with 0
reserved for the next never-seen label. Median disparities follow as
zigzag Exp-Golomb multiples of 1/64 pixel.
"""

from __future__ import annotations

import struct
from typing import Tuple

import numpy as np

from ..entropy import ContextSet, Decoder, Encoder
from ..errors import DataError, MalformedStreamError
from ..model import LabelMap, SuperRayTable
from ..synth import round_half_up

DISPARITY_SCALE = 64
_HEAD = struct.Struct("<HHI")


def quantize_disparity(d) -> np.ndarray:
    return round_half_up(np.asarray(d, dtype=np.float64) * DISPARITY_SCALE)


def dequantize_table(q: np.ndarray, counts: np.ndarray) -> SuperRayTable:
    d = np.asarray(q, dtype=np.float64) / DISPARITY_SCALE
    return SuperRayTable(d, d, counts)


def encode_sideinfo(labels: LabelMap, table: SuperRayTable) -> bytes:
    lab = labels.labels
    if labels.has_holes:
        raise DataError("side info label map contains holes")
    if table.n_labels != labels.n_labels:
        raise DataError(f"table has {table.n_labels} labels, map has {labels.n_labels}")
    h, w = lab.shape
    if h > 0xFFFF or w > 0xFFFF:
        raise DataError("view too large for side info header")
    enc = Encoder()
    ctx_left = [ContextSet(1), ContextSet(1)]  # split on whether left == up
    ctx_up = ContextSet(1)
    ctx_label = ContextSet()
    ctx_disp = ContextSet()
    next_new = 0
    rows = lab.tolist()
    prev = None
    for y in range(h):
        row = rows[y]
        for x in range(w):
            v = row[x]
            left = row[x - 1] if x else None
            up = prev[x] if prev is not None else None
            if left is not None:
                c = ctx_left[1 if left == up else 0]
                if v == left:
                    enc.encode_bit(c, 0, 1)
                    continue
                enc.encode_bit(c, 0, 0)
            if up is not None and up != left:
                if v == up:
                    enc.encode_bit(ctx_up, 0, 1)
                    continue
                enc.encode_bit(ctx_up, 0, 0)
            if v == next_new:
                enc.encode_uint(ctx_label, 0)
                next_new += 1
            else:
                enc.encode_uint(ctx_label, v + 1)
                next_new = max(next_new, v + 1)
        prev = row
    for q in quantize_disparity(table.median).tolist():
        enc.encode_int(ctx_disp, q)
    return _HEAD.pack(h, w, labels.n_labels) + enc.finish()


def decode_sideinfo(data: bytes, base_offset: int = 0) -> Tuple[LabelMap, SuperRayTable]:
    if len(data) < _HEAD.size:
        raise MalformedStreamError(base_offset + len(data), "side info header truncated")
    h, w, n_labels = _HEAD.unpack_from(data, 0)
    dec = Decoder(data[_HEAD.size:], base_offset + _HEAD.size)
    ctx_left = [ContextSet(1), ContextSet(1)]
    ctx_up = ContextSet(1)
    ctx_label = ContextSet()
    ctx_disp = ContextSet()
    next_new = 0
    rows = []
    prev = None
    for y in range(h):
        row = [0] * w
        for x in range(w):
            left = row[x - 1] if x else None
            up = prev[x] if prev is not None else None
            if left is not None and dec.decode_bit(ctx_left[1 if left == up else 0], 0):
                row[x] = left
                continue
            if up is not None and up != left and dec.decode_bit(ctx_up, 0):
                row[x] = up
                continue
            code = dec.decode_uint(ctx_label)
            if code == 0:
                v = next_new
                next_new += 1
            else:
                v = code - 1
                next_new = max(next_new, v + 1)
            if v >= n_labels:
                raise MalformedStreamError(base_offset + _HEAD.size + dec.pos, f"label {v} >= {n_labels}")
            row[x] = v
        rows.append(row)
        prev = row
    q = np.array([dec.decode_int(ctx_disp) for _ in range(n_labels)], dtype=np.int64)
    lab = np.array(rows, dtype=np.int32).reshape(h, w)
    counts = np.bincount(lab.ravel(), minlength=n_labels)
    return LabelMap(lab, n_labels), dequantize_table(q, counts)
