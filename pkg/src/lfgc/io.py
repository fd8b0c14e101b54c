"""On-disk formats: PGM/PPM/PFM planes and the light-field directory layout.

A light field directory holds ``lf.json`` plus ``view_RR_CC.pgm`` files
(1-based), optional ``disp_RR_CC.pfm`` disparity maps and optional
``labels_RR_CC.pgm`` (16-bit) ground-truth label maps.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .errors import DataError
from .model import (DisparityMap, LabelMap, LightFieldGrid, SuperRayTable, ViewIndex,
                    luminance_of, validate_views)

MANIFEST = "lf.json"


def view_name(idx: ViewIndex, prefix: str = "view", ext: str = "pgm") -> str:
    return f"{prefix}_{idx.row:02d}_{idx.col:02d}.{ext}"


# -- Netpbm ------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_header(data: bytes, n_fields: int):
    pos = 0
    fields = []
    for _ in range(n_fields):
        m = _TOKEN.match(data, pos)
        if not m:
            raise DataError("truncated netpbm header")
        fields.append(m.group(1))
        pos = m.end()
    # exactly one whitespace byte separates header and raster
    return fields, pos + 1


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6). 16-bit samples are big-endian."""
    data = Path(path).read_bytes()
    fields, pos = _read_header(data, 4)
    magic = fields[0]
    if magic not in (b"P5", b"P6"):
        raise DataError(f"{path}: unsupported netpbm type {magic!r}")
    w, h, maxval = (int(x) for x in fields[1:])
    channels = 3 if magic == b"P6" else 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    n = w * h * channels
    raster = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    shape = (h, w, 3) if channels == 3 else (h, w)
    out = raster.reshape(shape)
    return out.astype(np.uint16 if maxval > 255 else np.uint8)


def write_pgm(path, plane: np.ndarray, maxval: Optional[int] = None):
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise DataError("PGM plane must be 2-D")
    if maxval is None:
        maxval = 255 if plane.dtype == np.uint8 else 65535
    h, w = plane.shape
    if maxval > 255:
        raster = plane.astype(">u2").tobytes()
    else:
        raster = plane.astype(np.uint8).tobytes()
    Path(path).write_bytes(b"P5\n%d %d\n%d\n" % (w, h, maxval) + raster)


def write_ppm(path, rgb: np.ndarray):
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes())


def read_luma(path) -> np.ndarray:
    """Read a view; PPM colour sources are converted to BT.709 luma."""
    arr = read_pnm(path)
    if arr.ndim == 3:
        return luminance_of(arr)
    return arr


# -- PFM -----------------------------------------------------------------------

def write_pfm(path, values: np.ndarray):
    """Single-channel little-endian PFM (rows stored bottom to top)."""
    values = np.asarray(values, dtype="<f4")
    h, w = values.shape
    header = b"Pf\n%d %d\n-1.0\n" % (w, h)
    Path(path).write_bytes(header + np.flipud(values).tobytes())


def read_pfm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields, pos = _read_header(data, 4)
    if fields[0] != b"Pf":
        raise DataError(f"{path}: only single-channel PFM is supported")
    w, h = int(fields[1]), int(fields[2])
    scale = float(fields[3])
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return np.flipud(arr).astype(np.float64)


# -- label maps and tables --------------------------------------------------------

def write_labels(path, lm: LabelMap):
    """16-bit PGM plus a ``.json`` sidecar recording ``n_labels``."""
    path = Path(path)
    if lm.has_holes:
        raise DataError("cannot serialize a label map containing holes")
    if lm.n_labels > 65536:
        raise DataError("label maps are limited to 65536 labels")
    write_pgm(path, lm.labels.astype(np.uint16), maxval=65535)
    path.with_suffix(".json").write_text(json.dumps({"n_labels": lm.n_labels}))


def read_labels(path) -> LabelMap:
    path = Path(path)
    arr = read_pnm(path).astype(np.int32)
    side = path.with_suffix(".json")
    n = json.loads(side.read_text())["n_labels"] if side.exists() else int(arr.max()) + 1
    return LabelMap(arr, n)


def write_table(path, table: SuperRayTable):
    Path(path).write_text(json.dumps(table.to_json()))


def read_table(path) -> SuperRayTable:
    return SuperRayTable.from_json(json.loads(Path(path).read_text()))


# -- light-field directories -----------------------------------------------------

def save_lightfield(outdir, lf: LightFieldGrid, disparities: Optional[Dict[ViewIndex, DisparityMap]] = None,
                    labels: Optional[Dict[ViewIndex, LabelMap]] = None, extra: Optional[dict] = None):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "n_rows": lf.n_rows,
        "n_cols": lf.n_cols,
        "height": lf.height,
        "width": lf.width,
        "bit_depth": 8,
    }
    if extra:
        manifest.update(extra)
    views = lf.views
    if lf.normalized:
        views = np.clip(np.floor(views * 255.0 + 0.5), 0, 255)
    views = views.astype(np.uint8)
    for idx in lf.indices():
        write_pgm(outdir / view_name(idx), views[idx.row - 1, idx.col - 1])
    for idx, d in (disparities or {}).items():
        write_pfm(outdir / view_name(idx, "disp", "pfm"), d.values)
    for idx, lm in (labels or {}).items():
        write_labels(outdir / view_name(idx, "labels"), lm)
    (outdir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(lfdir) -> dict:
    path = Path(lfdir) / MANIFEST
    if not path.exists():
        raise DataError(f"{lfdir}: no {MANIFEST} manifest")
    return json.loads(path.read_text())


def load_lightfield(lfdir) -> LightFieldGrid:
    """Load and validate a light-field directory.

    Views may be ``view_RR_CC.pgm`` or ``view_RR_CC.ppm`` (converted to luma).
    """
    lfdir = Path(lfdir)
    m = read_manifest(lfdir)
    n_rows, n_cols = int(m["n_rows"]), int(m["n_cols"])
    if int(m.get("bit_depth", 8)) != 8:
        raise DataError("only 8-bit light fields are supported")
    views = {}
    for r in range(1, n_rows + 1):
        for c in range(1, n_cols + 1):
            idx = ViewIndex(r, c)
            for ext in ("pgm", "ppm"):
                p = lfdir / view_name(idx, ext=ext)
                if p.exists():
                    views[idx] = read_luma(p)
                    break
    problems = validate_views(views, n_rows, n_cols)
    h, w = int(m["height"]), int(m["width"])
    for idx, plane in views.items():
        if plane.shape != (h, w):
            problems.append(f"view {idx} shape {plane.shape} disagrees with manifest {(h, w)}")
    if problems:
        raise DataError("; ".join(sorted(set(problems))))
    return LightFieldGrid.from_views(views, n_rows, n_cols)


def load_disparity(lfdir, idx: ViewIndex) -> DisparityMap:
    p = Path(lfdir) / view_name(idx, "disp", "pfm")
    if not p.exists():
        raise DataError(f"missing disparity map for view {idx} ({p.name})")
    return DisparityMap(read_pfm(p))


def load_labels(lfdir, idx: ViewIndex) -> LabelMap:
    p = Path(lfdir) / view_name(idx, "labels")
    if not p.exists():
        raise DataError(f"missing label map for view {idx} ({p.name})")
    return read_labels(p)


def write_view_grid(outdir, lf: LightFieldGrid):
    """Write only views + manifest (used for decoded output)."""
    save_lightfield(outdir, lf)
