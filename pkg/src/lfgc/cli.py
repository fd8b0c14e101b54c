"""``lfgc`` command line.

Exit codes: 0 success, 1 usage error, 2 data error (bad input, malformed
stream), 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

from . import io
from .codec import (DEFAULT_PSNR_MIN, Bitstream, CodecReport, EncoderParams, QuantConfig, auto_spacing,
                    bitrate_report, decode_lightfield, encode_lightfield)
from .errors import DataError, InvariantError, LfgcError
from .graph import DEFAULT_MAX_NODES
from .model import LightFieldGrid, ViewIndex
from .projection import SCHEMES, make_plan, quality_matrix, select_spacing_from_matrix
from .quality import RdPoint, emit_rd_csv, per_view_psnr, psnr_y, read_matrix_csv, write_matrix_csv
from .segmentation import SlicParams, median_disparity_per_label, slic_segment
from .synth import SceneSpec, degrade, perturb_disparity, render_lf

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3

DEFAULTS = {
    "scheme": "multiview",
    "kh": None,
    "kv": None,
    "auto_refs": False,
    "qp_first": 4,
    "qp_rest": 10,
    "max_nodes": DEFAULT_MAX_NODES,
    "psnr_min": DEFAULT_PSNR_MIN,
    "workers": 1,
    "no_quant": False,
    "seed": 0,
    "n_segments": 2000,
    "compactness": 30.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser, coding: bool = False, scheme: bool = False):
    # defaults are None so config-file values can be told apart from flags
    p.add_argument("--config", help="JSON file with option defaults (flags take precedence)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-segments", type=int, dest="n_segments")
    p.add_argument("--compactness", type=float)
    if scheme or coding:
        p.add_argument("--scheme", choices=SCHEMES)
        p.add_argument("--kh", type=int, help="horizontal reference spacing (multiview)")
        p.add_argument("--kv", type=int, help="vertical reference spacing (multiview)")
        p.add_argument("--auto-refs", action="store_true", default=None, dest="auto_refs",
                       help="pick spacing from the top-left quality matrix")
    if coding:
        p.add_argument("--qp-first", type=int, dest="qp_first")
        p.add_argument("--qp-rest", type=int, dest="qp_rest")
        p.add_argument("--max-nodes", type=int, dest="max_nodes")
        p.add_argument("--psnr-min", type=float, dest="psnr_min")
        p.add_argument("--workers", type=int)
        p.add_argument("--no-quant", action="store_true", default=None, dest="no_quant",
                       help="lossless mode: raw float coefficients")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lfgc", description="Super-ray graph transform light-field codec")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="render a synthetic light field from a scene JSON")
    p.add_argument("spec")
    p.add_argument("outdir")
    _add_common(p)

    p = sub.add_parser("segment", help="SLIC-segment views and store labels (+ disparity tables)")
    p.add_argument("lfdir")
    p.add_argument("outdir")
    p.add_argument("--views", default="all", help="'all' or a list like '1,1;5,5'")
    _add_common(p)

    p = sub.add_parser("quality-matrix", help="projection SSIM of every view under a plan")
    p.add_argument("lfdir")
    p.add_argument("out_csv")
    p.add_argument("--labels", choices=("slic", "stored"), default="slic",
                   help="ground truth: SLIC of every view, or stored label maps")
    _add_common(p, scheme=True)

    p = sub.add_parser("optimize-refs", help="reference spacing from a top-left quality matrix CSV")
    p.add_argument("matrix_csv")
    p.add_argument("--json", dest="json_out", help="also write the result as JSON")

    p = sub.add_parser("encode", help="encode a light-field directory")
    p.add_argument("lfdir")
    p.add_argument("out")
    _add_common(p, coding=True)

    p = sub.add_parser("decode", help="decode a .lfgc file into a light-field directory")
    p.add_argument("stream")
    p.add_argument("outdir")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("eval", help="PSNR-Y of a reconstruction against the original")
    p.add_argument("orig")
    p.add_argument("recon")
    p.add_argument("--stream", help="report bpp for this .lfgc file too")
    p.add_argument("--per-view", dest="per_view", help="write per-view PSNR CSV")

    p = sub.add_parser("rd-sweep", help="encode/decode over a QP list and write RD CSV")
    p.add_argument("lfdir")
    p.add_argument("out_csv")
    p.add_argument("--qp-list", dest="qp_list", default="10,20,30,40",
                   help="comma-separated qp_rest values")
    _add_common(p, coding=True)
    return ap


def resolve(args: argparse.Namespace) -> Dict:
    """Merge flags over config file over defaults."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise DataError(f"config {path} must be a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    return cfg


def _fit_segments(cfg, lf: LightFieldGrid) -> SlicParams:
    n = min(int(cfg["n_segments"]), lf.height * lf.width)
    return SlicParams(n, float(cfg["compactness"]))


def _encoder_params(cfg, lf: LightFieldGrid) -> EncoderParams:
    return EncoderParams(
        scheme=cfg["scheme"], k_h=cfg["kh"], k_v=cfg["kv"], auto_refs=bool(cfg["auto_refs"]),
        slic=_fit_segments(cfg, lf),
        quant=QuantConfig(int(cfg["qp_first"]), int(cfg["qp_rest"]), bool(cfg["no_quant"])),
        max_nodes=int(cfg["max_nodes"]), psnr_min=float(cfg["psnr_min"]), workers=int(cfg["workers"]))


def _disparities(lfdir, lf: LightFieldGrid):
    out = {}
    for v in lf.indices():
        p = Path(lfdir) / io.view_name(v, "disp", "pfm")
        if p.exists():
            out[v] = io.load_disparity(lfdir, v)
    return out


def _parse_views(text: str) -> Optional[List[ViewIndex]]:
    if text == "all":
        return None
    try:
        return [ViewIndex.parse(t) for t in text.split(";") if t.strip()]
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad --views {text!r}") from exc


def _say(obj):
    print(json.dumps(obj, sort_keys=True))


# -- commands ------------------------------------------------------------------

def cmd_synth(args, cfg):
    try:
        raw = json.loads(Path(args.spec).read_text())
    except OSError as exc:
        raise DataError(f"cannot read {args.spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.spec}: not valid JSON ({exc})") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    spec = SceneSpec.from_json(raw)
    problems = spec.validate()
    if problems:
        raise DataError("invalid scene: " + "; ".join(problems))
    lf, disp, labels = render_lf(spec)
    deg = raw.get("degrade") or {}
    if deg:
        lf = degrade(lf, float(deg.get("vignette", 0.0)), deg.get("gamma"))
    for item in raw.get("perturb", []):
        v = ViewIndex.parse(item["view"])
        disp[v] = perturb_disparity(disp[v], float(item["sigma"]), int(item.get("seed", spec.seed)))
    io.save_lightfield(args.outdir, lf, disp, labels, extra={"scene": spec.to_json()})
    _say({"views": lf.n_views, "outdir": str(args.outdir)})


def cmd_segment(args, cfg):
    lf = io.load_lightfield(args.lfdir)
    views = _parse_views(args.views) or lf.indices()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    params = _fit_segments(cfg, lf)
    summary = {}
    for v in views:
        lm = slic_segment(lf.view(v), params)
        io.write_labels(out / io.view_name(v, "labels"), lm)
        dp = Path(args.lfdir) / io.view_name(v, "disp", "pfm")
        if dp.exists():
            io.write_table(out / io.view_name(v, "table", "json"), median_disparity_per_label(lm, io.load_disparity(args.lfdir, v)))
        summary[str(v)] = lm.n_labels
    _say({"labels": summary})


def _quality(args, cfg, lf: LightFieldGrid, scheme: str):
    params = _fit_segments(cfg, lf)
    if args.labels == "stored":
        gt = {v: io.load_labels(args.lfdir, v) for v in lf.indices()}
    else:
        gt = {v: slic_segment(lf.view(v), params) for v in lf.indices()}
    disp = _disparities(args.lfdir, lf)
    if scheme == "multiview":
        if cfg["auto_refs"] or cfg["kh"] is None or cfg["kv"] is None:
            if ViewIndex(1, 1) not in disp:
                raise DataError("missing disparity map for view (1,1)")
            k_h, k_v = auto_spacing(lf, disp[ViewIndex(1, 1)], params, labels=gt)
        else:
            k_h, k_v = cfg["kh"], cfg["kv"]
        plan = make_plan(scheme, lf.n_rows, lf.n_cols, k_h, k_v)
    else:
        plan = make_plan(scheme, lf.n_rows, lf.n_cols)
    tables = {}
    for r in plan.references:
        if r not in disp:
            raise DataError(f"missing disparity map for view {r}")
        tables[r] = median_disparity_per_label(gt[r], disp[r])
    return plan, quality_matrix(gt, plan, {r: gt[r] for r in plan.references}, tables)


def cmd_quality_matrix(args, cfg):
    lf = io.load_lightfield(args.lfdir)
    plan, q = _quality(args, cfg, lf, cfg["scheme"])
    write_matrix_csv(args.out_csv, q)
    _say({"scheme": plan.scheme, "references": [str(r) for r in plan.references],
          "mean_ssim": float(q.mean()), "min_ssim": float(q.min())})


def cmd_optimize_refs(args, cfg):
    q = read_matrix_csv(args.matrix_csv)
    k_h, k_v = select_spacing_from_matrix(q)
    print(f"k_h={k_h} k_v={k_v}")
    if args.json_out:
        Path(args.json_out).write_text(json.dumps({"k_h": k_h, "k_v": k_v}) + "\n")


def _encode(lfdir, cfg):
    lf = io.load_lightfield(lfdir)
    params = _encoder_params(cfg, lf)
    rep = CodecReport()
    stream = encode_lightfield(lf, _disparities(lfdir, lf), params, rep)
    return lf, stream, rep


def cmd_encode(args, cfg):
    lf, stream, rep = _encode(args.lfdir, cfg)
    data = stream.to_bytes()
    Path(args.out).write_bytes(data)
    br = bitrate_report(stream, lf)
    _say({"bytes": len(data), "bpp": br["bpp"], "sideinfo_bpp": br["sideinfo_bpp"], "blocks": br["n_blocks"],
          "references": [str(r) for r in rep.plan.references], "encode_s": round(rep.seconds, 3),
          "workers": cfg["workers"], "timings": {k: round(v, 3) for k, v in rep.timings.items()}})


def cmd_decode(args, cfg):
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    try:
        data = Path(args.stream).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {args.stream}: {exc}") from exc
    rep = CodecReport()
    lf = decode_lightfield(data, workers=args.workers, report=rep)
    io.write_view_grid(args.outdir, lf)
    _say({"views": lf.n_views, "decode_s": round(rep.seconds, 3), "workers": args.workers})


def cmd_eval(args, cfg):
    a = io.load_lightfield(args.orig)
    b = io.load_lightfield(args.recon)
    out = {"psnr_y": psnr_y(a, b)}
    if args.stream:
        br = bitrate_report(Bitstream.from_bytes(Path(args.stream).read_bytes()), a)
        out.update(bpp=br["bpp"], sideinfo_bpp=br["sideinfo_bpp"])
    if args.per_view:
        write_matrix_csv(args.per_view, per_view_psnr(a, b), decimals=2)
    print(json.dumps(out, sort_keys=True).replace("Infinity", '"inf"'))


def cmd_rd_sweep(args, cfg):
    try:
        qps = [int(t) for t in args.qp_list.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --qp-list {args.qp_list!r}") from exc
    if not qps:
        raise UsageError("--qp-list is empty")
    lf = io.load_lightfield(args.lfdir)
    disp = _disparities(args.lfdir, lf)
    points = []
    for qp in qps:
        c = dict(cfg, qp_rest=qp)
        params = _encoder_params(c, lf)
        t = time.perf_counter()
        stream = encode_lightfield(lf, disp, params)
        enc_s = time.perf_counter() - t
        t = time.perf_counter()
        rec = decode_lightfield(stream, workers=params.workers)
        dec_s = time.perf_counter() - t
        points.append(RdPoint(bitrate_report(stream, lf)["bpp"], psnr_y(lf, rec), params.scheme,
                              params.quant.qp_first, qp, enc_s, dec_s))
    emit_rd_csv(points, args.out_csv)
    _say({"points": len(points), "out": str(args.out_csv)})


COMMANDS = {
    "synth": cmd_synth,
    "segment": cmd_segment,
    "quality-matrix": cmd_quality_matrix,
    "optimize-refs": cmd_optimize_refs,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "eval": cmd_eval,
    "rd-sweep": cmd_rd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (DataError, LfgcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
