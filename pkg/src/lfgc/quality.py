"""SSIM, pooled PSNR-Y and rate-distortion CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DataError

K1, K2 = 0.01, 0.03
WINDOW = 11
SIGMA = 1.5


def _gaussian_kernel(size=WINDOW, sigma=SIGMA):
    x = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-(x ** 2) / (2 * sigma ** 2))
    return k / k.sum()


_KERNEL = _gaussian_kernel()


def _blur(x):
    return correlate1d(correlate1d(x, _KERNEL, axis=0, mode="reflect"), _KERNEL, axis=1, mode="reflect")


def ssim_map(a: np.ndarray, b: np.ndarray, dynamic_range: float) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"ssim: shape mismatch {a.shape} vs {b.shape}")
    if not dynamic_range > 0:
        raise DataError("ssim: dynamic range must be > 0")
    c1 = (K1 * dynamic_range) ** 2
    c2 = (K2 * dynamic_range) ** 2
    mu_a, mu_b = _blur(a), _blur(b)
    # same operation order for both variances and the covariance so that
    # identical inputs give an exact 1.0
    var_a = _blur(a * a) - mu_a * mu_a
    var_b = _blur(b * b) - mu_b * mu_b
    cov = _blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    smap = num / den
    r = WINDOW // 2
    if smap.shape[0] > 2 * r and smap.shape[1] > 2 * r:
        smap = smap[r:-r, r:-r]
    return smap


def ssim(a: np.ndarray, b: np.ndarray, dynamic_range: float = 255.0) -> float:
    """Mean SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03.

    Local statistics use reflected borders; the mean is taken over the
    interior where the window fits entirely (whole image when smaller).
    """
    return float(ssim_map(a, b, dynamic_range).mean())


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 255.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError(f"psnr: shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def psnr_y(orig, recon) -> float:
    """PSNR of two 8-bit light fields with the MSE pooled over every pixel of every view."""
    a = orig.views if hasattr(orig, "views") else np.asarray(orig)
    b = recon.views if hasattr(recon, "views") else np.asarray(recon)
    if a.shape != b.shape:
        raise DataError(f"light field geometry mismatch: {a.shape} vs {b.shape}")
    return psnr(a, b)


def per_view_psnr(orig, recon) -> np.ndarray:
    a = orig.as_float() if hasattr(orig, "as_float") else np.asarray(orig, dtype=float)
    b = recon.as_float() if hasattr(recon, "as_float") else np.asarray(recon, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"light field geometry mismatch: {a.shape} vs {b.shape}")
    out = np.empty(a.shape[:2])
    for r in range(a.shape[0]):
        for c in range(a.shape[1]):
            out[r, c] = psnr(a[r, c], b[r, c])
    return out


@dataclass(frozen=True)
class RdPoint:
    bpp: float
    psnr_y: float
    scheme: str
    qp_first: int
    qp_rest: int
    enc_s: float = 0.0
    dec_s: float = 0.0

    def __post_init__(self):
        if not self.bpp > 0:
            raise DataError("RdPoint.bpp must be > 0")
        if math.isnan(self.psnr_y):
            raise DataError("RdPoint.psnr_y is NaN")


RD_HEADER = ["scheme", "qp_first", "qp_rest", "bpp", "psnr_y", "enc_s", "dec_s"]


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def emit_rd_csv(points: Iterable[RdPoint], path) -> Path:
    pts = sorted(points, key=lambda p: p.bpp)
    if not pts:
        raise DataError("emit_rd_csv needs at least one point")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RD_HEADER)
        for p in pts:
            w.writerow([p.scheme, p.qp_first, p.qp_rest, _fmt(p.bpp), _fmt(p.psnr_y),
                        _fmt(p.enc_s), _fmt(p.dec_s)])
    return path


def read_rd_csv(path) -> List[RdPoint]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RdPoint(float(r["bpp"]), float(r["psnr_y"]), r["scheme"], int(r["qp_first"]),
                    int(r["qp_rest"]), float(r["enc_s"]), float(r["dec_s"])) for r in rows]


def write_matrix_csv(path, matrix: np.ndarray, decimals: int = 3):
    """Row-major grid of values, fixed decimals (quality or per-view PSNR tables)."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(matrix):
            w.writerow(["inf" if math.isinf(v) else f"{v:.{decimals}f}" for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with Path(path).open(newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows or len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: not a rectangular matrix")
    return np.array(rows)
