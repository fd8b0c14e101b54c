import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfgc.errors import DataError
from lfgc.model import LightFieldGrid
from lfgc.quality import (RdPoint, emit_rd_csv, per_view_psnr, psnr, psnr_y, read_matrix_csv, read_rd_csv, ssim,
                          write_matrix_csv)


def test_ssim_identity():
    x = np.random.default_rng(0).integers(0, 256, (32, 32)).astype(float)
    assert ssim(x, x) == 1.0


def test_ssim_constant_images_closed_form():
    a, b = np.full((20, 20), 100.0), np.full((20, 20), 120.0)
    c1 = (0.01 * 255) ** 2
    expected = (2 * 100 * 120 + c1) / (100 ** 2 + 120 ** 2 + c1)
    assert ssim(a, b) == pytest.approx(expected, rel=1e-12)


def test_ssim_dimension_mismatch():
    with pytest.raises(DataError):
        ssim(np.zeros((4, 4)), np.zeros((4, 5)))
    with pytest.raises(DataError):
        ssim(np.zeros((4, 4)), np.zeros((4, 4)), dynamic_range=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(8, 40))
def test_ssim_symmetric_and_bounded(seed, n):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0, 255, (n, n)), rng.uniform(0, 255, (n, n))
    s = ssim(a, b)
    assert s == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 < s <= 1.0


def test_ssim_drops_with_noise():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 255, (40, 40))
    assert ssim(x, x + rng.normal(0, 5, x.shape)) < 1.0


def _lf(v):
    return LightFieldGrid(np.asarray(v, np.uint8))


def test_psnr_examples():
    a = np.full((2, 2, 8, 8), 100, np.uint8)
    assert psnr_y(_lf(a), _lf(a)) == math.inf
    assert psnr_y(_lf(a), _lf(a + 1)) == pytest.approx(10 * math.log10(255 ** 2))
    assert psnr_y(_lf(np.zeros_like(a)), _lf(np.full_like(a, 255))) == 0.0
    with pytest.raises(DataError):
        psnr_y(_lf(a), _lf(a[:1]))


def test_psnr_pools_mse_over_views():
    a = np.zeros((1, 2, 4, 4), np.uint8)
    b = a.copy()
    b[0, 0] = 2  # one view off by 2, the other exact: pooled MSE is 2
    assert psnr_y(_lf(a), _lf(b)) == pytest.approx(10 * math.log10(255 ** 2 / 2))
    pv = per_view_psnr(_lf(a), _lf(b))
    assert pv.shape == (1, 2) and math.isinf(pv[0, 1])


def test_psnr_decreases_with_noise():
    rng = np.random.default_rng(5)
    x = rng.uniform(50, 200, (64, 64))
    values = [psnr(x, x + np.random.default_rng(7).normal(0, s, x.shape)) for s in (1, 2, 4, 8, 16)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_rd_csv(tmp_path):
    pts = [RdPoint(0.5, 40.0, "multiview", 4, 20, 1.0, 0.5), RdPoint(0.25, math.inf, "topleft", 4, 10)]
    p = emit_rd_csv(pts, tmp_path / "rd.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "scheme,qp_first,qp_rest,bpp,psnr_y,enc_s,dec_s"
    assert lines[1].startswith("topleft,4,10,0.250000,inf")
    back = read_rd_csv(p)
    assert back[1].bpp == pytest.approx(0.5, abs=1e-6) and back[1].psnr_y == pytest.approx(40.0, abs=1e-6)


def test_single_point_is_two_lines(tmp_path):
    p = emit_rd_csv([RdPoint(1.0, 30.0, "center", 4, 10)], tmp_path / "one.csv")
    assert len(p.read_text().splitlines()) == 2


def test_rd_point_validation(tmp_path):
    with pytest.raises(DataError):
        RdPoint(0.0, 30.0, "center", 4, 10)
    with pytest.raises(DataError):
        emit_rd_csv([], tmp_path / "x.csv")


def test_matrix_csv(tmp_path):
    m = np.array([[1.0, 0.95], [0.9, 0.8751]])
    write_matrix_csv(tmp_path / "m.csv", m)
    assert (tmp_path / "m.csv").read_text().splitlines()[1] == "0.900,0.875"
    assert np.allclose(read_matrix_csv(tmp_path / "m.csv"), np.round(m, 3))
