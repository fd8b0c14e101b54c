import numpy as np
import pytest

from lfgc import io
from lfgc.errors import DataError
from lfgc.model import DisparityMap, LabelMap, LightFieldGrid, ViewIndex
from lfgc.segmentation import median_disparity_per_label


def test_pgm_roundtrip_8_and_16_bit(tmp_path):
    a = np.arange(12, dtype=np.uint8).reshape(3, 4)
    io.write_pgm(tmp_path / "a.pgm", a)
    assert np.array_equal(io.read_pnm(tmp_path / "a.pgm"), a)
    b = np.array([[0, 300], [65535, 7]], dtype=np.uint16)
    io.write_pgm(tmp_path / "b.pgm", b)
    assert np.array_equal(io.read_pnm(tmp_path / "b.pgm"), b)


def test_ppm_to_luma(tmp_path):
    rgb = np.zeros((2, 2, 3), np.uint8)
    rgb[..., 1] = 255
    io.write_ppm(tmp_path / "c.ppm", rgb)
    assert np.all(io.read_luma(tmp_path / "c.ppm") == 182)


def test_pfm_roundtrip(tmp_path):
    d = np.array([[0.25, -1.5, 3.0], [2.0, 0.0, -0.125]])
    io.write_pfm(tmp_path / "d.pfm", d)
    assert np.array_equal(io.read_pfm(tmp_path / "d.pfm"), d)


def test_labels_and_table_roundtrip(tmp_path):
    lm = LabelMap(np.array([[0, 1], [2, 2]]), 3)
    io.write_labels(tmp_path / "l.pgm", lm)
    back = io.read_labels(tmp_path / "l.pgm")
    assert back.n_labels == 3 and np.array_equal(back.labels, lm.labels)
    t = median_disparity_per_label(lm, DisparityMap(np.array([[0.5, 1.0], [2.0, 3.0]])))
    io.write_table(tmp_path / "t.json", t)
    assert np.array_equal(io.read_table(tmp_path / "t.json").median, t.median)


def test_lightfield_directory(tmp_path):
    views = np.random.default_rng(0).integers(0, 256, (2, 3, 4, 5)).astype(np.uint8)
    lf = LightFieldGrid(views)
    d = {ViewIndex(1, 1): DisparityMap(np.ones((4, 5)))}
    io.save_lightfield(tmp_path, lf, d)
    back = io.load_lightfield(tmp_path)
    assert np.array_equal(back.views, views)
    assert np.array_equal(io.load_disparity(tmp_path, ViewIndex(1, 1)).values, np.ones((4, 5)))
    with pytest.raises(DataError, match=r"missing disparity map for view \(2,2\)"):
        io.load_disparity(tmp_path, ViewIndex(2, 2))


def test_missing_view_is_reported(tmp_path):
    lf = LightFieldGrid(np.zeros((2, 2, 3, 3), np.uint8))
    io.save_lightfield(tmp_path, lf)
    (tmp_path / io.view_name(ViewIndex(2, 1))).unlink()
    with pytest.raises(DataError, match=r"missing view \(2,1\)"):
        io.load_lightfield(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DataError):
        io.load_lightfield(tmp_path)
