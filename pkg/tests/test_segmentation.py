import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfgc.errors import DataError
from lfgc.model import DisparityMap, LabelMap
from lfgc.segmentation import (SlicParams, enforce_connectivity, median_disparity_error, median_disparity_per_label,
                               relabel_sequential, slic_segment)


def test_two_halves_split_exactly():
    img = np.zeros((8, 8))
    img[:, 4:] = 255
    lm = slic_segment(img, SlicParams(2, 10))
    assert lm.n_labels == 2
    assert np.all(lm.labels[:, :4] == 0) and np.all(lm.labels[:, 4:] == 1)


def test_constant_image_gives_grid_cells():
    lm = slic_segment(np.full((20, 20), 7.0), SlicParams(4, 30))
    assert lm.n_labels == 4
    assert len(np.unique(lm.labels[:10, :10])) == 1


def test_deterministic_and_connected():
    img = np.random.default_rng(1).integers(0, 256, (48, 40)).astype(float)
    a = slic_segment(img, SlicParams(30, 20))
    b = slic_segment(img, SlicParams(30, 20))
    assert np.array_equal(a.labels, b.labels)
    assert a.is_contiguous()
    assert a.n_labels <= 30
    _assert_each_label_connected(a.labels)


def _assert_each_label_connected(lab):
    from scipy.ndimage import label as cc
    for k in np.unique(lab):
        _, n = cc(lab == k)
        assert n == 1


def test_labels_in_raster_order():
    img = np.random.default_rng(2).integers(0, 256, (30, 30)).astype(float)
    lab = slic_segment(img, SlicParams(9)).labels.ravel()
    _, first = np.unique(lab, return_index=True)
    assert np.all(np.diff(first) > 0)


def test_too_many_segments():
    with pytest.raises(DataError):
        slic_segment(np.zeros((3, 3)), SlicParams(10))
    with pytest.raises(DataError):
        SlicParams(0)


def test_enforce_connectivity_merges_fragments():
    lab = np.array([[0, 0, 1, 1],
                    [0, 1, 1, 1],
                    [0, 0, 1, 0]])
    out = enforce_connectivity(lab)
    assert out[2, 3] == 1


def test_relabel_sequential():
    lm = relabel_sequential(np.array([[5, 5, 2], [9, 2, 2]]))
    assert lm.labels.tolist() == [[0, 0, 1], [2, 1, 1]] and lm.n_labels == 3


def test_median_disparity_lower_median():
    lm = LabelMap(np.array([[0, 0, 0, 0], [1, 1, 1, 1]]), 2)
    d = DisparityMap(np.array([[4.0, 1.0, 3.0, 2.0], [0.5, 0.5, 0.5, 0.5]]))
    t = median_disparity_per_label(lm, d)
    assert t.median.tolist() == [2.0, 0.5]
    assert t.mean.tolist() == [2.5, 0.5]
    assert t.counts.tolist() == [4, 4]


def test_median_disparity_requires_matching_shapes():
    with pytest.raises(DataError):
        median_disparity_per_label(LabelMap(np.zeros((2, 2), int), 1), DisparityMap(np.zeros((2, 3))))


def test_disparity_error_examples():
    assert median_disparity_error([1, 1, 1], 5) == 0.0
    assert median_disparity_error([0, 2], 1) == pytest.approx(1.0)
    assert median_disparity_error([0, 2], 3) == pytest.approx(9.0)


@settings(max_examples=60)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=40), st.integers(1, 12))
def test_disparity_error_scales_quadratically(d, k):
    base = median_disparity_error(d, 1)
    assert median_disparity_error(d, k) == pytest.approx(k * k * base, rel=1e-9, abs=1e-9)
