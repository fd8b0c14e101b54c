import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfgc.codec import decode_sideinfo, encode_sideinfo
from lfgc.errors import DataError, MalformedStreamError
from lfgc.model import LabelMap, SuperRayTable
from lfgc.segmentation import SlicParams, slic_segment


def _table(d, counts):
    d = np.asarray(d, float)
    return SuperRayTable(d, d, np.asarray(counts))


def test_constant_map():
    lm = LabelMap(np.zeros((64, 64), int), 1)
    data = encode_sideinfo(lm, _table([0.5], [4096]))
    assert len(data) < 40
    back, t = decode_sideinfo(data)
    assert np.array_equal(back.labels, lm.labels)
    assert t.median[0] == 0.5


def test_slic_map_roundtrip():
    img = np.random.default_rng(3).integers(0, 256, (120, 160)).astype(float)
    lm = slic_segment(img, SlicParams(2000, 30))
    d = np.random.default_rng(4).uniform(-3, 3, lm.n_labels)
    back, t = decode_sideinfo(encode_sideinfo(lm, _table(d, np.bincount(lm.labels.ravel()))))
    assert np.array_equal(back.labels, lm.labels) and back.n_labels == lm.n_labels
    assert np.max(np.abs(t.median - d)) <= 1 / 128


def test_arbitrary_label_order():
    lab = np.array([[2, 2, 0], [1, 0, 0], [1, 3, 3]])
    lm = LabelMap(lab, 4)
    back, _ = decode_sideinfo(encode_sideinfo(lm, _table(np.zeros(4), np.bincount(lab.ravel()))))
    assert np.array_equal(back.labels, lab)


def test_truncated():
    lm = LabelMap(np.arange(100).reshape(10, 10) % 7, 7)
    data = encode_sideinfo(lm, _table(np.zeros(7), np.bincount(lm.labels.ravel())))
    with pytest.raises(MalformedStreamError):
        decode_sideinfo(data[:-3])
    with pytest.raises(MalformedStreamError):
        decode_sideinfo(data[:5])


def test_table_mismatch():
    with pytest.raises(DataError):
        encode_sideinfo(LabelMap(np.zeros((2, 2), int), 1), _table([0, 0], [4, 0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 12), st.integers(0, 10_000))
def test_random_maps_roundtrip(h, w, k, seed):
    rng = np.random.default_rng(seed)
    lab = rng.integers(0, k, (h, w))
    lm = LabelMap.from_array(lab)
    d = rng.uniform(-4, 4, lm.n_labels)
    back, t = decode_sideinfo(encode_sideinfo(lm, _table(d, np.bincount(lab.ravel(), minlength=lm.n_labels))))
    assert np.array_equal(back.labels, lab)
    assert np.all(np.abs(t.median - d) <= 1 / 128)
