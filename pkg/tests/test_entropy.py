import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lfgc.entropy import (ContextSet, Decoder, Encoder, entropy_decode, entropy_encode, exp_golomb_bins, unzigzag,
                          zigzag)
from lfgc.errors import MalformedStreamError


def test_zigzag():
    assert [zigzag(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
    assert all(unzigzag(zigzag(v)) == v for v in range(-50, 50))


def test_exp_golomb_codewords():
    assert exp_golomb_bins(0) == [1]
    assert exp_golomb_bins(1) == [0, 1, 0]
    assert exp_golomb_bins(2) == [0, 1, 1]
    assert exp_golomb_bins(3) == [0, 0, 1, 0, 0]


def test_empty_roundtrip():
    assert entropy_decode(entropy_encode([]), 0) == []


def test_zeros_compress_well():
    data = entropy_encode([0] * 10_000)
    assert len(data) < 0.02 * 4 * 10_000


def test_random_levels_roundtrip():
    rng = np.random.default_rng(0)
    lv = rng.integers(-100, 101, 100_000).tolist()
    assert entropy_decode(entropy_encode(lv), len(lv)) == lv


def test_large_values():
    lv = [0, 2 ** 40, -(2 ** 35), 123456789]
    assert entropy_decode(entropy_encode(lv), 4) == lv


def test_truncation_reports_offset():
    data = entropy_encode(list(range(-500, 500)))
    with pytest.raises(MalformedStreamError, match=r"malformed stream at offset \d+"):
        entropy_decode(data[: len(data) // 2], 1000)


def test_mixed_contexts_share_a_stream():
    enc = Encoder()
    a, b = ContextSet(1), ContextSet()
    bits = [1, 0, 0, 1, 1, 1, 0]
    for i, bit in enumerate(bits):
        enc.encode_bit(a, 0, bit)
        enc.encode_int(b, i - 3)
    dec = Decoder(enc.finish())
    a, b = ContextSet(1), ContextSet()
    for i, bit in enumerate(bits):
        assert dec.decode_bit(a, 0) == bit
        assert dec.decode_int(b) == i - 3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-(2 ** 20), 2 ** 20), max_size=400))
def test_roundtrip_property(levels):
    assert entropy_decode(entropy_encode(levels), len(levels)) == levels
