import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATA
from lfgc.errors import DataError
from lfgc.projection import (RefSelectionInput, lower_hull, select_reference_spacing,
                             select_spacing_from_matrix)
from lfgc.quality import read_matrix_csv


def test_greek_spacing():
    assert select_spacing_from_matrix(read_matrix_csv(DATA / "greek_topleft.csv")) == (4, 4)


def test_sideboard_spacing():
    assert select_spacing_from_matrix(read_matrix_csv(DATA / "sideboard_topleft.csv")) == (3, 4)


def test_linear_decay_picks_median():
    inp = RefSelectionInput(tuple(range(1, 9)), tuple(100.0 - k for k in range(1, 9)))
    assert select_reference_spacing(inp) == 4


def test_exactly_collinear_points_stay_on_hull():
    pts = [(4, 92.7), (5, 92.4), (6, 92.1)]
    assert lower_hull(pts) == [0, 1, 2]


def test_hull_drops_points_above():
    assert lower_hull([(1, 0.0), (2, 5.0), (3, 0.0)]) == [0, 2]


def test_from_profile_skips_reference():
    inp = RefSelectionInput.from_profile([1.0, 0.958, 0.941])
    assert inp.k == (1, 2) and inp.ssim == (95.8, 94.1)


def test_invalid_inputs():
    with pytest.raises(DataError):
        RefSelectionInput((1, 2), (1.0,))
    with pytest.raises(DataError):
        RefSelectionInput((2, 1), (1.0, 2.0))
    with pytest.raises(DataError):
        select_reference_spacing(RefSelectionInput((1,), (1.0,)))


def test_small_grids_fall_back_to_size():
    assert select_spacing_from_matrix(np.ones((2, 2))) == (2, 2)


@settings(max_examples=50)
@given(st.lists(st.integers(5000, 10000), min_size=2, max_size=12))
def test_choice_is_a_hull_vertex(raw):
    ys = tuple(v / 100 for v in raw)
    k = tuple(range(1, len(ys) + 1))
    chosen = select_reference_spacing(RefSelectionInput(k, ys))
    assert chosen in [k[i] for i in lower_hull(list(zip(k, ys)))]


@settings(max_examples=50)
@given(st.lists(st.integers(5000, 10000), min_size=2, max_size=12), st.integers(1, 5), st.integers(-50, 50))
def test_choice_invariant_to_integer_affine_rescale(raw, a, b):
    k = tuple(range(1, len(raw) + 1))
    plain = select_reference_spacing(RefSelectionInput(k, tuple(float(v) for v in raw)))
    scaled = select_reference_spacing(RefSelectionInput(k, tuple(float(a * v + b) for v in raw)))
    assert plain == scaled
