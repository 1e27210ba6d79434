import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distctl import graphs as gr
from distctl import mcsys as ms
from distctl import randsys as rs


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(0, 100_000))
def test_random_strong_graph_is_strongly_connected(m, seed):
    assert gr.is_strongly_connected(rs.random_strong_graph(np.random.default_rng(seed), m))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_injected_modes_split_channels(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    sys, S, info = rs.with_fixed_modes(rng, 2, m, [0.5])
    assert sys.n == 3 and 0 < len(S) < m
    (lam, a, b), = info
    assert a not in S and b in S


def test_same_seed_same_system():
    a = rs.random_system(np.random.default_rng(4), 3, 2)
    b = rs.random_system(np.random.default_rng(4), 3, 2)
    assert np.array_equal(a.A, b.A) and all(np.array_equal(x, y) for x, y in zip(a.Bs, b.Bs))


def test_too_many_copies_is_refused():
    with pytest.raises(ValueError):
        rs.with_fixed_modes(np.random.default_rng(0), 1, 3, [1.0, 1.0])


def test_repeated_mode_raises_deficiency():
    sys, _, _ = rs.with_fixed_modes(np.random.default_rng(2), 2, 4, [1.5, 1.5])
    assert ms.jointly_controllable(sys) and ms.jointly_observable(sys)
    assert ms.deficiency_bound(sys) == 2
