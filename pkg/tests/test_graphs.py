import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distctl import graphs as gr
from distctl import randsys as rs
from distctl.errors import InvalidInputError


def test_neighbor_and_follower_sets_include_self():
    g = gr.DirectedGraph.from_arcs(3, [(2, 1), (3, 2), (1, 3)])
    assert gr.neighbor_sets(g) == {1: [1, 2], 2: [2, 3], 3: [1, 3]}
    assert gr.follower_sets(g) == {1: [1, 3], 2: [1, 2], 3: [2, 3]}
    assert gr.neighborhood_of_set(g, {2, 3}) == {1, 2, 3}


def test_connectivity():
    assert gr.is_strongly_connected(gr.cycle_graph(4))
    chain = gr.DirectedGraph.from_arcs(3, [(1, 2), (2, 3)])
    assert not gr.is_strongly_connected(chain)
    assert gr.is_weakly_connected(chain)
    assert not gr.is_weakly_connected(gr.DirectedGraph.from_arcs(3, [(1, 2)]))


def test_scc_of_two_cycles_joined_one_way():
    g = gr.DirectedGraph.from_arcs(4, [(1, 2), (2, 1), (3, 4), (4, 3), (2, 3)])
    assert sorted(sorted(c) for c in gr.strongly_connected_components(g)) == [[1, 2], [3, 4]]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10_000))
def test_spanning_tree_reaches_every_vertex(m, seed):
    g = rs.random_strong_graph(np.random.default_rng(seed), m)
    for q in g.vertices:
        tree = gr.spanning_tree(g, q)
        assert set(tree.parent) == set(g.vertices) - {q}
        assert all((p, i) in g.arcs for i, p in tree.parent.items())


def test_delays_default_to_zero_and_max_delay():
    dg = gr.DelayedGraph(gr.cycle_graph(3), {(1, 2): 2})
    assert dg.delay(1, 2) == 2
    assert dg.max_delays() == [2, 0, 0]


def test_delay_on_missing_arc_is_rejected():
    with pytest.raises(InvalidInputError):
        gr.DelayedGraph(gr.cycle_graph(3), {(2, 1): 1})
    with pytest.raises(InvalidInputError):
        gr.DelayedGraph(gr.cycle_graph(3), {(1, 2): -1})
    with pytest.raises(InvalidInputError):
        gr.DelayedGraph(gr.cycle_graph(3), {(1, 2): 0.5})


def test_graph_round_trip(tmp_path):
    dg = gr.DelayedGraph(gr.DirectedGraph.from_arcs(3, [(1, 2), (2, 3), (3, 1)]), {(1, 2): 1, (3, 1): 4})
    path = tmp_path / "g.json"
    path.write_text(json.dumps(gr.graph_to_dict(dg)))
    back = gr.load_graph(path)
    assert back.graph.arcs == dg.graph.arcs and back.delays == dg.delays


def test_bad_arcs_are_rejected():
    with pytest.raises(InvalidInputError):
        gr.DirectedGraph.from_arcs(2, [(1, 3)])
    with pytest.raises(InvalidInputError):
        gr.graph_from_dict({"arcs": [[1, 2]]})
