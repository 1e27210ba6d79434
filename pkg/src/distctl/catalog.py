"""Worked example systems and graphs used by tests, scripts and the CLI demos."""

import numpy as np

from .graphs import DelayedGraph, DirectedGraph
from .mcsys import DISCRETE, MultiChannelSystem


def three_channel_example() -> MultiChannelSystem:
    """Jointly controllable/observable 3-channel plant with a fixed eigenvalue at 1."""
    A = np.array([[1.0, 0, 0], [0, 1, 0], [0, 1, 1]])
    e1, e2 = np.array([[1.0], [0], [0]]), np.array([[0.0], [1], [0]])
    C1 = np.array([[1.0, 0, 0], [0, 0, 1]])
    C2 = np.array([[0.0, 1, 0]])
    C3 = np.array([[0.0, 1, 0]])
    return MultiChannelSystem(A, (e1, e2, e1.copy()), (C1, C2, C3))


def output_sharing_cycle() -> DirectedGraph:
    """Cycle under which agent i hears agent i+1 (mod 3): N1={1,2}, N2={2,3}, N3={1,3}."""
    return DirectedGraph.from_arcs(3, [(2, 1), (3, 2), (1, 3)])


def output_sharing(sys: MultiChannelSystem, graph: DirectedGraph) -> MultiChannelSystem:
    """Each agent measures the stacked outputs of its neighbors (itself first)."""
    from .graphs import neighbor_sets

    nbrs = neighbor_sets(graph)
    Cs = []
    for i in range(1, sys.m + 1):
        order = [i] + [j for j in nbrs[i] if j != i]
        Cs.append(np.vstack([sys.Cs[j - 1] for j in order]))
    return sys.with_outputs(Cs)


def two_cycles_graph() -> DirectedGraph:
    """Three agents, bidirectional links 1<->2 and 2<->3."""
    return DirectedGraph.from_arcs(3, [(1, 2), (2, 1), (2, 3), (3, 2)])


def two_cycles_delays() -> DelayedGraph:
    """Delays read off the measurement lists: d12=1, d21=0, d23=2, d32=2 (so d = 1, 2, 2)."""
    return DelayedGraph(two_cycles_graph(), {(1, 2): 1, (2, 1): 0, (2, 3): 2, (3, 2): 2})


def two_cycles_longer_delays() -> DelayedGraph:
    """Longer-delay variant with d = 2, 2, 3."""
    return DelayedGraph(two_cycles_graph(), {(1, 2): 2, (2, 1): 1, (2, 3): 2, (3, 2): 3})


def delayed_desk_system() -> MultiChannelSystem:
    """Discrete 3-channel plant for the delay examples.

    rank [A B2 B3; C1 0] = 2 < n + 1, so with n_1 = 1 the plain delay lift
    keeps a fixed eigenvalue at 0.
    """
    A = np.array([[0.0, 0.0], [0.0, 1.0]])
    B1 = np.array([[1.0], [0.0]])
    B2 = np.array([[0.0], [1.0]])
    B3 = np.array([[0.0], [1.0]])
    C1 = np.array([[0.0, 1.0]])
    C2 = np.array([[1.0, 0.0]])
    C3 = np.array([[0.0, 1.0]])
    return MultiChannelSystem(A, (B1, B2, B3), (C1, C2, C3), DISCRETE)


def selective_holding_system() -> MultiChannelSystem:
    """Discrete plant whose only fixed eigenvalue, 0, is witnessed by s={2} alone.

    The zero mode is not driven by channel 2 and not seen by channels 1 and 3,
    and channel 2 has no transfer to outputs 1 and 3, so r = 1 and the
    selective-holding bound on n_2 is tight.
    """
    A = np.array([[0.0, 0.0], [0.0, 0.5]])
    B1 = np.array([[1.0], [0.0]])
    B2 = np.array([[0.0], [1.0]])
    B3 = np.array([[1.0], [1.0]])
    C1 = np.zeros((1, 2))
    C2 = np.array([[1.0, 1.0]])
    C3 = np.zeros((1, 2))
    return MultiChannelSystem(A, (B1, B2, B3), (C1, C2, C3), DISCRETE)


def setpoint_desk_system() -> MultiChannelSystem:
    """Unstable 3-channel plant with scalar outputs and rank [A B; C 0] = n + m."""
    A = np.array([[0.5, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, 0.0]])
    Bs = tuple(np.eye(3)[:, [i]] for i in range(3))
    Cs = (np.array([[1.0, 0, 0]]), np.array([[0.0, 1, 0]]), np.array([[1.0, 0, 1]]))
    return MultiChannelSystem(A, Bs, Cs)


def discrete_fixed_mode_system() -> MultiChannelSystem:
    """Discrete 3-channel plant with an unstable fixed eigenvalue at 1.1 (r = 1)."""
    A = np.array([[1.1, 0, 0], [0, 1.1, 0], [0, 1.0, 1.1]])
    e1, e2 = np.array([[1.0], [0], [0]]), np.array([[0.0], [1], [0]])
    C1 = np.array([[1.0, 0, 0], [0, 0, 1]])
    C2 = np.array([[0.0, 1, 0]])
    C3 = np.array([[0.0, 1, 0]])
    return MultiChannelSystem(A, (e1, e2, e1.copy()), (C1, C2, C3), DISCRETE)
