"""Directed graphs on vertices 1..m.

An arc ``(j, i)`` means information flows from agent ``j`` to agent ``i``:
``j`` is a neighbor of ``i`` and ``i`` is a follower of ``j``. Self-arcs are
implicit; every vertex is its own neighbor and follower.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import count

from .errors import DomainError, InvalidInputError


@dataclass(frozen=True)
class DirectedGraph:
    m: int
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.m < 1:
            raise InvalidInputError(f"graph needs at least one vertex, got m={self.m}")
        clean = set()
        for arc in self.arcs:
            j, i = (int(v) for v in arc)
            if not (1 <= j <= self.m and 1 <= i <= self.m):
                raise InvalidInputError(f"arc {j}->{i} has an endpoint outside 1..{self.m}")
            if j != i:
                clean.add((j, i))
        object.__setattr__(self, "arcs", frozenset(clean))

    @classmethod
    def from_arcs(cls, m, arcs):
        return cls(m, frozenset(tuple(a) for a in arcs))

    @property
    def vertices(self) -> range:
        return range(1, self.m + 1)

    def out_neighbors(self, j) -> list[int]:
        return sorted(i for (a, i) in self.arcs if a == j)

    def in_neighbors(self, i) -> list[int]:
        return sorted(j for (j, b) in self.arcs if b == i)

    def sorted_arcs(self) -> list[tuple[int, int]]:
        return sorted(self.arcs)


@dataclass(frozen=True)
class DelayedGraph:
    graph: DirectedGraph
    delays: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {}
        for (j, i), d in self.delays.items():
            if (j, i) not in self.graph.arcs:
                if j == i and int(d) == 0:
                    continue
                raise InvalidInputError(f"delay given for {j}->{i}, which is not an arc")
            if int(d) != d or d < 0:
                raise InvalidInputError(f"delay on {j}->{i} must be a nonnegative integer, got {d}")
        for arc in self.graph.arcs:
            full[arc] = int(self.delays.get(arc, 0))
        object.__setattr__(self, "delays", full)

    @property
    def m(self) -> int:
        return self.graph.m

    def delay(self, sender, receiver) -> int:
        """Transmission delay from ``sender`` to ``receiver`` (zero on the implicit self-arc)."""
        if sender == receiver:
            return 0
        return self.delays[(sender, receiver)]

    def max_delay(self, i) -> int:
        """Largest delay over agent i's outgoing arcs, zero if it has none."""
        return max((self.delay(i, j) for j in follower_sets(self.graph)[i]), default=0)

    def max_delays(self) -> list[int]:
        return [self.max_delay(i) for i in self.graph.vertices]


@dataclass(frozen=True)
class SpanningTree:
    root: int
    parent: dict
    children: dict

    def arcs(self) -> set[tuple[int, int]]:
        return {(p, c) for c, p in self.parent.items()}

    def depth(self) -> dict:
        out = {self.root: 0}
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            for c in self.children[v]:
                out[c] = out[v] + 1
                queue.append(c)
        return out


def neighbor_sets(g: DirectedGraph) -> dict[int, list[int]]:
    """N_i: agents i receives from, including i, sorted."""
    out = {i: {i} for i in g.vertices}
    for j, i in g.arcs:
        out[i].add(j)
    return {i: sorted(s) for i, s in out.items()}


def follower_sets(g: DirectedGraph) -> dict[int, list[int]]:
    """F_i: agents that receive from i, including i, sorted."""
    out = {i: {i} for i in g.vertices}
    for j, i in g.arcs:
        out[j].add(i)
    return {i: sorted(s) for i, s in out.items()}


def neighborhood_of_set(g: DirectedGraph, s) -> set[int]:
    nbrs = neighbor_sets(g)
    out: set[int] = set()
    for i in s:
        out.update(nbrs[i])
    return out


def strongly_connected_components(g: DirectedGraph) -> list[list[int]]:
    """Tarjan's algorithm; components sorted by lowest label."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = count()
    comps: list[list[int]] = []
    succ = {v: g.out_neighbors(v) for v in g.vertices}

    for root in g.vertices:
        if root in index:
            continue
        # iterative DFS to avoid recursion limits
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def is_strongly_connected(g: DirectedGraph) -> bool:
    return len(strongly_connected_components(g)) == 1


def is_weakly_connected(g: DirectedGraph) -> bool:
    adj = {v: set() for v in g.vertices}
    for j, i in g.arcs:
        adj[j].add(i)
        adj[i].add(j)
    seen = {1}
    queue = deque([1])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == g.m


def spanning_tree(g: DirectedGraph, q: int) -> SpanningTree:
    """BFS out-tree rooted at q, visiting lower labels first."""
    if not 1 <= q <= g.m:
        raise InvalidInputError(f"root {q} outside 1..{g.m}")
    parent: dict[int, int] = {}
    children: dict[int, list[int]] = {v: [] for v in g.vertices}
    seen = {q}
    queue = deque([q])
    while queue:
        v = queue.popleft()
        for w in g.out_neighbors(v):
            if w not in seen:
                seen.add(w)
                parent[w] = v
                children[v].append(w)
                queue.append(w)
    if len(seen) != g.m:
        missing = sorted(set(g.vertices) - seen)
        raise DomainError(f"vertex {q} cannot reach vertices {missing}; no spanning out-tree")
    return SpanningTree(q, parent, children)


def graph_union(g1: DirectedGraph, g2: DirectedGraph) -> DirectedGraph:
    if g1.m != g2.m:
        raise InvalidInputError(f"union needs equal vertex counts, got {g1.m} and {g2.m}")
    return DirectedGraph(g1.m, g1.arcs | g2.arcs)


def cycle_graph(m: int, reverse: bool = False) -> DirectedGraph:
    """Directed cycle 1->2->...->m->1, or its reverse."""
    arcs = [(i, i % m + 1) for i in range(1, m + 1)]
    if reverse:
        arcs = [(i, j) for (j, i) in arcs]
    return DirectedGraph.from_arcs(m, arcs if m > 1 else [])


# ---------------------------------------------------------------- JSON

def graph_to_dict(g) -> dict:
    base = g.graph if isinstance(g, DelayedGraph) else g
    out = {"m": base.m, "arcs": [list(a) for a in base.sorted_arcs()]}
    if isinstance(g, DelayedGraph):
        out["delays"] = {f"{j}->{i}": d for (j, i), d in sorted(g.delays.items())}
    return out


def graph_from_dict(data: dict):
    """Parse ``{"m":..,"arcs":[[j,i],..],"delays":{"j->i":d}}``.

    Returns a DelayedGraph when a ``delays`` key is present, else a DirectedGraph.
    """
    try:
        m = int(data["m"])
        arcs = [tuple(int(v) for v in a) for a in data.get("arcs", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed graph document: {exc}") from exc
    for a in arcs:
        if len(a) != 2:
            raise InvalidInputError(f"arc {a} must have two endpoints")
    g = DirectedGraph.from_arcs(m, arcs)
    if "delays" not in data:
        return g
    delays = {}
    for key, d in data["delays"].items():
        try:
            j, i = (int(x) for x in key.split("->"))
        except ValueError as exc:
            raise InvalidInputError(f"bad delay key {key!r}; expected 'j->i'") from exc
        delays[(j, i)] = d
    return DelayedGraph(g, delays)


def load_graph(path):
    with open(path) as fh:
        return graph_from_dict(json.load(fh))
