"""Extended systems with shared integrator states, their delay liftings, and
the checks that tell whether those extensions are free of fixed modes.

Extended state layout is always ``x, z_1, z_1(t-1), ..., z_1(t-d_1), z_2, ...``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linmath as lm
from . import mcsys as ms
from .errors import DomainError, InvalidInputError
from .graphs import (DelayedGraph, DirectedGraph, graph_union, is_strongly_connected,
                     is_weakly_connected, neighbor_sets, neighborhood_of_set)

EXTENSION = "extension"
DELAY_LIFT = "delay_lift"
STATE_HOLDING_LIFT = "state_holding_lift"
SELECTIVE_HOLDING_LIFT = "selective_holding_lift"

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class Block:
    name: str
    agent: int  # 0 for the plant state
    lag: int
    start: int
    size: int

    @property
    def stop(self) -> int:
        return self.start + self.size


@dataclass
class LiftedSystem:
    system: ms.MultiChannelSystem
    layout: list
    kind: str
    n_i: list
    lags: list  # d_i per agent (all zero for a plain extension)
    holding: frozenset = frozenset()
    # per agent: list of (sender j, lag delta) for each z-block in its extended output
    measured: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.layout[-1].stop

    def block(self, agent: int, lag: int = 0) -> Block:
        for b in self.layout:
            if b.agent == agent and b.lag == lag:
                return b
        raise KeyError((agent, lag))

    def selector(self, agent: int, lag: int = 0) -> np.ndarray:
        """H_{agent,lag}: n_tot x n_agent column selector of one register block."""
        b = self.block(agent, lag)
        H = np.zeros((self.n, b.size))
        H[b.start:b.stop, :] = np.eye(b.size)
        return H

    def controller_dimension(self) -> int:
        """Integrator states plus holding registers (network delay states excluded)."""
        extra = sum(self.lags[i - 1] * self.n_i[i - 1] for i in self.holding)
        return sum(self.n_i) + extra

    def to_dict(self) -> dict:
        out = ms.system_to_dict(self.system)
        out["kind"] = self.kind
        out["n_i"] = list(self.n_i)
        out["lags"] = list(self.lags)
        out["holding"] = sorted(self.holding)
        out["layout"] = [{"name": b.name, "agent": b.agent, "lag": b.lag, "start": b.start, "size": b.size}
                         for b in self.layout]
        return out


@dataclass
class ConditionReport:
    verdict: bool
    checked_condition: str
    failing_subsets: list = field(default_factory=list)  # (s, lambda, rank)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.checked_condition,
            "verdict": self.verdict,
            "failing_subsets": [
                {"s": list(s), "eigenvalue": ms._complex_json(lam) if lam is not None else None, "rank": rank}
                for s, lam, rank in self.failing_subsets
            ],
            "details": self.details,
        }


def _check_spec(sys, n_i):
    n_i = [int(k) for k in n_i]
    if len(n_i) != sys.m:
        raise InvalidInputError(f"need {sys.m} controller dimensions, got {len(n_i)}")
    if any(k < 0 for k in n_i):
        raise InvalidInputError(f"controller dimensions must be nonnegative, got {n_i}")
    return n_i


def _base_graph(graph):
    return graph.graph if isinstance(graph, DelayedGraph) else graph


def _assemble(sys, graph, n_i, lags, sources, kind, holding=frozenset()) -> LiftedSystem:
    """Shared builder. ``sources[i]`` lists (j, lag) blocks agent i measures."""
    n = sys.n
    layout = [Block("x", 0, 0, 0, n)]
    pos = n
    for i in range(1, sys.m + 1):
        for lag in range(lags[i - 1] + 1):
            if lag == 0:
                name = f"z{i}"
            elif i in holding:
                name = f"w{i}{lag}"
            else:
                name = f"z{i}[t-{lag}]"
            layout.append(Block(name, i, lag, pos, n_i[i - 1]))
            pos += n_i[i - 1]
    ntot = pos
    A = np.zeros((ntot, ntot))
    A[:n, :n] = sys.A
    for b in layout:
        if b.agent and b.lag > 0:
            prev = next(c for c in layout if c.agent == b.agent and c.lag == b.lag - 1)
            A[b.start:b.stop, prev.start:prev.stop] = np.eye(b.size)
    lifted = LiftedSystem(None, layout, kind, list(n_i), list(lags), frozenset(holding),
                          {i: list(src) for i, src in sources.items()})
    Bs, Cs = [], []
    for i in range(1, sys.m + 1):
        B = np.zeros((ntot, sys.p[i - 1] + n_i[i - 1]))
        B[:n, :sys.p[i - 1]] = sys.Bs[i - 1]
        head = lifted.block(i, 0)
        B[head.start:head.stop, sys.p[i - 1]:] = np.eye(head.size)
        rows = [np.hstack([sys.Cs[i - 1], np.zeros((sys.q[i - 1], ntot - n))])]
        for j, lag in sources[i]:
            rows.append(lifted.selector(j, lag).T)
        Bs.append(B)
        Cs.append(np.vstack(rows))
    lifted.system = ms.MultiChannelSystem(A, tuple(Bs), tuple(Cs), sys.domain)
    return lifted


def build_extension(sys: ms.MultiChannelSystem, graph: DirectedGraph, n_i) -> LiftedSystem:
    """Append z_i' = v_i (or z_i(t+1) = v_i) and let agent i measure z_j for j in N_i."""
    g = _base_graph(graph)
    if g.m != sys.m:
        raise InvalidInputError(f"graph has {g.m} vertices, system has {sys.m} channels")
    n_i = _check_spec(sys, n_i)
    nbrs = neighbor_sets(g)
    sources = {i: [(j, 0) for j in nbrs[i]] for i in g.vertices}
    return _assemble(sys, g, n_i, [0] * sys.m, sources, EXTENSION)


def build_holding_lift(sys: ms.MultiChannelSystem, dgraph: DelayedGraph, n_i, holding) -> LiftedSystem:
    """Delay lift where agents in ``holding`` release only z_i(t - d_i).

    Non-holding senders reach follower i as z_j(t - d_ji); holding senders as
    z_j(t - d_j).
    """
    if not sys.is_discrete:
        raise DomainError("delay liftings are defined only for discrete-time systems")
    if not isinstance(dgraph, DelayedGraph):
        raise InvalidInputError("delay lifting needs a graph with arc delays")
    if dgraph.m != sys.m:
        raise InvalidInputError(f"graph has {dgraph.m} vertices, system has {sys.m} channels")
    n_i = _check_spec(sys, n_i)
    holding = frozenset(int(h) for h in holding)
    if not holding <= set(range(1, sys.m + 1)):
        raise InvalidInputError(f"holding agents {sorted(holding)} outside 1..{sys.m}")
    lags = dgraph.max_delays()
    nbrs = neighbor_sets(dgraph.graph)
    sources = {}
    for i in dgraph.graph.vertices:
        sources[i] = [(j, lags[j - 1] if j in holding else dgraph.delay(j, i)) for j in nbrs[i]]
    if not holding:
        kind = DELAY_LIFT
    elif holding == set(range(1, sys.m + 1)):
        kind = STATE_HOLDING_LIFT
    else:
        kind = SELECTIVE_HOLDING_LIFT
    return _assemble(sys, dgraph.graph, n_i, lags, sources, kind, holding)


def build_delay_lift(sys, dgraph, n_i) -> LiftedSystem:
    return build_holding_lift(sys, dgraph, n_i, ())


def build_state_holding_lift(sys, dgraph, n_i) -> LiftedSystem:
    return build_holding_lift(sys, dgraph, n_i, range(1, sys.m + 1))


# ---------------------------------------------------------------- checks

def resolve_dimensions(sys, spec) -> list[int]:
    """Expand 'r', an int or a per-agent list into n_i."""
    if isinstance(spec, str):
        if spec.strip().lower() == "r":
            return [ms.deficiency_bound(sys)] * sys.m
        if spec.strip().lower() == "n":
            return [sys.n] * sys.m
        parts = [p for p in spec.replace(" ", "").split(",") if p]
        spec = [int(p) for p in parts]
        if len(spec) == 1:
            spec = spec * sys.m
    elif isinstance(spec, (int, np.integer)):
        spec = [int(spec)] * sys.m
    return _check_spec(sys, spec)


def _witness_subsets(sys) -> tuple[ms.FixedSpectrumReport, list]:
    rep = ms.fixed_spectrum(sys)
    seen = []
    for lam, ws in rep.witnesses.items():
        for w in ws:
            seen.append((w.subset, lam, w.rank))
    return rep, seen


def _report_from_fixed(rep: ms.FixedSpectrumReport, condition: str, keep=lambda lam: True,
                       details=None) -> ConditionReport:
    failing = []
    for lam, ws in rep.witnesses.items():
        if keep(lam):
            failing.extend((w.subset, lam, w.rank) for w in ws)
    return ConditionReport(not failing, condition, failing, details or {})


def _bound_details(sys, n_i, lifted):
    return {"r": ms.deficiency_bound(sys), "n_i": list(n_i), "n": sys.n,
            "extended_dimension": lifted.n, "controller_dimension": lifted.controller_dimension()}


def check_no_fixed_spectrum_strong(sys, graph, n_i) -> ConditionReport:
    """Strongly connected graph and n_i >= r: the extension must have no fixed modes."""
    g = _base_graph(graph)
    n_i = _check_spec(sys, n_i)
    if not is_strongly_connected(g):
        raise DomainError("hypothesis failed: neighbor graph is not strongly connected")
    if not (ms.jointly_controllable(sys) and ms.jointly_observable(sys)):
        raise DomainError("hypothesis failed: system is not jointly controllable and observable")
    r = ms.deficiency_bound(sys)
    if min(n_i) < r:
        raise DomainError(f"hypothesis failed: n_i={n_i} below the rank-deficiency bound r={r}")
    lifted = build_extension(sys, g, n_i)
    rep = ms.fixed_spectrum(lifted.system)
    details = _bound_details(sys, n_i, lifted)
    if not rep.empty:
        details["anomaly"] = "fixed modes found despite the hypotheses; inspect rank tolerances"
    return _report_from_fixed(rep, "strong_graph_extension", details=details)


def check_weak_graph_condition(sys, graph, n_i=None) -> ConditionReport:
    """Every witness subset s must satisfy N_(m-s) intersect s nonempty.

    When ``n_i`` is given the extension is also enumerated and its verdict is
    recorded in ``details['extension_fixed']`` for cross-checking.
    """
    g = _base_graph(graph)
    if not is_weakly_connected(g):
        raise DomainError("hypothesis failed: neighbor graph is not weakly connected")
    rep, witnesses = _witness_subsets(sys)
    failing = []
    all_agents = set(range(1, sys.m + 1))
    for s, lam, rank in witnesses:
        rest = all_agents - set(s)
        if not (neighborhood_of_set(g, rest) & set(s)):
            failing.append((s, lam, rank))
    details = {"r": rep.deficiency_r, "witness_count": len(witnesses)}
    if n_i is not None:
        n_i = _check_spec(sys, n_i)
        ext = build_extension(sys, g, n_i)
        ext_rep = ms.fixed_spectrum(ext.system)
        details["extension_fixed"] = [ms._complex_json(z) for z in ext_rep.fixed_eigenvalues]
    return ConditionReport(not failing, "weak_graph", failing, details)


def extended_transfer_strongly_connected(sys, graph) -> bool:
    """Union of the transfer graph and the neighbor graph is strongly connected."""
    return is_strongly_connected(graph_union(ms.transfer_graph(sys), _base_graph(graph)))


def check_delay_nonzero_fixed(sys, dgraph, n_i) -> ConditionReport:
    """Plain delay lift: only eigenvalue 0 may be fixed."""
    n_i = _check_spec(sys, n_i)
    lifted = build_delay_lift(sys, dgraph, n_i)
    rep = ms.fixed_spectrum(lifted.system)
    details = _bound_details(sys, n_i, lifted)
    details["fixed_at_zero"] = any(abs(z) <= ZERO_TOL for z in rep.fixed_eigenvalues)
    return _report_from_fixed(rep, "delay_lift_nonzero", keep=lambda lam: abs(lam) > ZERO_TOL, details=details)


def holding_rank_identity(sys, lifted: LiftedSystem, s, lam) -> tuple[int, int]:
    """(lifted pencil rank, rank predicted by the holding decomposition)."""
    g_nbrs = {i: {j for j, _ in lifted.measured[i]} for i in lifted.measured}
    rest = set(range(1, sys.m + 1)) - set(s)
    reach = set()
    for i in rest:
        reach |= g_nbrs[i]
    gain = sum(lifted.n_i[i - 1] for i in reach & set(s))
    base = ms.pencil_rank(sys, lam, s).rank
    lifted_states = sum((d + 1) * k for d, k in zip(lifted.lags, lifted.n_i))
    predicted = min(base + lifted_states + gain, lifted.n)
    actual = min(ms.pencil_rank(lifted.system, lam, s).rank, lifted.n)
    return actual, predicted


def check_state_holding_no_fixed(sys, dgraph, n_i) -> ConditionReport:
    """Full state holding: no fixed modes iff the weak-graph condition holds."""
    n_i = _check_spec(sys, n_i)
    lifted = build_state_holding_lift(sys, dgraph, n_i)
    rep = ms.fixed_spectrum(lifted.system)
    details = _bound_details(sys, n_i, lifted)
    _, witnesses = _witness_subsets(sys)
    mismatches = []
    for s, lam, _ in witnesses:
        actual, predicted = holding_rank_identity(sys, lifted, s, lam)
        if actual != predicted:
            mismatches.append({"s": list(s), "eigenvalue": ms._complex_json(lam),
                               "rank": actual, "predicted": predicted})
    details["rank_identity_checked"] = len(witnesses)
    details["rank_identity_mismatches"] = mismatches
    return _report_from_fixed(rep, "state_holding", details=details)


def check_selective_holding(sys, dgraph, n_i, holding_agents) -> ConditionReport:
    """Mixed lift where only ``holding_agents`` hold their states."""
    n_i = _check_spec(sys, n_i)
    lifted = build_holding_lift(sys, dgraph, n_i, holding_agents)
    rep = ms.fixed_spectrum(lifted.system)
    details = _bound_details(sys, n_i, lifted)
    lags = lifted.lags
    details["holding"] = sorted(lifted.holding)
    details["holding_increase"] = sum(lags[i - 1] * n_i[i - 1] for i in lifted.holding)
    details["full_holding_increase"] = sum(d * k for d, k in zip(lags, n_i))
    return _report_from_fixed(rep, "selective", details=details)


def extension_rank_identity(sys, graph, n_i, s, lam) -> tuple[int, int]:
    """(extension pencil rank, original rank + rank E_s + rank E_N(m-s))."""
    g = _base_graph(graph)
    n_i = _check_spec(sys, n_i)
    ext = build_extension(sys, g, n_i)
    rest = set(range(1, sys.m + 1)) - set(s)
    nbr_rest = neighborhood_of_set(g, rest)
    predicted = (ms.pencil_rank(sys, lam, s).rank + sum(n_i[i - 1] for i in s)
                 + sum(n_i[i - 1] for i in nbr_rest))
    actual = ms.pencil_rank(ext.system, lam, s).rank
    return actual, predicted


def e_selector(n_i, agents) -> np.ndarray:
    """E_s = [E_i1 ... E_is] as a (sum n_i) x (sum_{i in s} n_i) matrix."""
    total = sum(n_i)
    offsets = np.concatenate([[0], np.cumsum(n_i)])
    cols = []
    for i in sorted(agents):
        E = np.zeros((total, n_i[i - 1]))
        E[offsets[i - 1]:offsets[i], :] = np.eye(n_i[i - 1])
        cols.append(E)
    return np.hstack(cols) if cols else np.zeros((total, 0))


__all__ = [
    "Block", "LiftedSystem", "ConditionReport", "build_extension", "build_delay_lift",
    "build_state_holding_lift", "build_holding_lift", "check_no_fixed_spectrum_strong",
    "check_weak_graph_condition", "extended_transfer_strongly_connected",
    "check_delay_nonzero_fixed", "check_state_holding_no_fixed", "check_selective_holding",
    "resolve_dimensions", "extension_rank_identity", "holding_rank_identity", "e_selector",
    "lm",
]


def check_extension(sys, graph, n_i) -> ConditionReport:
    """Strong-graph check when its hypotheses hold, otherwise the direct enumeration
    of the extension plus the weak-graph verdict for context."""
    g = _base_graph(graph)
    n_i = _check_spec(sys, n_i)
    if (is_strongly_connected(g) and ms.jointly_controllable(sys) and ms.jointly_observable(sys)
            and min(n_i) >= ms.deficiency_bound(sys)):
        cond = check_no_fixed_spectrum_strong(sys, g, n_i)
    else:
        lifted = build_extension(sys, g, n_i)
        details = _bound_details(sys, n_i, lifted)
        if is_weakly_connected(g):
            weak = check_weak_graph_condition(sys, g)
            details["weak_graph_condition"] = weak.verdict
            details["weak_graph_failing"] = [list(s) for s, _, _ in weak.failing_subsets]
        cond = _report_from_fixed(ms.fixed_spectrum(lifted.system), "extension", details=details)
    cond.details["union_strongly_connected"] = extended_transfer_strongly_connected(sys, g)
    return cond
