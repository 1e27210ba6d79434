import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from distctl import catalog
from distctl import extend as ex
from distctl import graphs as gr
from distctl import linmath as lm
from distctl import mcsys as ms
from distctl import randsys as rs
from distctl.errors import DomainError, InvalidInputError


def _random_graph(rng, m, p=0.4):
    arcs = [(j, i) for j in range(1, m + 1) for i in range(1, m + 1) if j != i and rng.random() < p]
    return gr.DirectedGraph.from_arcs(m, arcs)


def _fixed_mode_plant(seed, domain=ms.CONTINUOUS):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    copies = int(rng.integers(1, min(2, m // 2) + 1))
    sys, _, _ = rs.with_fixed_modes(rng, int(rng.integers(1, 3)), m, [0.5] * copies, domain=domain)
    return sys, rng


# ---------------------------------------------------------------- bookkeeping

@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000))
def test_extension_dimensions(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    sys = rs.random_system(rng, int(rng.integers(1, 5)), m)
    g = _random_graph(rng, m)
    n_i = [int(v) for v in rng.integers(0, 4, size=m)]
    lifted = ex.build_extension(sys, g, n_i)
    ext = lifted.system
    nbrs = gr.neighbor_sets(g)
    assert ext.n == sys.n + sum(n_i)
    assert ext.p == [p + k for p, k in zip(sys.p, n_i)]
    assert ext.q == [sys.q[i - 1] + sum(n_i[j - 1] for j in nbrs[i]) for i in range(1, m + 1)]
    assert lifted.controller_dimension() == sum(n_i)
    assert np.array_equal(ext.A[:sys.n, :sys.n], sys.A)
    assert not np.any(ext.A[sys.n:, :]) and not np.any(ext.A[:, sys.n:])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([(), "all", "some"]))
def test_delay_lift_dimensions(seed, holding):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    sys = rs.random_system(rng, int(rng.integers(1, 4)), m, domain=ms.DISCRETE)
    g = _random_graph(rng, m)
    dg = gr.DelayedGraph(g, {a: int(rng.integers(0, 4)) for a in g.arcs})
    n_i = [int(v) for v in rng.integers(0, 3, size=m)]
    hold = {(): [], "all": list(range(1, m + 1)), "some": [1]}[holding]
    lifted = ex.build_holding_lift(sys, dg, n_i, hold)
    d = dg.max_delays()
    assert lifted.lags == d
    assert lifted.n == sys.n + sum((di + 1) * k for di, k in zip(d, n_i))
    assert lifted.controller_dimension() == sum(n_i) + sum(d[i - 1] * n_i[i - 1] for i in hold)
    starts = [b.start for b in lifted.layout]
    assert starts == sorted(starts) and lifted.layout[0].name == "x"


# ---------------------------------------------------------------- register semantics

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.booleans())
def test_shift_registers_copy_past_inputs(seed, hold_all):
    """z_i(t+1) = v_i(t); the lag-k block holds z_i(t-k); followers see the right lag."""
    rng = np.random.default_rng(seed)
    m = 3
    sys = rs.random_system(rng, 2, m, domain=ms.DISCRETE, max_width=1)
    g = gr.cycle_graph(m)
    dg = gr.DelayedGraph(g, {a: int(rng.integers(0, 4)) for a in g.arcs})
    n_i = [1, 2, 1]
    hold = list(range(1, m + 1)) if hold_all else []
    lifted = ex.build_holding_lift(sys, dg, n_i, hold)
    ext = lifted.system
    T = 8
    v = {i: rng.standard_normal((T, n_i[i - 1])) for i in range(1, m + 1)}
    X = np.zeros((T + 1, ext.n))
    for t in range(T):
        u = [np.concatenate([np.zeros(sys.p[i - 1]), v[i][t]]) for i in range(1, m + 1)]
        X[t + 1] = ext.A @ X[t] + sum(B @ ui for B, ui in zip(ext.Bs, u))

    def z(i, t):
        return v[i][t - 1] if t >= 1 else np.zeros(n_i[i - 1])

    for t in range(T + 1):
        for i in range(1, m + 1):
            for lag in range(lifted.lags[i - 1] + 1):
                b = lifted.block(i, lag)
                assert np.allclose(X[t, b.start:b.stop], z(i, t - lag))
        for i in range(1, m + 1):
            y = ext.Cs[i - 1] @ X[t]
            pos = sys.q[i - 1]
            for j in gr.neighbor_sets(g)[i]:
                d = lifted.lags[j - 1] if j in hold else dg.delay(j, i)
                assert np.allclose(y[pos:pos + n_i[j - 1]], z(j, t - d))
                pos += n_i[j - 1]


# ---------------------------------------------------------------- rank identities and conditions

@settings(max_examples=100, deadline=None)
@given(st.integers(0, 1_000_000))
def test_extension_rank_identity(seed):
    sys, rng = _fixed_mode_plant(seed)
    g = _random_graph(rng, sys.m)
    n_i = [int(v) for v in rng.integers(0, 3, size=sys.m)]
    eig = lm.distinct_eigenvalues(sys.A)
    lam = eig[int(rng.integers(0, len(eig)))]
    s = tuple(sorted(int(v) + 1 for v in rng.choice(sys.m, size=int(rng.integers(0, sys.m + 1)), replace=False)))
    actual, predicted = ex.extension_rank_identity(sys, g, n_i, s, lam)
    assert actual == predicted


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1_000_000))
def test_strong_graph_removes_all_fixed_modes(seed):
    sys, rng = _fixed_mode_plant(seed)
    assume(ms.jointly_controllable(sys) and ms.jointly_observable(sys))
    r = ms.deficiency_bound(sys)
    assert r >= 1
    rep = ex.check_no_fixed_spectrum_strong(sys, rs.random_strong_graph(rng, sys.m), [r] * sys.m)
    assert rep.verdict and not rep.failing_subsets


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1_000_000))
def test_weak_graph_condition_decides_extension(seed):
    sys, rng = _fixed_mode_plant(seed)
    assume(ms.jointly_controllable(sys) and ms.jointly_observable(sys))
    g = _random_graph(rng, sys.m)
    assume(gr.is_weakly_connected(g))
    r = ms.deficiency_bound(sys)
    weak = ex.check_weak_graph_condition(sys, g, [r] * sys.m)
    assert weak.verdict == (weak.details["extension_fixed"] == [])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1_000_000))
def test_state_holding_matches_weak_graph_condition(seed):
    sys, rng = _fixed_mode_plant(seed, ms.DISCRETE)
    assume(ms.jointly_controllable(sys) and ms.jointly_observable(sys))
    g = _random_graph(rng, sys.m)
    assume(gr.is_weakly_connected(g))
    dg = gr.DelayedGraph(g, {a: int(rng.integers(0, 3)) for a in g.arcs})
    r = ms.deficiency_bound(sys)
    hold = ex.check_state_holding_no_fixed(sys, dg, [r] * sys.m)
    assert hold.details["rank_identity_mismatches"] == []
    assert hold.verdict == ex.check_weak_graph_condition(sys, g).verdict


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1_000_000))
def test_delay_lift_fixes_only_zero(seed):
    sys, rng = _fixed_mode_plant(seed, ms.DISCRETE)
    assume(ms.jointly_controllable(sys) and ms.jointly_observable(sys))
    g = rs.random_strong_graph(rng, sys.m)
    dg = gr.DelayedGraph(g, {a: int(rng.integers(0, 3)) for a in g.arcs})
    rep = ex.check_delay_nonzero_fixed(sys, dg, [ms.deficiency_bound(sys)] * sys.m)
    assert rep.verdict


def test_delayed_desk_lift_keeps_zero_only():
    rep = ex.check_delay_nonzero_fixed(catalog.delayed_desk_system(), catalog.two_cycles_delays(), [1, 1, 1])
    assert rep.verdict and rep.details["fixed_at_zero"]
    held = ex.check_state_holding_no_fixed(catalog.delayed_desk_system(), catalog.two_cycles_delays(), [1, 1, 1])
    assert held.verdict and held.details["controller_dimension"] == 3 + 1 + 2 + 2


@pytest.mark.parametrize("n1,n2,n3,expected", [(1, 3, 1, True), (1, 2, 1, False), (2, 4, 1, True),
                                               (2, 3, 2, False), (3, 7, 3, True)])
def test_selective_holding_bound(n1, n2, n3, expected):
    rep = ex.check_selective_holding(catalog.selective_holding_system(), catalog.two_cycles_longer_delays(),
                                     [n1, n2, n3], [2])
    assert rep.verdict is expected
    assert rep.details["holding_increase"] == 2 * n2


def test_check_extension_dispatches_on_hypotheses():
    sys = catalog.three_channel_example()
    strong = ex.check_extension(sys, catalog.output_sharing_cycle(), [1, 1, 1])
    assert strong.checked_condition == "strong_graph_extension" and strong.verdict
    weak = ex.check_extension(sys, gr.DirectedGraph.from_arcs(3, [(2, 1), (3, 1)]), [1, 1, 1])
    assert weak.checked_condition == "extension" and not weak.verdict
    assert weak.details["weak_graph_condition"] is False


def test_strong_check_rejects_failed_hypotheses():
    sys = catalog.three_channel_example()
    with pytest.raises(DomainError):
        ex.check_no_fixed_spectrum_strong(sys, gr.DirectedGraph.from_arcs(3, [(1, 2), (2, 3)]), [1, 1, 1])
    with pytest.raises(DomainError):
        ex.check_no_fixed_spectrum_strong(sys, catalog.output_sharing_cycle(), [0, 0, 0])


def test_delay_lift_requires_discrete_plant():
    with pytest.raises(DomainError):
        ex.build_delay_lift(catalog.three_channel_example(), catalog.two_cycles_delays(), [1, 1, 1])


def test_resolve_dimensions():
    sys = catalog.three_channel_example()
    assert ex.resolve_dimensions(sys, "r") == [1, 1, 1]
    assert ex.resolve_dimensions(sys, "n") == [3, 3, 3]
    assert ex.resolve_dimensions(sys, 2) == [2, 2, 2]
    assert ex.resolve_dimensions(sys, "1,0,2") == [1, 0, 2]
    with pytest.raises(InvalidInputError):
        ex.resolve_dimensions(sys, [1, 1])
    with pytest.raises(InvalidInputError):
        ex.resolve_dimensions(sys, [1, -1, 1])
