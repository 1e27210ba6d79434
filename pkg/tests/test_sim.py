import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distctl import catalog
from distctl import linmath as lm
from distctl import mcsys as ms
from distctl import sim
from distctl import synth as sy
from distctl.errors import InvalidInputError


def _loop(M, domain=ms.CONTINUOUS, E=None):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    E = np.zeros((n, 0)) if E is None else E
    return sim.ClosedLoop(M, E, [("x", 0, n)], domain, np.eye(n), np.zeros((0, n)), [], [n])


def test_zero_matrix_gives_constant_trajectory():
    traj = sim.simulate(_loop(np.zeros((2, 2))), [1.0, -2.0], T=1.0, dt=0.1)
    assert np.allclose(traj.states, [[1.0, -2.0]] * 11)


def test_scalar_decay_is_exact():
    traj = sim.simulate(_loop([[-1.0]]), [1.0], T=5.0, dt=0.05)
    assert np.max(np.abs(traj.states[:, 0] - np.exp(-traj.times))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000))
def test_halving_the_step_changes_nothing(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((4, 4)) - 2 * np.eye(4)
    E = rng.standard_normal((4, 1))
    cl = _loop(M, E=E)
    x0 = rng.standard_normal(4)
    coarse = sim.simulate(cl, x0, T=2.0, dt=0.1, w=[0.3])
    fine = sim.simulate(cl, x0, T=2.0, dt=0.05, w=[0.3])
    scale = max(1.0, np.max(np.abs(coarse.states)))
    assert np.max(np.abs(coarse.states - fine.states[::2])) <= 1e-9 * scale


def test_discrete_iteration_with_input():
    cl = _loop([[0.5]], ms.DISCRETE, E=np.array([[1.0]]))
    traj = sim.simulate(cl, [0.0], T=3, w=[2.0])
    assert np.allclose(traj.states[:, 0], [0.0, 2.0, 3.0, 3.5])
    with pytest.raises(InvalidInputError):
        sim.simulate(cl, [0.0], T=3, dt=0.5)


def test_simulate_rejects_bad_dimensions():
    cl = _loop(np.eye(2) * -1)
    with pytest.raises(InvalidInputError):
        sim.simulate(cl, [1.0], T=1.0, dt=0.1)
    with pytest.raises(InvalidInputError):
        sim.simulate(cl, [1.0, 1.0], T=1.0, dt=0.0)
    with pytest.raises(InvalidInputError):
        sim.simulate(cl, [1.0, 1.0], T=1.0, dt=0.3)


def test_decay_fit_on_synthetic_data():
    t = np.linspace(0, 10, 1001)
    tr = sim.Trajectory(t, np.exp(-2 * t)[:, None], t[:, None], t[:, None], ms.CONTINUOUS, [], [], 1)
    assert sim.estimate_decay_rate(tr) == pytest.approx(-2.0, abs=1e-6)
    # the log of |cos| dips at zero crossings, so the window needs several periods
    t = np.linspace(0, 20, 2001)
    osc = (np.exp(-t) * np.cos(t))[:, None]
    tr = sim.Trajectory(t, osc, osc, osc, ms.CONTINUOUS, [], [], 1)
    assert sim.estimate_decay_rate(tr) == pytest.approx(-1.0, abs=0.05)


def test_decay_fit_flags_underflow():
    t = np.arange(0, 200.0)
    tr = sim.Trajectory(t, np.exp(-10 * t)[:, None], t[:, None], t[:, None], ms.DISCRETE, [], [], 1)
    _, clamped = sim.fit_decay(tr)
    assert clamped


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_decay_rate_never_beats_the_abscissa_for_normal_loops(seed):
    # for normal M, d/dt log|x| is a weighted mean of eigenvalues, so any fitted slope is <= the abscissa;
    # non-normal or near-defective loops can fit above it on a finite window
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((3, 3))
    M = (S + S.T) / 2
    M -= (lm.spectral_abscissa(M) + rng.uniform(0.2, 2.0)) * np.eye(3)
    traj = sim.simulate(_loop(M), rng.standard_normal(3), T=10.0, dt=0.05)
    assert sim.estimate_decay_rate(traj) <= lm.spectral_abscissa(M) + 1e-6


def test_zero_initial_error_keeps_estimates_on_the_plant_state():
    ctrl = sy.assemble_observer_controller(catalog.three_channel_example(), catalog.output_sharing_cycle(),
                                           alpha=1.0, seed=0)
    cl = sim.assemble_closed_loop(ctrl)
    x = np.array([1.0, -0.5, 2.0])
    x0 = np.concatenate([x, np.tile(x, 3), np.zeros(ctrl.compensator.order)])
    traj = sim.simulate(cl, x0, T=5.0, dt=0.01)
    X = traj.states
    for i in range(1, 4):
        assert np.max(np.abs(X[:, cl.block(f"x_hat{i}")] - X[:, cl.block("x")])) < 1e-9
    # the plant then follows A + sum B_i F_i alone
    Acl = ctrl.plant.A + sum(B @ f for B, f in zip(ctrl.plant.Bs, ctrl.F))
    ref = sim.simulate(_loop(Acl), x, T=5.0, dt=0.01)
    assert np.max(np.abs(ref.states - X[:, :3])) < 1e-9


def test_trajectory_csv(tmp_path):
    ctrl = sy.assemble_observer_controller(catalog.three_channel_example(), catalog.output_sharing_cycle(),
                                           alpha=1.0, seed=0)
    cl = sim.assemble_closed_loop(ctrl)
    traj = sim.simulate(cl, np.ones(cl.dim), T=0.1, dt=0.05)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,y1_1,y1_2,y2,y3,u1,u2,u3"
    assert len(lines) == 4


def test_equilibrium_residual():
    cl = _loop([[-2.0, 0.0], [1.0, -1.0]], E=np.eye(2))
    xe, resid = sim.equilibrium(cl, [2.0, 0.0])
    assert np.allclose(xe, [1.0, 1.0]) and resid < 1e-12
