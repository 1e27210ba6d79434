"""Closed-loop assembly and exact simulation of LTI closed loops."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linmath as lm
from . import mcsys as ms
from . import synth as sy
from .errors import InvalidInputError

log = logging.getLogger(__name__)

FIT_SKIP = 0.4
NORM_FLOOR = 1e-300


@dataclass
class ClosedLoop:
    M: np.ndarray
    E: np.ndarray  # exogenous input map (dim x k)
    layout: list  # (name, start, size)
    domain: str
    Y: np.ndarray  # plant outputs as a function of the state
    U: np.ndarray  # plant inputs as a function of the state
    p: list = field(default_factory=list)
    q: list = field(default_factory=list)
    n_report: int | None = None  # leading states written to CSV; default is the first block

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    def block(self, name):
        for nm, start, size in self.layout:
            if nm == name:
                return slice(start, start + size)
        raise KeyError(name)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    inputs: np.ndarray
    domain: str
    p: list
    q: list
    n_plant: int

    def to_csv(self, path):
        header = ["t"] + [f"x{k + 1}" for k in range(self.n_plant)]
        for i, qi in enumerate(self.q, start=1):
            header += [f"y{i}" if qi == 1 else f"y{i}_{k + 1}" for k in range(qi)]
        for i, pi in enumerate(self.p, start=1):
            header += [f"u{i}" if pi == 1 else f"u{i}_{k + 1}" for k in range(pi)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [t] + list(self.states[k, :self.n_plant]) + list(self.outputs[k]) + list(self.inputs[k])
                w.writerow([f"{v:.12g}" for v in row])


def _layout(blocks):
    out, pos = [], 0
    for name, size in blocks:
        out.append((name, pos, size))
        pos += size
    return out


def _observer_based(ctrl: sy.DistributedController, E_plant, Y_plant):
    sys = ctrl.plant
    n, m, q = sys.n, sys.m, ctrl.q
    comp = ctrl.compensator
    nu = comp.order
    dim = n + m * n + nu
    M = np.zeros((dim, dim))
    xs = slice(0, n)
    est = [slice(n + (i - 1) * n, n + i * n) for i in range(1, m + 1)]
    zs = slice(n + m * n, dim)
    BF = [B @ F for B, F in zip(sys.Bs, ctrl.F)]
    sumBF = sum(BF)
    M[xs, xs] = sys.A
    for i in range(1, m + 1):
        M[xs, est[i - 1]] += BF[i - 1]
        Ki, Ci = ctrl.K[i - 1], sys.Cs[i - 1]
        M[est[i - 1], est[i - 1]] += sys.A + Ki @ Ci + sumBF
        M[est[i - 1], xs] += -Ki @ Ci
        for (a, j), Hij in ctrl.H.items():
            if a != i:
                continue
            M[est[i - 1], est[i - 1]] += Hij
            M[est[i - 1], est[j - 1]] -= Hij
        if i == q and nu:
            M[est[i - 1], zs] += comp.C
    if nu:
        Cq = sys.Cs[q - 1]
        M[zs, zs] = comp.A
        M[zs, est[q - 1]] += ctrl.K_bar @ Cq
        M[zs, xs] -= ctrl.K_bar @ Cq
        for j, Hj in ctrl.H_bar.items():
            M[zs, est[q - 1]] += Hj
            M[zs, est[j - 1]] -= Hj
    U = np.zeros((sum(sys.p), dim))
    row = 0
    for i in range(1, m + 1):
        U[row:row + sys.p[i - 1], est[i - 1]] = ctrl.F[i - 1]
        row += sys.p[i - 1]
    Y = np.zeros((Y_plant.shape[0], dim))
    Y[:, xs] = Y_plant
    E = np.zeros((dim, E_plant.shape[1]))
    E[xs, :] = E_plant
    blocks = [("x", n)] + [(f"x_hat{i}", n) for i in range(1, m + 1)] + [("channel", nu)]
    return ClosedLoop(M, E, _layout(blocks), sys.domain, Y, U, sys.p, sys.q)


def _observer_free(ctrl: sy.DistributedController, E_plant, Y_plant):
    sys = ctrl.plant
    lifted = ctrl.lifted()
    ext = lifted.system
    q, comp = ctrl.q, ctrl.compensator
    nu = comp.order
    Mf = ext.A + sum(B @ f @ C for B, f, C in zip(ext.Bs, ctrl.F_bar, ext.Cs))
    Bq, Cq = ext.Bs[q - 1], ext.Cs[q - 1]
    M = sy.compensated_matrix(Mf, Bq, Cq, comp)
    dim = M.shape[0]
    # v_i = F̄_i ȳ_i (+ channel controller at q); plant input u_i is the first p_i entries of v_i
    U = np.zeros((sum(sys.p), dim))
    row = 0
    for i in range(1, sys.m + 1):
        p = sys.p[i - 1]
        V = np.zeros((ext.p[i - 1], dim))
        V[:, :ext.n] = ctrl.F_bar[i - 1] @ ext.Cs[i - 1]
        if i == q:
            V[:, :ext.n] += comp.D @ Cq
            V[:, ext.n:] += comp.C
        U[row:row + p] = V[:p]
        row += p
    Y = np.zeros((Y_plant.shape[0], dim))
    Y[:, :sys.n] = Y_plant
    E = np.zeros((dim, E_plant.shape[1]))
    E[:sys.n, :] = E_plant
    blocks = [(b.name, b.size) for b in lifted.layout] + [("channel", nu)]
    return ClosedLoop(M, E, _layout(blocks), sys.domain, Y, U, sys.p, sys.q)


def assemble_closed_loop(ctrl: sy.DistributedController, E_plant=None, Y_plant=None,
                         output_sizes=None) -> ClosedLoop:
    """Closed loop over (plant, controller states).

    ``E_plant`` maps exogenous inputs into the plant state; ``Y_plant`` picks
    the reported outputs (default: the plant's channel outputs).
    """
    E_plant = np.zeros((ctrl.plant.n, 0)) if E_plant is None else lm.as_matrix(E_plant, "E")
    Y_plant = ctrl.plant.C if Y_plant is None else lm.as_matrix(Y_plant, "Y")
    if E_plant.shape[0] != ctrl.plant.n:
        raise InvalidInputError(f"exogenous map has {E_plant.shape[0]} rows, plant has {ctrl.plant.n} states")
    if ctrl.kind == sy.OBSERVER_BASED:
        cl = _observer_based(ctrl, E_plant, Y_plant)
    elif ctrl.kind == sy.OBSERVER_FREE:
        cl = _observer_free(ctrl, E_plant, Y_plant)
    else:
        raise InvalidInputError(f"unknown controller kind {ctrl.kind!r}")
    if output_sizes is not None:
        cl.q = list(output_sizes)
    return cl


def simulate(cl: ClosedLoop, x0, T: float, dt: float | None = None, w=None) -> Trajectory:
    """Exact sampling of x' = Mx + Ew (or x+ = Mx + Ew) for constant w."""
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != cl.dim:
        raise InvalidInputError(f"initial state has {x0.size} entries, closed loop has {cl.dim}")
    k = cl.E.shape[1]
    w = np.zeros(k) if w is None else np.asarray(w, dtype=float).ravel()
    if w.size != k:
        raise InvalidInputError(f"exogenous input has {w.size} entries, expected {k}")
    discrete = cl.domain == ms.DISCRETE
    if discrete:
        dt = 1.0 if dt is None else dt
        if dt != 1.0:
            raise InvalidInputError("discrete closed loops step with dt = 1")
    elif dt is None or dt <= 0:
        raise InvalidInputError("continuous simulation needs dt > 0")
    steps = int(round(T / dt))
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise InvalidInputError(f"horizon T={T} is not a whole number of steps of {dt}")
    if discrete:
        Phi, gam = cl.M, cl.E @ w
    else:
        aug = np.zeros((cl.dim + 1, cl.dim + 1))
        aug[:cl.dim, :cl.dim] = cl.M
        aug[:cl.dim, cl.dim] = cl.E @ w
        big = sla.expm(aug * dt)
        Phi, gam = big[:cl.dim, :cl.dim], big[:cl.dim, cl.dim]
    X = np.empty((steps + 1, cl.dim))
    X[0] = x0
    for t in range(steps):
        X[t + 1] = Phi @ X[t] + gam
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("simulation diverged to non-finite values")
    times = np.arange(steps + 1) * dt
    n_plant = cl.n_report if cl.n_report is not None else cl.layout[0][2]
    return Trajectory(times, X, X @ cl.Y.T, X @ cl.U.T, cl.domain, cl.p, cl.q, n_plant)


def fit_decay(traj: Trajectory, skip: float = FIT_SKIP, offset=None) -> tuple[float, bool]:
    """Slope of log||x(t) - offset|| over the final part of the horizon, and a clamp flag."""
    X = traj.states if offset is None else traj.states - np.asarray(offset)[None, :]
    norms = np.linalg.norm(X, axis=1)
    clamped = bool(np.any(norms < NORM_FLOOR))
    if clamped:
        log.warning("state norm fell below %g; decay fit clamped", NORM_FLOOR)
    logs = np.log(np.maximum(norms, NORM_FLOOR))
    start = int(np.floor(skip * (len(norms) - 1)))
    t, y = traj.times[start:], logs[start:]
    if t.size < 2:
        raise InvalidInputError("trajectory too short to fit a decay rate")
    slope = np.polyfit(t, y, 1)[0]
    return float(slope), clamped


def estimate_decay_rate(traj: Trajectory) -> float:
    """Per-unit-time (or per-step) exponential rate; log of the radius for discrete loops."""
    return fit_decay(traj)[0]


def equilibrium(cl: ClosedLoop, w) -> tuple[np.ndarray, float]:
    """Constant state for constant input w, with the residual of the defining equation."""
    w = np.asarray(w, dtype=float).ravel()
    rhs = cl.E @ w
    if cl.domain == ms.DISCRETE:
        lhs = np.eye(cl.dim) - cl.M
        xe = np.linalg.solve(lhs, rhs)
        resid = np.linalg.norm(lhs @ xe - rhs)
    else:
        xe = np.linalg.solve(cl.M, -rhs)
        resid = np.linalg.norm(cl.M @ xe + rhs)
    return xe, float(resid)


def summary(cl: ClosedLoop, traj: Trajectory | None = None) -> dict:
    ev = lm.spectrum(cl.M)
    out = {"dimension": cl.dim, "domain": cl.domain,
           "spectral_abscissa": float(np.max(ev.real)) if ev.size else None,
           "spectral_radius": float(np.max(np.abs(ev))) if ev.size else None}
    if traj is not None:
        rate, clamped = fit_decay(traj)
        out["decay_rate"] = rate
        out["decay_fit_clamped"] = clamped
        out["final_state_norm"] = float(np.linalg.norm(traj.states[-1]))
    return out
