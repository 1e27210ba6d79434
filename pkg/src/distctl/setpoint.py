"""Distributed set-point regulation through integrator augmentation.

Agent i integrates its own tracking error y_i - r_i; any controller that
stabilizes the augmented, reference-free plant drives every y_i to r_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import extend as ex
from . import linmath as lm
from . import mcsys as ms
from . import sim
from . import synth as sy
from .errors import DomainError, InvalidInputError

OBSERVER_BASED = sy.OBSERVER_BASED
OBSERVER_FREE = sy.OBSERVER_FREE


@dataclass
class SetpointProblem:
    sys: ms.MultiChannelSystem
    r: np.ndarray

    def __post_init__(self):
        if any(qi != 1 for qi in self.sys.q):
            raise DomainError(f"set-point regulation needs scalar outputs, got output sizes {self.sys.q}")
        r = np.asarray(self.r, dtype=float).ravel()
        if r.size != self.sys.m:
            raise InvalidInputError(f"need {self.sys.m} references, got {r.size}")
        self.r = r


@dataclass
class AugmentedSystem:
    system: ms.MultiChannelSystem
    n: int
    m: int
    E: np.ndarray  # reference input map: state' gets E r


def augment_setpoint(problem: SetpointProblem) -> AugmentedSystem:
    sys = problem.sys
    n, m = sys.n, sys.m
    C = sys.C
    low = np.eye(m) if sys.is_discrete else np.zeros((m, m))
    A = np.block([[sys.A, np.zeros((n, m))], [C, low]])
    Bs = tuple(np.vstack([B, np.zeros((m, B.shape[1]))]) for B in sys.Bs)
    Cs = tuple(np.hstack([np.zeros((1, n)), np.eye(m)[i:i + 1]]) for i in range(m))
    E = np.vstack([np.zeros((n, m)), -np.eye(m)])
    return AugmentedSystem(ms.MultiChannelSystem(A, Bs, Cs, sys.domain), n, m, E)


def check_setpoint_feasible(problem: SetpointProblem) -> ex.ConditionReport:
    """rank [A B; C 0] = n + m (A - I in place of A for discrete plants)."""
    sys = problem.sys
    n, m = sys.n, sys.m
    A0 = sys.A - np.eye(n) if sys.is_discrete else sys.A
    P = np.block([[A0, sys.B], [sys.C, np.zeros((m, sys.B.shape[1]))]])
    rr = lm.numerical_rank(P, rtol=ms.PENCIL_RTOL)
    aug = augment_setpoint(problem).system
    ctrb = ms.jointly_controllable(aug)
    obs = ms.jointly_observable(aug)
    smallest = float(rr.singular_values[n + m - 1]) if rr.singular_values.size >= n + m else 0.0
    details = {"rank": rr.rank, "required": n + m, "sigma_min": smallest,
               "tolerance": rr.tolerance_used,
               "margin": smallest / rr.tolerance_used if rr.tolerance_used else None,
               "augmented_jointly_controllable": ctrb, "augmented_jointly_observable": obs}
    verdict = rr.rank == n + m and ctrb and obs
    return ex.ConditionReport(verdict, "setpoint_rank", [], details)


@dataclass
class SetpointSolution:
    controller: sy.DistributedController
    closed_loop: sim.ClosedLoop
    augmented: AugmentedSystem


def solve_setpoint(problem: SetpointProblem, graph, method: str = OBSERVER_BASED, alpha: float = 1.0,
                   rho: float = 0.5, seed: int = 0, q: int | None = None, n_i=1,
                   mode: str = sy.FULL) -> SetpointSolution:
    rep = check_setpoint_feasible(problem)
    if not rep.verdict:
        raise DomainError(f"set-point problem infeasible: rank [A B; C 0] = {rep.details['rank']} "
                          f"< {rep.details['required']} or augmented plant not jointly controllable/observable")
    aug = augment_setpoint(problem)
    if method == OBSERVER_BASED:
        ctrl = sy.assemble_observer_controller(aug.system, graph, q=q or 1, alpha=alpha, rho=rho,
                                               seed=seed, mode=mode)
    elif method == OBSERVER_FREE:
        ctrl = sy.observer_free_synthesis(aug.system, graph, n_i, q=q, alpha=alpha, rho=rho,
                                          seed=seed, mode=mode)
    else:
        raise InvalidInputError(f"unknown set-point method {method!r}")
    ctrl.certificate["setpoint"] = {"n": aug.n, "m": aug.m, "reference": problem.r.tolist()}
    cl = sim.assemble_closed_loop(ctrl, aug.E, *plant_maps(ctrl)[1:])
    cl.n_report = aug.n
    return SetpointSolution(ctrl, cl, aug)


def plant_maps(ctrl: sy.DistributedController):
    """(reference map, original output map, output sizes) for an augmented design, else Nones."""
    meta = ctrl.certificate.get("setpoint")
    if not meta:
        return None, None, None
    n, m = int(meta["n"]), int(meta["m"])
    E = np.vstack([np.zeros((n, m)), -np.eye(m)])
    Y = ctrl.plant.A[n:, :n]
    Y = np.hstack([Y, np.zeros((m, m))])
    return E, Y, [1] * m


def steady_outputs(sol: SetpointSolution, r) -> tuple[np.ndarray, float]:
    """Equilibrium plant outputs for reference r and the equilibrium residual."""
    xe, resid = sim.equilibrium(sol.closed_loop, r)
    return sol.closed_loop.Y @ xe, resid
