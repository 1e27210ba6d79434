"""Controller synthesis.

Two pipelines are provided. The observer-based one gives every agent a full
state estimate driven by a distributed observer whose error dynamics are
shaped by one channel controller. The observer-free one augments the plant
with shared integrator states (optionally lifted over delays), closes a
generic static decentralized loop and adds one channel controller.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import place_poles

from . import extend as ex
from . import linmath as lm
from . import mcsys as ms
from .errors import DomainError, InvalidInputError, SynthesisError
from .graphs import (DelayedGraph, DirectedGraph, graph_from_dict, graph_to_dict,
                     is_strongly_connected, neighbor_sets, spanning_tree)

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 50
G_GRID = tuple(range(1, 11))
PERTURBATION = 0.1
VERIFY_RTOL = 1e-9
SPECTRUM_RTOL = 1e-6
FULL = "full"
MINIMAL = "minimal"
OBSERVER_BASED = "observer_based"
OBSERVER_FREE = "observer_free"


# ---------------------------------------------------------------- G matrix

def construct_G(graph: DirectedGraph, q: int, v=None) -> np.ndarray:
    """Zero-row-sum matrix on a spanning out-tree from q with (G, b_q) controllable."""
    if not is_strongly_connected(graph):
        raise DomainError("construct_G needs a strongly connected graph")
    m = graph.m
    if v is None:
        v = [0.0 if i == q else float(i) for i in range(1, m + 1)]
    v = [float(x) for x in v]
    if len(v) != m:
        raise InvalidInputError(f"v must have {m} entries")
    if v[q - 1] != 0.0:
        raise InvalidInputError(f"v_q must be zero, got v_{q}={v[q - 1]}")
    others = [v[i - 1] for i in range(1, m + 1) if i != q]
    if any(x == 0.0 for x in others) or len(set(others)) != len(others):
        raise InvalidInputError("entries of v other than v_q must be distinct and nonzero")
    tree = spanning_tree(graph, q)
    G = np.zeros((m, m))
    for i, parent in tree.parent.items():
        G[i - 1, i - 1] = v[i - 1]
        G[i - 1, parent - 1] = -v[i - 1]
    return G


def unit(m: int, i: int) -> np.ndarray:
    b = np.zeros((m, 1))
    b[i - 1, 0] = 1.0
    return b


def krylov_rank(A, B, blocks: int) -> int:
    """Rank of [B, AB, ...] with each block scaled to unit norm."""
    cols, K = [], B
    for _ in range(blocks):
        nrm = np.linalg.norm(K)
        cols.append(K / nrm if nrm > 0 else K)
        K = A @ cols[-1]
    return lm.numerical_rank(np.hstack(cols), rtol=VERIFY_RTOL).rank


# ---------------------------------------------------------------- compact error system

@dataclass
class CompactErrorSystem:
    n: int
    m: int
    A_tilde: np.ndarray
    B_tilde: list
    C_hat: list
    C_tilde: list
    Q: np.ndarray
    others: dict  # agent -> sorted neighbors other than itself (row order of C_tilde)

    def closed(self, K, H) -> np.ndarray:
        """Ã + sum B̃_i (K_i Ĉ_i + H_i C̃_i); ``H[i]`` is the row of blocks H_ij."""
        M = self.A_tilde.copy()
        for i in range(1, self.m + 1):
            inner = K[i - 1] @ self.C_hat[i - 1]
            if self.others[i]:
                inner = inner + H[i] @ self.C_tilde[i - 1]
            M += self.B_tilde[i - 1] @ inner
        return M

    def output(self, q) -> np.ndarray:
        return np.vstack([self.C_hat[q - 1], self.C_tilde[q - 1]])


def build_compact_error_system(sys: ms.MultiChannelSystem, graph: DirectedGraph, F) -> CompactErrorSystem:
    n, m = sys.n, sys.m
    if graph.m != m:
        raise InvalidInputError(f"graph has {graph.m} vertices, system has {m} channels")
    F = [lm.as_matrix(f, f"F_{i}") if np.size(f) else np.zeros((sys.p[i - 1], n))
         for i, f in enumerate(F, start=1)]
    if len(F) != m or any(f.shape != (sys.p[i], n) for i, f in enumerate(F)):
        raise InvalidInputError("each F_i must be p_i x n")
    BF = [B @ f for B, f in zip(sys.Bs, F)]
    Acl = sys.A + sum(BF)
    Q = np.kron(np.ones((m, 1)), np.hstack(BF))
    A_tilde = np.kron(np.eye(m), Acl) - Q
    I = np.eye(n)
    B_tilde = [np.kron(unit(m, i), I) for i in range(1, m + 1)]
    C_hat = [sys.Cs[i - 1] @ B_tilde[i - 1].T for i in range(1, m + 1)]
    nbrs = neighbor_sets(graph)
    others = {i: [j for j in nbrs[i] if j != i] for i in range(1, m + 1)}
    C_tilde = []
    for i in range(1, m + 1):
        rows = [np.kron((unit(m, i) - unit(m, j)).T, I) for j in others[i]]
        C_tilde.append(np.vstack(rows) if rows else np.zeros((0, m * n)))
    return CompactErrorSystem(n, m, A_tilde, B_tilde, C_hat, C_tilde, Q, others)


@dataclass
class GainSample:
    seed: int
    attempts: int
    g: float
    controllability_index: dict
    observable: dict

    def to_dict(self) -> dict:
        return {"seed": self.seed, "attempts": self.attempts, "g": self.g,
                "controllability_index": {str(k): v for k, v in sorted(self.controllability_index.items())},
                "observable": {str(k): v for k, v in sorted(self.observable.items())}}


def _random_arc_weights(ces, rng):
    h = {}
    for i in range(1, ces.m + 1):
        h[i] = rng.uniform(-1.0, 1.0, size=len(ces.others[i]))
    return h


def _weights_matrix(ces, h):
    M = np.zeros((ces.m, ces.m))
    for i in range(1, ces.m + 1):
        for w, j in zip(h[i], ces.others[i]):
            M[i - 1, i - 1] += w
            M[i - 1, j - 1] -= w
    return M


def verify_error_system(ces: CompactErrorSystem, K, H):
    M = ces.closed(K, H)
    idx, obs = {}, {}
    for q in range(1, ces.m + 1):
        rank = krylov_rank(M, ces.B_tilde[q - 1], ces.m)
        idx[q] = ces.m if rank == ces.m * ces.n else None
        obs[q] = lm.pbh_observable(ces.output(q), M, rtol=VERIFY_RTOL)
    return idx, obs


def sample_generic_gains(ces: CompactErrorSystem, graph: DirectedGraph, seed: int = 0,
                         max_attempts: int = MAX_ATTEMPTS):
    """Draw K_i and H_ij until every channel gives index-m controllability and observability.

    H_ij = g h_ij I_n + small perturbation, with h a random zero-row-sum
    weighting on the arcs whose scalar pair is controllable from every vertex;
    g is swept over a small grid.
    """
    if not is_strongly_connected(graph):
        raise DomainError("gain sampling needs a strongly connected graph")
    rng = np.random.default_rng(seed)
    n, m = ces.n, ces.m
    attempts = 0
    rejected = []
    while attempts < max_attempts:
        h = _random_arc_weights(ces, rng)
        W = _weights_matrix(ces, h)
        if m > 1 and not all(krylov_rank(W, unit(m, q), m) == m for q in range(1, m + 1)):
            attempts += 1
            rejected.append("scalar weights")
            continue
        for g in G_GRID:
            attempts += 1
            K = [rng.uniform(-1.0, 1.0, size=(n, C.shape[0])) for C in ces.C_hat]
            H = {}
            for i in range(1, m + 1):
                blocks = [g * w * np.eye(n) + PERTURBATION * rng.uniform(-1.0, 1.0, size=(n, n))
                          for w in h[i]]
                if blocks:
                    H[i] = np.hstack(blocks)
            idx, obs = verify_error_system(ces, K, H)
            if all(v == m for v in idx.values()) and all(obs.values()):
                return K, H, GainSample(seed, attempts, float(g), idx, obs)
            rejected.append(f"g={g}")
            log.debug("gain sample rejected at g=%s", g)
            if attempts >= max_attempts:
                break
    raise SynthesisError(f"no verified gain sample in {max_attempts} attempts",
                         {"rejected": rejected[-10:], "seed": seed})


# ---------------------------------------------------------------- target spectra

def default_spectrum(size: int, domain: str, alpha: float = 1.0, rho: float = 0.5,
                     reals: int = 0) -> list[complex]:
    """Well-separated conjugate-closed targets.

    Continuous: points on an arc left of -alpha - 0.5. Discrete: points on the
    circle of radius 0.6 rho. At least ``reals`` real points are used (one
    more if parity requires it).
    """
    if size == 0:
        return []
    reals = min(size, max(reals, 0))
    if (size - reals) % 2:
        reals += 1
    pairs = (size - reals) // 2
    out = []
    if domain == ms.DISCRETE:
        radius = 0.6 * rho
        span = np.linspace(-radius, radius, reals + 2)[1:-1] if reals > 1 else [radius] * reals
        out += [complex(x) for x in span]
        for t in np.linspace(0.0, np.pi, pairs + 2)[1:-1]:
            out += [radius * np.exp(1j * t), radius * np.exp(-1j * t)]
    else:
        radius = 1.0 + 0.05 * size
        out += [complex(-(alpha + 0.5) - radius * (1.0 - 0.3 * k / max(reals, 1))) for k in range(reals)]
        for t in np.linspace(0.0, 0.9 * np.pi / 2, pairs + 2)[1:-1]:
            z = -(alpha + 0.5) - radius * np.cos(t) + 1j * radius * np.sin(t)
            out += [z, z.conjugate()]
    return [complex(z) for z in out]


def default_target(plant_dim: int, nu: int, domain, alpha, rho, mode) -> list[complex]:
    """Targets sized for the compensator; full order splits them into two halves."""
    reals = 2 if mode == FULL and plant_dim % 2 else 0
    return default_spectrum(plant_dim + nu, domain, alpha, rho, reals)


def check_symmetric(spec) -> list[complex]:
    spec = [complex(z) for z in spec]
    pool = list(spec)
    while pool:
        z = pool.pop(0)
        if abs(z.imag) <= 1e-12 * max(1.0, abs(z)):
            continue
        k = min(range(len(pool)), key=lambda i: abs(pool[i] - z.conjugate()), default=None)
        if k is None or abs(pool[k] - z.conjugate()) > 1e-9 * max(1.0, abs(z)):
            raise InvalidInputError(f"target spectrum is not closed under conjugation at {z}")
        pool.pop(k)
    return spec


def _split_halves(spec, n):
    """Split a conjugate-closed list of size 2n into two conjugate-closed halves.

    Groups are dealt alternately so repeated values land in different halves.
    """
    tiny = lambda z: abs(z.imag) <= 1e-12 * max(1.0, abs(z))
    reals = sorted((complex(z.real, 0.0) for z in spec if tiny(z)), key=lambda z: z.real)
    pairs = sorted((z for z in spec if not tiny(z) and z.imag > 0), key=lambda z: (z.real, z.imag))
    p1 = min(len(pairs), n // 2)
    r1 = n - 2 * p1
    if r1 > len(reals):
        raise InvalidInputError("target spectrum cannot be split into two conjugate-closed halves; "
                                "with an odd plant dimension include at least two real targets")
    pick_p = set(list(range(0, len(pairs), 2))[:p1])
    pick_p |= set([k for k in range(len(pairs)) if k not in pick_p][:p1 - len(pick_p)])
    pick_r = set(list(range(0, len(reals), 2))[:r1])
    pick_r |= set([k for k in range(len(reals)) if k not in pick_r][:r1 - len(pick_r)])
    first, second = [], []
    for k, z in enumerate(pairs):
        (first if k in pick_p else second).extend([z, z.conjugate()])
    for k, z in enumerate(reals):
        (first if k in pick_r else second).append(z)
    return first, second


# ---------------------------------------------------------------- channel compensator

@dataclass
class ChannelCompensator:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    mode: str

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist(), "D": self.D.tolist(),
                "mode": self.mode, "order": self.order}

    @classmethod
    def from_dict(cls, d, n_in, n_out):
        nu = int(d.get("order", 0))
        A = np.array(d["A"], dtype=float).reshape(nu, nu)
        B = np.array(d["B"], dtype=float).reshape(nu, n_out)
        C = np.array(d["C"], dtype=float).reshape(n_in, nu)
        D = np.array(d["D"], dtype=float).reshape(n_in, n_out)
        return cls(A, B, C, D, d.get("mode", FULL))


def compensated_matrix(A, B, C, comp: ChannelCompensator) -> np.ndarray:
    """Closed loop of (A, B, C) with u = C̄z + D̄y, z' = Āz + B̄y."""
    top = np.hstack([A + B @ comp.D @ C, B @ comp.C])
    bottom = np.hstack([comp.B @ C, comp.A])
    return np.vstack([top, bottom])


def compensator_order(A, B, C, mode: str) -> int:
    if mode == FULL:
        return A.shape[0]
    if mode == MINIMAL:
        return min(lm.controllability_index(A, B), lm.observability_index(C, A)) - 1
    raise InvalidInputError(f"unknown compensator mode {mode!r}")


def _place(A, B, poles):
    """Gain K with spec(A - B K) = poles; B may be rank deficient."""
    U, sv, Vt = np.linalg.svd(B, full_matrices=False)
    r = lm.numerical_rank(B).rank
    if r == 0:
        raise SynthesisError("input matrix is zero; nothing to place with")
    Br = U[:, :r] * sv[:r]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = place_poles(A, Br, np.asarray(poles), method="YT")
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SynthesisError(f"pole placement failed: {exc}") from exc
    return Vt[:r, :].T @ res.gain_matrix


def _full_order(A, B, C, spec):
    n = A.shape[0]
    first, second = _split_halves(spec, n)
    K = _place(A, B, first)
    L = _place(A.T, C.T, second).T
    return ChannelCompensator(A - B @ K - L @ C, L, -K, np.zeros((B.shape[1], C.shape[0])), FULL)


def _adjugate_numerator(A, b, C):
    """Coefficients N_k (ascending) of C adj(sI - A) b and the char poly (ascending)."""
    n = A.shape[0]
    a = np.real(np.poly(A))[::-1]  # a[k] multiplies s^k, a[n] = 1
    R = [None] * n
    R[n - 1] = np.eye(n)
    for k in range(n - 1, 0, -1):
        R[k - 1] = A @ R[k] + a[k] * np.eye(n)
    N = [C @ R[k] @ b for k in range(n)]  # each p x 1
    return a, N


def _single_input_design(A, b, C, nu, target):
    """Solve a d + P N = target for monic d (deg nu) and row P (deg nu); return w = -(P/d) y."""
    n = A.shape[0]
    p = C.shape[0]
    a, N = _adjugate_numerator(A, b, C)
    t = np.real(np.poly(np.asarray(target)))[::-1]
    rows = n + nu
    cols = nu + p * (nu + 1)
    M = np.zeros((rows, cols))
    rhs = t[:rows].copy()
    for k in range(n + 1):  # a(s) * s^nu term from monic d
        if k + nu < rows:
            rhs[k + nu] -= a[k]
    for l in range(nu):  # d_l s^l a(s)
        for k in range(n + 1):
            if k + l < rows:
                M[k + l, l] += a[k]
    for l in range(nu + 1):  # P_l s^l N(s)
        for k in range(n):
            if k + l < rows:
                M[k + l, nu + l * p: nu + (l + 1) * p] += N[k][:, 0]
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    resid = np.linalg.norm(M @ sol - rhs) / max(1.0, np.linalg.norm(rhs))
    if lm.numerical_rank(M).rank < rows or resid > 1e-8:
        raise SynthesisError("minimal-order equation has no solution for this plant; use mode 'full'",
                             {"residual": float(resid), "order": nu})
    d = np.concatenate([sol[:nu], [1.0]])
    P = [sol[nu + l * p: nu + (l + 1) * p].reshape(1, p) for l in range(nu + 1)]
    # P(s)/d(s) = P_nu + R(s)/d(s)
    R = [P[l] - P[nu] * d[l] for l in range(nu)]
    Ac = np.zeros((nu, nu))
    Bc = np.zeros((nu, p))
    for r in range(nu):
        Ac[r, 0] = -d[nu - 1 - r]
        if r + 1 < nu:
            Ac[r, r + 1] = 1.0
        Bc[r, :] = R[nu - 1 - r]
    Cc = np.zeros((1, nu))
    if nu:
        Cc[0, 0] = 1.0
    return Ac, Bc, -Cc, -P[nu]


def _minimal_order(A, B, C, spec, nu, rng, draws: int = 20):
    """Reduce to one input (or one output) by a random mixing vector, solve the
    polynomial equation, refine, and keep the best of several draws."""
    kc = lm.controllability_index(A, B)
    ko = lm.observability_index(C, A)
    dual = kc < ko
    if dual:
        A, B, C = A.T, C.T, B.T
    n = A.shape[0]
    best, best_err = None, np.inf
    for attempt in range(draws):
        F0 = np.zeros((B.shape[1], C.shape[0])) if attempt == 0 else \
            0.5 * rng.uniform(-1.0, 1.0, size=(B.shape[1], C.shape[0]))
        A0 = A + B @ F0 @ C
        b = rng.uniform(-1.0, 1.0, size=(B.shape[1], 1))
        if lm.numerical_rank(lm.controllability_matrix(A0, B @ b), rtol=VERIFY_RTOL).rank < n:
            continue
        try:
            Ac, Bc, Cc, Dc = _single_input_design(A0, B @ b, C, nu, spec)
        except SynthesisError:
            continue
        comp = ChannelCompensator(Ac, Bc, b @ Cc, b @ Dc + F0, MINIMAL)
        comp = _refine(A, B, C, comp, spec)
        err, _ = lm.match_spectra(lm.spectrum(compensated_matrix(A, B, C, comp)), spec)
        if err < best_err:
            best, best_err = comp, err
        if best_err <= 1e-10:
            break
    if best is None:
        raise SynthesisError("minimal-order compensator construction failed; use mode 'full'",
                             {"order": nu})
    if dual:
        best = ChannelCompensator(best.A.T, best.C.T, best.B.T, best.D.T, MINIMAL)
    return best


def _refine(A, B, C, comp: ChannelCompensator, spec, iters: int = 30) -> ChannelCompensator:
    """Gauss-Newton on (Ā, B̄, D̄) pulling the closed-loop eigenvalues onto ``spec``.

    The closed loop is affine in these entries, so each eigenvalue derivative
    is w* (dM) v / (w* v) from left/right eigenvectors.
    """
    import scipy.linalg as sla

    target = np.asarray(spec, dtype=complex)
    n, nu = A.shape[0], comp.order
    best = comp
    best_err, _ = lm.match_spectra(lm.spectrum(compensated_matrix(A, B, C, comp)), target)
    cur = comp
    for _ in range(iters):
        if best_err <= 1e-12:
            break
        M = compensated_matrix(A, B, C, cur)
        lam, W, V = sla.eig(M, left=True, right=True)
        _, matched = lm.match_spectra(lam, target)
        idx = [int(np.argmin(np.abs(lam - z))) for z in matched]
        rows = []
        for k in idx:
            v, w = V[:, k], W[:, k]
            denom = np.conj(w) @ v
            wx, wz = np.conj(w[:n]) / denom, np.conj(w[n:]) / denom
            Cv = C @ v[:n]
            vz = v[n:]
            gD = np.outer(wx @ B, Cv).ravel()
            gB = np.outer(wz, Cv).ravel()
            gA = np.outer(wz, vz).ravel()
            rows.append(np.concatenate([gD, gB, gA]))
        J = np.array(rows)
        r = matched - target
        Jr = np.vstack([J.real, J.imag])
        rr = np.concatenate([r.real, r.imag])
        step, *_ = np.linalg.lstsq(Jr, -rr, rcond=None)
        sD, sB = comp.D.size, comp.B.size
        cur = ChannelCompensator(
            cur.A + step[sD + sB:].reshape(nu, nu),
            cur.B + step[sD:sD + sB].reshape(cur.B.shape),
            cur.C,
            cur.D + step[:sD].reshape(cur.D.shape),
            cur.mode,
        )
        err, _ = lm.match_spectra(lm.spectrum(compensated_matrix(A, B, C, cur)), target)
        if not np.isfinite(err):
            break
        if err < best_err:
            best, best_err = cur, err
    return best


def design_channel_compensator(A, B, C, spec, mode: str = FULL, seed: int = 0) -> ChannelCompensator:
    """Dynamic output feedback for (A, B, C) whose closed-loop spectrum equals ``spec``."""
    A, B, C = lm.as_matrix(A, "A"), lm.as_matrix(B, "B"), lm.as_matrix(C, "C")
    if not lm.pbh_controllable(A, B, rtol=VERIFY_RTOL) or not lm.pbh_observable(C, A, rtol=VERIFY_RTOL):
        raise DomainError("channel plant must be controllable and observable")
    nu = compensator_order(A, B, C, mode)
    spec = check_symmetric(spec)
    if len(spec) != A.shape[0] + nu:
        raise InvalidInputError(f"need {A.shape[0] + nu} target eigenvalues for mode {mode!r}, got {len(spec)}")
    if mode == FULL:
        comp = _full_order(A, B, C, spec)
    else:
        comp = _minimal_order(A, B, C, spec, nu, np.random.default_rng(seed))
    err, _ = lm.match_spectra(lm.spectrum(compensated_matrix(A, B, C, comp)), spec)
    if err > 1e-10:
        comp = _refine(A, B, C, comp, spec)
        err, _ = lm.match_spectra(lm.spectrum(compensated_matrix(A, B, C, comp)), spec)
    if err > SPECTRUM_RTOL:
        hint = "; the minimal-order design is ill-conditioned here, use mode 'full'" if mode == MINIMAL else ""
        raise SynthesisError(f"assigned spectrum misses target by {err:.2e} (relative){hint}",
                             {"mode": mode, "error": err})
    return comp


# ---------------------------------------------------------------- controllers

@dataclass
class DistributedController:
    kind: str
    q: int
    plant: ms.MultiChannelSystem
    graph: object
    compensator: ChannelCompensator
    target: list
    seed: int
    certificate: dict = field(default_factory=dict)
    F: list = field(default_factory=list)
    K: list = field(default_factory=list)
    H: dict = field(default_factory=dict)  # (i, j) -> n x n
    K_bar: np.ndarray | None = None
    H_bar: dict = field(default_factory=dict)  # j -> nu x n
    n_i: list = field(default_factory=list)
    holding: list = field(default_factory=list)
    F_bar: list = field(default_factory=list)

    def lifted(self) -> ex.LiftedSystem:
        if isinstance(self.graph, DelayedGraph):
            return ex.build_holding_lift(self.plant, self.graph, self.n_i, self.holding)
        return ex.build_extension(self.plant, self.graph, self.n_i)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind, "q": self.q, "seed": self.seed,
            "plant": ms.system_to_dict(self.plant), "graph": graph_to_dict(self.graph),
            "channel_controller": self.compensator.to_dict(),
            "target_spectrum": [ms._complex_json(z) for z in self.target],
            "certificate": self.certificate,
        }
        if self.kind == OBSERVER_BASED:
            out["F"] = {str(i): f.tolist() for i, f in enumerate(self.F, start=1)}
            out["K"] = {str(i): k.tolist() for i, k in enumerate(self.K, start=1)}
            out["H"] = {f"{i},{j}": h.tolist() for (i, j), h in sorted(self.H.items())}
            out["K_bar"] = self.K_bar.tolist()
            out["H_bar"] = {str(j): h.tolist() for j, h in sorted(self.H_bar.items())}
        else:
            out["n_i"] = list(self.n_i)
            out["holding"] = sorted(self.holding)
            out["F_bar"] = {str(i): f.tolist() for i, f in enumerate(self.F_bar, start=1)}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "DistributedController":
        try:
            plant = ms.system_from_dict(d["plant"])
            graph = graph_from_dict(d["graph"])
            q = int(d["q"])
            kind = d["kind"]
            target = [complex(a, b) for a, b in d["target_spectrum"]]
            n = plant.n
            ctrl = cls(kind, q, plant, graph, None, target, int(d.get("seed", 0)), d.get("certificate", {}))
            if kind == OBSERVER_BASED:
                ctrl.F = [np.array(d["F"][str(i)], dtype=float).reshape(plant.p[i - 1], n)
                          for i in range(1, plant.m + 1)]
                ctrl.K = [np.array(d["K"][str(i)], dtype=float).reshape(n, plant.q[i - 1])
                          for i in range(1, plant.m + 1)]
                ctrl.H = {tuple(int(x) for x in key.split(",")): np.array(v, dtype=float).reshape(n, n)
                          for key, v in d["H"].items()}
                comp = d["channel_controller"]
                nu = int(comp.get("order", 0))
                ctrl.K_bar = np.array(d["K_bar"], dtype=float).reshape(nu, plant.q[q - 1])
                ctrl.H_bar = {int(j): np.array(v, dtype=float).reshape(nu, n) for j, v in d["H_bar"].items()}
                n_out = plant.q[q - 1] + n * len(ctrl.H_bar)
                ctrl.compensator = ChannelCompensator.from_dict(comp, n, n_out)
            elif kind == OBSERVER_FREE:
                ctrl.n_i = [int(k) for k in d["n_i"]]
                ctrl.holding = [int(h) for h in d.get("holding", [])]
                lifted = ctrl.lifted().system
                ctrl.F_bar = [np.array(d["F_bar"][str(i)], dtype=float).reshape(lifted.p[i - 1], lifted.q[i - 1])
                              for i in range(1, plant.m + 1)]
                ctrl.compensator = ChannelCompensator.from_dict(d["channel_controller"], lifted.p[q - 1],
                                                                lifted.q[q - 1])
            else:
                raise InvalidInputError(f"unknown controller kind {kind!r}")
            return ctrl
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"malformed controller document: {exc}") from exc


def state_feedback(sys: ms.MultiChannelSystem, poles) -> list[np.ndarray]:
    """Place spec(A + sum B_i F_i) using the stacked input matrix, then split by columns."""
    F = -_place(sys.A, sys.B, poles)
    out, start = [], 0
    for p in sys.p:
        out.append(F[start:start + p, :])
        start += p
    return out


def _stage(label, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DomainError, SynthesisError, InvalidInputError) as exc:
        exc.args = (f"[{label}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


def assemble_observer_controller(sys: ms.MultiChannelSystem, graph: DirectedGraph, q: int = 1,
                                 target=None, alpha: float = 1.0, rho: float = 0.5, seed: int = 0,
                                 mode: str = FULL, feedback_poles=None,
                                 max_designs: int = 10) -> DistributedController:
    """Observer-based distributed controller whose error spectrum is ``target``."""
    g = graph.graph if isinstance(graph, DelayedGraph) else graph
    if not 1 <= q <= sys.m:
        raise InvalidInputError(f"q={q} outside 1..{sys.m}")
    if not is_strongly_connected(g):
        raise DomainError("[preconditions] neighbor graph must be strongly connected")
    if not (ms.jointly_controllable(sys) and ms.jointly_observable(sys)):
        raise DomainError("[preconditions] system must be jointly controllable and observable")
    if any(not np.any(B) for B in sys.Bs) or any(not np.any(C) for C in sys.Cs):
        raise DomainError("[preconditions] every B_i and C_i must be nonzero")
    n, m = sys.n, sys.m
    if feedback_poles is None:
        feedback_poles = default_spectrum(n, sys.domain, alpha, rho)
    F = _stage("state feedback", state_feedback, sys, feedback_poles)
    ces = build_compact_error_system(sys, g, F)
    failures = []
    for k in range(max_designs):
        K, H, sample = _stage("gain sampling", sample_generic_gains, ces, g, seed + k)
        Ae = ces.closed(K, H)
        Bq, Cq = ces.B_tilde[q - 1], ces.output(q)
        nu = _stage("compensator", compensator_order, Ae, Bq, Cq, mode)
        goal = default_target(m * n, nu, sys.domain, alpha, rho, mode) if target is None else target
        try:
            comp = design_channel_compensator(Ae, Bq, Cq, goal, mode, seed)
            break
        except SynthesisError as exc:
            failures.append(str(exc))
    else:
        raise SynthesisError(f"[compensator] no gain sample met the target spectrum in {max_designs} tries",
                             {"failures": failures[-5:]})
    target = goal
    # fold D̄ into K_q, H_qj and split B̄ into K̄, H̄_j
    qq = sys.q[q - 1]
    K = [k.copy() for k in K]
    K[q - 1] = K[q - 1] + comp.D[:, :qq]
    Hd = {}
    for i in range(1, m + 1):
        for k, j in enumerate(ces.others[i]):
            Hd[(i, j)] = H[i][:, k * n:(k + 1) * n].copy()
    for k, j in enumerate(ces.others[q]):
        Hd[(q, j)] += comp.D[:, qq + k * n: qq + (k + 1) * n]
    K_bar = comp.B[:, :qq]
    H_bar = {j: comp.B[:, qq + k * n: qq + (k + 1) * n] for k, j in enumerate(ces.others[q])}
    cert = {"gain_sample": sample.to_dict(), "compensator_order": comp.order, "mode": mode,
            "rejected_designs": len(failures),
            "feedback_poles": [ms._complex_json(z) for z in feedback_poles]}
    return DistributedController(OBSERVER_BASED, q, sys, g, comp, list(target), seed, cert,
                                 F=F, K=K, H=Hd, K_bar=K_bar, H_bar=H_bar)


def error_system_matrix(ctrl: DistributedController) -> np.ndarray:
    """Closed-loop error dynamics in (e_1..e_m, z) rebuilt from the final gains."""
    sys, g = ctrl.plant, ctrl.graph
    ces = build_compact_error_system(sys, g, ctrl.F)
    H = {i: np.hstack([ctrl.H[(i, j)] for j in ces.others[i]]) for i in range(1, sys.m + 1) if ces.others[i]}
    Ae = ces.closed(ctrl.K, H)
    q = ctrl.q
    Bbar = np.hstack([ctrl.K_bar] + [ctrl.H_bar[j] for j in ces.others[q]])
    nu = ctrl.compensator.order
    top = np.hstack([Ae, ces.B_tilde[q - 1] @ ctrl.compensator.C])
    bottom = np.hstack([Bbar @ ces.output(q), ctrl.compensator.A])
    return np.vstack([top, bottom]) if nu else Ae


# ---------------------------------------------------------------- observer-free

def _completion_candidates(sys, rng, channels, max_attempts):
    for attempt in range(max_attempts):
        if attempt == 0:
            F = [np.zeros((p, c)) for p, c in zip(sys.p, sys.q)]
        else:
            F = [rng.uniform(-1.0, 1.0, size=(p, c)) for p, c in zip(sys.p, sys.q)]
        M = sys.A + sum(B @ f @ C for B, f, C in zip(sys.Bs, F, sys.Cs))
        if all(lm.pbh_controllable(M, sys.Bs[q - 1], rtol=VERIFY_RTOL)
               and lm.pbh_observable(sys.Cs[q - 1], M, rtol=VERIFY_RTOL) for q in channels):
            yield F, attempt + 1


def _completion_preconditions(sys):
    rep = ms.fixed_spectrum(sys)
    if not rep.empty:
        raise DomainError(f"system has fixed eigenvalues {rep.fixed_eigenvalues}; completion impossible")
    if not is_strongly_connected(ms.transfer_graph(sys)):
        raise DomainError("transfer graph is not strongly connected; completion impossible")


def decentralized_completion(sys: ms.MultiChannelSystem, seed: int = 0, max_attempts: int = MAX_ATTEMPTS,
                             channels=None):
    """Static gains F_i with (A + sum B_i F_i C_i, B_q, C_q) controllable and observable for every q.

    Returns the gains and the number of draws used.
    """
    _completion_preconditions(sys)
    channels = list(range(1, sys.m + 1)) if channels is None else list(channels)
    for found in _completion_candidates(sys, np.random.default_rng(seed), channels, max_attempts):
        return found
    raise SynthesisError(f"no completing static gains in {max_attempts} draws", {"seed": seed})


def observer_free_synthesis(sys: ms.MultiChannelSystem, graph, n_i, q: int | None = None, target=None,
                            alpha: float = 1.0, rho: float = 0.5, seed: int = 0, mode: str = FULL,
                            holding=None, max_designs: int = 10) -> DistributedController:
    """Extension (or holding lift for delayed graphs) + static completion + one channel controller.

    With ``q`` unset every channel is tried in label order. For each channel,
    verified completion draws are tried until the compensator meets the
    target spectrum.
    """
    if q is not None and not 1 <= q <= sys.m:
        raise InvalidInputError(f"q={q} outside 1..{sys.m}")
    n_i = ex.resolve_dimensions(sys, n_i)
    if isinstance(graph, DelayedGraph):
        holding = list(range(1, sys.m + 1)) if holding is None else sorted(int(h) for h in holding)
        lifted = ex.build_holding_lift(sys, graph, n_i, holding)
        base = graph.graph
    else:
        holding = []
        lifted = ex.build_extension(sys, graph, n_i)
        base = graph
    rep = ms.fixed_spectrum(lifted.system)
    if not rep.empty:
        weak = ex.check_weak_graph_condition(sys, base)
        why = "graph condition fails" if not weak.verdict else "dimensions below the deficiency bound"
        raise DomainError(f"[conditions] extended system keeps fixed eigenvalues "
                          f"{[ms._complex_json(z) for z in rep.fixed_eigenvalues]} ({why})")
    if not ex.extended_transfer_strongly_connected(sys, base):
        raise DomainError("[conditions] transfer graph united with the neighbor graph is not strongly connected")
    ext = lifted.system
    _stage("completion", _completion_preconditions, ext)
    if target is not None:
        target = check_symmetric(target)
    failures = []
    rng = np.random.default_rng(seed)
    for draw in range(MAX_ATTEMPTS):
        if draw == 0:
            F_bar = [np.zeros((p, c)) for p, c in zip(ext.p, ext.q)]
        else:
            F_bar = [rng.uniform(-1.0, 1.0, size=(p, c)) for p, c in zip(ext.p, ext.q)]
        M = ext.A + sum(B @ f @ C for B, f, C in zip(ext.Bs, F_bar, ext.Cs))
        ranked = []
        for qq in ([q] if q is not None else range(1, sys.m + 1)):
            Bq, Cq = ext.Bs[qq - 1], ext.Cs[qq - 1]
            if lm.pbh_controllable(M, Bq, rtol=VERIFY_RTOL) and lm.pbh_observable(Cq, M, rtol=VERIFY_RTOL):
                ranked.append((lm.controllability_index(M, Bq), qq))
        for _, qq in sorted(ranked):
            Bq, Cq = ext.Bs[qq - 1], ext.Cs[qq - 1]
            nu = _stage("compensator", compensator_order, M, Bq, Cq, mode)
            goal = default_target(ext.n, nu, sys.domain, alpha, rho, mode) if target is None else target
            try:
                comp = design_channel_compensator(M, Bq, Cq, goal, mode, seed)
            except SynthesisError as exc:
                failures.append({"q": qq, "draw": draw + 1, "error": str(exc)})
                continue
            cert = {"completion_draws": draw + 1, "compensator_order": comp.order, "mode": mode,
                    "extended_dimension": ext.n, "lift_kind": lifted.kind,
                    "controller_dimension": lifted.controller_dimension() + comp.order,
                    "rejected_designs": len(failures)}
            return DistributedController(OBSERVER_FREE, qq, sys, graph, comp, list(goal), seed, cert,
                                         n_i=n_i, holding=holding, F_bar=F_bar)
        if len(failures) >= max_designs:
            break
    raise SynthesisError("[compensator] no channel and completion draw met the target spectrum",
                         {"failures": failures[-5:]})
