"""Multi-channel LTI systems, their transfer graph and fixed spectrum."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import linmath as lm
from .errors import InvalidInputError, ResourceError
from .graphs import DirectedGraph

CONTINUOUS = "continuous"
DISCRETE = "discrete"

# Pencils in the fixed-mode test are evaluated at computed eigenvalues, so the
# machine-precision rank rule is too tight; see README "Tolerances".
PENCIL_RTOL = 1e-9
MARKOV_RTOL = 1e-9
SUBSET_CAP = 16


@dataclass(frozen=True)
class MultiChannelSystem:
    A: np.ndarray
    Bs: tuple
    Cs: tuple
    domain: str = CONTINUOUS

    def __post_init__(self):
        A = lm.as_matrix(self.A, "A")
        if A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise InvalidInputError(f"A must be square and nonempty, got {A.shape}")
        n = A.shape[0]
        if len(self.Bs) != len(self.Cs) or len(self.Bs) < 1:
            raise InvalidInputError("need the same positive number of B_i and C_i")
        Bs, Cs = [], []
        for i, (B, C) in enumerate(zip(self.Bs, self.Cs), start=1):
            B = np.zeros((n, 0)) if np.size(B) == 0 else lm.as_matrix(B, f"B_{i}")
            C = np.zeros((0, n)) if np.size(C) == 0 else lm.as_matrix(C, f"C_{i}")
            if B.shape[0] != n:
                raise InvalidInputError(f"B_{i} has {B.shape[0]} rows, expected {n}")
            if C.shape[1] != n:
                raise InvalidInputError(f"C_{i} has {C.shape[1]} columns, expected {n}")
            Bs.append(B)
            Cs.append(C)
        if self.domain not in (CONTINUOUS, DISCRETE):
            raise InvalidInputError(f"domain must be 'continuous' or 'discrete', got {self.domain!r}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Bs", tuple(Bs))
        object.__setattr__(self, "Cs", tuple(Cs))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return len(self.Bs)

    @property
    def p(self) -> list[int]:
        return [B.shape[1] for B in self.Bs]

    @property
    def q(self) -> list[int]:
        return [C.shape[0] for C in self.Cs]

    @property
    def B(self) -> np.ndarray:
        return np.hstack(self.Bs)

    @property
    def C(self) -> np.ndarray:
        return np.vstack(self.Cs)

    def B_s(self, s) -> np.ndarray:
        blocks = [self.Bs[i - 1] for i in sorted(s)]
        return np.hstack(blocks) if blocks else np.zeros((self.n, 0))

    def C_s(self, s) -> np.ndarray:
        blocks = [self.Cs[i - 1] for i in sorted(s)]
        return np.vstack(blocks) if blocks else np.zeros((0, self.n))

    @property
    def is_discrete(self) -> bool:
        return self.domain == DISCRETE

    def with_outputs(self, Cs) -> "MultiChannelSystem":
        return MultiChannelSystem(self.A, self.Bs, tuple(Cs), self.domain)


@dataclass(frozen=True)
class Witness:
    subset: tuple
    rank: int
    sigma_below: float  # largest singular value judged zero
    tolerance: float


@dataclass
class FixedSpectrumReport:
    n: int
    fixed_eigenvalues: list = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)
    deficiency_r: int = 0
    min_rank: int = 0
    tolerance: float = PENCIL_RTOL
    evaluated: int = 0

    @property
    def empty(self) -> bool:
        return not self.fixed_eigenvalues

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "fixed_eigenvalues": [_complex_json(z) for z in self.fixed_eigenvalues],
            "witnesses": [
                {"eigenvalue": _complex_json(lam),
                 "subsets": [{"s": list(w.subset), "rank": w.rank,
                              "sigma_below": w.sigma_below, "tolerance": w.tolerance} for w in ws]}
                for lam, ws in self.witnesses.items()
            ],
            "deficiency_r": self.deficiency_r,
            "min_rank": self.min_rank,
            "pencil_rtol": self.tolerance,
            "pencils_evaluated": self.evaluated,
        }


def _complex_json(z):
    z = complex(z)
    return [round(z.real, 12) + 0.0, round(z.imag, 12) + 0.0]


def all_subsets(m: int):
    verts = range(1, m + 1)
    for k in range(m + 1):
        yield from combinations(verts, k)


def jointly_controllable(sys: MultiChannelSystem, tol=None) -> bool:
    return lm.pbh_controllable(sys.A, sys.B, tol)


def jointly_observable(sys: MultiChannelSystem, tol=None) -> bool:
    return lm.pbh_observable(sys.C, sys.A, tol)


def pencil(sys: MultiChannelSystem, lam, s) -> np.ndarray:
    """[lam I - A, B_s; C_(m-s), 0]."""
    rest = [i for i in range(1, sys.m + 1) if i not in set(s)]
    lam = complex(lam)
    lam = lam.real if lam.imag == 0 else lam
    Bs = sys.B_s(s)
    Cr = sys.C_s(rest)
    top = np.hstack([lam * np.eye(sys.n) - sys.A, Bs])
    bottom = np.hstack([Cr, np.zeros((Cr.shape[0], Bs.shape[1]))])
    return np.vstack([top, bottom])


def pencil_rank(sys, lam, s, tol=None) -> lm.RankResult:
    P = pencil(sys, lam, s)
    if tol is None:
        return lm.numerical_rank(P, rtol=PENCIL_RTOL)
    return lm.numerical_rank(P, tol)


def transfer_graph(sys: MultiChannelSystem, rtol: float = MARKOV_RTOL) -> DirectedGraph:
    """Arc j->i iff some Markov parameter C_i A^k B_j (k < 2n) is nonzero."""
    n = sys.n
    scale = max(1.0, float(np.linalg.norm(sys.A, 2)))
    Ahat = sys.A / scale
    arcs = []
    for j, Bj in enumerate(sys.Bs, start=1):
        if Bj.size == 0:
            continue
        blocks = [Bj]
        for _ in range(2 * n - 1):
            blocks.append(Ahat @ blocks[-1])
        for i, Ci in enumerate(sys.Cs, start=1):
            if i == j or Ci.size == 0:
                continue
            ref = np.linalg.norm(Ci) * np.linalg.norm(Bj)
            if any(np.linalg.norm(Ci @ K) > rtol * ref for K in blocks):
                arcs.append((j, i))
    return DirectedGraph.from_arcs(sys.m, arcs)


def fixed_spectrum(sys: MultiChannelSystem, tol=None, subset_cap: int = SUBSET_CAP,
                   eigenvalues=None) -> FixedSpectrumReport:
    """Fixed eigenvalues by exhaustive pencil-rank enumeration over subsets."""
    if sys.m > subset_cap:
        raise ResourceError(f"m={sys.m} exceeds the subset-enumeration cap {subset_cap}")
    n = sys.n
    lams = lm.distinct_eigenvalues(sys.A) if eigenvalues is None else list(eigenvalues)
    report = FixedSpectrumReport(n=n, tolerance=PENCIL_RTOL if tol is None else tol)
    min_rank = None
    subsets = list(all_subsets(sys.m))
    for lam in lams:
        if lam.imag < 0:
            continue  # conjugate of an already-tested value
        hits = []
        for s in subsets:
            rr = pencil_rank(sys, lam, s, tol)
            report.evaluated += 1
            rank = min(rr.rank, n)
            min_rank = rank if min_rank is None else min(min_rank, rank)
            if rr.rank < n:
                hits.append(Witness(tuple(s), rr.rank, float(rr.singular_values[rr.rank]),
                                    rr.tolerance_used))
        if hits:
            report.fixed_eigenvalues.append(lam)
            report.witnesses[lam] = hits
            if lam.imag > 0:
                conj = lam.conjugate()
                report.fixed_eigenvalues.append(conj)
                report.witnesses[conj] = hits
    report.min_rank = n if min_rank is None else min_rank
    report.deficiency_r = n - report.min_rank if report.fixed_eigenvalues else 0
    return report


def deficiency_bound(sys: MultiChannelSystem, tol=None) -> int:
    """r = n - min rank of the fixed-mode pencil over subsets and eigenvalues of A."""
    return fixed_spectrum(sys, tol).deficiency_r


def fixed_spectrum_sampling_oracle(sys: MultiChannelSystem, trials: int = 50, seed: int = 0,
                                   match_tol: float = 1e-6) -> list[complex]:
    """Eigenvalues common to A + sum B_i F_i C_i over random gain draws."""
    if trials < 2:
        raise InvalidInputError("sampling oracle needs at least two trials")
    rng = np.random.default_rng(seed)
    common = None
    for _ in range(trials):
        M = sys.A.copy()
        for B, C in zip(sys.Bs, sys.Cs):
            if B.size and C.size:
                F = rng.uniform(-1.0, 1.0, size=(B.shape[1], C.shape[0]))
                M = M + B @ F @ C
        ev = lm.distinct_eigenvalues(M)
        if common is None:
            common = ev
        else:
            common = [z for z in common if any(abs(z - w) <= match_tol * max(1.0, abs(z)) for w in ev)]
        if not common:
            break
    return sorted(common or [], key=lambda z: (z.real, z.imag))


# ---------------------------------------------------------------- JSON

def system_to_dict(sys: MultiChannelSystem) -> dict:
    return {
        "domain": sys.domain,
        "A": sys.A.tolist(),
        "channels": [{"B": B.tolist(), "C": C.tolist()} for B, C in zip(sys.Bs, sys.Cs)],
    }


def system_from_dict(data: dict) -> MultiChannelSystem:
    try:
        A = np.array(data["A"], dtype=float)
        n = A.shape[0]
        Bs, Cs = [], []
        for ch in data["channels"]:
            B = np.array(ch.get("B", []), dtype=float)
            C = np.array(ch.get("C", []), dtype=float)
            # a flat list is read as a single column of B or a single row of C
            Bs.append(np.zeros((n, 0)) if not B.size else B.reshape(-1, 1) if B.ndim == 1 else B)
            Cs.append(np.zeros((0, n)) if not C.size else C.reshape(1, -1) if C.ndim == 1 else C)
        return MultiChannelSystem(A, tuple(Bs), tuple(Cs), data.get("domain", CONTINUOUS))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed system document: {exc}") from exc


def load_system(path) -> MultiChannelSystem:
    with open(path) as fh:
        return system_from_dict(json.load(fh))
