"""Seeded random plants and graphs for property sweeps."""

from __future__ import annotations

import numpy as np

from . import mcsys as ms
from .graphs import DirectedGraph


def random_strong_graph(rng: np.random.Generator, m: int, extra: float = 0.3) -> DirectedGraph:
    """A random Hamiltonian cycle plus each remaining arc with probability ``extra``."""
    order = [int(v) + 1 for v in rng.permutation(m)]
    arcs = {(order[k], order[(k + 1) % m]) for k in range(m)} if m > 1 else set()
    for j in range(1, m + 1):
        for i in range(1, m + 1):
            if j != i and rng.random() < extra:
                arcs.add((j, i))
    return DirectedGraph.from_arcs(m, arcs)


def random_system(rng: np.random.Generator, n: int, m: int, domain: str = ms.CONTINUOUS,
                  max_width: int = 2) -> ms.MultiChannelSystem:
    """Dense Gaussian plant with 1..max_width inputs and outputs per channel."""
    A = rng.standard_normal((n, n))
    Bs = tuple(rng.standard_normal((n, int(rng.integers(1, max_width + 1)))) for _ in range(m))
    Cs = tuple(rng.standard_normal((int(rng.integers(1, max_width + 1)), n)) for _ in range(m))
    return ms.MultiChannelSystem(A, Bs, Cs, domain)


def with_fixed_modes(rng: np.random.Generator, n_dense: int, m: int, modes, domain: str = ms.CONTINUOUS,
                     max_width: int = 2) -> tuple[ms.MultiChannelSystem, tuple, list]:
    """Random plant whose listed eigenvalues are fixed.

    Channels are split into a random nonempty proper subset S and its
    complement R, and the dense part is block triangular so that no input in S
    reaches an output in R. Each injected scalar mode is driven by one channel
    of R and seen by one channel of S, which makes S a witness subset.
    Returns the plant, S, and the (λ, driver, observer) list.
    """
    if m < 2:
        raise ValueError("injected fixed modes need at least two channels")
    copies = max((list(modes).count(z) for z in modes), default=1)
    if m < 2 * copies:
        raise ValueError(f"{copies} copies of one eigenvalue need at least {2 * copies} channels")
    size = int(rng.integers(copies, m - copies + 1))
    S = tuple(sorted(int(v) + 1 for v in rng.choice(m, size=size, replace=False)))
    R = [i for i in range(1, m + 1) if i not in S]
    n1 = int(rng.integers(0, n_dense + 1))
    n2 = n_dense - n1
    k = len(modes)
    n = n_dense + k
    A = np.zeros((n, n))
    A[:n_dense, :n_dense] = rng.standard_normal((n_dense, n_dense))
    A[:n1, n1:n_dense] = 0.0  # x_1 never sees x_2
    Bs, Cs = [], []
    for i in range(1, m + 1):
        B = np.zeros((n, int(rng.integers(1, max_width + 1))))
        C = np.zeros((int(rng.integers(1, max_width + 1)), n))
        if i in S:
            B[n1:n_dense] = rng.standard_normal((n2, B.shape[1]))
            C[:, :n_dense] = rng.standard_normal((C.shape[0], n_dense))
        else:
            B[:n_dense] = rng.standard_normal((n_dense, B.shape[1]))
            C[:, :n1] = rng.standard_normal((C.shape[0], n1))
        Bs.append(B)
        Cs.append(C)
    info, used = [], {}
    for idx, lam in enumerate(modes):
        row = n_dense + idx
        A[row, row] = float(lam)
        # repeated eigenvalues need distinct drivers and observers to stay jointly controllable/observable
        drivers, observers = used.setdefault(float(lam), (set(), set()))
        pairs = [(a, b) for a in R for b in S if a not in drivers and b not in observers]
        if not pairs:
            raise ValueError(f"too many copies of eigenvalue {lam} for the channel split {S}")
        a, b = pairs[int(rng.integers(len(pairs)))]
        drivers.add(a)
        observers.add(b)
        Bs[a - 1][row, 0] = 1.0 + rng.random()
        Cs[b - 1][0, row] = 1.0 + rng.random()
        info.append((float(lam), a, b))
    return ms.MultiChannelSystem(A, tuple(Bs), tuple(Cs), domain), S, info
