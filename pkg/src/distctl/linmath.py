"""Dense linear-algebra kernel: numerical rank, spectra, PBH tests, Kronecker products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, InvalidInputError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RankResult:
    rank: int
    singular_values: np.ndarray
    tolerance_used: float

    @property
    def margin(self) -> float:
        """Distance (ratio) between the decision tolerance and the nearest singular value."""
        sv = self.singular_values
        if sv.size == 0 or self.tolerance_used == 0.0:
            return float("inf")
        if self.rank < sv.size:
            return float(self.tolerance_used / max(sv[self.rank], 1e-300))
        return float(sv[self.rank - 1] / self.tolerance_used)


def as_matrix(M, name="matrix") -> np.ndarray:
    M = np.asarray(M)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if not np.iscomplexobj(M):
        M = M.astype(float)
    return M


def default_tolerance(shape, smax: float) -> float:
    return max(shape) * EPS * smax


def numerical_rank(M, tol: float | None = None, rtol: float | None = None) -> RankResult:
    """Rank as the number of singular values above a tolerance.

    ``tol`` is absolute; ``rtol`` scales the largest singular value. With
    neither, the usual ``max(rows, cols) * eps * sigma_max`` rule applies.
    """
    M = as_matrix(M)
    if M.size == 0:
        return RankResult(0, np.zeros(0), 0.0)
    sv = np.linalg.svd(M, compute_uv=False)
    smax = float(sv[0]) if sv.size else 0.0
    if tol is None:
        tol = rtol * max(max(M.shape), 1) * smax if rtol is not None else default_tolerance(M.shape, smax)
    rank = int(np.sum(sv > tol))
    return RankResult(rank, sv, float(tol))


def spectrum(M) -> np.ndarray:
    """Eigenvalues with multiplicity; conjugate pairs are exact for real input."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"spectrum needs a square matrix, got {M.shape}")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    ev = sla.eigvals(M)
    if not np.iscomplexobj(M):
        ev = _symmetrize_conjugates(ev)
    return ev


def _symmetrize_conjugates(ev: np.ndarray) -> np.ndarray:
    ev = np.asarray(ev, dtype=complex).copy()
    scale = max(1.0, float(np.max(np.abs(ev)))) if ev.size else 1.0
    for k, lam in enumerate(ev):
        if abs(lam.imag) <= 1e-14 * scale:
            ev[k] = complex(lam.real, 0.0)
    return ev


def distinct_eigenvalues(M, cluster_tol: float = 1e-6) -> list[complex]:
    """Distinct eigenvalues, clustering nearby ones and returning cluster means.

    A defective eigenvalue of multiplicity k is returned by the eigensolver
    spread over a radius of order eps**(1/k); the cluster mean recovers it to
    roughly machine precision.
    """
    ev = spectrum(M)
    if ev.size == 0:
        return []
    scale = max(1.0, float(np.max(np.abs(ev))))
    tol = cluster_tol * scale
    remaining = list(ev)
    clusters: list[list[complex]] = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        grew = True
        while grew:
            grew = False
            for lam in list(remaining):
                if min(abs(lam - g) for g in group) <= tol:
                    group.append(lam)
                    remaining.remove(lam)
                    grew = True
        clusters.append(group)
    out = []
    for group in clusters:
        mu = complex(np.mean(group))
        if abs(mu.imag) <= tol:
            mu = complex(mu.real, 0.0)
        if abs(mu) <= 1e-8:
            mu = 0j
        out.append(mu)
    out.sort(key=lambda z: (z.real, z.imag))
    return out


def _check_pair(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"A must be square, got {A.shape}")
    if B.shape[0] != A.shape[0]:
        if B.size == 0:
            B = np.zeros((A.shape[0], 0))
        else:
            raise InvalidInputError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    return A, B


def pbh_controllable(A, B, tol: float | None = None, rtol: float | None = None) -> bool:
    """Hautus test: rank [lambda I - A, B] = n at every eigenvalue of A."""
    A, B = _check_pair(A, B)
    n = A.shape[0]
    if n == 0:
        return True
    for lam in distinct_eigenvalues(A):
        if lam.imag < 0:
            continue
        P = np.hstack([(lam.real if lam.imag == 0 else lam) * np.eye(n) - A, B])
        if numerical_rank(P, tol, rtol).rank < n:
            return False
    return True


def pbh_observable(C, A, tol: float | None = None, rtol: float | None = None) -> bool:
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    if C.size == 0:
        C = np.zeros((0, A.shape[0]))
    if C.shape[1] != A.shape[0]:
        raise InvalidInputError(f"C has {C.shape[1]} columns, A is {A.shape[0]}x{A.shape[0]}")
    return pbh_controllable(A.T, C.T, tol, rtol)


def controllability_matrix(A, B, blocks: int | None = None) -> np.ndarray:
    A, B = _check_pair(A, B)
    n = A.shape[0]
    blocks = n if blocks is None else blocks
    cols = [B]
    for _ in range(blocks - 1):
        cols.append(A @ cols[-1])
    return np.hstack(cols)


def controllability_index(A, B, tol: float | None = None) -> int:
    """Smallest k with rank [B, AB, ..., A^(k-1) B] = n."""
    A, B = _check_pair(A, B)
    n = A.shape[0]
    if n == 0:
        return 0
    cols = []
    block = B
    for k in range(1, n + 1):
        cols.append(block)
        if numerical_rank(np.hstack(cols), tol).rank == n:
            return k
        block = A @ block
    raise DomainError("pair is not controllable; controllability index undefined")


def observability_index(C, A, tol: float | None = None) -> int:
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    return controllability_index(A.T, C.T, tol)


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A), np.asarray(B))


def block_diag(*blocks) -> np.ndarray:
    """Block diagonal that keeps zero-width/zero-height blocks in the layout."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=float)) if np.size(b) else
              np.asarray(b, dtype=float).reshape(np.shape(b) if np.ndim(b) == 2 else (0, 0))
              for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def matrix_exponential_step(A, dt: float) -> np.ndarray:
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"A must be square, got {A.shape}")
    return sla.expm(A * dt)


def spectral_abscissa(M) -> float:
    ev = spectrum(M)
    return float(np.max(ev.real)) if ev.size else float("-inf")


def spectral_radius(M) -> float:
    ev = spectrum(M)
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def match_spectra(achieved, target) -> tuple[float, np.ndarray]:
    """Optimal one-to-one pairing of two spectra.

    Returns the maximum relative error ``|a - t| / max(1, |t|)`` over the
    minimum-cost matching and the matched achieved values in target order.
    """
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(achieved, dtype=complex).ravel()
    t = np.asarray(target, dtype=complex).ravel()
    if a.size != t.size:
        raise InvalidInputError(f"spectra differ in size: {a.size} vs {t.size}")
    if a.size == 0:
        return 0.0, a
    cost = np.abs(t[:, None] - a[None, :])
    rows, cols = linear_sum_assignment(cost)
    matched = a[cols]
    rel = np.abs(matched - t[rows]) / np.maximum(1.0, np.abs(t[rows]))
    return float(np.max(rel)), matched
