"""Offline/online bi-fidelity approximation.

Offline: greedy selection of important parameter points from low-fidelity
snapshots (pivoted Cholesky on the low-fidelity Gramian), followed by
high-fidelity runs at the selected points only. Online: Galerkin projection
of a new low-fidelity solution onto the selected low-fidelity snapshots and
reuse of the coefficients on the high-fidelity snapshots.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import ldl, solve_triangular

from .errors import EmptyBasisError, InvalidArgumentError, SingularGramianError

__all__ = [
    "Snapshot",
    "GreedyBasis",
    "BiFiSurrogate",
    "ErrorSplit",
    "StabilityReport",
    "gramian",
    "greedy_select",
    "project",
    "reconstruct",
    "bifi_evaluate",
    "error_split",
    "min_eigenvalue",
    "stability_report",
]


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Flattened solution vector with the metadata needed for inner products.

    ``values`` is laid out row-major over the axes (field, x, v) with sizes
    ``(nfields, nx, nv)``; ``weights`` are the quadrature weights of the
    discrete L2 inner product, one per entry.
    """

    values: np.ndarray
    weights: np.ndarray
    model: str = "unknown"
    nx: int = 0
    nv: int = 1
    nfields: int = 1
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        weights = np.broadcast_to(np.asarray(self.weights, dtype=float), values.shape).copy()
        nx = self.nx or values.size // (self.nv * self.nfields)
        if values.size != self.nfields * nx * self.nv:
            raise InvalidArgumentError(
                f"{values.size} values do not fit axes ({self.nfields}, {nx}, {self.nv})"
            )
        if np.any(weights <= 0):
            raise InvalidArgumentError("quadrature weights must be strictly positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "nx", int(nx))
        object.__setattr__(self, "z", np.atleast_1d(np.asarray(self.z, dtype=float)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nfields, self.nx, self.nv)

    def compatible(self, other: "Snapshot") -> bool:
        return self.shape == other.shape and np.array_equal(self.weights, other.weights)

    def inner(self, other: "Snapshot") -> float:
        _check_compatible([self, other])
        return float(np.sum(self.weights * self.values * other.values))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * self.values**2)))

    def like(self, values, **meta) -> "Snapshot":
        """Copy of this snapshot with new values (and optionally new metadata)."""
        return replace(self, values=np.asarray(values, dtype=float), **meta)

    def field(self, i: int) -> np.ndarray:
        return self.values.reshape(self.shape)[i]


def _check_compatible(snaps: Sequence[Snapshot]) -> None:
    first = snaps[0]
    for s in snaps[1:]:
        if not first.compatible(s):
            raise InvalidArgumentError(
                f"snapshots are not inner-product compatible: {first.shape} vs {s.shape}"
            )


def gramian(snaps: Sequence[Snapshot]) -> np.ndarray:
    """Matrix of weighted discrete L2 inner products between ``snaps``."""
    if len(snaps) == 0:
        raise InvalidArgumentError("empty snapshot list")
    _check_compatible(snaps)
    U = np.stack([s.values for s in snaps])
    G = (U * snaps[0].weights) @ U.T
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class GreedyBasis:
    """Greedily selected candidate indices and the Cholesky factor of their Gramian.

    ``factor`` is lower triangular with ``factor @ factor.T == G(indices)``;
    ``pivots[k]`` is the squared residual norm of the k-th selected candidate
    at the time it was chosen.
    """

    indices: tuple[int, ...]
    factor: np.ndarray
    pivots: np.ndarray
    tol: float

    @property
    def size(self) -> int:
        return len(self.indices)

    def truncate(self, n: int) -> "GreedyBasis":
        """Leading ``n`` selections; a prefix of a pivoted greedy run is itself one."""
        if not 1 <= n <= self.size:
            raise InvalidArgumentError(f"cannot truncate basis of size {self.size} to {n}")
        return GreedyBasis(self.indices[:n], self.factor[:n, :n].copy(), self.pivots[:n].copy(), self.tol)


def greedy_select(candidates: Sequence[Snapshot], N_max: int, tol: float = 1e-12) -> GreedyBasis:
    """Pivoted-Cholesky greedy selection.

    Each step picks the candidate with the largest squared distance to the
    span of those already selected (lowest index on ties). Stops after
    ``N_max`` picks or once the largest remaining pivot falls below
    ``tol`` times the first pivot.
    """
    M = len(candidates)
    if M == 0:
        raise InvalidArgumentError("no candidates")
    if not 1 <= N_max <= M:
        raise InvalidArgumentError(f"N_max={N_max} must lie in [1, {M}]")
    G = gramian(candidates)
    d = np.diag(G).copy()
    L = np.zeros((M, N_max))
    chosen: list[int] = []
    pivots: list[float] = []
    available = np.ones(M, dtype=bool)
    for k in range(N_max):
        masked = np.where(available, d, -np.inf)
        j = int(np.argmax(masked))
        p = masked[j]
        if k == 0 and not p > 0:
            raise EmptyBasisError("all candidates are zero")
        if k > 0 and p < tol * pivots[0]:
            break
        L[:, k] = (G[:, j] - L[:, :k] @ L[j, :k]) / np.sqrt(p)
        d -= L[:, k] ** 2
        available[j] = False
        chosen.append(j)
        pivots.append(float(p))
    n = len(chosen)
    factor = np.tril(L[chosen, :n])
    return GreedyBasis(tuple(chosen), factor, np.array(pivots), tol)


def _factor_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    diag = np.diag(factor)
    if np.any(~(diag > 0)):
        raise SingularGramianError("non-positive pivot in the Gramian factor")
    y = solve_triangular(factor, rhs, lower=True)
    return solve_triangular(factor.T, y, lower=False)


def project(basis: GreedyBasis, low_snaps: Sequence[Snapshot], u: Snapshot) -> np.ndarray:
    """Galerkin coefficients ``c`` solving ``G c = f`` with ``f_k = <u, low_snaps[k]>``."""
    if len(low_snaps) != basis.size:
        raise InvalidArgumentError(f"basis has {basis.size} elements, got {len(low_snaps)} snapshots")
    _check_compatible([u, *low_snaps])
    f = np.array([u.inner(s) for s in low_snaps])
    return _factor_solve(basis.factor, f)


def _combine(snaps: Sequence[Snapshot], c: np.ndarray) -> np.ndarray:
    return np.asarray(c, dtype=float) @ np.stack([s.values for s in snaps])


def min_eigenvalue(G: np.ndarray, rtol: float = 4e-16) -> float:
    """Smallest eigenvalue of a symmetric matrix by bisection on the inertia.

    The number of eigenvalues below ``mu`` equals the number of negative
    eigenvalues of the block-diagonal ``D`` in ``G - mu I = L D L^T``.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    eye = np.eye(n)

    def count_below(mu: float) -> int:
        _, D, _ = ldl(G - mu * eye)
        count, i = 0, 0
        while i < n:
            if i + 1 < n and D[i, i + 1] != 0.0:
                a, b, c = D[i, i], D[i, i + 1], D[i + 1, i + 1]
                det = a * c - b * b
                count += 1 if det < 0 else (2 if a + c < 0 else 0)
                i += 2
            else:
                count += D[i, i] < 0
                i += 1
        return count

    hi = float(np.trace(G))
    if count_below(0.0) > 0 or not hi > 0:
        raise SingularGramianError("Gramian is not positive definite")
    lo = 0.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if count_below(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * hi:
            break
    lam = 0.5 * (lo + hi)
    if not lam > 0:
        raise SingularGramianError("Gramian minimum eigenvalue is not positive")
    return lam


@dataclass(frozen=True, eq=False)
class BiFiSurrogate:
    """Greedy basis with its paired low- and high-fidelity snapshots."""

    basis: GreedyBasis
    low: tuple[Snapshot, ...]
    high: tuple[Snapshot, ...]

    def __post_init__(self):
        object.__setattr__(self, "low", tuple(self.low))
        object.__setattr__(self, "high", tuple(self.high))
        if not len(self.low) == len(self.high) == self.basis.size:
            raise InvalidArgumentError("low/high snapshot counts must equal the basis size")
        for a, b in zip(self.low, self.high):
            if not np.array_equal(a.z, b.z):
                raise InvalidArgumentError("low and high snapshots sampled at different z")
        _check_compatible(self.low)
        _check_compatible(self.high)
        object.__setattr__(self, "_lambda0", None)

    @property
    def N(self) -> int:
        return self.basis.size

    @property
    def points(self) -> list[np.ndarray]:
        return [s.z for s in self.low]

    @property
    def lambda0(self) -> float:
        if self._lambda0 is None:
            F = self.basis.factor
            object.__setattr__(self, "_lambda0", min_eigenvalue(F @ F.T))
        return self._lambda0

    def truncate(self, n: int) -> "BiFiSurrogate":
        return BiFiSurrogate(self.basis.truncate(n), self.low[:n], self.high[:n])

    def coefficients(self, uL: Snapshot) -> np.ndarray:
        return project(self.basis, self.low, uL)


def reconstruct(surrogate: BiFiSurrogate, c) -> Snapshot:
    """High-fidelity combination ``sum_k c_k u^H(z_k)``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.shape != (surrogate.N,):
        raise InvalidArgumentError(f"expected {surrogate.N} coefficients, got {c.shape}")
    ref = surrogate.high[0]
    return ref.like(_combine(surrogate.high, c), model=f"bifi({ref.model})", z=np.zeros(0))


def bifi_evaluate(surrogate: BiFiSurrogate, z, low_solver: Callable[[np.ndarray], Snapshot]) -> Snapshot:
    """Online stage: one low-fidelity run at ``z``, projection, reconstruction."""
    uL = low_solver(np.asarray(z, dtype=float))
    uB = reconstruct(surrogate, surrogate.coefficients(uL))
    return replace(uB, z=np.asarray(z, dtype=float))


class ErrorSplit(NamedTuple):
    model_gap: float
    projection_residual: float
    term_a: float
    total: float
    identity_residual: float


def error_split(uH: Snapshot, uL: Snapshot, surrogate: BiFiSurrogate, c) -> ErrorSplit:
    """Norms of the three pieces of ``u^H - u^B``.

    u^H - u^B = (u^H - u^L) + (u^L - sum c_k u^L_k) + sum c_k (u^L_k - u^H_k).
    ``identity_residual`` is the max-abs mismatch of that vector identity.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    _check_compatible([uH, uL, *surrogate.low, *surrogate.high])
    w = uH.weights
    gap = uH.values - uL.values
    proj = uL.values - _combine(surrogate.low, c)
    term_a = c @ (np.stack([s.values for s in surrogate.low]) - np.stack([s.values for s in surrogate.high]))
    err = uH.values - _combine(surrogate.high, c)

    def nrm(v):
        return float(np.sqrt(np.sum(w * v * v)))

    resid = float(np.max(np.abs(err - (gap + proj + term_a)))) if err.size else 0.0
    return ErrorSplit(nrm(gap), nrm(proj), nrm(term_a), nrm(err), resid)


class StabilityReport(NamedTuple):
    lambda0: float
    c_norm: float
    bound: float
    holds: bool


def stability_report(surrogate: BiFiSurrogate, c, uL: Snapshot) -> StabilityReport:
    """Check ``||c||_2 <= ||u^L|| / sqrt(lambda0)``."""
    lam = surrogate.lambda0
    c_norm = float(np.linalg.norm(np.asarray(c, dtype=float)))
    bound = uL.norm() / np.sqrt(lam)
    return StabilityReport(lam, c_norm, float(bound), bool(c_norm <= bound))
