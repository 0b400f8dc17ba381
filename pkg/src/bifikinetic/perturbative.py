"""Linearized kinetic model around the global Maxwellian and its acoustic limit.

The kinetic unknown is the perturbation h in f = M + delta * sqrt(M) * h,
evolved by

    h_t + eps^-alpha v h_x = eps^-(1+alpha) L h,   L = pi_L - I,

where pi_L is the orthogonal projection onto the span of the collision
invariants (sqrt(M), v sqrt(M), (v^2 - 1) sqrt(M)). One velocity dimension
throughout; the macroscopic low-fidelity model is the linear acoustic system.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgumentError, StepSizeError
from .randomspace import SpatialGrid

__all__ = [
    "VelocityGridR",
    "KernelBasis",
    "PerturbativeState",
    "AcousticState",
    "MomentVector",
    "steady_state",
    "pi_L",
    "bgk_step",
    "bgk_max_dt",
    "bgk_solve",
    "moments_from_h",
    "acoustic_matrix",
    "characteristic_speeds",
    "acoustic_step",
    "acoustic_solve",
    "acoustic_moments",
    "acoustic_from_moments",
    "limit_profile",
    "vT_diagnostic",
]


@dataclass(frozen=True)
class VelocityGridR:
    """Uniform nodes on [-v_max, v_max] with trapezoid weights."""

    n_w: int = 64
    v_max: float = 6.0

    def __post_init__(self):
        if self.n_w < 3 or not self.v_max > 0:
            raise InvalidArgumentError("need n_w >= 3 and v_max > 0")
        v = np.linspace(-self.v_max, self.v_max, self.n_w)
        w = np.full(self.n_w, v[1] - v[0])
        w[[0, -1]] *= 0.5
        maxwellian = np.exp(-0.5 * v * v) / np.sqrt(2 * np.pi)
        object.__setattr__(self, "nodes", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "maxwellian", maxwellian)
        object.__setattr__(self, "sqrt_m", np.sqrt(maxwellian))

    def inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Quadrature ``sum_v w a b`` over the trailing axis."""
        return (np.asarray(a) * np.asarray(b)) @ self.weights


@dataclass(frozen=True)
class KernelBasis:
    """Discretely orthonormal basis ``phi`` (3 x n_w) of Ker(L)."""

    grid: VelocityGridR
    phi: np.ndarray

    @classmethod
    def from_grid(cls, grid: VelocityGridR) -> "KernelBasis":
        v, sm = grid.nodes, grid.sqrt_m
        raw = [sm, v * sm, (v * v - 1.0) * sm]
        phi: list[np.ndarray] = []
        for f in raw:
            q = f.copy()
            for _ in range(2):  # re-orthogonalize once for rounding
                for p in phi:
                    q = q - grid.inner(q, p) * p
            phi.append(q / np.sqrt(grid.inner(q, q)))
        arr = np.array(phi)
        arr.setflags(write=False)
        return cls(grid, arr)


def pi_L(h: np.ndarray, basis: KernelBasis) -> np.ndarray:
    """Projection onto Ker(L) at every spatial node (trailing axis is velocity)."""
    h = np.asarray(h, dtype=float)
    coeffs = (h * basis.grid.weights) @ basis.phi.T
    return coeffs @ basis.phi


@dataclass(frozen=True)
class PerturbativeState:
    h: np.ndarray
    grid: SpatialGrid
    eps: float
    alpha: int = 0
    delta: float = 1e-3
    t: float = 0.0

    def __post_init__(self):
        if not (self.eps > 0 and self.delta > 0):
            raise InvalidArgumentError("eps and delta must be positive")
        if self.alpha not in (0, 1):
            raise InvalidArgumentError("alpha must be 0 (acoustic) or 1 (diffusive) scaling")


def bgk_max_dt(dx: float, eps: float, alpha: int, v_max: float, c_cfl: float = 1.0) -> float:
    return c_cfl * dx * eps**alpha / v_max


def bgk_step(state: PerturbativeState, dt: float, basis: KernelBasis,
             c_cfl: float = 1.0) -> PerturbativeState:
    """IMEX step: explicit upwind transport, closed-form implicit relaxation."""
    vgrid = basis.grid
    dx = state.grid.dx
    limit = bgk_max_dt(dx, state.eps, state.alpha, vgrid.v_max, c_cfl)
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.3g} exceeds CFL limit {limit:.3g}")
    h = state.h
    speed = vgrid.nodes / state.eps**state.alpha
    back = h - np.roll(h, 1, axis=0)
    fwd = np.roll(h, -1, axis=0) - h
    h_star = h - (dt / dx) * np.where(speed > 0, speed * back, speed * fwd)
    kern = pi_L(h_star, basis)
    h_new = kern + (h_star - kern) / (1.0 + dt / state.eps ** (1 + state.alpha))
    return replace(state, h=h_new, t=state.t + dt)


def _march(state, step: Callable, dt: float, T: float, record: Sequence[float] | None):
    """Advance to T, shortening steps to land exactly on each recording time."""
    stops = sorted(set([*(record or []), T]))
    traj = []
    for stop in stops:
        if stop < state.t - 1e-14:
            raise InvalidArgumentError("recording times must not precede the initial time")
        while state.t < stop - 1e-14 * max(1.0, stop):
            state = step(state, min(dt, stop - state.t))
        state = replace(state, t=stop)
        if record is not None and stop in record:
            traj.append(state)
    return state, traj


def bgk_solve(state: PerturbativeState, T: float, basis: KernelBasis, c_cfl: float = 0.5,
              record: Sequence[float] | None = None):
    """March the kinetic model to ``T``; returns (final state, recorded states)."""
    dt = bgk_max_dt(state.grid.dx, state.eps, state.alpha, basis.grid.v_max, c_cfl)
    return _march(state, lambda s, h: bgk_step(s, h, basis), dt, T, record)


class MomentVector(NamedTuple):
    """Density, momentum and total energy on cell centers."""

    rho: np.ndarray
    m: np.ndarray
    E: np.ndarray

    def stack(self) -> np.ndarray:
        return np.stack([self.rho, self.m, self.E])


def steady_state(d_v: int = 1) -> tuple[float, float, float]:
    """Moments (1, 0, d_v/2) of the unit Maxwellian."""
    return (1.0, 0.0, 0.5 * d_v)


def moments_from_h(state: PerturbativeState, basis: KernelBasis, d_v: int = 1) -> MomentVector:
    """``u^st + delta * <(1, v, v^2/2) sqrt(M), h>_v`` at every cell."""
    g = basis.grid
    v, sm = g.nodes, g.sqrt_m
    h = state.h
    st = steady_state(d_v)
    return MomentVector(
        st[0] + state.delta * g.inner(h, sm),
        st[1] + state.delta * g.inner(h, v * sm),
        st[2] + state.delta * g.inner(h, 0.5 * v * v * sm),
    )


@dataclass(frozen=True)
class AcousticState:
    rho: np.ndarray
    u: np.ndarray
    T: np.ndarray
    grid: SpatialGrid
    d_v: int = 1
    t: float = 0.0

    def __post_init__(self):
        if self.d_v < 1:
            raise InvalidArgumentError("d_v must be >= 1")

    @property
    def q(self) -> np.ndarray:
        return np.stack([self.rho, self.u, self.T])


def acoustic_matrix(d_v: int = 1) -> np.ndarray:
    """Flux Jacobian of q = (rho, u, T): q_t + A q_x = 0."""
    return np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 2.0 / d_v, 0.0]])


def characteristic_speeds(d_v: int = 1) -> np.ndarray:
    return np.sort(np.linalg.eigvals(acoustic_matrix(d_v)).real)


def _split_matrix(d_v: int) -> tuple[np.ndarray, np.ndarray]:
    lam, R = np.linalg.eig(acoustic_matrix(d_v))
    lam, R = lam.real, R.real
    Rinv = np.linalg.inv(R)
    plus = R @ np.diag(np.maximum(lam, 0.0)) @ Rinv
    minus = R @ np.diag(np.minimum(lam, 0.0)) @ Rinv
    return plus, minus


def acoustic_step(state: AcousticState, dt: float, c_cfl: float = 1.0) -> AcousticState:
    """First-order upwind step on the characteristic split of the flux."""
    dx = state.grid.dx
    c = np.sqrt(1.0 + 2.0 / state.d_v)
    if dt > c_cfl * dx / c * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.3g} exceeds CFL limit {c_cfl * dx / c:.3g}")
    plus, minus = _split_matrix(state.d_v)
    q = state.q
    dq_back = q - np.roll(q, 1, axis=1)
    dq_fwd = np.roll(q, -1, axis=1) - q
    q_new = q - (dt / dx) * (plus @ dq_back + minus @ dq_fwd)
    return replace(state, rho=q_new[0], u=q_new[1], T=q_new[2], t=state.t + dt)


def acoustic_solve(state: AcousticState, T: float, c_cfl: float = 0.5,
                   record: Sequence[float] | None = None):
    dt = c_cfl * state.grid.dx / np.sqrt(1.0 + 2.0 / state.d_v)
    return _march(state, acoustic_step, dt, T, record)


def acoustic_moments(state: AcousticState, delta: float) -> MomentVector:
    """Conserved variables of the state ``(1 + delta rho, delta u, 1 + delta T)``."""
    rho = 1.0 + delta * state.rho
    u = delta * state.u
    temp = 1.0 + delta * state.T
    return MomentVector(rho, rho * u, 0.5 * rho * u * u + 0.5 * state.d_v * rho * temp)


def acoustic_from_moments(mom: MomentVector, delta: float, grid: SpatialGrid,
                          d_v: int = 1) -> AcousticState:
    """Inverse of :func:`acoustic_moments`."""
    rho = np.asarray(mom.rho, dtype=float)
    u = mom.m / rho
    temp = (mom.E - 0.5 * rho * u * u) * 2.0 / (d_v * rho)
    return AcousticState((rho - 1.0) / delta, u / delta, (temp - 1.0) / delta, grid, d_v)


def limit_profile(rho: np.ndarray, u: np.ndarray, T: np.ndarray, vgrid: VelocityGridR,
                  d_v: int = 1) -> np.ndarray:
    """Kernel-valued h = [rho + v u + (v^2 - d_v) T / 2] sqrt(M)."""
    v = vgrid.nodes
    rho, u, T = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (rho, u, T))
    if not rho.shape == u.shape == T.shape:
        raise InvalidArgumentError("rho, u, T must share one spatial grid")
    poly = rho[:, None] + v[None, :] * u[:, None] + 0.5 * (v * v - d_v)[None, :] * T[:, None]
    return poly * vgrid.sqrt_m[None, :]


def vT_diagnostic(h_traj: Sequence[tuple[float, np.ndarray]],
                  h_limit_traj: Sequence[tuple[float, np.ndarray]],
                  vgrid: VelocityGridR) -> float:
    """``sup_t max_x ||h(t, x, .) - h_lim(t, x, .)||_{L2_v}`` over stored times."""
    if len(h_traj) != len(h_limit_traj) or len(h_traj) == 0:
        raise InvalidArgumentError("trajectories must be nonempty and of equal length")
    worst = 0.0
    for (t1, a), (t2, b) in zip(h_traj, h_limit_traj):
        if abs(t1 - t2) > 1e-12 * max(1.0, abs(t1)):
            raise InvalidArgumentError(f"time stamps differ: {t1} vs {t2}")
        d = np.asarray(a) - np.asarray(b)
        worst = max(worst, float(np.sqrt(vgrid.inner(d, d)).max()))
    return worst
