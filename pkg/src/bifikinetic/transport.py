"""Linear transport in slab geometry, its diffusion limit, and grid transfer.

The kinetic solver uses the micro-macro decomposition f = rho + eps*g on a
staggered periodic grid: rho at cell centers, g at interfaces x_{i+1/2}
(array index i holds the right face of cell i). Time stepping is first-order
IMEX: explicit upwind transport, implicit pointwise relaxation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bifi import Snapshot
from .errors import DomainError, InvalidArgumentError, StepSizeError
from .randomspace import AffineField, SpatialGrid, eval_affine_field

__all__ = [
    "VelocityGridGL",
    "MicroMacroState",
    "TransportProblem",
    "velocity_average",
    "micro_macro_init",
    "micro_macro_step",
    "transport_dt",
    "transport_max_dt",
    "transport_solve",
    "diffusion_solve",
    "coarse_restrict",
    "fine_prolong",
    "discrete_norm",
    "interface_norm",
]


@dataclass(frozen=True)
class VelocityGridGL:
    """Gauss-Legendre nodes on (-1, 1); weights sum to 2."""

    nv: int = 16

    def __post_init__(self):
        if self.nv < 2 or self.nv % 2:
            raise InvalidArgumentError("nv must be an even number >= 2")
        v, w = np.polynomial.legendre.leggauss(self.nv)
        object.__setattr__(self, "nodes", v)
        object.__setattr__(self, "weights", w)

    def average(self, phi: np.ndarray) -> np.ndarray:
        return velocity_average(phi, self)


def velocity_average(phi: np.ndarray, vgrid: VelocityGridGL) -> np.ndarray:
    """``[phi] = 1/2 * sum_m w_m phi(., v_m)`` over the trailing velocity axis."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1:] != (vgrid.nv,):
        raise InvalidArgumentError(f"last axis must have {vgrid.nv} velocity nodes, got {phi.shape}")
    return 0.5 * phi @ vgrid.weights


@dataclass(frozen=True)
class MicroMacroState:
    rho: np.ndarray
    g: np.ndarray
    t: float
    eps: float


def micro_macro_init(f_in: np.ndarray, eps: float, vgrid: VelocityGridGL) -> MicroMacroState:
    """Split ``f_in`` (centers x velocities) into rho and the zero-average g."""
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be positive, got {eps}")
    f_in = np.asarray(f_in, dtype=float)
    rho = velocity_average(f_in, vgrid)
    g_c = (f_in - rho[:, None]) / eps
    g = 0.5 * (g_c + np.roll(g_c, -1, axis=0))
    g -= velocity_average(g, vgrid)[:, None]
    return MicroMacroState(rho, g, 0.0, float(eps))


def transport_max_dt(dx: float, eps: float, sigma_min: float) -> float:
    """Largest step accepted by :func:`micro_macro_step`.

    ``(3/2 sigma_min dx^2 + eps dx) / 2``: the parabolic restriction of the
    limiting diffusion scheme plus the hyperbolic one of the kinetic regime.
    Stays O(dx^2) as eps -> 0, never shrinks to O(eps dx).
    """
    return 0.5 * (1.5 * sigma_min * dx * dx + eps * dx)


def transport_dt(dx: float, eps: float, sigma_min: float, c_cfl: float = 0.4) -> float:
    """Default step ``c_cfl * (3/2 sigma_min dx^2 + eps dx)``."""
    return c_cfl * (1.5 * sigma_min * dx * dx + eps * dx)


def micro_macro_step(
    state: MicroMacroState,
    sigma: np.ndarray,
    dt: float,
    vgrid: VelocityGridGL,
    sigma_a: float = 0.0,
    check_cfl: bool = True,
) -> MicroMacroState:
    """Advance the micro-macro system by one IMEX step of size ``dt``."""
    rho, g, eps = state.rho, state.g, state.eps
    nx = rho.size
    dx = 1.0 / nx
    sigma = np.asarray(sigma, dtype=float)
    if check_cfl and dt > transport_max_dt(dx, eps, float(sigma.min())) * (1 + 1e-12):
        raise StepSizeError(
            f"dt={dt:.3g} exceeds the stability limit {transport_max_dt(dx, eps, sigma.min()):.3g}"
        )
    v = vgrid.nodes
    # v * D_x g, upwinded per velocity node
    back = (g - np.roll(g, 1, axis=0)) / dx
    fwd = (np.roll(g, -1, axis=0) - g) / dx
    vdg = np.where(v > 0, v * back, v * fwd)
    vdg -= velocity_average(vdg, vgrid)[:, None]
    drho = (np.roll(rho, -1) - rho) / dx
    g_star = g - (dt / eps) * vdg - (dt / eps**2) * v[None, :] * drho[:, None]
    sigma_face = 0.5 * (sigma + np.roll(sigma, -1))
    g_new = g_star / (1.0 + dt * sigma_face / eps**2)[:, None]
    flux = velocity_average(v * g_new, vgrid)
    rho_new = rho - (dt / dx) * (flux - np.roll(flux, 1))
    if sigma_a:
        rho_new = rho_new - dt * sigma_a * rho
    return MicroMacroState(rho_new, g_new, state.t + dt, eps)


@dataclass(frozen=True)
class TransportProblem:
    """Random-scattering linear transport problem on a periodic slab.

    Initial data is isotropic, ``f_in(x, v) = rho0(x)``, with ``rho0``
    given on cell centers (default ``1 + 0.5 cos(2 pi x)``).
    """

    sigma: AffineField
    eps: float
    T: float
    vgrid: VelocityGridGL = VelocityGridGL(16)
    c_cfl: float = 0.4
    sigma_a: float = 0.0
    rho0: np.ndarray | None = None
    dt: float | None = None
    model: str = "transport"

    @property
    def grid(self) -> SpatialGrid:
        return self.sigma.grid

    def initial_density(self) -> np.ndarray:
        if self.rho0 is not None:
            return np.asarray(self.rho0, dtype=float)
        return 1.0 + 0.5 * np.cos(2 * np.pi * self.grid.centers)

    def with_grid(self, grid: SpatialGrid, **changes) -> "TransportProblem":
        """Same problem on another grid; the field is re-sampled from its closed form."""
        return replace(self, sigma=self.sigma.resample(grid), rho0=None, **changes)


def transport_solve(problem: TransportProblem, z, return_state: bool = False):
    """Solve to ``problem.T`` and return rho as a Snapshot (optionally the final state too)."""
    grid = problem.grid
    sigma = eval_affine_field(problem.sigma, z, grid)
    if np.any(sigma <= 0):
        raise DomainError("scattering coefficient must be positive")
    rho0 = problem.initial_density()
    f_in = np.repeat(rho0[:, None], problem.vgrid.nv, axis=1)
    state = micro_macro_init(f_in, problem.eps, problem.vgrid)
    dt = problem.dt or transport_dt(grid.dx, problem.eps, float(sigma.min()), problem.c_cfl)
    while state.t < problem.T * (1 - 1e-14):
        h = min(dt, problem.T - state.t)
        state = micro_macro_step(state, sigma, h, problem.vgrid, problem.sigma_a)
    state = replace(state, t=problem.T) if problem.T > 0 else state
    snap = Snapshot(state.rho, grid.dx, model=problem.model, nx=grid.nx, z=np.asarray(z, dtype=float))
    return (snap, state) if return_state else snap


def diffusion_solve(rho0: np.ndarray, sigma: np.ndarray, grid: SpatialGrid, T: float,
                    c_cfl: float = 0.4, z=None, model: str = "diffusion") -> Snapshot:
    """Explicit finite-volume solve of ``rho_t = (kappa rho_x)_x`` with ``kappa = 1/(3 sigma)``."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise DomainError("scattering coefficient must be positive")
    kappa = 1.0 / (3.0 * sigma)
    kface = 0.5 * (kappa + np.roll(kappa, -1))
    dx = grid.dx
    dt = c_cfl * dx * dx / (2.0 * kappa.max())
    rho = np.asarray(rho0, dtype=float).copy()
    t = 0.0
    while t < T * (1 - 1e-14):
        h = min(dt, T - t)
        flux = kface * (np.roll(rho, -1) - rho) / dx
        rho = rho + (h / dx) * (flux - np.roll(flux, 1))
        t += h
    zz = np.zeros(0) if z is None else np.asarray(z, dtype=float)
    return Snapshot(rho, dx, model=model, nx=grid.nx, z=zz)


def _ratio(from_grid: SpatialGrid, to_grid: SpatialGrid) -> int:
    big, small = max(from_grid.nx, to_grid.nx), min(from_grid.nx, to_grid.nx)
    if big % small:
        raise InvalidArgumentError(f"grids {from_grid.nx} and {to_grid.nx} are not commensurate")
    return big // small


def coarse_restrict(values, from_grid: SpatialGrid, to_grid: SpatialGrid,
                    nodes: str = "centers") -> np.ndarray:
    """Fine -> coarse: cell averaging for centers, injection for interfaces.

    Extra trailing axes (e.g. velocity) are carried along.
    """
    r = _ratio(from_grid, to_grid)
    if to_grid.nx > from_grid.nx:
        raise InvalidArgumentError("restriction must go from fine to coarse")
    values = np.asarray(values, dtype=float)
    if nodes == "centers":
        return values.reshape(to_grid.nx, r, *values.shape[1:]).mean(axis=1)
    return values[r - 1::r]


def fine_prolong(values, from_grid: SpatialGrid, to_grid: SpatialGrid,
                 nodes: str = "centers") -> np.ndarray:
    """Coarse -> fine, second order.

    Centers use a piecewise-linear reconstruction with centered slopes, which
    keeps each coarse cell average; interfaces use periodic linear
    interpolation between the (nested) coarse faces.
    """
    r = _ratio(from_grid, to_grid)
    if to_grid.nx < from_grid.nx:
        raise InvalidArgumentError("prolongation must go from coarse to fine")
    u = np.asarray(values, dtype=float)
    if nodes == "centers":
        slope = (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / 2.0
        offsets = (np.arange(r) + 0.5) / r - 0.5
        offsets = offsets.reshape(1, r, *([1] * (u.ndim - 1)))
        out = u[:, None, ...] + slope[:, None, ...] * offsets
        return out.reshape(to_grid.nx, *u.shape[1:])
    # fine face j sits between coarse faces k-1 and k at fraction s
    j = np.arange(to_grid.nx)
    k = (j + 1) // r - 1
    s = ((j + 1) % r) / r
    left = u[k % from_grid.nx]
    right = u[(k + 1) % from_grid.nx]
    if u.ndim > 1:
        s = s.reshape(-1, *([1] * (u.ndim - 1)))
    return left + s * (right - left)


def discrete_norm(mu: np.ndarray) -> float:
    """``sqrt(sum_i mu_i^2 dx)`` with ``dx = 1/len(mu)``."""
    mu = np.asarray(mu, dtype=float)
    return float(np.sqrt(np.sum(mu**2) / mu.size))


def interface_norm(phi: np.ndarray, vgrid: VelocityGridGL) -> float:
    """``sqrt(sum_i [phi_{i+1/2}^2] dx)``."""
    phi = np.asarray(phi, dtype=float)
    return float(np.sqrt(np.sum(velocity_average(phi**2, vgrid)) / phi.shape[0]))
