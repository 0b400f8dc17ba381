"""High/low-fidelity model pairs used by the experiments."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..bifi import Snapshot
from ..perturbative import (
    AcousticState,
    KernelBasis,
    PerturbativeState,
    VelocityGridR,
    acoustic_from_moments,
    acoustic_moments,
    acoustic_solve,
    bgk_max_dt,
    bgk_solve,
    limit_profile,
    moments_from_h,
)
from ..randomspace import FieldSpec, SpatialGrid, eval_affine_field
from ..transport import (
    TransportProblem,
    VelocityGridGL,
    diffusion_solve,
    fine_prolong,
    transport_solve,
)
from .config import ExperimentConfig

Solver = Callable[[np.ndarray], Snapshot]


class CountingSolver:
    """Wraps a solver and counts its invocations."""

    def __init__(self, fn: Solver, name: str):
        self.fn = fn
        self.name = name
        self.calls = 0

    def __call__(self, z) -> Snapshot:
        self.calls += 1
        try:
            return self.fn(np.asarray(z, dtype=float))
        except Exception as exc:
            raise type(exc)(f"{self.name} failed at z={np.asarray(z).tolist()}: {exc}") from exc


@dataclass
class ModelPair:
    name: str
    low: Solver
    high: Solver
    # the low model does not see eps, so its snapshots can be shared across an eps sweep
    low_depends_on_eps: bool
    feasible: bool = True


def sigma_spec(cfg: ExperimentConfig) -> FieldSpec:
    fc = cfg.field_config()
    fc.setdefault("sigma_min", "0.05")
    return FieldSpec.from_config(fc, "sigma")


def init_spec(cfg: ExperimentConfig) -> FieldSpec:
    fc = cfg.field_config()
    fc.setdefault("init_base", "0.0")
    fc.setdefault("init_base_cos", "1.0")
    return FieldSpec.from_config(fc, "init")


def transport_problem(cfg: ExperimentConfig, eps: float, nx: int | None = None,
                      model: str = "transport") -> TransportProblem:
    grid = SpatialGrid(nx or cfg.nx)
    return TransportProblem(
        sigma_spec(cfg).sample(grid),
        eps=eps,
        T=cfg.T,
        vgrid=VelocityGridGL(cfg.nv),
        c_cfl=cfg.c_cfl,
        sigma_a=cfg.sigma_a,
        model=model,
    )


def _transport_diffusion(cfg: ExperimentConfig, eps: float) -> ModelPair:
    prob = transport_problem(cfg, eps)
    grid = prob.grid

    def high(z):
        return transport_solve(prob, z)

    def low(z):
        sigma = eval_affine_field(prob.sigma, z, grid)
        return diffusion_solve(prob.initial_density(), sigma, grid, cfg.T, cfg.c_cfl, z=z)

    return ModelPair("transport/diffusion", low, high, low_depends_on_eps=False)


def _transport_fine_coarse(cfg: ExperimentConfig, eps: float) -> ModelPair:
    fine = transport_problem(cfg, eps)
    coarse = transport_problem(cfg, eps, nx=cfg.nx_coarse, model="transport-coarse")

    def high(z):
        return transport_solve(fine, z)

    def low(z):
        s = transport_solve(coarse, z)
        values = fine_prolong(s.values, coarse.grid, fine.grid)
        return Snapshot(values, fine.grid.dx, model="transport-coarse", nx=fine.grid.nx, z=z)

    return ModelPair("transport-fine/transport-coarse", low, high, low_depends_on_eps=True)


def moment_snapshot(mom, grid: SpatialGrid, model: str, z) -> Snapshot:
    return Snapshot(mom.stack(), grid.dx, model=model, nx=grid.nx, nfields=3, z=z)


def _bgk_acoustic(cfg: ExperimentConfig, eps: float) -> ModelPair:
    grid = SpatialGrid(cfg.nx)
    vgrid = VelocityGridR(cfg.n_w, cfg.v_max)
    basis = KernelBasis.from_grid(vgrid)
    rho_field = init_spec(cfg).sample(grid)
    zero = np.zeros(grid.nx)

    def initial_state(z) -> PerturbativeState:
        h_in = limit_profile(eval_affine_field(rho_field, z, grid), zero, zero, vgrid)
        return PerturbativeState(h_in, grid, eps, cfg.alpha, cfg.delta)

    def high(z):
        final, _ = bgk_solve(initial_state(z), cfg.T, basis)
        return moment_snapshot(moments_from_h(final, basis), grid, "bgk", z)

    def low(z):
        # consistent initial data: acoustic state carrying the kinetic initial moments
        start = acoustic_from_moments(moments_from_h(initial_state(z), basis), cfg.delta, grid)
        final, _ = acoustic_solve(start, cfg.T)
        return moment_snapshot(acoustic_moments(final, cfg.delta), grid, "acoustic", z)

    steps = cfg.T / bgk_max_dt(grid.dx, eps, cfg.alpha, vgrid.v_max, 0.5)
    return ModelPair("bgk/acoustic", low, high, low_depends_on_eps=False,
                     feasible=steps <= cfg.max_steps)


_BUILDERS = {
    "transport/diffusion": _transport_diffusion,
    "transport-fine/transport-coarse": _transport_fine_coarse,
    "bgk/acoustic": _bgk_acoustic,
}


def build_pair(cfg: ExperimentConfig, eps: float | None = None) -> ModelPair:
    return _BUILDERS[cfg.model](cfg, cfg.eps[0] if eps is None else eps)


def identical_pair(pair: ModelPair) -> ModelPair:
    """Degenerate pair with the high model on both sides."""
    return ModelPair(pair.name + " (identical)", pair.high, pair.high, True, pair.feasible)
