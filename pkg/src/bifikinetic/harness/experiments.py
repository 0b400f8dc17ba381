"""Offline/online pipelines and the error studies built on them."""
from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..bifi import BiFiSurrogate, Snapshot, error_split, greedy_select, stability_report
from ..errors import InvalidArgumentError
from ..io import fmt, load_surrogate, save_surrogate
from ..randomspace import SpatialGrid, eval_affine_field, sample_parameters
from ..transport import (
    VelocityGridGL,
    discrete_norm,
    fine_prolong,
    interface_norm,
    transport_solve,
)
from .config import ExperimentConfig
from .models import CountingSolver, ModelPair, build_pair, transport_problem

log = logging.getLogger(__name__)

__all__ = [
    "ErrorReport",
    "OfflineResult",
    "empirical_error",
    "evaluate_surrogate",
    "run_offline",
    "run_bifi_eval",
    "run_convergence_in_N",
    "run_eps_sweep",
    "run_order_study",
    "observed_order",
    "write_csv",
]


@dataclass
class ErrorReport:
    """Per-sample errors and their empirical L2_z aggregate.

    The optional arrays hold the error-split components and coefficient
    statistics when the report comes from a bi-fidelity evaluation.
    """

    errors: np.ndarray
    model_gap: np.ndarray | None = None
    projection: np.ndarray | None = None
    term_a: np.ndarray | None = None
    c_norms: np.ndarray | None = None
    c_bounds: np.ndarray | None = None
    lambda0: float | None = None
    identity_residual: float = 0.0

    @staticmethod
    def rms(a) -> float:
        a = np.asarray(a, dtype=float)
        return float(np.sqrt(np.mean(a * a)))

    @property
    def aggregate(self) -> float:
        return self.rms(self.errors)

    @property
    def bound_ok(self) -> bool:
        if self.c_norms is None:
            return True
        return bool(np.all(self.c_norms <= self.c_bounds))

    @property
    def triangle_ok(self) -> bool:
        if self.model_gap is None:
            return True
        return bool(np.all(self.errors <= self.model_gap + self.projection + self.term_a))


def empirical_error(test_samples: Sequence, reference_solver: Callable, approx_evaluator: Callable) -> ErrorReport:
    """Spatial discrete-L2 error per sample and its root-mean-square over samples."""
    if len(test_samples) == 0:
        raise InvalidArgumentError("empty test set")
    errs = []
    for z in test_samples:
        ref, approx = reference_solver(z), approx_evaluator(z)
        if not ref.compatible(approx):
            raise InvalidArgumentError("reference and approximation are not compatible")
        errs.append(ref.like(ref.values - approx.values).norm())
    return ErrorReport(np.array(errs))


def evaluate_surrogate(surrogate: BiFiSurrogate, lows: Sequence[Snapshot], highs: Sequence[Snapshot]) -> ErrorReport:
    """Bi-fidelity errors on precomputed test pairs (u^L(z), u^H(z))."""
    if len(lows) == 0:
        raise InvalidArgumentError("empty test set")
    rows = []
    resid = 0.0
    for uL, uH in zip(lows, highs):
        c = surrogate.coefficients(uL)
        split = error_split(uH, uL, surrogate, c)
        stab = stability_report(surrogate, c, uL)
        resid = max(resid, split.identity_residual)
        rows.append((split.total, split.model_gap, split.projection_residual, split.term_a,
                     stab.c_norm, stab.bound))
    a = np.array(rows)
    return ErrorReport(a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5],
                       surrogate.lambda0, resid)


@dataclass
class OfflineResult:
    surrogate: BiFiSurrogate
    train: list[np.ndarray]
    low_snaps: list[Snapshot]
    low_calls: int
    high_calls: int
    pivots: np.ndarray = field(default_factory=lambda: np.zeros(0))


def run_offline(cfg: ExperimentConfig, pair: ModelPair | None = None, N: int | None = None,
                low_snaps: list[Snapshot] | None = None, out: str | Path | None = None) -> OfflineResult:
    """Sample the training set, run the low model everywhere, select, run the high model at the selection."""
    pair = pair or build_pair(cfg)
    train = sample_parameters(cfg.d_z, cfg.M_train, cfg.seed)
    low = CountingSolver(pair.low, "low-fidelity")
    high = CountingSolver(pair.high, "high-fidelity")
    if low_snaps is None:
        low_snaps = [low(z) for z in train]
    N = N or max(cfg.N)
    basis = greedy_select(low_snaps, N, cfg.tol)
    if basis.size < N:
        warnings.warn(f"greedy stopped at rank {basis.size} < requested N={N}", stacklevel=2)
    log.info("greedy pivots: %s", " ".join(f"{p:.3e}" for p in basis.pivots))
    highs = [high(train[i]) for i in basis.indices]
    surrogate = BiFiSurrogate(basis, [low_snaps[i] for i in basis.indices], highs)
    log.info("offline: %d low-fidelity runs, %d high-fidelity runs", low.calls, high.calls)
    result = OfflineResult(surrogate, train, low_snaps, low.calls, high.calls, basis.pivots)
    target = out
    if target is not None:
        save_surrogate(Path(target) / "surrogate", surrogate, candidate_count=len(train))
        _manifest(target, cfg, "offline", {"low": low.calls, "high": high.calls},
                  {"N": surrogate.N, "pivots": basis.pivots.tolist(), "lambda0": surrogate.lambda0})
    return result


def _test_pairs(cfg: ExperimentConfig, pair: ModelPair, samples=None):
    samples = samples if samples is not None else sample_parameters(cfg.d_z, cfg.M_test, cfg.seed_test)
    low = CountingSolver(pair.low, "low-fidelity")
    ref = CountingSolver(pair.high, "reference")
    lows = [low(z) for z in samples]
    highs = [ref(z) for z in samples]
    return samples, lows, highs, {"test_low": low.calls, "test_reference": ref.calls}


def run_bifi_eval(cfg: ExperimentConfig, out: str | Path | None = None) -> tuple[ErrorReport, list]:
    """Online stage on fresh samples; loads ``<out>/surrogate`` when present."""
    target = Path(out or cfg.out or ".")
    pair = build_pair(cfg)
    sdir = target / "surrogate"
    calls: dict[str, int] = {}
    if (sdir / "index.txt").exists():
        surrogate = load_surrogate(sdir)
    else:
        off = run_offline(cfg, pair, out=target)
        surrogate = off.surrogate
        calls.update(offline_low=off.low_calls, offline_high=off.high_calls)
    samples, lows, highs, tc = _test_pairs(cfg, pair)
    calls.update(tc)
    rep = evaluate_surrogate(surrogate, lows, highs)
    header = ["sample", *[f"z{j + 1}" for j in range(cfg.d_z)], "bifi_error", "model_gap",
              "projection_error", "term_a", "c_norm", "c_bound", "bound_ok"]
    rows = [[k, *z, rep.errors[k], rep.model_gap[k], rep.projection[k], rep.term_a[k],
             rep.c_norms[k], rep.c_bounds[k], int(rep.c_norms[k] <= rep.c_bounds[k])]
            for k, z in enumerate(samples)]
    write_csv(target / "bifi_eval.csv", header, rows)
    _manifest(target, cfg, "bifi-eval", calls,
              {"aggregate_error": rep.aggregate, "lambda0": rep.lambda0, "bound_ok": rep.bound_ok})
    return rep, rows


def run_convergence_in_N(cfg: ExperimentConfig, pair: ModelPair | None = None,
                         out: str | Path | None = None):
    """Errors for each N in ``cfg.N``, using nested prefixes of one greedy ordering."""
    pair = pair or build_pair(cfg)
    off = run_offline(cfg, pair)
    _, lows, highs, calls = _test_pairs(cfg, pair)
    rows, reports = [], {}
    for N in sorted(set(cfg.N)):
        if N > off.surrogate.N:
            warnings.warn(f"N={N} exceeds basis rank {off.surrogate.N}; truncated", stacklevel=2)
            N = off.surrogate.N
            if N in reports:
                continue
        rep = evaluate_surrogate(off.surrogate.truncate(N), lows, highs)
        reports[N] = rep
        rows.append([N, ErrorReport.rms(rep.projection), rep.aggregate, ErrorReport.rms(rep.model_gap),
                     ErrorReport.rms(rep.term_a), rep.lambda0, float(rep.c_norms.max()),
                     int(rep.bound_ok), int(rep.triangle_ok)])
    header = ["N", "projection_error", "bifi_error", "model_gap", "term_a", "lambda0",
              "max_c_norm", "bound_ok", "triangle_ok"]
    target = out if out is not None else cfg.out
    if target is not None:
        write_csv(Path(target) / "conv_n.csv", header, rows)
        _manifest(target, cfg, "conv-n",
                  {"offline_low": off.low_calls, "offline_high": off.high_calls, **calls},
                  {"basis_size": off.surrogate.N})
    return header, rows, reports


def run_eps_sweep(cfg: ExperimentConfig, out: str | Path | None = None, N: int | None = None):
    """Repeat offline + evaluation for every eps at fixed N (default max(cfg.N))."""
    N = N or max(cfg.N)
    samples = sample_parameters(cfg.d_z, cfg.M_test, cfg.seed_test)
    shared_low = shared_test_low = None
    rows, reports = [], {}
    calls = {"low": 0, "high": 0, "reference": 0}
    for eps in cfg.eps:
        pair = build_pair(cfg, eps)
        if not pair.feasible:
            log.warning("eps=%g is CFL-infeasible for this grid; skipped", eps)
            rows.append([eps, *[float("nan")] * 7, 0, 0, 1])
            continue
        low_snaps = shared_low if not pair.low_depends_on_eps else None
        off = run_offline(cfg, pair, N=N, low_snaps=low_snaps)
        calls["low"] += off.low_calls
        calls["high"] += off.high_calls
        if not pair.low_depends_on_eps:
            shared_low = off.low_snaps
        if shared_test_low is None or pair.low_depends_on_eps:
            test_low = [pair.low(z) for z in samples]
            calls["low"] += len(samples)
            if not pair.low_depends_on_eps:
                shared_test_low = test_low
        else:
            test_low = shared_test_low
        test_high = [pair.high(z) for z in samples]
        calls["reference"] += len(samples)
        rep = evaluate_surrogate(off.surrogate, test_low, test_high)
        reports[eps] = rep
        max_gap = max(h.like(h.values - l.values).norm() for l, h in zip(off.surrogate.low, off.surrogate.high))
        gap, proj = ErrorReport.rms(rep.model_gap), ErrorReport.rms(rep.projection)
        bound = gap + proj + np.sqrt(off.surrogate.N) * float(rep.c_norms.max()) * max_gap
        rows.append([eps, gap, proj, rep.aggregate, ErrorReport.rms(rep.term_a), bound,
                     rep.lambda0, float(rep.c_norms.max()),
                     int(rep.aggregate <= bound and rep.triangle_ok), int(rep.bound_ok), 0])
    header = ["eps", "model_gap", "projection_error", "bifi_error", "term_a", "structure_bound",
              "lambda0", "max_c_norm", "structure_ok", "bound_ok", "skipped"]
    target = out if out is not None else cfg.out
    if target is not None:
        write_csv(Path(target) / "eps_sweep.csv", header, rows)
        _manifest(target, cfg, "eps-sweep", calls, {"N": N})
    return header, rows, reports


def observed_order(h: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(h)."""
    slope, _ = np.polyfit(np.log(np.asarray(h, float)), np.log(np.asarray(err, float)), 1)
    return float(slope)


def _analytic_mode(grid: SpatialGrid, vgrid: VelocityGridGL, sigma: float, T: float):
    """Heat-mode solution of the diffusion limit and its first-order micro part."""
    kappa = 1.0 / (3.0 * sigma)
    amp = 0.5 * np.exp(-(2 * np.pi) ** 2 * kappa * T)
    rho = 1.0 + amp * np.cos(2 * np.pi * grid.centers)
    drho = -2 * np.pi * amp * np.sin(2 * np.pi * grid.interfaces)
    g = -(vgrid.nodes[None, :] * drho[:, None]) / sigma
    return rho, g


def run_order_study(cfg: ExperimentConfig, out: str | Path | None = None):
    """Refine the coarse mesh toward the fine one at fixed z; fit the observed order.

    ``order_reference=fine`` compares with the run on ``cfg.nx`` (coarse
    results prolonged to the fine grid); ``analytic`` compares each level with
    the heat-mode solution of the diffusion limit (constant sigma only).
    ``order_dt=quadratic`` uses dt = c_cfl * 3/2 sigma_min dx^2,
    ``linear`` uses dt = c_cfl * dx.
    """
    if cfg.model != "transport-fine/transport-coarse":
        raise InvalidArgumentError("order study needs the transport-fine/transport-coarse pair")
    levels = sorted(cfg.order_levels)
    if len(levels) < 3:
        raise InvalidArgumentError("order study needs at least 3 refinement levels")
    eps = cfg.eps[0]
    z = np.asarray(cfg.order_z if cfg.order_z is not None else np.zeros(cfg.d_z), dtype=float)
    vgrid = VelocityGridGL(cfg.nv)

    def dt_for(prob) -> float:
        smin = float(eval_affine_field(prob.sigma, z, prob.grid).min())
        dx = prob.grid.dx
        if cfg.order_dt == "linear":
            return cfg.c_cfl * dx
        if cfg.order_dt == "quadratic":
            return cfg.c_cfl * 1.5 * smin * dx * dx
        raise InvalidArgumentError(f"order_dt must be 'linear' or 'quadratic', got {cfg.order_dt!r}")

    def solve(nx: int):
        prob = transport_problem(cfg, eps, nx=nx)
        prob = replace(prob, dt=dt_for(prob))
        snap, state = transport_solve(prob, z, return_state=True)
        return prob, snap, state

    calls = 0
    ref = None
    if cfg.order_reference == "fine":
        ref = solve(cfg.nx)
        calls += 1
    elif cfg.order_reference != "analytic":
        raise InvalidArgumentError("order_reference must be 'fine' or 'analytic'")
    rows, hs, errs = [], [], []
    for nx in levels:
        prob, snap, state = solve(nx)
        calls += 1
        if ref is not None:
            fprob, fsnap, fstate = ref
            rho_l = fine_prolong(snap.values, prob.grid, fprob.grid)
            g_l = fine_prolong(state.g, prob.grid, fprob.grid, nodes="interfaces")
            err = discrete_norm(fsnap.values - rho_l) + eps * interface_norm(fstate.g - g_l, vgrid)
        else:
            sigma = eval_affine_field(prob.sigma, z, prob.grid)
            if np.ptp(sigma) > 0 or cfg.sigma_a:
                raise InvalidArgumentError("analytic reference needs constant sigma and no absorption")
            rho_ex, g_ex = _analytic_mode(prob.grid, vgrid, float(sigma[0]), cfg.T)
            err = discrete_norm(snap.values - rho_ex) + eps * interface_norm(state.g - g_ex, vgrid)
        order = np.log(errs[-1] / err) / np.log(hs[-1] / prob.grid.dx) if errs and err > 0 else float("nan")
        hs.append(prob.grid.dx)
        errs.append(err)
        rows.append([nx, prob.grid.dx, prob.dt, err, order])
    ls = observed_order(hs, errs) if all(e > 0 for e in errs) else float("nan")
    header = ["nx", "dx", "dt", "error", "observed_order"]
    target = out if out is not None else cfg.out
    if target is not None:
        write_csv(Path(target) / "order_study.csv", header, rows)
        _manifest(target, cfg, "order-study", {"transport": calls}, {"least_squares_order": ls})
    return header, rows, ls


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _manifest(out, cfg: ExperimentConfig, command: str, calls: dict, results: dict) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {"command": command, "seed": cfg.seed, "config": cfg.echo(),
           "solver_calls": calls, "results": results}
    (out / f"manifest_{command}.json").write_text(json.dumps(doc, indent=2, default=float) + "\n")
