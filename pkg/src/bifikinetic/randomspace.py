"""Random parameters, periodic grids and z-affine random fields.

A random field is stored sampled on a grid as ``base + sum_j z_j * modes[j]``.
The closed-form recipe (:class:`FieldSpec`) is kept alongside so the field
can be re-sampled on another resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DomainError, InvalidArgumentError

__all__ = [
    "SpatialGrid",
    "FieldSpec",
    "AffineField",
    "as_parameter",
    "sample_parameters",
    "eval_affine_field",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on [0, 1) with ``nx`` cells."""

    nx: int

    def __post_init__(self):
        if int(self.nx) < 1:
            raise InvalidArgumentError(f"nx must be positive, got {self.nx}")

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def interfaces(self) -> np.ndarray:
        # x_{i+1/2}, the right face of cell i
        return (np.arange(self.nx) + 1.0) * self.dx


def as_parameter(z, d_z: int | None = None) -> np.ndarray:
    """Validate ``z`` as a point of [-1, 1]^d_z and return it as a float array."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1:
        raise InvalidArgumentError("parameter vector must be one-dimensional")
    if d_z is not None and z.size != d_z:
        raise InvalidArgumentError(f"expected {d_z} parameters, got {z.size}")
    if np.any(np.abs(z) > 1.0):
        raise InvalidArgumentError(f"parameter entries must lie in [-1, 1]: {z}")
    return z


def sample_parameters(d_z: int, M: int, seed: int) -> list[np.ndarray]:
    """Draw ``M`` i.i.d. uniform points of [-1, 1]^d_z, deterministic in ``seed``."""
    if d_z < 1 or M < 1:
        raise InvalidArgumentError(f"need d_z >= 1 and M >= 1, got d_z={d_z}, M={M}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, size=(M, d_z))
    return [p.copy() for p in pts]


@dataclass(frozen=True)
class FieldSpec:
    """Closed-form description of an affine field.

    base(x) = base + base_cos * cos(2 pi x)
    mode_j(x) = amplitude * j**(-decay) * profile(2 pi j x),  j = 1..d_z
    """

    base: float = 1.0
    base_cos: float = 0.0
    profile: str = "sin"
    amplitude: float = 0.5
    decay: float = 2.0
    d_z: int = 1
    sigma_min: float | None = None

    @classmethod
    def from_config(cls, cfg: Mapping[str, str], prefix: str = "sigma") -> "FieldSpec":
        """Read ``<prefix>_base``, ``<prefix>_amplitude`` ... from a flat key/value map."""

        def get(key, default, conv=float):
            raw = cfg.get(f"{prefix}_{key}")
            return default if raw is None else conv(raw)

        sigma_min = cfg.get(f"{prefix}_min")
        return cls(
            base=get("base", cls.base),
            base_cos=get("base_cos", cls.base_cos),
            profile=get("profile", cls.profile, str),
            amplitude=get("amplitude", cls.amplitude),
            decay=get("decay", cls.decay),
            d_z=int(cfg.get("d_z", get("d_z", cls.d_z, int))),
            sigma_min=None if sigma_min is None else float(sigma_min),
        )

    def sample(self, grid: SpatialGrid, nodes: str = "centers") -> "AffineField":
        x = grid.centers if nodes == "centers" else grid.interfaces
        funcs = {"sin": np.sin, "cos": np.cos}
        if self.profile not in funcs:
            raise InvalidArgumentError(f"unknown mode profile {self.profile!r}")
        prof = funcs[self.profile]
        base = self.base + self.base_cos * np.cos(2 * np.pi * x)
        j = np.arange(1, self.d_z + 1)[:, None]
        modes = self.amplitude * j ** (-self.decay) * prof(2 * np.pi * j * x[None, :])
        return AffineField(base=base, modes=modes, grid=grid, sigma_min=self.sigma_min, spec=self)


@dataclass(frozen=True)
class AffineField:
    """Field ``base + sum_j z_j modes[j]`` sampled on the nodes of ``grid``."""

    base: np.ndarray
    modes: np.ndarray
    grid: SpatialGrid
    sigma_min: float | None = None
    spec: FieldSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        modes = np.asarray(self.modes, dtype=float).reshape(-1, base.size)
        if base.shape != (self.grid.nx,):
            raise InvalidArgumentError("base profile does not match the grid")
        base.setflags(write=False)
        modes.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "modes", modes)

    @property
    def d_z(self) -> int:
        return self.modes.shape[0]

    def lower_bound(self) -> float:
        """Smallest value over all z in the cube; attained at a sign corner."""
        return float(np.min(self.base - np.abs(self.modes).sum(axis=0)))

    def corner_minimum(self) -> float:
        """Brute-force minimum over the 2**d_z corners of the cube."""
        best = np.inf
        for k in range(2 ** self.d_z):
            signs = np.array([1.0 if (k >> j) & 1 else -1.0 for j in range(self.d_z)])
            best = min(best, float(np.min(self.base + signs @ self.modes)))
        return best

    def resample(self, grid: SpatialGrid) -> "AffineField":
        if self.spec is None:
            raise InvalidArgumentError("field has no closed-form spec to re-sample from")
        return self.spec.sample(grid)

    def __call__(self, z) -> np.ndarray:
        return eval_affine_field(self, z, self.grid)


def eval_affine_field(field: AffineField, z, grid: SpatialGrid | None = None) -> np.ndarray:
    """Evaluate ``field`` at parameter ``z``; enforce the positivity floor if one is set."""
    if grid is not None and grid != field.grid:
        raise InvalidArgumentError("grid does not match the field profiles")
    z = as_parameter(z, field.d_z) if field.d_z else np.zeros(0)
    values = field.base + z @ field.modes if field.d_z else field.base.copy()
    if field.sigma_min is not None and np.any(values < field.sigma_min):
        raise DomainError(
            f"field drops to {values.min():.6g} < sigma_min={field.sigma_min:g} at z={z}"
        )
    return values
