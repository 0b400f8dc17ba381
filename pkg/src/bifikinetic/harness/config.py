"""Experiment configuration read from flat ``key=value`` files."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping

from ..errors import InvalidArgumentError
from ..io import read_config

MODEL_PAIRS = ("transport/diffusion", "transport-fine/transport-coarse", "bgk/acoustic")


def _floats(s: str) -> list[float]:
    return [float(t) for t in s.replace(";", ",").split(",") if t.strip()]


def _ints(s: str) -> list[int]:
    return [int(t) for t in s.replace(";", ",").split(",") if t.strip()]


@dataclass
class ExperimentConfig:
    """All knobs of one experiment; unknown keys are kept in ``extra``.

    Random fields are described by prefixed keys: ``sigma_*`` for the
    scattering coefficient of the transport pairs, ``init_*`` for the initial
    density perturbation of the bgk/acoustic pair (see ``FieldSpec``).
    """

    model: str = "transport/diffusion"
    d_z: int = 2
    M_train: int = 64
    M_test: int = 200
    N: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    eps: list[float] = field(default_factory=lambda: [1e-6])
    nx: int = 64
    nx_coarse: int = 16
    nv: int = 16
    T: float = 0.1
    delta: float = 1e-3
    seed: int = 0
    test_seed: int | None = None
    alpha: int = 0
    c_cfl: float = 0.4
    sigma_a: float = 0.0
    n_w: int = 64
    v_max: float = 6.0
    tol: float = 1e-12
    max_steps: int = 200_000
    order_levels: list[int] = field(default_factory=lambda: [32, 64, 128, 256])
    order_reference: str = "fine"
    order_dt: str = "quadratic"
    order_z: list[float] | None = None
    out: str | None = None
    extra: dict[str, str] = field(default_factory=dict)

    _lists = {"N": _ints, "eps": _floats, "order_levels": _ints, "order_z": _floats}

    @classmethod
    def from_mapping(cls, cfg: Mapping[str, str]) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls) if f.name != "extra"}
        kwargs: dict = {}
        extra: dict[str, str] = {}
        for key, raw in cfg.items():
            if key in cls._lists:
                kwargs[key] = cls._lists[key](raw)
            elif key in known:
                typ = known[key].type
                if "int" in typ and "float" not in typ:
                    kwargs[key] = None if raw.lower() == "none" else int(raw)
                elif "float" in typ:
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = raw
            else:
                extra[key] = raw
        conf = cls(**kwargs, extra=extra)
        conf.validate()
        return conf

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(read_config(path))

    def validate(self) -> None:
        if self.model not in MODEL_PAIRS:
            raise InvalidArgumentError(f"unknown model pair {self.model!r}; choose from {MODEL_PAIRS}")
        if not self.N or not self.eps or not self.order_levels:
            raise InvalidArgumentError("N, eps and order_levels lists must be nonempty")
        if self.d_z < 1 or self.M_train < 1 or self.M_test < 1:
            raise InvalidArgumentError("d_z, M_train and M_test must be positive")
        if self.M_train < max(self.N):
            raise InvalidArgumentError(f"M_train={self.M_train} < max(N)={max(self.N)}")
        if self.model == "transport-fine/transport-coarse" and self.nx % self.nx_coarse:
            raise InvalidArgumentError(f"coarse grid {self.nx_coarse} does not divide fine grid {self.nx}")
        if self.alpha not in (0, 1):
            raise InvalidArgumentError("alpha must be 0 or 1")

    @property
    def seed_test(self) -> int:
        return self.seed + 1 if self.test_seed is None else self.test_seed

    def field_config(self) -> dict[str, str]:
        """Flat view used by ``FieldSpec.from_config``."""
        return {**self.extra, "d_z": str(self.d_z)}

    def echo(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "extra"}
        out.update(self.extra)
        return out
