"""Text persistence for snapshots and surrogates, and flat key=value configs.

Snapshot file::

    # model=transport
    # nx=64
    # nv=1
    # nfields=1
    # dz=2
    # z=0.125,-0.5
    # weights=0.015625,...
    1.0000000000000000
    ...

A surrogate is a directory holding ``index.txt`` plus ``low_XXX.txt`` and
``high_XXX.txt`` snapshot files in selection order.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .bifi import BiFiSurrogate, GreedyBasis, Snapshot, gramian
from .errors import InvalidArgumentError

__all__ = [
    "fmt",
    "write_snapshot",
    "read_snapshot",
    "save_surrogate",
    "load_surrogate",
    "read_config",
    "parse_config",
]


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _join(arr) -> str:
    return ",".join(fmt(a) for a in np.atleast_1d(arr))


def write_snapshot(path, snap: Snapshot) -> None:
    w = snap.weights
    weights = fmt(w[0]) if np.all(w == w[0]) else _join(w)
    lines = [
        f"# model={snap.model}",
        f"# nx={snap.nx}",
        f"# nv={snap.nv}",
        f"# nfields={snap.nfields}",
        f"# dz={snap.z.size}",
        f"# z={_join(snap.z)}",
        f"# weights={weights}",
    ]
    lines += [fmt(v) for v in snap.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> Snapshot:
    header: dict[str, str] = {}
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            header[key.strip()] = val.strip()
        else:
            values.append(float(line))
    missing = {"model", "nx", "weights"} - header.keys()
    if missing:
        raise InvalidArgumentError(f"{path}: missing header keys {sorted(missing)}")

    def floats(s: str) -> np.ndarray:
        return np.array([float(t) for t in s.split(",") if t], dtype=float)

    z = floats(header.get("z", ""))
    if "dz" in header and int(header["dz"]) != z.size:
        raise InvalidArgumentError(f"{path}: dz={header['dz']} but {z.size} z entries")
    return Snapshot(
        np.array(values),
        floats(header["weights"]),
        model=header["model"],
        nx=int(header["nx"]),
        nv=int(header.get("nv", 1)),
        nfields=int(header.get("nfields", 1)),
        z=z,
    )


def save_surrogate(directory, surrogate: BiFiSurrogate, candidate_count: int | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    b = surrogate.basis
    lines = [f"# N={b.size}", f"# tol={fmt(b.tol)}"]
    if candidate_count is not None:
        lines.append(f"# candidates={candidate_count}")
    lines.append("# k index pivot")
    for k, (i, p) in enumerate(zip(b.indices, b.pivots)):
        lines.append(f"{k} {i} {fmt(p)}")
        write_snapshot(d / f"low_{k:03d}.txt", surrogate.low[k])
        write_snapshot(d / f"high_{k:03d}.txt", surrogate.high[k])
    (d / "index.txt").write_text("\n".join(lines) + "\n")
    return d


def load_surrogate(directory) -> BiFiSurrogate:
    d = Path(directory)
    tol = 1e-12
    indices, pivots = [], []
    for line in (d / "index.txt").read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key == "tol":
                tol = float(val)
            continue
        if line.strip():
            _, i, p = line.split()
            indices.append(int(i))
            pivots.append(float(p))
    low = [read_snapshot(d / f"low_{k:03d}.txt") for k in range(len(indices))]
    high = [read_snapshot(d / f"high_{k:03d}.txt") for k in range(len(indices))]
    factor = np.linalg.cholesky(gramian(low))
    basis = GreedyBasis(tuple(indices), factor, np.array(pivots), tol)
    return BiFiSurrogate(basis, low, high)


def parse_config(text: str) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    cfg: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"config line {n}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        cfg[key.strip()] = val.strip()
    return cfg


def read_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text())
