"""Time grids and sampled paths, plus their CSV form."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["TimeGrid", "SamplePath", "GridError", "read_path_csv"]

# relative tolerance for treating a grid as uniform / matching node times
_UNIFORM_RTOL = 1e-9


class GridError(ValueError):
    """Raised for invalid grids, node lookups and grid mismatches."""


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing nodes ``0 = t_0 < ... < t_n = T``.

    A single-node grid ``{0}`` is admitted as the degenerate case (horizon 0).
    """

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float).ravel())
        if nodes.size == 0:
            raise GridError("grid needs at least one node")
        if nodes[0] != 0.0:
            raise GridError(f"first node must be 0, got {nodes[0]!r}")
        if not np.all(np.isfinite(nodes)):
            raise GridError("grid nodes must be finite")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0.0):
            raise GridError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, horizon: float, n_cells: int) -> "TimeGrid":
        if n_cells < 0:
            raise GridError("n_cells must be >= 0")
        if n_cells == 0:
            return cls(np.zeros(1))
        if not horizon > 0:
            raise GridError("horizon must be positive")
        return cls(np.linspace(0.0, horizon, n_cells + 1))

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.nodes))) if self.nodes.size > 1 else 0.0

    @property
    def is_uniform(self) -> bool:
        if self.nodes.size < 3:
            return True
        h = np.diff(self.nodes)
        return bool(np.all(np.abs(h - h.mean()) <= _UNIFORM_RTOL * h.mean()))

    def __len__(self) -> int:
        return self.nodes.size

    def same_as(self, other: "TimeGrid") -> bool:
        return self.nodes.size == other.nodes.size and bool(
            np.all(np.abs(self.nodes - other.nodes) <= _UNIFORM_RTOL * max(self.horizon, 1e-300))
        )

    def index_of(self, t: float) -> int:
        """Index of the node equal to ``t`` (within tolerance)."""
        i = int(np.searchsorted(self.nodes, t))
        tol = _UNIFORM_RTOL * max(self.horizon, 1.0)
        for k in (i - 1, i):
            if 0 <= k < self.nodes.size and abs(self.nodes[k] - t) <= tol:
                return k
        raise GridError(f"time {t!r} is not a grid node")

    def last_index_at_or_before(self, t: float) -> int:
        tol = _UNIFORM_RTOL * max(self.horizon, 1.0)
        return int(np.searchsorted(self.nodes, t + tol, side="right")) - 1

    def subgrid_indices(self, coarse: "TimeGrid") -> np.ndarray:
        """Indices of ``coarse``'s nodes inside this grid; error unless nested."""
        idx = np.searchsorted(self.nodes, coarse.nodes)
        idx = np.clip(idx, 0, self.nodes.size - 1)
        lower = np.clip(idx - 1, 0, None)
        pick = np.where(
            np.abs(self.nodes[lower] - coarse.nodes) < np.abs(self.nodes[idx] - coarse.nodes),
            lower,
            idx,
        )
        tol = _UNIFORM_RTOL * max(self.horizon, 1.0)
        if np.any(np.abs(self.nodes[pick] - coarse.nodes) > tol):
            raise GridError("grid does not refine the requested partition")
        return pick

    def coarsen(self, step: int) -> "TimeGrid":
        """Every ``step``-th node; ``step`` must divide the number of cells."""
        if step < 1 or self.n_cells % step:
            raise GridError(f"step {step} does not divide {self.n_cells} cells")
        return TimeGrid(self.nodes[::step])


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Vector values on a time grid; ``values`` has shape ``(len(grid), dim)``."""

    grid: TimeGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != len(self.grid):
            raise GridError(
                f"values shape {v.shape} does not match {len(self.grid)} grid nodes"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.argwhere(~np.isfinite(v))[0, 0])
            raise GridError(f"non-finite value at t={float(self.grid.nodes[bad])!r}")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def component(self, k: int) -> "SamplePath":
        return SamplePath(self.grid, self.values[:, k : k + 1])

    def scalar(self) -> np.ndarray:
        """Values of a one-dimensional path as a flat array."""
        if self.dim != 1:
            raise GridError(f"expected a scalar path, got dim={self.dim}")
        return self.values[:, 0]

    def at(self, t: float) -> np.ndarray:
        """Piecewise-linear interpolant evaluated at ``t``."""
        return np.array([np.interp(t, self.times, self.values[:, k]) for k in range(self.dim)])

    def on(self, coarse: TimeGrid) -> "SamplePath":
        """Restriction to a coarser partition whose nodes are grid nodes."""
        return SamplePath(coarse, self.values[self.grid.subgrid_indices(coarse)])

    def window(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Node times and values of the interpolant restricted to ``[a, b]``.

        ``a`` and ``b`` are inserted as nodes when they fall between grid nodes;
        the interpolant is unchanged by the insertion.
        """
        t = self.times
        if not (t[0] <= a < b <= t[-1] + _UNIFORM_RTOL * max(t[-1], 1.0)):
            raise GridError(f"window [{a}, {b}] outside [0, {t[-1]}]")
        b = min(b, t[-1])
        tol = _UNIFORM_RTOL * max(t[-1], 1.0)
        inner = (t > a + tol) & (t < b - tol)
        times = np.concatenate(([a], t[inner], [b]))
        vals = np.vstack([self.at(a)[None, :], self.values[inner], self.at(b)[None, :]])
        ia = np.searchsorted(t, a)
        if ia < t.size and abs(t[ia] - a) <= tol:
            vals[0] = self.values[ia]
        ib = np.searchsorted(t, b)
        for k in (ib - 1, ib):
            if 0 <= k < t.size and abs(t[k] - b) <= tol:
                vals[-1] = self.values[k]
        return times, vals

    def to_csv(self, path: str | Path | None = None) -> str:
        """CSV with header ``t,x_1,...,x_d`` and 17 significant digits.

        Entries of ``meta`` are written first as ``# key=value`` rows.
        """
        buf = io.StringIO()
        for key, val in self.meta.items():
            buf.write(f"# {key}={_fmt(val)}\n")
        buf.write(",".join(["t"] + [f"x_{k + 1}" for k in range(self.dim)]) + "\n")
        for t, row in zip(self.times, self.values):
            buf.write(",".join(_fmt(x) for x in (t, *row)) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def read_path_csv(source: str | Path) -> SamplePath:
    """Inverse of :meth:`SamplePath.to_csv`; accepts a path or the CSV text."""
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
    meta: dict = {}
    rows = []
    header = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = None if val == "none" else float(val)
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([float(x) for x in line.split(",")])
    if header is None or header[0] != "t":
        raise GridError("missing 't,x_1,...' header")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return SamplePath(TimeGrid(data[:, 0]), data[:, 1:], meta=meta)
