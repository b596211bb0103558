"""Euler scheme for mixed SDEs, stopping times and stopped processes.

On a partition ``0 = s_0 < ... < s_n = T`` the coefficients are frozen at the
left node, so on ``[s_i, s_{i+1}]``

    X(t) = X(s_i) + b(s_i, X(s_i)) (t - s_i)
           + sigma_w(s_i, X(s_i)) (W(t) - W(s_i))
           + sigma_h(s_i, X(s_i)) (B(t) - B(s_i)).

Both stochastic integrals of a frozen integrand are exact increments.  The
partition nodes must be nodes of the driver grid; the solution is reported on
the driver grid, where the formula above is exact for every node.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .coefficients import CoefficientSet
from .fraccalc import FracOrder, alpha_norm_profile, driver_norm_profile, norms
from .grid import GridError, SamplePath, TimeGrid

__all__ = [
    "EulerConfig",
    "SolutionPath",
    "EulerOverflow",
    "MomentEstimate",
    "euler_solve",
    "stopping_time_TR",
    "stopping_time_tauM",
    "stop_process",
    "moment_diagnostic",
]


class EulerOverflow(FloatingPointError):
    """The Euler state became non-finite; ``cell`` is the partition cell index."""

    def __init__(self, message: str, cell: int):
        super().__init__(message)
        self.cell = cell


@dataclass(frozen=True)
class EulerConfig:
    """Partition, initial value and optional truncation level ``R``.

    With ``R`` set the solution is stopped at the first driver-grid node
    where ``||B^H||_{1-alpha,inf,t} >= R``.
    """

    partition: TimeGrid
    x0: tuple[float, ...]
    R: float | None = None
    alpha: float = 0.3

    def __post_init__(self) -> None:
        if self.partition.n_cells < 1:
            raise GridError("partition needs at least one cell")
        if self.R is not None and not self.R > 0:
            raise ValueError("R must be positive")
        object.__setattr__(self, "x0", tuple(float(v) for v in np.atleast_1d(self.x0)))


@dataclass(frozen=True)
class SolutionPath:
    path: SamplePath
    stopped_at: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> TimeGrid:
        return self.path.grid

    @property
    def values(self) -> np.ndarray:
        return self.path.values

    def with_diagnostics(self, fo: FracOrder, times) -> "SolutionPath":
        """Copy with a :class:`NormReport` attached for each of ``times``."""
        diag = dict(self.diagnostics)
        for t in times:
            diag[float(t)] = norms(self.path, fo, float(t))
        return replace(self, diagnostics=diag)

    def to_csv(self, path=None) -> str:
        meta = dict(self.path.meta)
        meta["stopped_at"] = self.stopped_at
        return SamplePath(self.path.grid, self.path.values, meta).to_csv(path)


def euler_solve(
    cs: CoefficientSet, cfg: EulerConfig, w: SamplePath, bh: SamplePath
) -> SolutionPath:
    """Euler approximation driven by ``w`` (Brownian) and ``bh`` (fractional)."""
    n, m, d = cs.dims
    if len(cfg.x0) != n:
        raise ValueError(f"x0 has length {len(cfg.x0)}, coefficients act on R^{n}")
    if w.dim != m:
        raise ValueError(f"Brownian driver has dim {w.dim}, sigma_w expects {m}")
    if bh.dim != d:
        raise ValueError(f"fractional driver has dim {bh.dim}, sigma_h expects {d}")
    if not w.grid.same_as(bh.grid):
        raise GridError("drivers must share a grid")
    grid = w.grid
    if abs(grid.horizon - cfg.partition.horizon) > 1e-9 * max(grid.horizon, 1.0):
        raise GridError("partition and drivers have different horizons")
    idx = grid.subgrid_indices(cfg.partition)

    s = cfg.partition.nodes
    wv, bv = w.values, bh.values
    cells = s.size - 1
    x = np.empty((cells + 1, n))
    drift = np.empty((cells, n))
    sw = np.empty((cells, n, m))
    sh = np.empty((cells, n, d))
    x[0] = cfg.x0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(cells):
            xi, ti = x[i], s[i]
            drift[i] = cs.b(ti, xi)
            sw[i] = cs.sigma_w(ti, xi)
            sh[i] = cs.sigma_h(ti, xi)
            x[i + 1] = (
                xi
                + drift[i] * (s[i + 1] - ti)
                + sw[i] @ (wv[idx[i + 1]] - wv[idx[i]])
                + sh[i] @ (bv[idx[i + 1]] - bv[idx[i]])
            )
            if not np.all(np.isfinite(x[i + 1])):
                raise EulerOverflow(f"non-finite state in cell {i} [{s[i]}, {s[i + 1]}]", i)

    # fill the driver-grid nodes between partition nodes
    t = grid.nodes
    cell = np.clip(np.searchsorted(idx, np.arange(t.size), side="right") - 1, 0, cells - 1)
    base = idx[cell]
    out = (
        x[cell]
        + drift[cell] * (t - s[cell])[:, None]
        + np.einsum("knm,km->kn", sw[cell], wv - wv[base])
        + np.einsum("knd,kd->kn", sh[cell], bv - bv[base])
    )
    out[idx] = x  # partition nodes exactly as recursed
    sol = SolutionPath(SamplePath(grid, out))
    if cfg.R is not None:
        sol = stop_process(sol, stopping_time_TR(bh, cfg.alpha, cfg.R))
    return sol


def stopping_time_TR(bh: SamplePath, alpha: float, R: float) -> float:
    """First grid node where ``||B^H||_{1-alpha,inf,t} >= R``, else the horizon."""
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if not R > 0:
        raise ValueError("R must be positive")
    prof = driver_norm_profile(bh, alpha)
    hit = np.nonzero(prof >= R)[0]
    return float(bh.times[hit[0]]) if hit.size else bh.grid.horizon


def stopping_time_tauM(x, y, alpha: float, M: float) -> float:
    """First grid node where ``max(||X||_{alpha,t}, ||Y||_{alpha,t}) > M``, else the horizon."""
    px = x.path if isinstance(x, SolutionPath) else x
    py = y.path if isinstance(y, SolutionPath) else y
    if not px.grid.same_as(py.grid):
        raise GridError("paths must share a grid")
    prof = np.maximum(alpha_norm_profile(px, alpha), alpha_norm_profile(py, alpha))
    hit = np.nonzero(prof > M)[0]
    return float(px.times[hit[0]]) if hit.size else px.grid.horizon


def stop_process(x: SolutionPath, tau: float) -> SolutionPath:
    """Freeze the values at the last node ``<= tau``."""
    grid = x.path.grid
    if not 0.0 <= tau <= grid.horizon * (1 + 1e-12):
        raise GridError(f"tau={tau} outside [0, {grid.horizon}]")
    k = grid.last_index_at_or_before(tau)
    vals = np.array(x.path.values)
    vals[k + 1 :] = vals[k]
    stopped = float(tau) if x.stopped_at is None else min(float(tau), x.stopped_at)
    return SolutionPath(SamplePath(grid, vals, x.path.meta), stopped, x.diagnostics)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    n_paths: int


def moment_diagnostic(ensemble, alpha: float, t: float, N: int) -> MomentEstimate:
    """Mean over paths of ``(max_{s<=t} ||X||_{alpha,s})^(2N)``, with its standard error.

    The running maximum over node times makes the estimate nondecreasing in ``t``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    vals = np.empty(len(ensemble))
    for i, sol in enumerate(ensemble):
        p = sol.path if isinstance(sol, SolutionPath) else sol
        k = p.grid.last_index_at_or_before(t)
        vals[i] = alpha_norm_profile(p, alpha)[: k + 1].max() ** (2 * N)
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
    return MomentEstimate(float(vals.mean()), se, int(vals.size))
