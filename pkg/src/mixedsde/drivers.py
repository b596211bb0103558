"""Gaussian drivers: Brownian motion, fractional Brownian motion and seeds.

fBm is normalized by ``E|B^H(1)|^2 = 1``, so its covariance is
``(t^2H + s^2H - |t - s|^2H) / 2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack

from .fraccalc import _upto, driver_norm_profile
from .grid import SamplePath, TimeGrid

__all__ = [
    "FactorizationError",
    "EmbeddingWarning",
    "DriverNormEstimate",
    "validate_hurst",
    "fbm_covariance",
    "sample_fbm",
    "sample_bm",
    "derive_seed",
    "driver_seeds",
    "driver_norm",
]

METHODS = ("cholesky", "circulant-fft")
# eigenvalues of the circulant embedding below -EIG_TOL mean it is not PSD
EIG_TOL = 1e-12


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization of a covariance matrix failed."""


class EmbeddingWarning(RuntimeWarning):
    """The circulant embedding was not positive semidefinite."""


@dataclass(frozen=True)
class DriverNormEstimate:
    """Grid estimate of ``||f||_{1-alpha, inf, t}`` (a lower bound of the continuum norm)."""

    value: float
    alpha: float
    t: float
    n_nodes: int


def validate_hurst(h: float) -> float:
    """Hurst parameters in ``[1/2, 1)``; 1/2 is the Brownian reduction."""
    h = float(h)
    if not 0.5 <= h < 1.0:
        raise ValueError(f"Hurst parameter must lie in [1/2, 1), got {h}")
    return h


def fbm_covariance(s, t, h: float):
    """``Cov(B^H(s), B^H(t))``; broadcasts over array arguments."""
    validate_hurst(h)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("times must be nonnegative")
    two_h = 2.0 * h
    out = 0.5 * (t**two_h + s**two_h - np.abs(t - s) ** two_h)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# seeds
# ---------------------------------------------------------------------------


def derive_seed(master: int, index: int, stream: int = 0) -> int:
    """Deterministic 64-bit seed for path ``index`` of a run with ``master``."""
    ss = np.random.SeedSequence(int(master) % 2**64, spawn_key=(int(index), int(stream)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def driver_seeds(master: int, index: int, shared: bool = False) -> tuple[int, int]:
    """Seeds ``(brownian, fractional)`` for one path.

    Independent streams by default.  ``shared=True`` hands both samplers the
    same seed, which couples the two drivers; it exists for experiments only.
    """
    w = derive_seed(master, index, 0)
    return (w, w) if shared else (w, derive_seed(master, index, 1))


def _component_rng(seed: int, k: int) -> np.random.Generator:
    # per-component streams: component k does not depend on the total dimension
    return np.random.default_rng(np.random.SeedSequence(int(seed) % 2**64, spawn_key=(k,)))


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def sample_bm(grid: TimeGrid, seed: int, dim: int = 1) -> SamplePath:
    """Standard ``dim``-dimensional Brownian motion on ``grid``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    dt = np.diff(grid.nodes)
    vals = np.zeros((len(grid), dim))
    for k in range(dim):
        z = _component_rng(seed, k).standard_normal(dt.size)
        vals[1:, k] = np.cumsum(np.sqrt(dt) * z)
    return SamplePath(grid, vals)


@lru_cache(maxsize=32)
def _circulant_sqrt_eigs(n: int, h: float, step: float):
    """``sqrt(lambda / 2M)`` for the fGn embedding, or ``None`` if not PSD."""
    m = 1 << max(1, (n - 1).bit_length())
    k = np.arange(m + 1, dtype=float)
    two_h = 2.0 * h
    gam = 0.5 * step**two_h * (np.abs(k + 1) ** two_h - 2 * k**two_h + np.abs(k - 1) ** two_h)
    row = np.concatenate([gam, gam[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -EIG_TOL:
        return None
    out = np.sqrt(np.clip(lam, 0.0, None) / row.size)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _cholesky_factor(h: float, key: bytes) -> np.ndarray:
    t = np.frombuffer(key, dtype=float)
    cov = fbm_covariance(t[:, None], t[None, :], h)
    factor, info = lapack.dpotrf(cov, lower=1, clean=1)
    if info > 0:
        raise FactorizationError(
            f"covariance not positive definite: leading minor {info} "
            f"(node t={float(t[info - 1])!r}) has a non-positive pivot"
        )
    if info < 0:
        raise FactorizationError(f"dpotrf rejected argument {-info}")
    factor.setflags(write=False)
    return factor


def _fbm_cholesky(grid: TimeGrid, h: float, rng: np.random.Generator) -> np.ndarray:
    t = grid.nodes[1:]
    factor = _cholesky_factor(h, np.ascontiguousarray(t).tobytes())
    return factor @ rng.standard_normal(t.size)


def _fbm_circulant(sq: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    size = sq.size
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    fgn = np.fft.fft(sq * z).real[:n]
    return np.cumsum(fgn)


def sample_fbm(
    grid: TimeGrid,
    h: float,
    seed: int,
    method: str = "circulant-fft",
    dim: int = 1,
) -> SamplePath:
    """Fractional Brownian motion with Hurst parameter ``h`` on ``grid``.

    ``circulant-fft`` (Davies-Harte) needs a uniform grid; it falls back to
    ``cholesky`` with an :class:`EmbeddingWarning` when the grid is not uniform
    or the embedding has a negative eigenvalue.  Components use separate
    random streams derived from ``seed``.
    """
    h = validate_hurst(h)
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    n = grid.n_cells
    vals = np.zeros((len(grid), dim))
    if n == 0:
        return SamplePath(grid, vals)
    sq = None
    if method == "circulant-fft":
        if not grid.is_uniform:
            warnings.warn("non-uniform grid: using cholesky", EmbeddingWarning, stacklevel=2)
        else:
            sq = _circulant_sqrt_eigs(n, h, grid.horizon / n)
            if sq is None:
                warnings.warn(
                    "circulant embedding not positive semidefinite: using cholesky",
                    EmbeddingWarning,
                    stacklevel=2,
                )
    for k in range(dim):
        rng = _component_rng(seed, k)
        vals[1:, k] = _fbm_circulant(sq, n, rng) if sq is not None else _fbm_cholesky(grid, h, rng)
    return SamplePath(grid, vals)


# ---------------------------------------------------------------------------
# driver norm
# ---------------------------------------------------------------------------


def driver_norm(path: SamplePath, alpha: float, t: float | None = None) -> DriverNormEstimate:
    r"""``sup_{u<v<=t} |f(v)-f(u)|/(v-u)^(1-alpha) + int_u^v |f(y)-f(u)|/(y-u)^(2-alpha) dy``.

    The supremum is taken over node pairs (with ``t`` added as a node); the
    inner integrals are exact for the interpolant.  Refining the grid can only
    increase the estimate.
    """
    t = path.times[-1] if t is None else float(t)
    tt, vv = _upto(path, t)
    if tt.size == 1:
        return DriverNormEstimate(0.0, alpha, t, 1)
    prof = driver_norm_profile(SamplePath(TimeGrid(tt), vv), alpha)
    return DriverNormEstimate(float(prof[-1]), alpha, t, int(tt.size))
