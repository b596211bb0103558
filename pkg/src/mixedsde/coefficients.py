"""Coefficient triples, moduli of continuity and hypothesis probes.

A :class:`CoefficientSet` holds the drift ``b(t, x) -> (n,)``, the Brownian
diffusion ``sigma_w(t, x) -> (n, m)`` and the fractional diffusion
``sigma_h(t, x) -> (n, d)`` with the constants ``K``, ``beta`` and the modulus
``rho`` that the growth and continuity conditions refer to:

* drift and Brownian diffusion: ``|b| <= K(1 + |x|)``,
  ``|b(t,x) - b(t,y)|^2 <= rho(|x - y|^2)`` and the same for ``sigma_w``;
* fractional diffusion: ``|d_i sigma_h| <= K``, ``d_i sigma_h`` is
  ``K``-Lipschitz in ``x``, and ``sigma_h``, ``d_i sigma_h`` are
  ``(K, beta)``-Hölder in ``t``.

Matrix norms are Frobenius norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

__all__ = [
    "ModulusOfContinuity",
    "CoefficientSet",
    "HypothesisCheck",
    "HypothesisReport",
    "ProbeError",
    "rho1",
    "rho2",
    "probe_hypotheses",
    "preset",
    "PRESETS",
]

FD_STEP = 1e-6
# slack on probe ratios for rounding in differences of nearly equal values
PROBE_SLACK = 1e-9


def _check_qd(q: float, delta: float) -> None:
    if not q > 1.0:
        raise ValueError(f"q must exceed 1, got {q}")
    if not 0.0 < delta < math.exp(-1.0):
        raise ValueError(f"delta must lie in (0, 1/e), got {delta}")


def _rho1_slope(q: float, delta: float) -> float:
    lg = math.log(1.0 / delta)
    return lg ** (1.0 / q) - lg ** (1.0 / q - 1.0) / q


def _rho2_slope(q: float, delta: float) -> float:
    lg = math.log(1.0 / delta)
    llg = math.log(lg)
    a, b = 1.0 / q, 1.0 / q - 1.0
    return lg**a * llg**a - lg**b * llg**a / q - lg**b * llg**b / q


def rho1(u, q: float, delta: float):
    """``u log^(1/q)(1/u)`` up to ``delta``, continued linearly with the left slope."""
    _check_qd(q, delta)
    slope = _rho1_slope(q, delta)
    if slope <= 0.0:
        raise ValueError(f"rho1 extension slope {slope} is not positive at delta={delta}")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("rho1 takes nonnegative arguments")
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = u * np.log(1.0 / u) ** (1.0 / q)
    head = delta * math.log(1.0 / delta) ** (1.0 / q)
    out = np.where(u == 0.0, 0.0, np.where(u <= delta, inner, head + slope * (u - delta)))
    return float(out) if out.ndim == 0 else out


def rho2(u, q: float, delta: float):
    """``u log^(1/q)(1/u) log^(1/q)(log(1/u))`` up to ``delta``, then linear."""
    _check_qd(q, delta)
    slope = _rho2_slope(q, delta)
    if slope <= 0.0:
        raise ValueError(
            f"rho2 extension slope {slope:.3g} is not positive at delta={delta}; take a smaller delta"
        )
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("rho2 takes nonnegative arguments")
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log(1.0 / u)
        inner = u * lg ** (1.0 / q) * np.log(lg) ** (1.0 / q)
    ld = math.log(1.0 / delta)
    head = delta * ld ** (1.0 / q) * math.log(ld) ** (1.0 / q)
    out = np.where(u == 0.0, 0.0, np.where(u <= delta, inner, head + slope * (u - delta)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModulusOfContinuity:
    """Concave nondecreasing ``rho`` with ``rho(0) = 0``, tagged by ``kind``.

    ``kind`` is ``rho1``, ``rho2``, ``linear`` (``rho(u) = scale * u``) or
    ``custom`` (``fn`` supplied).  ``q`` is the exponent of the divergence
    condition ``int_0+ du / rho^q(u^(1/q)) = infinity``.
    """

    kind: str
    q: float = 2.0
    delta: float | None = None
    scale: float = 1.0
    fn: Callable | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("rho1", "rho2", "linear", "custom"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if not self.q > 1.0:
            raise ValueError("q must exceed 1")
        if self.kind in ("rho1", "rho2"):
            if self.delta is None:
                raise ValueError(f"{self.kind} needs delta")
            self(self.delta)  # validates delta and the extension slope
        if self.kind == "linear" and not self.scale > 0:
            raise ValueError("linear modulus needs a positive scale")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom modulus needs fn")

    @classmethod
    def rho1(cls, q: float = 2.0, delta: float = 0.2) -> "ModulusOfContinuity":
        return cls("rho1", q=q, delta=delta)

    @classmethod
    def rho2(cls, q: float = 2.0, delta: float = 0.1) -> "ModulusOfContinuity":
        return cls("rho2", q=q, delta=delta)

    @classmethod
    def linear(cls, scale: float = 1.0, q: float = 2.0) -> "ModulusOfContinuity":
        return cls("linear", q=q, scale=scale)

    @classmethod
    def custom(cls, fn: Callable, q: float = 2.0) -> "ModulusOfContinuity":
        return cls("custom", q=q, fn=fn)

    def __call__(self, u):
        if self.kind == "rho1":
            return rho1(u, self.q, self.delta)
        if self.kind == "rho2":
            return rho2(u, self.q, self.delta)
        if self.kind == "linear":
            out = self.scale * np.asarray(u, dtype=float)
            return float(out) if out.ndim == 0 else out
        out = np.asarray(self.fn(u), dtype=float)
        return float(out) if out.ndim == 0 else out

    @property
    def extension_slope(self) -> float | None:
        """Slope of the linear piece beyond ``delta`` (``None`` if there is none)."""
        if self.kind == "rho1":
            return _rho1_slope(self.q, self.delta)
        if self.kind == "rho2":
            return _rho2_slope(self.q, self.delta)
        return None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "q": self.q, "delta": self.delta, "scale": self.scale}


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficients of ``dX = b dt + sigma_w dW + sigma_h dB^H`` with their constants.

    ``dsigma_h(t, x)`` returns the array ``[i, j, k] = d sigma_h[i, j] / d x_k``.
    When omitted, central differences with step ``FD_STEP`` are used and
    ``dsigma_h_approximate`` is set.
    """

    b: Callable
    sigma_w: Callable
    sigma_h: Callable
    modulus: ModulusOfContinuity
    K: float
    beta: float = 1.0
    dims: tuple[int, int, int] = (1, 1, 1)
    dsigma_h: Callable | None = None
    x0: tuple[float, ...] | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    dsigma_h_approximate: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if self.dsigma_h is None:
            object.__setattr__(self, "dsigma_h", self._fd_dsigma_h)
            object.__setattr__(self, "dsigma_h_approximate", True)
        n, m, d = self.dims
        z = np.zeros(n)
        for name, fn, shape in (
            ("b", self.b, (n,)),
            ("sigma_w", self.sigma_w, (n, m)),
            ("sigma_h", self.sigma_h, (n, d)),
        ):
            got = np.shape(fn(0.0, z))
            if got != shape:
                raise ValueError(f"{name} returns shape {got}, expected {shape}")
        if self.x0 is not None and len(self.x0) != n:
            raise ValueError(f"x0 has length {len(self.x0)}, expected {n}")

    @property
    def dim(self) -> int:
        return self.dims[0]

    def _fd_dsigma_h(self, t: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n, _, d = self.dims
        out = np.empty((n, d, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = FD_STEP
            out[:, :, k] = (self.sigma_h(t, x + e) - self.sigma_h(t, x - e)) / (2 * FD_STEP)
        return out


# ---------------------------------------------------------------------------
# hypothesis probe
# ---------------------------------------------------------------------------


class ProbeError(RuntimeError):
    """A coefficient raised while being probed; the message names the point."""


@dataclass(frozen=True)
class HypothesisCheck:
    max_ratio: float
    witness: dict | None
    passed: bool


@dataclass(frozen=True)
class HypothesisReport:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> dict:
        return {k: c for k, c in self.checks.items() if not c.passed}


def probe_hypotheses(
    cs: CoefficientSet,
    sample_box=((0.0, 1.0), (-1.0, 1.0)),
    n_samples: int = 4096,
    seed: int = 0,
) -> HypothesisReport:
    """Random search for violations of the growth and continuity conditions.

    ``sample_box = ((t_lo, t_hi), (x_lo, x_hi))`` with the ``x`` range applied
    per coordinate.  Points come from a scrambled Halton sequence, plus the
    box corners and pairs ``y = x + r e`` with ``r`` log-uniform down to 1e-6
    so the modulus is probed near 0.  A check passes when its largest ratio is
    at most 1 (up to ``PROBE_SLACK``); failures carry the maximizing point.
    This can only falsify, never certify.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    (t_lo, t_hi), (x_lo, x_hi) = sample_box
    n = cs.dim
    sampler = qmc.Halton(d=2 + 2 * n + 1, scramble=True, seed=seed)
    u = sampler.random(n_samples)
    ts = t_lo + (t_hi - t_lo) * u[:, 0]
    ss = t_lo + (t_hi - t_lo) * u[:, 1]
    xs = x_lo + (x_hi - x_lo) * u[:, 2 : 2 + n]
    ys = x_lo + (x_hi - x_lo) * u[:, 2 + n : 2 + 2 * n]
    # half the pairs are close: y = x + r * direction
    half = n_samples // 2
    width = x_hi - x_lo
    r = np.exp(np.log(1e-6) + (np.log(width) - np.log(1e-6)) * u[:half, -1])
    direc = ys[:half] - xs[:half]
    direc /= np.maximum(np.linalg.norm(direc, axis=1, keepdims=True), 1e-300)
    ys[:half] = np.clip(xs[:half] + r[:, None] * direc, x_lo, x_hi)
    corners = np.array(np.meshgrid(*([[x_lo, x_hi]] * n))).reshape(n, -1).T
    xs = np.vstack([xs, corners])
    ys = np.vstack([ys, corners[::-1]])
    ts = np.concatenate([ts, np.full(len(corners), t_hi)])
    ss = np.concatenate([ss, np.full(len(corners), t_lo)])

    best: dict[str, tuple[float, dict | None]] = {
        k: (0.0, None) for k in ("H.1.1", "H.1.2", "H.1.3", "H.1.4", "H.2.1", "H.2.2", "H.2.3")
    }

    def record(key, ratio, **pt):
        if ratio > best[key][0] or not np.isfinite(ratio):
            best[key] = (float(ratio), {k: np.asarray(v).tolist() for k, v in pt.items()})

    K, rho = cs.K, cs.modulus
    for t, s, x, y in zip(ts, ss, xs, ys):
        try:
            _probe_point(cs, K, rho, n, record, t, s, x, y)
        except Exception as exc:
            raise ProbeError(
                f"coefficient evaluation failed at t={t:.6g}, s={s:.6g}, x={x.tolist()}, y={y.tolist()}: {exc}"
            ) from exc

    checks = {
        k: HypothesisCheck(r, w if r > 1.0 + PROBE_SLACK else None, bool(r <= 1.0 + PROBE_SLACK))
        for k, (r, w) in best.items()
    }
    return HypothesisReport(checks)


def _probe_point(cs, K, rho, n, record, t, s, x, y) -> None:
    grow = K * (1.0 + np.linalg.norm(x))
    bx, by = np.asarray(cs.b(t, x)), np.asarray(cs.b(t, y))
    wx, wy = np.asarray(cs.sigma_w(t, x)), np.asarray(cs.sigma_w(t, y))
    record("H.1.1", np.linalg.norm(bx) / grow, t=t, x=x)
    record("H.1.3", np.linalg.norm(wx) / grow, t=t, x=x)
    dxy = np.linalg.norm(x - y)
    if dxy > 0:
        rv = rho(dxy**2)
        record("H.1.2", np.sum((bx - by) ** 2) / rv, t=t, x=x, y=y)
        record("H.1.4", np.sum((wx - wy) ** 2) / rv, t=t, x=x, y=y)
    dx, dy = np.asarray(cs.dsigma_h(t, x)), np.asarray(cs.dsigma_h(t, y))
    per_coord = np.linalg.norm(dx.reshape(-1, n), axis=0)
    record("H.2.1", per_coord.max() / K, t=t, x=x)
    if dxy > 0:
        lip = np.linalg.norm((dx - dy).reshape(-1, n), axis=0).max()
        record("H.2.2", lip / (K * dxy), t=t, x=x, y=y)
    if t != s:
        ds = np.asarray(cs.dsigma_h(s, x))
        diff = np.linalg.norm(cs.sigma_h(t, x) - cs.sigma_h(s, x)) + np.linalg.norm(
            (dx - ds).reshape(-1, n), axis=0
        ).max()
        record("H.2.3", diff / (K * abs(t - s) ** cs.beta), t=t, s=s, x=x)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def _const(value, shape):
    arr = np.full(shape, float(value))
    return lambda t, x: arr.copy()


def _linear(**_) -> CoefficientSet:
    return CoefficientSet(
        b=lambda t, x: -np.asarray(x, dtype=float),
        sigma_w=_const(0.5, (1, 1)),
        sigma_h=lambda t, x: 0.5 * (1.0 + np.sin(x)).reshape(1, 1),
        dsigma_h=lambda t, x: 0.5 * np.cos(x).reshape(1, 1, 1),
        modulus=ModulusOfContinuity.linear(1.0),
        K=1.0,
        x0=(1.0,),
        name="linear",
    )


def _trig(**_) -> CoefficientSet:
    return CoefficientSet(
        b=lambda t, x: np.sin(x),
        sigma_w=lambda t, x: 0.3 * np.cos(x).reshape(1, 1),
        sigma_h=lambda t, x: (0.5 + 0.25 * np.sin(x + t)).reshape(1, 1),
        dsigma_h=lambda t, x: 0.25 * np.cos(x + t).reshape(1, 1, 1),
        modulus=ModulusOfContinuity.linear(1.0),
        K=1.0,
        beta=1.0,
        x0=(0.5,),
        name="trig",
    )


def _log_drift(q: float, cut: float, scale: float):
    """Odd drift ``scale * x log^(1/2q)(1/|x|)`` near 0, continued linearly past ``cut``."""
    p = 1.0 / (2.0 * q)
    lc = math.log(1.0 / cut)
    head = cut * lc**p
    slope = lc**p - p * lc ** (p - 1.0)

    def b(t, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            near = ax * np.log(1.0 / ax) ** p
        mag = np.where(ax == 0.0, 0.0, np.where(ax <= cut, near, head + slope * (ax - cut)))
        return scale * np.sign(x) * mag

    return b


def _rho1_preset(q: float = 2.0, delta: float = 0.1, cut: float = 0.1, scale: float = 0.5, **_):
    return CoefficientSet(
        b=_log_drift(q, cut, scale),
        sigma_w=_const(0.5, (1, 1)),
        sigma_h=lambda t, x: (0.3 + 0.2 * np.sin(x)).reshape(1, 1),
        dsigma_h=lambda t, x: 0.2 * np.cos(x).reshape(1, 1, 1),
        modulus=ModulusOfContinuity.rho1(q, delta),
        K=1.0,
        x0=(0.0,),
        name="rho1-lipschitz-free",
        params={"q": q, "delta": delta, "cut": cut, "scale": scale},
    )


def _exponential(lam: float = 1.0, **_) -> CoefficientSet:
    lam = float(lam)
    return CoefficientSet(
        b=lambda t, x: lam * np.asarray(x, dtype=float),
        sigma_w=_const(0.0, (1, 1)),
        sigma_h=_const(0.0, (1, 1)),
        dsigma_h=_const(0.0, (1, 1, 1)),
        modulus=ModulusOfContinuity.linear(max(lam * lam, 1e-12)),
        K=max(abs(lam), 1e-12),
        x0=(1.0,),
        name="exponential",
        params={"lam": lam},
    )


def _constant(drift: float = 0.0, sigma_w: float = 0.0, sigma_h: float = 0.0, **_) -> CoefficientSet:
    return CoefficientSet(
        b=_const(drift, (1,)),
        sigma_w=_const(sigma_w, (1, 1)),
        sigma_h=_const(sigma_h, (1, 1)),
        dsigma_h=_const(0.0, (1, 1, 1)),
        modulus=ModulusOfContinuity.linear(1.0),
        K=max(abs(drift), abs(sigma_w), 1e-12),
        x0=(0.0,),
        name="constant",
        params={"drift": drift, "sigma_w": sigma_w, "sigma_h": sigma_h},
    )


PRESETS: dict[str, Callable[..., CoefficientSet]] = {
    "linear": _linear,
    "trig": _trig,
    "rho1-lipschitz-free": _rho1_preset,
    "exponential": _exponential,
    "constant": _constant,
}


def preset(name: str, **params) -> CoefficientSet:
    """Built-in coefficient set by name; keyword ``params`` tune parametric presets."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)
