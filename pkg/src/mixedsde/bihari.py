r"""Bihari-type bound for Volterra inequalities with a singular kernel.

If ``f(t) <= a + b t^alpha int_0^t (t-s)^-alpha s^-alpha rho(f(s)) ds`` then

    f(t) <= [F^{-1}(F(2^(q-1) a^q) + 2^(q-1) b^q C^(q/p) t^(q(1/p - alpha) + 1))]^(1/q)

with ``F(x) = int_1^x du / rho^q(u^(1/q))`` and ``C = B(1 - p alpha, 1 - p alpha)``,
as long as the argument of ``F^{-1}`` stays in its domain.

``F`` is evaluated in the variable ``w = -log(x) / q`` (so ``u = e^(-q w)``),
where the integrand becomes ``q (rho(e^-w) e^w)^-q``.  For the built-in moduli
that ratio is known in closed form near 0, so arguments far below the
floating-point range are handled without underflow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import beta as beta_fn

from .coefficients import ModulusOfContinuity

__all__ = [
    "ESCAPED",
    "DomainEscape",
    "BihariParams",
    "BihariEvaluation",
    "beta_constant",
    "barrier_F",
    "barrier_F_inverse",
    "bihari_bound",
    "bihari_evaluate",
    "divergence_diagnostic",
]

ESCAPED = "escaped-domain"
# search limits in the log variable w: x = e^(-q W_MIN) is the largest argument
# considered; below e^(-q W_MAX) (W_MAX_CUSTOM for user moduli, which are only
# evaluated where e^-w is representable) the barrier is treated as bounded
W_MAX = 1e12
W_MAX_CUSTOM = 700.0
W_MIN = -600.0


class DomainEscape(ValueError):
    """The requested value lies outside the range of the barrier function."""


def beta_constant(alpha: float, p: float) -> float:
    """``B(1 - p alpha, 1 - p alpha) = int_0^1 (1-u)^(-p alpha) u^(-p alpha) du``."""
    e = 1.0 - p * alpha
    if not e > 0.0:
        raise ValueError(f"p*alpha = {p * alpha} >= 1: the kernel integral diverges")
    return float(beta_fn(e, e))


def _ratio(w: float, rho: ModulusOfContinuity) -> float:
    """``rho(e^-w) e^w``."""
    if rho.kind == "linear":
        return rho.scale
    if rho.kind in ("rho1", "rho2") and w >= -math.log(rho.delta):
        r = w ** (1.0 / rho.q)
        if rho.kind == "rho2":
            r *= math.log(w) ** (1.0 / rho.q)
        return r
    u = math.exp(-w)
    return float(rho(u)) / u


def _integrand(w: float, rho: ModulusOfContinuity, q: float) -> float:
    return q * _ratio(w, rho) ** (-q)


def _breaks(rho: ModulusOfContinuity) -> list[float]:
    if rho.kind in ("rho1", "rho2"):
        return [-math.log(rho.delta)]
    return []


def _phi(W: float, rho: ModulusOfContinuity, q: float) -> float:
    """``F(e^(-q W))`` as ``-int_0^W`` of the integrand."""
    if W == 0.0:
        return 0.0
    lo, hi = (0.0, W) if W > 0 else (W, 0.0)
    if rho.kind == "linear":
        return -W * q * rho.scale ** (-q)
    # integrate piecewise: at the splice point, then over geometric pieces
    pts = [lo] + [b for b in _breaks(rho) if lo < b < hi] + [hi]
    edges = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        x = a
        while b > 2.0 * x > 0.0 and b > 1.0:
            x = 2.0 * x
            edges.append(x)
        edges.append(b)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            val, _ = quad(_integrand, a, b, args=(rho, q), epsabs=0.0, epsrel=1e-13, limit=200)
            total += val
    return -total if W > 0 else total


def barrier_F(x: float, rho: ModulusOfContinuity, q: float) -> float:
    """``int_1^x du / rho^q(u^(1/q))`` (negative for ``x < 1``)."""
    if not x > 0.0:
        raise ValueError(f"barrier_F needs x > 0, got {x}")
    return _phi(-math.log(x) / q, rho, q)


def _inverse_w(y: float, rho: ModulusOfContinuity, q: float) -> float:
    """``W`` with ``F(e^(-q W)) = y``; raises :class:`DomainEscape`."""
    if y == 0.0:
        return 0.0
    if rho.kind == "linear":
        return -y * rho.scale**q / q
    f = lambda W: _phi(W, rho, q) - y
    if y < 0:
        lo, hi = 0.0, 1.0
        cap = W_MAX_CUSTOM if rho.kind == "custom" else W_MAX
        while f(hi) > 0:
            lo, hi = hi, min(4.0 * hi, cap)
            if hi == lo:
                if rho.kind != "custom":
                    # F(0+) = -infinity, but the preimage underflows to 0
                    return math.inf
                raise DomainEscape(f"F is bounded below by about {f(cap) + y:.6g} > {y}")
    else:
        lo, hi = -1.0, 0.0
        while f(lo) < 0:
            lo, hi = 4.0 * lo, lo
            if lo < W_MIN:
                raise DomainEscape(f"F(x) < {y} for every x <= e^{-q * W_MIN:.0f}")
    return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=400)


def barrier_F_inverse(y: float, rho: ModulusOfContinuity, q: float) -> float:
    """Inverse of :func:`barrier_F`; :class:`DomainEscape` outside its range."""
    return math.exp(-q * _inverse_w(y, rho, q))


def divergence_diagnostic(rho: ModulusOfContinuity, q: float, ks=range(1, 13)) -> np.ndarray:
    """``F(10^-k)`` for each ``k``; strictly decreasing when ``F(0+) = -infinity``."""
    return np.array([barrier_F(10.0 ** (-k), rho, q) for k in ks])


@dataclass(frozen=True)
class BihariParams:
    """Inputs of the bound; ``q`` defaults to the conjugate exponent of ``p``."""

    a: float
    b_coef: float
    alpha: float
    p: float
    rho: ModulusOfContinuity
    t: float
    q: float | None = None

    def __post_init__(self) -> None:
        if self.q is None:
            object.__setattr__(self, "q", self.p / (self.p - 1.0) if self.p > 1 else math.nan)
        if self.a < 0 or self.b_coef < 0:
            raise ValueError("a and b_coef must be nonnegative")
        if not 0.5 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (1/2, 1), got {self.alpha}")
        if not 1.0 < self.p < 2.0:
            raise ValueError(f"p must lie in (1, 2), got {self.p}")
        if not self.alpha < 1.0 / self.p:
            raise ValueError(f"need alpha < 1/p, got alpha={self.alpha}, p={self.p}")
        if abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-12:
            raise ValueError(f"p={self.p} and q={self.q} are not conjugate")
        if self.t < 0:
            raise ValueError("t must be nonnegative")


@dataclass(frozen=True)
class BihariEvaluation:
    bound: float | str
    beta_constant: float
    start: float | None
    increment: float
    f_argument: float | None
    in_domain: bool

    def to_dict(self) -> dict:
        return asdict(self)


def bihari_evaluate(params: BihariParams) -> BihariEvaluation:
    """The bound together with its intermediate quantities."""
    q, p = params.q, params.p
    c = beta_constant(params.alpha, p)
    inc = 2.0 ** (q - 1) * params.b_coef**q * c ** (q / p) * params.t ** (q * (1.0 / p - params.alpha) + 1.0)
    if params.a == 0.0:
        # F(0+) = -infinity under the divergence condition
        return BihariEvaluation(0.0, c, None, inc, None, True)
    start = barrier_F(2.0 ** (q - 1) * params.a**q, params.rho, q)
    arg = start + inc
    try:
        W = _inverse_w(arg, params.rho, q)
    except DomainEscape:
        return BihariEvaluation(ESCAPED, c, start, inc, arg, False)
    bound = math.exp(-W) if -W < 709.0 else math.inf
    return BihariEvaluation(bound, c, start, inc, arg, True)


def bihari_bound(params: BihariParams) -> float | str:
    """Upper bound for ``f(t)``, or :data:`ESCAPED` when ``F^{-1}`` is undefined there."""
    return bihari_evaluate(params).bound
