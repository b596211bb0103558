"""Segment-exact singular-kernel integrals for piecewise-linear data.

Every kernel reduces to integrals of the form

    int_{r0}^{r1} (p + q r) r^{-gamma} dr,

taken against one linear segment, where ``r`` is the distance to the singular
point.  With ``e1 = 1 - gamma`` and ``e2 = 2 - gamma`` the antiderivative is
``p r^e1 / e1 + q r^e2 / e2``.  Endpoint powers are carried between
neighbouring segments so each segment costs one ``pow``.

Vector-valued data (``d > 1``) use a Gauss-Legendre rule on segments away from
the singular point; the segment touching it is still exact since ``p = 0``
there.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
GL_X = (_GL_X + 1.0) / 2.0
GL_W = _GL_W / 2.0


@njit(cache=True)
def lin_int(p, q, r0, w0, r1, w1, e1, e2):
    """int_{r0}^{r1} (p + q r) r^(e1 - 1) dr given w = r^e1 at both ends."""
    acc = 0.0
    if p != 0.0:
        acc += p * (w1 - w0) / e1
    if q != 0.0:
        if r0 == 0.0:
            acc += q * (r1 * w1) / e2
        else:
            acc += q * (r1 * w1 - r0 * w0) / e2
    return acc


@njit(cache=True)
def abs_lin_int(p, q, r0, w0, r1, w1, e1, e2):
    """Same as :func:`lin_int` with ``|p + q r|``; splits at the sign change."""
    if q != 0.0:
        rs = -p / q
        if r0 < rs < r1:
            ws = rs**e1
            return abs(lin_int(p, q, r0, w0, rs, ws, e1, e2)) + abs(
                lin_int(p, q, rs, ws, r1, w1, e1, e2)
            )
    return abs(lin_int(p, q, r0, w0, r1, w1, e1, e2))


@njit(cache=True)
def abs_vec_int(p, q, r0, r1, gamma, gl_x, gl_w):
    """int_{r0}^{r1} |p + q r| r^-gamma dr for vectors ``p``, ``q``."""
    d = p.size
    if r0 == 0.0 and gamma > 1.0:
        nq = 0.0
        for k in range(d):
            nq += q[k] * q[k]
        return math.sqrt(nq) * r1 ** (2.0 - gamma) / (2.0 - gamma)
    acc = 0.0
    span = r1 - r0
    for m in range(gl_x.size):
        r = r0 + span * gl_x[m]
        s = 0.0
        for k in range(d):
            v = p[k] + q[k] * r
            s += v * v
        acc += gl_w[m] * math.sqrt(s) * r ** (-gamma)
    return acc * span


@njit(cache=True)
def weyl_left_direct(t, f, alpha, xs, cells):
    """Weyl-Marchaud left derivative (without the 1/Gamma factor) at ``xs``.

    ``cells[k]`` is the cell holding ``xs[k]``: ``t[j] <= x <= t[j+1]``.
    Returns f(x)/(x-a)^alpha + alpha int_a^x (f(x)-f(y))/(x-y)^(alpha+1) dy.
    """
    out = np.empty(xs.size)
    e1 = -alpha
    e2 = 1.0 - alpha
    for k in range(xs.size):
        x = xs[k]
        j = cells[k]
        sj = (f[j + 1] - f[j]) / (t[j + 1] - t[j])
        fx = f[j] + sj * (x - t[j])
        r0 = x - t[j]
        acc = 0.0
        if r0 > 0.0:
            acc = sj * r0**e2 / e2
            w0 = r0**e1
        else:
            fx = f[j]
            w0 = 0.0
        for i in range(j - 1, -1, -1):
            r1 = x - t[i]
            w1 = r1**e1
            s = (f[i + 1] - f[i]) / (t[i + 1] - t[i])
            p = 0.0 if r0 == 0.0 else fx - f[i + 1] - s * r0
            acc += lin_int(p, s, r0, w0, r1, w1, e1, e2)
            r0 = r1
            w0 = w1
        out[k] = fx * (x - t[0]) ** e1 + alpha * acc
    return out


@njit(cache=True)
def weyl_right_direct(t, g, order, xs, cells):
    """Right derivative of ``g - g(b)`` (without 1/Gamma) at ``xs``, ``b = t[-1]``.

    Returns (g(x)-g(b))/(b-x)^order + order int_x^b (g(x)-g(y))/(y-x)^(order+1) dy.
    """
    n = t.size
    out = np.empty(xs.size)
    e1 = -order
    e2 = 1.0 - order
    b = t[n - 1]
    for k in range(xs.size):
        x = xs[k]
        j = cells[k]
        sj = (g[j + 1] - g[j]) / (t[j + 1] - t[j])
        gx = g[j] + sj * (x - t[j])
        r0 = t[j + 1] - x
        acc = 0.0
        if r0 > 0.0:
            acc = -sj * r0**e2 / e2
            w0 = r0**e1
        else:
            gx = g[j + 1]
            w0 = 0.0
        for i in range(j + 1, n - 1):
            r1 = t[i + 1] - x
            w1 = r1**e1
            s = (g[i + 1] - g[i]) / (t[i + 1] - t[i])
            p = 0.0 if r0 == 0.0 else gx - g[i] + s * r0
            acc += lin_int(p, -s, r0, w0, r1, w1, e1, e2)
            r0 = r1
            w0 = w1
        out[k] = (gx - g[n - 1]) * (b - x) ** e1 + order * acc
    return out


@njit(cache=True)
def alpha_norm_profile(t, f, alpha, gl_x, gl_w):
    """int_0^{t_k} |f(t_k) - f(s)| / (t_k - s)^(alpha+1) ds for every node k."""
    n, d = f.shape
    out = np.zeros(n)
    e1 = -alpha
    e2 = 1.0 - alpha
    gamma = 1.0 + alpha
    p = np.empty(d)
    q = np.empty(d)
    for k in range(1, n):
        x = t[k]
        acc = 0.0
        r0 = 0.0
        w0 = 0.0
        for i in range(k - 1, -1, -1):
            r1 = x - t[i]
            h = t[i + 1] - t[i]
            if d == 1:
                w1 = r1**e1
                s = (f[i + 1, 0] - f[i, 0]) / h
                pp = 0.0 if r0 == 0.0 else f[k, 0] - f[i + 1, 0] - s * r0
                acc += abs_lin_int(pp, s, r0, w0, r1, w1, e1, e2)
                w0 = w1
            else:
                for c in range(d):
                    q[c] = (f[i + 1, c] - f[i, c]) / h
                    p[c] = 0.0 if r0 == 0.0 else f[k, c] - f[i + 1, c] - q[c] * r0
                acc += abs_vec_int(p, q, r0, r1, gamma, gl_x, gl_w)
            r0 = r1
        out[k] = acc
    return out


@njit(cache=True)
def driver_norm_best(t, f, alpha, gl_x, gl_w):
    """For each node j, max over i < j of

        |f(t_j)-f(t_i)| / (t_j-t_i)^(1-alpha) + int_{t_i}^{t_j} |f(y)-f(t_i)| / (y-t_i)^(2-alpha) dy.
    """
    n, d = f.shape
    best = np.zeros(n)
    e1 = alpha - 1.0
    e2 = alpha
    gamma = 2.0 - alpha
    p = np.empty(d)
    q = np.empty(d)
    for i in range(n - 1):
        acc = 0.0
        r0 = 0.0
        w0 = 0.0
        for j in range(i + 1, n):
            r1 = t[j] - t[i]
            w1 = r1**e1
            h = t[j] - t[j - 1]
            if d == 1:
                s = (f[j, 0] - f[j - 1, 0]) / h
                pp = 0.0 if r0 == 0.0 else f[j - 1, 0] - f[i, 0] - s * r0
                acc += abs_lin_int(pp, s, r0, w0, r1, w1, e1, e2)
                incr = abs(f[j, 0] - f[i, 0])
            else:
                incr2 = 0.0
                for c in range(d):
                    q[c] = (f[j, c] - f[j - 1, c]) / h
                    p[c] = 0.0 if r0 == 0.0 else f[j - 1, c] - f[i, c] - q[c] * r0
                    dv = f[j, c] - f[i, c]
                    incr2 += dv * dv
                acc += abs_vec_int(p, q, r0, r1, gamma, gl_x, gl_w)
                incr = math.sqrt(incr2)
            v = incr * w1 + acc
            if v > best[j]:
                best[j] = v
            r0 = r1
            w0 = w1
    return best


@njit(cache=True)
def weighted_abs_profile(t, f, alpha, gl_x, gl_w):
    """Cumulative int_0^{t_k} |f(s)| s^-alpha ds at every node."""
    n, d = f.shape
    out = np.zeros(n)
    e1 = 1.0 - alpha
    e2 = 2.0 - alpha
    p = np.empty(d)
    q = np.empty(d)
    w0 = 0.0
    for i in range(n - 1):
        r0 = t[i]
        r1 = t[i + 1]
        w1 = r1**e1
        h = r1 - r0
        if d == 1:
            s = (f[i + 1, 0] - f[i, 0]) / h
            piece = abs_lin_int(f[i, 0] - s * r0, s, r0, w0, r1, w1, e1, e2)
        else:
            for c in range(d):
                q[c] = (f[i + 1, c] - f[i, c]) / h
                p[c] = f[i, c] - q[c] * r0
            piece = abs_vec_int(p, q, r0, r1, alpha, gl_x, gl_w)
        out[i + 1] = out[i] + piece
        w0 = w1
    return out


@njit(cache=True)
def holder_seminorm(t, f, mu):
    """max over node pairs of |f(t_j) - f(t_i)| / (t_j - t_i)^mu."""
    n, d = f.shape
    best = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            s = 0.0
            for c in range(d):
                dv = f[j, c] - f[i, c]
                s += dv * dv
            v = math.sqrt(s) / (t[j] - t[i]) ** mu
            if v > best:
                best = v
    return best
