import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from mixedsde.bihari import (
    ESCAPED,
    BihariParams,
    DomainEscape,
    barrier_F,
    barrier_F_inverse,
    beta_constant,
    bihari_bound,
    bihari_evaluate,
    divergence_diagnostic,
)
from mixedsde.coefficients import ModulusOfContinuity

IDENTITY = ModulusOfContinuity.linear(1.0)
RHO1 = ModulusOfContinuity.rho1(2.0, 0.2)


def params(**kw):
    base = dict(a=1.0, b_coef=1.0, alpha=0.55, p=1.6, rho=ModulusOfContinuity.rho1(8 / 3, 0.2), t=0.5)
    base.update(kw)
    return BihariParams(**base)


def gronwall_closed_form(a, b, alpha, p, t):
    q = p / (p - 1)
    inc = 2 ** (q - 1) * b**q * beta_constant(alpha, p) ** (q / p) * t ** (q * (1 / p - alpha) + 1)
    log_bound = ((q - 1) * math.log(2) + q * math.log(a) + inc) / q
    return math.exp(log_bound) if log_bound < 709 else math.inf


class TestBetaConstant:
    def test_pi(self):
        # endpoint-substituted quadrature: u = sin^2(th) removes both singularities
        oracle, _ = quad(lambda th: 2.0, 0, math.pi / 2)
        assert beta_constant(0.25, 2.0) == pytest.approx(oracle, rel=1e-6)
        assert beta_constant(0.25, 2.0) == pytest.approx(math.pi, rel=1e-14)

    def test_uniform(self):
        assert beta_constant(0.0, 1.5) == pytest.approx(1.0, rel=1e-15)

    def test_scaling_identity(self):
        alpha, p, t = 0.3, 1.5, 0.5
        e = -p * alpha
        lhs, _ = quad(lambda s: 1.0, 0, t, weight="alg", wvar=(e, e), epsrel=1e-12)
        assert lhs == pytest.approx(beta_constant(alpha, p) * t ** (1 + 2 * e), rel=1e-6)

    @given(st.floats(0.05, 0.95), st.floats(1.01, 1.99))
    def test_matches_quadrature(self, e, p):
        alpha = (1 - e) / p
        direct, _ = quad(lambda u: 1.0, 0, 1, weight="alg", wvar=(-p * alpha, -p * alpha), epsrel=1e-12)
        assert beta_constant(alpha, p) == pytest.approx(direct, rel=1e-8)

    @pytest.mark.parametrize("alpha,p", [(0.5, 2.0), (0.7, 1.5)])
    def test_divergent(self, alpha, p):
        with pytest.raises(ValueError):
            beta_constant(alpha, p)


class TestBarrier:
    @pytest.mark.parametrize("rho", [IDENTITY, RHO1, ModulusOfContinuity.rho2(2.0, 0.1)])
    def test_zero_at_one(self, rho):
        assert barrier_F(1.0, rho, 2.0) == 0.0

    @pytest.mark.parametrize("x", [1e-8, 0.3, 2.0, 1e5])
    @pytest.mark.parametrize("q", [1.5, 2.0, 8 / 3])
    def test_identity_is_log(self, x, q):
        assert barrier_F(x, IDENTITY, q) == pytest.approx(math.log(x), rel=1e-13)

    def test_rho1_oracle(self):
        # 40-digit quadrature oracle
        assert barrier_F(0.5, RHO1, 2.0) == pytest.approx(-0.7388408007192900672104, rel=1e-8)

    def test_custom_matches_direct_quadrature(self):
        rho = ModulusOfContinuity.custom(lambda u: np.sqrt(u) + u)
        q = 2.0
        direct, _ = quad(lambda u: 1 / rho(u ** (1 / q)) ** q, 1, 7.5, epsrel=1e-12)
        assert barrier_F(7.5, rho, q) == pytest.approx(direct, rel=1e-9)

    def test_strictly_increasing(self):
        xs = np.geomspace(1e-9, 1e4, 60)
        for rho in (RHO1, ModulusOfContinuity.rho2(3.0, 0.05)):
            vals = [barrier_F(x, rho, rho.q) for x in xs]
            assert np.all(np.diff(vals) > 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            barrier_F(0.0, RHO1, 2.0)


class TestInverse:
    def test_zero(self):
        assert barrier_F_inverse(0.0, RHO1, 2.0) == 1.0

    @pytest.mark.parametrize("y", [-30.0, -1.0, 0.5, 12.0])
    def test_identity_is_exp(self, y):
        assert barrier_F_inverse(y, IDENTITY, 2.0) == pytest.approx(math.exp(y), rel=1e-13)

    @pytest.mark.parametrize("rho", [RHO1, ModulusOfContinuity.rho1(8 / 3, 0.05), ModulusOfContinuity.rho2(2.0, 0.1)])
    def test_round_trip(self, rho):
        rng = np.random.default_rng(7)
        xs = 10 ** rng.uniform(-6, 3, 100)
        back = np.array([barrier_F_inverse(barrier_F(x, rho, rho.q), rho, rho.q) for x in xs])
        assert np.max(np.abs(back / xs - 1)) <= 1e-8

    def test_residual(self):
        for y in (-5.0, -0.3, 0.7, 40.0):
            x = barrier_F_inverse(y, RHO1, 2.0)
            assert abs(barrier_F(x, RHO1, 2.0) - y) <= 1e-9 * max(1.0, abs(y))

    def test_below_bounded_barrier_escapes(self):
        # sqrt modulus with q = 2: F(0+) = -2 is finite
        rho = ModulusOfContinuity.custom(np.sqrt)
        assert barrier_F(1e-12, rho, 2.0) == pytest.approx(-2.0, abs=1e-5)
        with pytest.raises(DomainEscape):
            barrier_F_inverse(-3.0, rho, 2.0)

    def test_above_bounded_barrier_escapes(self):
        rho = ModulusOfContinuity.custom(lambda u: np.asarray(u) ** 2)  # F(x) = 1 - 1/x
        assert barrier_F(4.0, rho, 2.0) == pytest.approx(0.75, rel=1e-9)
        with pytest.raises(DomainEscape):
            barrier_F_inverse(1.5, rho, 2.0)

    def test_divergent_moduli_reach_zero(self):
        assert barrier_F_inverse(-1e6, RHO1, 2.0) == 0.0


class TestDivergence:
    @pytest.mark.parametrize("rho", [RHO1, ModulusOfContinuity.rho2(2.0, 0.1), ModulusOfContinuity.rho1(8 / 3, 0.05)])
    def test_builtin_unbounded(self, rho):
        vals = divergence_diagnostic(rho, rho.q)
        steps = np.diff(vals)
        assert np.all(steps < 0)
        # no plateau: steps decay no faster than 1/k^2 (a finite limit decays geometrically)
        k = np.arange(1, steps.size + 1)
        assert np.all(np.diff(k**2 * np.abs(steps)) > 0)

    def test_bounded_custom_plateaus(self):
        vals = divergence_diagnostic(ModulusOfContinuity.custom(np.sqrt), 2.0)
        steps = np.abs(np.diff(vals))
        assert steps[-1] < 1e-4 * steps[0]


class TestBound:
    def test_params_validation(self):
        for kw in ({"alpha": 0.4}, {"p": 2.5}, {"alpha": 0.7, "p": 1.5}, {"a": -1.0}, {"q": 3.0}, {"t": -1.0}):
            with pytest.raises(ValueError):
                params(**kw)
        assert params().q == pytest.approx(8 / 3)

    @pytest.mark.parametrize("rho", [RHO1, ModulusOfContinuity.rho2(2.0, 0.1), IDENTITY])
    @pytest.mark.parametrize("t", [0.1, 1.0, 50.0])
    def test_zero_start(self, rho, t):
        p = 1.0 / (1.0 - 1.0 / rho.q)
        if not 1 < p < 2:
            p = 1.6
            rho = ModulusOfContinuity(rho.kind, q=8 / 3, delta=rho.delta, scale=rho.scale)
        assert bihari_bound(params(a=0.0, p=p, rho=rho, t=t)) == 0.0

    def test_example_oracle(self):
        ev = bihari_evaluate(params())
        assert ev.in_domain
        # compositional 40-digit oracle
        assert ev.start == pytest.approx(1.280990074938461283753, rel=1e-9)
        assert ev.increment == pytest.approx(145.3053597640792857346, rel=1e-12)
        assert ev.beta_constant == pytest.approx(16.33354982462271311268, rel=1e-12)
        assert ev.bound == pytest.approx(1.01448176406226701856678e19, rel=1e-9)
        assert ev.f_argument == pytest.approx(ev.start + ev.increment)

    def test_gronwall_sweep(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = rng.uniform(1.2, 1.8)
            alpha = rng.uniform(0.501, 1 / p - 0.05)
            a, b, t = rng.uniform(0.01, 3), rng.uniform(0, 0.5), rng.uniform(0, 1)
            got = bihari_bound(BihariParams(a, b, alpha, p, IDENTITY, t))
            assert got == pytest.approx(gronwall_closed_form(a, b, alpha, p, t), rel=1e-9)

    @pytest.mark.parametrize("field,ladder", [
        ("a", [0.1, 0.5, 1.0, 2.0, 5.0]),
        ("b_coef", [0.0, 0.1, 0.3, 0.6, 1.0]),
        ("t", [0.0, 0.05, 0.1, 0.3, 0.5]),
    ])
    def test_monotone(self, field, ladder):
        rng = np.random.default_rng(hash(field) % 2**32)
        for rho in (RHO1, ModulusOfContinuity.rho2(8 / 3, 0.05)):
            base = dict(a=rng.uniform(0.1, 1), b_coef=rng.uniform(0.05, 0.4), t=rng.uniform(0.05, 0.4))
            vals = []
            for v in ladder:
                kw = dict(base, **{field: v})
                vals.append(bihari_bound(params(rho=ModulusOfContinuity(rho.kind, q=8 / 3, delta=rho.delta), **kw)))
            assert all(x <= y for x, y in zip(vals, vals[1:])), vals

    def test_overflowing_bound_is_infinite(self):
        ev = bihari_evaluate(params(b_coef=3.0, t=2.0, rho=ModulusOfContinuity.linear(1.0, q=8 / 3)))
        assert ev.in_domain and ev.bound == math.inf

    def test_escape_marker(self):
        rho = ModulusOfContinuity.custom(lambda u: np.asarray(u) ** 2, q=8 / 3)
        ev = bihari_evaluate(params(rho=rho, a=1.0, b_coef=1.0, t=1.0))
        assert ev.bound == ESCAPED and not ev.in_domain
        assert ev.to_dict()["bound"] == ESCAPED

    @pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
    def test_self_bound_sanity(self):
        # Picard iterates of the right-hand side satisfy the inequality
        a, b, alpha, p = 0.5, 0.2, 0.55, 1.6
        rho = ModulusOfContinuity.rho1(8 / 3, 0.2)
        ts = np.linspace(0.05, 1.0, 12)
        f = lambda s: a
        for _ in range(3):
            vals = np.array([
                a + b * t**alpha * quad(lambda s: float(rho(f(s))), 0, t, weight="alg", wvar=(-alpha, -alpha), limit=200)[0]
                for t in ts
            ])
            f = (lambda v: (lambda s: float(np.interp(s, ts, v, left=v[0]))))(vals)
        for t, v in zip(ts, vals):
            bound = bihari_bound(BihariParams(a, b, alpha, p, rho, t))
            assert v <= bound
