import warnings
from math import factorial

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from heatborel.borel import (
    BorelEvaluator,
    bessel_J,
    borel_v,
    borel_values,
    growth_constant,
    halfdisk_samples,
    jscaled,
    kernel_K,
    kernel_K_bound,
    kernel_K_integral,
    laplace_resum,
    laplace_rule,
    nevanlinna_samples,
    ray_constant,
    remainder_split,
    verify_watson,
)
from heatborel.errors import ConfigError, DomainError, ToleranceNotMet
from heatborel.measures import DiscreteMeasure, constant_measure, cosine_measure
from heatborel.series import DeformationConfig, free_coefficients, remainder_table, v_sum

cplx = st.complex_numbers(max_magnitude=60, allow_nan=False, allow_infinity=False)


# -- Bessel pieces -----------------------------------------------------------------


def test_J_at_zero_and_one():
    assert bessel_J(0.0) == 1.0
    ref, _ = quad(lambda p: np.cos(2 * np.sin(p)), 0, np.pi, epsabs=1e-15)
    assert abs(bessel_J(1.0) - ref / np.pi) <= 1e-12
    assert abs(bessel_J(1.0, "series") - bessel_J(1.0, "bessel")) <= 1e-15


@given(cplx)
def test_J_bound(z):
    assert abs(bessel_J(complex(z))) <= np.exp(2 * abs(np.sqrt(complex(z)).imag)) * (1 + 1e-12)


@pytest.mark.parametrize("n", [0, 1, 3, 7])
def test_jscaled_against_mpmath(n):
    mp.mp.dps = 30
    pts = [0.5, 3 + 2j, -12.0, 15.9, 16.1, 40.0, -40.0, 30 - 25j, 200.0, 1e3 + 10j]
    for z in pts:
        zz = mp.mpc(z)
        ref = complex(mp.nsum(lambda m: (-zz) ** m / (mp.factorial(m) * mp.factorial(m + n)), [0, mp.inf]))
        got = complex(jscaled(n, np.array(z)))
        assert abs(got - ref) <= 1e-13 * max(abs(ref), 1e-3 / factorial(n)), (n, z)


def test_K_special_cases():
    for n in (1, 2, 5):
        assert kernel_K(n, 0.0, 1.7) == pytest.approx(1.7**n / factorial(n), rel=1e-15)
    assert abs(kernel_K(1, 2.0, 1 + 1j) - kernel_K_integral(1, 2.0, 1 + 1j)) <= 1e-12
    with pytest.raises(ConfigError):
        kernel_K(0, 1.0, 1.0)


@given(st.integers(1, 6), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False))
def test_K_series_vs_integral(n, b, tau):
    a = kernel_K(n, np.asarray(b), np.asarray(tau))
    c = kernel_K_integral(n, b, tau)
    assert abs(a - c) <= 1e-12 * max(1.0, abs(c))


@given(st.integers(1, 6), st.floats(0, 20), cplx)
def test_K_bound(n, b, tau):
    tau = complex(tau)
    assert abs(kernel_K(n, np.asarray(b), np.asarray(tau))) <= kernel_K_bound(n, b, tau) * (1 + 1e-10) + 1e-300


# -- Borel transform ---------------------------------------------------------------


def test_borel_zero_and_constant():
    z = DeformationConfig(DiscreteMeasure.zero(1, 2), 0.0, n_max=3)
    assert np.array_equal(borel_v(2.5 + 1j, 0.0, 0.3, z), np.eye(2))
    m = np.array([[0.3, 0.5], [0.0, -0.2]])
    cfg = DeformationConfig(constant_measure(m), 0.0, n_max=25)
    tau = 1.5 - 0.5j
    ref = sum(np.linalg.matrix_power(m * tau, n) / factorial(n) ** 2 for n in range(26))
    np.testing.assert_allclose(borel_v(tau, 0.2, 0.1, cfg), ref, atol=1e-15)


def test_borel_rejects_harmonic(cosine_harmonic):
    with pytest.raises(DomainError):
        borel_v(1.0, 0.0, 0.0, cosine_harmonic)


def test_growth_constant_baseline():
    c, eps = growth_constant(cosine_measure(0.1), 1.0, 1.0)
    assert c == pytest.approx(4.0085, abs=5e-4)
    assert eps == pytest.approx(2.0, abs=0.05)


def test_taylor_coefficients_of_borel_transform(cosine_free):
    """r! times the tau^r coefficient of v_hat equals the series coefficient a_r."""
    rad, npts = 2.0, 64
    taus = rad * np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = borel_values(taus, [(0.1, -0.3)], cosine_free)[0, :, 0, 0]
    b = np.fft.fft(vals) / npts / rad ** np.arange(npts)
    a = free_coefficients(10, 0.1, -0.3, cosine_free)[:, 0, 0]
    for r in range(11):
        assert abs(factorial(r) * b[r] - a[r]) <= 1e-10


def test_growth_bound_on_parabola(cosine_free, rng):
    ev = BorelEvaluator.build(cosine_free, kappa=1.0, R=1.0)
    # tau in {Re tau > (Im tau)^2 / 4 - 1}
    im = rng.uniform(-8, 8, 60)
    re = im**2 / 4 - 1 + rng.exponential(4, 60)
    taus = re + 1j * im
    x = rng.uniform(-2, 2) + 1j * rng.uniform(-0.99, 0.99)
    y = rng.uniform(-2, 2) + 1j * rng.uniform(-0.99, 0.99)
    vals = borel_values(taus, [(x, y)], cosine_free)[0, :, 0, 0]
    assert np.all(np.abs(vals) <= np.exp(ev.growth_C * np.sqrt(np.abs(taus))))


# -- Laplace ------------------------------------------------------------------------


def test_laplace_constant_and_monomials():
    for t in (0.3, 1.0, 0.5 + 0.5j, 2.0 - 1.0j):
        one = laplace_resum(lambda tau: np.ones_like(tau), t, tol=1e-15, growth_C=0.0)
        assert abs(one - 1) <= 1e-13
        for r in range(13):
            got = laplace_resum(lambda tau: tau**r / factorial(r), t, tol=1e-15, growth_C=2 * np.sqrt(r))
            assert abs(got - t**r) <= 1e-12 * max(1, abs(t) ** r)


def test_laplace_errors():
    with pytest.raises(DomainError):
        laplace_rule(-1.0 + 0.1j, 1.0)
    with pytest.raises(ToleranceNotMet):
        laplace_rule(1.0, 200.0)
    with pytest.raises(ConfigError):
        laplace_resum(lambda tau: tau, 1.0)


def test_laplace_tail_below_tol():
    rule = laplace_rule(0.7 + 0.2j, 3.0, tol=1e-12)
    assert rule.tail_bound <= 1e-12
    assert np.all(np.diff(rule.tau) > 0)


@pytest.mark.parametrize("t", [0.1, 0.5, 1 + 0.5j])
def test_round_trip(t):
    cfg = DeformationConfig(cosine_measure(0.1), 0.0, n_max=4, quad_order=8)
    ev = BorelEvaluator.build(cfg)
    x, y = 0.3, -0.4
    got = laplace_resum(ev, t, 1e-12, x=x, y=y)
    direct = v_sum(t, x, y, cfg, warn=False).value
    assert np.abs(got - direct).max() <= 1e-8


def test_ray_constant_dominates():
    m = cosine_measure(0.1)
    c = ray_constant(m, 0.5)
    cfg = DeformationConfig(m, 0.0, n_max=5, quad_order=5)
    taus = np.linspace(0, 400, 25)
    vals = borel_values(taus, [(0.5j, -0.5j)], cfg)[0, :, 0, 0]
    assert np.all(np.abs(vals) <= np.exp(c * np.sqrt(taus)))


# -- remainder split ------------------------------------------------------------------


def test_split_examples():
    zero = DeformationConfig(DiscreteMeasure.zero(), 0.0, n_max=3)
    s = remainder_split(3, 0.4, 0.0, 0.0, zero)
    assert np.array_equal(s.f, np.eye(1)) and np.all(s.g == 0)
    cfg = DeformationConfig(cosine_measure(0.1), 0.0, n_max=4, quad_order=8)
    s1 = remainder_split(1, 0.4 + 0.1j, 0.2, 0.1, cfg)
    v = v_sum(0.4 + 0.1j, 0.2, 0.1, cfg, warn=False).value
    assert np.array_equal(s1.f, np.eye(1))
    assert np.abs(s1.g - (v - 1)).max() <= 1e-15


@pytest.mark.parametrize("omega", [0.0, 1.0])
def test_split_sums_to_v(omega):
    cfg = DeformationConfig(cosine_measure(0.2), omega, n_max=4, quad_order=8)
    t = 0.3 + 0.1j
    v = v_sum(t, 0.2, 0.1, cfg, warn=False).value
    for r in (2, 3, 5):
        s = remainder_split(r, t, 0.2, 0.1, cfg)
        assert np.abs(s.f + s.g - v).max() <= 1e-14


def test_split_constant_closed_form():
    m = 0.7
    cfg = DeformationConfig(constant_measure([[m]]), 0.0, n_max=25)
    t = 0.5 + 0.2j
    for r in (1, 3, 6):
        s = remainder_split(r, t, 0.0, 0.0, cfg)
        partial = sum((t * m) ** n / factorial(n) for n in range(r))
        assert abs(s.f[0, 0] - partial) <= 1e-14
        assert abs(s.g[0, 0] - (np.exp(t * m) - partial)) <= 1e-14


def test_f_continuous_across_imaginary_axis():
    cfg = DeformationConfig(cosine_measure(0.2), 0.0, n_max=4, quad_order=8)
    for y in (0.1, 0.3):
        eps = 1e-7
        a = remainder_split(4, eps + 1j * y, 0.2, 0.1, cfg, allow_left=True).f
        b = remainder_split(4, -eps + 1j * y, 0.2, 0.1, cfg, allow_left=True).f
        assert np.abs(a - b).max() <= 1e-6


# -- certification ---------------------------------------------------------------------


def test_samples_in_domains():
    t = nevanlinna_samples(0.5, 500, 3)
    assert np.all((1 / t).real > 2)
    h = halfdisk_samples(0.45, 500, 3)
    assert np.all((np.abs(h) < 0.45) & (h.real >= 0))
    assert np.array_equal(t, nevanlinna_samples(0.5, 500, 3))


def test_watson_zero_potential():
    ts = nevanlinna_samples(0.5, 20, 0)
    rep = verify_watson(ts, 0.5, kappa=2.0, remainders=np.zeros((6, 20)))
    assert rep.K == 0 and not rep.diverging


def test_watson_convergent_series_any_kappa():
    m = 0.8
    cfg = DeformationConfig(constant_measure([[m]]), 0.0, n_max=30)
    ts = nevanlinna_samples(0.5, 20, 0)
    table = remainder_table(10, ts, 0.0, 0.0, cfg)
    ks = []
    for kappa in (0.5, 1.0, 4.0):
        rep = verify_watson(ts, 0.5, kappa, remainders=table[1:])
        assert np.isfinite(rep.K) and not rep.diverging
        ks.append(rep.K)
    assert ks == sorted(ks)  # K grows with kappa


def test_watson_values_route_matches_remainders(cosine_free):
    ts = nevanlinna_samples(0.5, 10, 4)
    table = remainder_table(6, ts, 0.0, 0.0, cosine_free)
    coeffs = free_coefficients(5, 0.0, 0.0, cosine_free)
    vals = table[0]
    a = verify_watson(ts, 0.5, 1.0, remainders=table[1:])
    b = verify_watson(ts, 0.5, 1.0, values=vals, coeffs=coeffs)
    np.testing.assert_allclose(a.rho, b.rho, rtol=1e-6)


def test_watson_rejects_outside_samples():
    with pytest.raises(DomainError):
        verify_watson(np.array([0.6]), 0.5, 1.0, remainders=np.zeros((3, 1)))
    with pytest.raises(ConfigError):
        verify_watson(np.array([0.1]), 0.5, 1.0)


def test_report_json_is_serializable(cosine_free):
    import json

    ts = nevanlinna_samples(0.5, 8, 0)
    table = remainder_table(5, ts, 0.0, 0.0, cosine_free)
    rep = verify_watson(ts, 0.5, None, remainders=table[1:])
    data = json.loads(rep.dumps())
    assert data["domain"] == "nevanlinna"
    assert len(data["samples"]["t_re"]) == 8
