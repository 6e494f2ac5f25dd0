import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatborel.errors import ConfigError
from heatborel.measures import (
    DiscreteMeasure,
    TorusPotential,
    constant_measure,
    cosine_measure,
    eval_potential,
    exp_moment,
    matrix_norm,
    measure_from_fourier_coeffs,
)

reals = st.floats(-5, 5, allow_nan=False)


def test_constant_atom_gives_constant_potential():
    m = np.array([[1.0, 2.0], [0.5, -1.0]])
    meas = constant_measure(m)
    for x in [0.0, 1.3, 2 - 1j]:
        np.testing.assert_allclose(eval_potential(meas, [x]), m, atol=0)


@given(reals)
def test_cosine_measure_is_cosine(x):
    beta = 0.1
    c = eval_potential(cosine_measure(beta), [x])
    assert abs(c[0, 0] - 2 * beta * np.cos(x)) < 1e-15


def test_cosine_at_imaginary_point_matches_high_precision():
    mp.mp.dps = 30
    beta = 0.1
    ref = mp.mpf(beta) * (mp.e ** -1 + mp.e)
    c = eval_potential(cosine_measure(beta), [1j])[0, 0]
    assert abs(c - complex(ref)) < 1e-15


def test_exp_moment_examples():
    assert exp_moment(DiscreteMeasure.zero(), 0.3, 0.2) == 0.0
    single = constant_measure([[1.0]])
    assert exp_moment(single, 0.7, 2.0) == 1.0
    beta, eps, r = 0.1, 0.3, 0.8
    assert exp_moment(cosine_measure(beta), eps, r) == pytest.approx(2 * beta * np.exp(eps + r), rel=1e-15)


@given(st.floats(0, 3), st.floats(0, 3), st.floats(0, 1), st.floats(0, 1))
def test_exp_moment_monotone(eps, r, de, dr):
    m = DiscreteMeasure([[0.5], [-2.0], [1.0]], [[[0.2]], [[0.1j]], [[-0.3]]])
    assert exp_moment(m, eps + de, r + dr) >= exp_moment(m, eps, r)


def test_exp_moment_zero_is_total_variation():
    m = DiscreteMeasure([[0.5, 1.0], [-2.0, 0.0]], np.array([[[1, 2], [3, 4]], [[0, 1j], [1j, 0]]]), nu=2, d=2)
    assert exp_moment(m, 0, 0) == pytest.approx(m.total_variation(), rel=1e-15)


def test_matrix_norm_is_operator_norm():
    a = np.array([[3.0, 0], [0, 4.0]])
    assert matrix_norm(a) == pytest.approx(4.0)
    assert matrix_norm(np.eye(3)) == pytest.approx(1.0)


def test_measure_json_roundtrip():
    m = DiscreteMeasure([[0.5], [-2.0]], [[[0.2 + 0.1j]], [[0.1j]]])
    back = DiscreteMeasure.from_json(m.to_json())
    np.testing.assert_array_equal(back.xi, m.xi)
    np.testing.assert_array_equal(back.weights, m.weights)


def test_measure_rejects_bad_json():
    with pytest.raises(ConfigError):
        DiscreteMeasure.from_json({"nu": 1})


def test_fourier_coeffs_examples():
    m = np.array([[0.4]])
    meas = measure_from_fourier_coeffs(TorusPotential({(0,): m}, nu=1, d=1))
    assert meas.n_atoms == 1 and np.all(meas.xi == 0)
    beta = 0.1
    cos = measure_from_fourier_coeffs(TorusPotential({(1,): [[beta]], (-1,): [[beta]]}, nu=1, d=1))
    assert sorted(cos.xi.ravel().tolist()) == pytest.approx([-2 * np.pi, 2 * np.pi])
    sin = measure_from_fourier_coeffs(TorusPotential({(1,): [[1j]], (-1,): [[-1j]]}, nu=1, d=1))
    for x in np.linspace(0, 1, 7):
        c = eval_potential(sin, [x])[0, 0]
        assert abs(c - (-2 * np.sin(2 * np.pi * x))) < 1e-14


def test_torus_potential_rejects_non_hermitian():
    with pytest.raises(ConfigError):
        TorusPotential({(1,): [[1.0]], (-1,): [[2.0]]}, nu=1, d=1)
    with pytest.raises(ConfigError):
        TorusPotential({(1,): [[1.0]]}, nu=1, d=1)


def _random_torus(rng, nu, d, qmax):
    coeffs = {}
    for q in np.ndindex(*([2 * qmax + 1] * nu)):
        q = tuple(int(k) - qmax for k in q)
        mq = tuple(-k for k in q)
        if q in coeffs:
            continue
        c = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        if q == mq:
            c = c + c.conj().T
        coeffs[q] = c
        coeffs[mq] = c.conj().T
    return TorusPotential(coeffs, nu=nu, d=d)


def test_torus_potential_periodic_and_hermitian(rng):
    p = _random_torus(rng, 2, 2, 1)
    meas = measure_from_fourier_coeffs(p)
    for _ in range(10):
        x = rng.uniform(-1, 1, size=2)
        c = eval_potential(meas, x)
        assert np.abs(c - c.conj().T).max() <= 1e-14 * max(1, np.abs(c).max())
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1
            assert np.abs(eval_potential(meas, x + e) - c).max() <= 1e-13


def test_torus_json_roundtrip(rng):
    p = _random_torus(rng, 1, 2, 2)
    back = TorusPotential.from_json(p.to_json())
    assert set(back.coeffs) == set(p.coeffs)
    for q in p.coeffs:
        np.testing.assert_array_equal(back.coefficient(q), p.coefficient(q))
