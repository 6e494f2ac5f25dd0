import numpy as np
import pytest

from heatborel.engine import COST_CAP_ENV, TermEngine, cost_cap, order_for
from heatborel.errors import ConfigError, CostCapExceeded
from heatborel.measures import DiscreteMeasure, cosine_measure
from heatborel.series import DeformationConfig, v_sum


def test_order_for():
    assert order_for(7, 3) == 7
    assert order_for((9, 8, 5), 1) == 9
    assert order_for((9, 8, 5), 3) == 5
    assert order_for((9, 8, 5), 6) == 5


def test_cost_cap_env(monkeypatch):
    monkeypatch.setenv(COST_CAP_ENV, "123")
    assert cost_cap() == 123.0
    assert cost_cap(5.0) == 5.0
    monkeypatch.setenv(COST_CAP_ENV, "lots")
    with pytest.raises(ConfigError):
        cost_cap()


def test_preflight_raises(monkeypatch):
    monkeypatch.setenv(COST_CAP_ENV, "1000")
    cfg = DeformationConfig(cosine_measure(0.1), 0.0, n_max=4, quad_order=8)
    with pytest.raises(CostCapExceeded):
        v_sum(0.1, 0.0, 0.0, cfg)


def test_zero_frequency_tuples_merged_and_zero_products_pruned():
    nil = np.array([[0, 1], [0, 0]], dtype=complex)
    m = DiscreteMeasure([[0.0], [0.0], [1.0]], [nil, np.eye(2) * 0.1, nil], nu=1, d=2)
    eng = TermEngine(m, quad_order=3)
    chunks = eng.chunks(2)
    analytic = [c for c in chunks if c.analytic]
    assert len(analytic) == 1
    # zero-frequency pairs: nil.nil = 0 pruned, the other three sum
    ref = nil @ (0.1 * np.eye(2)) + (0.1 * np.eye(2)) @ nil + 0.01 * np.eye(2)
    np.testing.assert_allclose(analytic[0].mprod[0], ref)
    n_quad = sum(c.xi.shape[0] for c in chunks if not c.analytic)
    # five tuples carry a frequency; three of them multiply nil by nil and vanish
    assert n_quad == 2


def test_tuple_products_time_ordered():
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    b = np.array([[0, 1], [1, 0]], dtype=complex)
    m = DiscreteMeasure([[1.0], [2.0]], [a, b], nu=1, d=2)
    eng = TermEngine(m, quad_order=2, chunk_tuples=100)
    (chunk,) = eng.chunks(2)
    # lexicographic (j_1, j_2): (0,0), (0,1), (1,0), (1,1); product M_{j_2} M_{j_1}
    np.testing.assert_array_equal(chunk.mprod[1], b @ a)
    np.testing.assert_array_equal(chunk.mprod[2], a @ b)
    np.testing.assert_array_equal(chunk.xi[1, :, 0], [1.0, 2.0])


def test_thread_count_does_not_change_bits():
    meas = DiscreteMeasure([[1.0], [-1.0], [0.5]], [[[0.1]], [[0.1]], [[0.05j]]])
    vals = []
    for threads in (1, 2, 8):
        cfg = DeformationConfig(meas, 0.0, n_max=4, quad_order=6, threads=threads, chunk_tuples=4)
        vals.append(v_sum(0.3 + 0.1j, 0.2, -0.1, cfg).value)
    assert vals[0].tobytes() == vals[1].tobytes() == vals[2].tobytes()
