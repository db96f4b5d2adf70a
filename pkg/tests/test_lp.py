from math import comb

import numpy as np
import pytest

import oracles
from orisvlc.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, lp_solve


def test_single_lower_bound():
    res = lp_solve(LinearProgram([1.0], [[-1.0]], [-3.0]))
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(3.0, abs=1e-12)


def test_single_led_illumination_toy():
    res = lp_solve(LinearProgram([1.0], [[-15.552]], [-500.0]))
    assert res.value == pytest.approx(32.15, abs=5e-3)
    assert res.value == pytest.approx(500 / 15.552, rel=1e-12)


def test_infeasible():
    res = lp_solve(LinearProgram([1.0, 1.0], [[1.0, 1.0], [-1.0, -1.0]], [1.0, -2.0]))
    assert res.status == INFEASIBLE and not res.ok


def test_unbounded():
    res = lp_solve(LinearProgram([-1.0, 0.0], [[0.0, 1.0]], [1.0]))
    assert res.status == UNBOUNDED


def test_no_rows():
    assert lp_solve(LinearProgram([1.0, 2.0], np.zeros((0, 2)), [])).value == 0.0
    assert lp_solve(LinearProgram([1.0, -2.0], np.zeros((0, 2)), [])).status == UNBOUNDED


def test_beale_cycling_example():
    # Beale's degenerate instance, a standard cycling test for Dantzig pricing
    c = [0, 0, 0, -0.75, 20, -0.5, 6]
    A = [[0, 0, 0, 0.25, -8, -1, 9],
         [0, 0, 0, 0.5, -12, -0.5, 3],
         [0, 0, 0, 0, 0, 1, 0]]
    res = lp_solve(LinearProgram(c, A, [0, 0, 1]))
    assert res.status == OPTIMAL
    assert res.value == pytest.approx(-1.25, abs=1e-9)      # x4 = x6 = 1
    assert res.value == pytest.approx(oracles.vertex_enum_lp(c, A, [0, 0, 1])[1], abs=1e-9)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LinearProgram([np.inf], [[1.0]], [1.0])


def _random_lp(rng):
    n = int(rng.integers(1, 9))
    m_max = 1
    while m_max < 50 and comb(m_max + 1 + n + 2, n) <= 4000:
        m_max += 1
    m = int(rng.integers(1, m_max + 1))
    A = rng.normal(size=(m, n))
    b = rng.uniform(-1.0, 3.0, m)
    c = rng.normal(size=n)
    if rng.random() < 0.5:
        # a box row keeps about half of the instances bounded
        A = np.vstack([A[:-1], np.ones(n)]) if m > 1 else np.ones((1, n))
        b[-1] = 10.0
    return c, A, b


def test_random_programs_match_vertex_enumeration():
    rng = np.random.default_rng(123)
    seen = {OPTIMAL: 0, INFEASIBLE: 0, UNBOUNDED: 0}
    for _ in range(1000):
        c, A, b = _random_lp(rng)
        status, value = oracles.vertex_enum_lp(c, A, b)
        res = lp_solve(LinearProgram(c, A, b))
        assert res.status == status
        seen[status] += 1
        if status == OPTIMAL:
            assert res.value == pytest.approx(value, rel=1e-6, abs=1e-6)
            assert np.all(res.x >= 0)
            assert np.all(A @ res.x <= b + 1e-7 * (1 + np.abs(b)))
    assert all(v >= 50 for v in seen.values()), seen
