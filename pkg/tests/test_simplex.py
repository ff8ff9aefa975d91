import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from pg_gibbs.errors import LPIterationLimit
from pg_gibbs.simplex import simplex


def test_small_optimum():
    # min -x0 - x1  s.t. x0 + 2 x1 + s0 = 4, 3 x0 + x1 + s1 = 6
    A = [[1, 2, 1, 0], [3, 1, 0, 1]]
    res = simplex([-1, -1, 0, 0], A, [4, 6])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-2.8)
    assert np.allclose(res.x[:2], [1.6, 1.2])


def test_infeasible_and_unbounded():
    assert simplex([0, 0], [[1, 1]], [-1]).status == "infeasible"
    assert simplex([-1, 0], [[1, -1]], [0]).status == "unbounded"


def test_redundant_rows_and_degeneracy():
    A = [[1, 1, 0], [2, 2, 0], [0, 1, 1]]
    res = simplex([1, 1, 1], A, [1, 2, 1])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(1.0)


def test_iteration_cap():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 12))
    b = A @ rng.random(12)
    with pytest.raises(LPIterationLimit):
        simplex(rng.normal(size=12), A, b, max_iter=1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(2, 9))
def test_agrees_with_reference_solver(seed, m, extra):
    rng = np.random.default_rng(seed)
    n = m + extra
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-3, 4, size=m).astype(float)
    c = rng.integers(0, 4, size=n).astype(float)  # c >= 0 keeps the problem bounded
    ours = simplex(c, A, b)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert (ours.status == "optimal") == (ref.status == 0)
    if ref.status == 0:
        assert ours.objective == pytest.approx(ref.fun, abs=1e-8)
        assert np.allclose(A @ ours.x, b, atol=1e-8) and np.all(ours.x >= 0)
