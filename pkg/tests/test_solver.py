import time

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from svrtsynth.synth.solver import SolverTimeout, box_rows, feasible


def _lp_feasible(A, b):
    n = A.shape[1]
    r = linprog(np.zeros(n), A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    return r.status == 0


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 12))
def test_agrees_with_linprog(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-6, 7, size=m).astype(float)
    ok, w = feasible(A, b)
    assert ok == _lp_feasible(A, b)
    if ok:
        assert (A @ w <= b + 1e-7).all()


@given(st.integers(0, 10_000), st.integers(2, 5))
def test_difference_systems(seed, n):
    # the row shapes the fitter produces: boxes plus latent differences
    rng = np.random.default_rng(seed)
    rows, rhs = [], []
    for _ in range(int(rng.integers(2, 10))):
        i, j = rng.choice(n, 2, replace=False)
        c = np.zeros(n)
        c[i], c[j] = 1, -1 if rng.random() < 0.7 else 0
        lo = float(rng.uniform(-20, 20))
        r, h = box_rows(c, lo, lo + float(rng.uniform(0, 4)))
        rows += r
        rhs += h
    A, b = np.array(rows), np.array(rhs)
    ok, w = feasible(A, b)
    assert ok == _lp_feasible(A, b)
    if ok:
        assert (A @ w <= b + 1e-7).all()


def test_trivial_cases():
    assert feasible(np.zeros((1, 0)), np.array([1.0]))[0]
    assert not feasible(np.zeros((1, 0)), np.array([-1.0]))[0]
    assert not feasible(np.array([[0.0, 0.0]]), np.array([-1.0]))[0]
    ok, w = feasible(np.array([[1.0], [-1.0]]), np.array([3.0, -3.0]))
    assert ok and w[0] == pytest.approx(3.0)
    assert not feasible(np.array([[1.0], [-1.0]]), np.array([2.0, -3.0]))[0]


def test_box_rows_skips_infinite_bounds():
    r, h = box_rows([1.0, 2.0], -np.inf, 5.0)
    assert len(r) == 1 and h == [5.0]
    assert box_rows([1.0], -np.inf, np.inf) == ([], [])


def test_deadline():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(60, 8))
    b = rng.normal(size=60) + 5
    with pytest.raises(SolverTimeout):
        feasible(A, b, deadline=time.perf_counter() - 1)
