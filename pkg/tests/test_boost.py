import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svrtsynth import boost
from svrtsynth import problems as P
from svrtsynth.errors import DegenerateInput, DimensionMismatch
from svrtsynth.parsing import PRESETS, degrade_parsing, extract_parsing, vectorize_many
from svrtsynth.rng import make_rng


def _random_set(seed, n=30, d=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d)).round(2)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[:2] = (1, -1)
    return X, y


def test_separable_1d():
    X = np.array([[0.1], [0.4], [0.2], [0.9], [0.7], [0.8]])
    y = np.array([-1, -1, -1, 1, 1, 1])
    m = boost.train(X, y, 100)
    assert m.n_rounds <= 3 and m.stopped == "error = 0"
    assert boost.training_error_curve(m, X, y)[-1] == 0
    assert m.stumps[0][1] == pytest.approx(0.55)
    assert all(math.isfinite(a) for *_, a in m.stumps)


def test_random_labels_are_chance():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 5))
    y = np.where(rng.random(200) < 0.5, 1, -1)
    m = boost.train(X, y, 100)
    Xt = rng.normal(size=(1000, 5))
    yt = np.where(rng.random(1000) < 0.5, 1, -1)
    acc = np.mean(boost.predict_many(m, Xt)[0] == yt)
    assert abs(acc - 0.5) <= 0.05


def test_jittered_xor():
    rng = np.random.default_rng(0)
    base = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
    X = np.repeat(base, 25, 0) + rng.normal(0, 0.05, (100, 2))
    y = np.repeat([-1, 1, 1, -1], 25)
    m = boost.train(X, y, 2000)
    curve = boost.training_error_curve(m, X, y)
    assert curve[-1] == 0
    # brute force: no single stump gets below 0.4 error on this data
    best = min(np.mean(np.where(X[:, f] > t, p, -p) != y)
               for f in range(2) for t in np.unique(X[:, f]) for p in (1, -1))
    assert best >= 0.4


def test_empty_model_ties_to_positive():
    m = boost.StumpModel(3)
    assert boost.predict(m, [0.0, 1.0, 2.0]) == (1, 0.0)


@pytest.mark.parametrize("value, expected", [(5.0, -1), (1.0, 1)])
def test_single_stump(value, expected):
    m = boost.StumpModel(2, [(1, 2.5, -1, 0.7)])
    label, score = boost.predict(m, [0.0, value])
    assert label == expected and abs(score) == pytest.approx(0.7)


def test_errors():
    with pytest.raises(DegenerateInput):
        boost.train([[1.0], [2.0]], [1, 1])
    with pytest.raises(DegenerateInput):
        boost.train([[1.0]], [1])
    with pytest.raises(DimensionMismatch):
        boost.train([[1.0], [2.0]], [1])
    m = boost.train([[1.0], [2.0]], [-1, 1])
    with pytest.raises(DimensionMismatch):
        boost.predict(m, [1.0, 2.0])


def test_constant_features_stop_immediately():
    m = boost.train(np.ones((4, 2)), [1, -1, 1, -1])
    assert m.n_rounds == 0 and m.stopped == "error >= 0.5"


def _replay_errors(m, X, y):
    """Weighted error of each selected stump, recomputed from scratch."""
    w = np.full(len(X), 1.0 / len(X))
    out = []
    for f, t, p, a in m.stumps:
        h = np.where(X[:, f] > t, p, -p)
        out.append(float(w[h != y].sum()))
        w = w * np.exp(-a * y * h)
        w /= w.sum()
    return out


@given(st.integers(0, 100_000))
@settings(max_examples=40)
def test_selected_stump_beats_half(seed):
    X, y = _random_set(seed)
    m = boost.train(X, y, 40)
    assert m.n_rounds <= 40
    assert all(e < 0.5 for e in _replay_errors(m, X, y))


@given(st.integers(0, 100_000))
@settings(max_examples=40)
def test_training_error_bound(seed):
    # training error <= prod 2 sqrt(eps (1 - eps)), the bound that does hold
    X, y = _random_set(seed)
    m = boost.train(X, y, 40)
    errs = _replay_errors(m, X, y)
    curve = boost.training_error_curve(m, X, y)
    bound = 1.0
    for e, c in zip(errs, curve):
        bound *= 2 * math.sqrt(max(e, 1e-12) * (1 - e))
        assert c <= bound + 1e-9


@given(st.integers(0, 100_000))
@settings(max_examples=40)
def test_training_error_non_increasing(seed):
    X, y = _random_set(seed)
    m = boost.train(X, y, 40)
    curve = boost.training_error_curve(m, X, y)
    assert all(b <= a for a, b in zip(curve, curve[1:]))


def test_csv_dump():
    m = boost.StumpModel(2, [(0, 0.5, 1, 0.25)], 10, "max rounds")
    assert m.to_csv(["h"]).splitlines() == ["# h", "round,feature,threshold,polarity,weight",
                                            "0,0,0.5,1,0.25"]


def _problem_split(pid, profile, seed, n_train=20, n_test=80):
    ds = P.make_dataset(pid, n_train // 2, n_test, seed=seed)

    def vec(exs, key):
        return vectorize_many([degrade_parsing(extract_parsing(e.ground_truth), PRESETS[profile],
                                               make_rng(seed, key, i), e.ground_truth)
                               for i, e in enumerate(exs)], 8)

    lab = lambda exs: np.array([1 if e.category == P.POS else -1 for e in exs])
    return vec(ds.train, 0), lab(ds.train), vec(ds.test, 1), lab(ds.test)


def test_problem_20_corrected_parsings():
    Xtr, ytr, Xte, yte = _problem_split(20, "corrected", 3)
    m = boost.train(Xtr, ytr, 100)
    assert np.mean(boost.predict_many(m, Xte)[0] == yte) >= 0.95


@pytest.mark.slow
@pytest.mark.parametrize("pid", [20, 11, 16])
def test_stump_count_barely_matters(pid):
    Xtr, ytr, Xte, yte = _problem_split(pid, "corrected", 1)
    accs = [np.mean(boost.predict_many(boost.train(Xtr, ytr, n), Xte)[0] == yte)
            for n in (100, 10_000)]
    assert abs(accs[0] - accs[1]) < 0.05
