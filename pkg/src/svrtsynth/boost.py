"""Discrete AdaBoost over decision stumps.

A stump compares one feature against a threshold taken from the midpoints
between sorted distinct training values and votes ``polarity`` (+1 or -1)
above the threshold and ``-polarity`` at or below it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, DimensionMismatch

ERR_FLOOR = 1e-12


@dataclass
class StumpModel:
    n_features: int
    stumps: list = field(default_factory=list)   # (feature, threshold, polarity, weight)
    max_rounds: int = 0
    stopped: str = ""

    @property
    def n_rounds(self):
        return len(self.stumps)

    def to_csv(self, header=()):
        out = io.StringIO()
        for h in header:
            out.write(f"# {h}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["round", "feature", "threshold", "polarity", "weight"])
        for k, (f, t, p, a) in enumerate(self.stumps):
            w.writerow([k, f, repr(float(t)), p, repr(float(a))])
        return out.getvalue()


def _stump_votes(X, feature, threshold, polarity):
    return np.where(X[:, feature] > threshold, polarity, -polarity)


def _best_stump(X, y, w):
    """Weighted-error-minimising stump over all features and midpoints.

    For each feature the samples are sorted once; the weighted error of
    "+1 above threshold" at every cut is a running sum, and the opposite
    polarity has error 1 - that.
    """
    n, d = X.shape
    total = w.sum()
    best = (math.inf, 0, 0.0, 1)
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys, ws = X[order, f], y[order], w[order]
        # cut after position i (0..n-2) where the value changes
        change = np.flatnonzero(xs[1:] > xs[:-1])
        if len(change) == 0:
            continue
        # error of polarity +1 when everything at or below the cut is -1:
        # positives below plus negatives above
        pos_below = np.cumsum(np.where(ys > 0, ws, 0.0))
        neg_below = np.cumsum(np.where(ys < 0, ws, 0.0))
        neg_total = neg_below[-1]
        err_plus = pos_below[change] + (neg_total - neg_below[change])
        err_minus = total - err_plus
        i = int(np.argmin(err_plus))
        j = int(np.argmin(err_minus))
        for e, k, pol in ((err_plus[i], i, 1), (err_minus[j], j, -1)):
            if e < best[0] - 1e-15:
                c = change[k]
                best = (float(e), f, 0.5 * (xs[c] + xs[c + 1]), pol)
    return best


def train(vectors, labels, n_stumps=100):
    """Discrete AdaBoost for up to ``n_stumps`` rounds.

    Stops early when the best stump's weighted error reaches 0.5 (nothing
    left to learn) or 0 (that stump alone separates the data; it is kept
    with a large finite weight).
    """
    X = np.asarray(vectors, dtype=float)
    y = np.asarray(labels)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch("vectors must be an (n, d) array with one label per row")
    if len(X) < 2 or not set(np.unique(y)) <= {-1, 1}:
        raise DegenerateInput("need at least two examples labelled +1/-1")
    if len(np.unique(y)) < 2:
        raise DegenerateInput("both labels must be present")
    y = y.astype(float)
    n = len(X)
    w = np.full(n, 1.0 / n)
    model = StumpModel(X.shape[1], [], int(n_stumps))
    for _ in range(int(n_stumps)):
        err, f, thr, pol = _best_stump(X, y, w)
        if not math.isfinite(err) or err >= 0.5 - 1e-12:
            model.stopped = "error >= 0.5"
            break
        e = max(err, ERR_FLOOR)
        alpha = 0.5 * math.log((1 - e) / e)
        model.stumps.append((int(f), float(thr), int(pol), float(alpha)))
        if err <= ERR_FLOOR:
            model.stopped = "error = 0"
            break
        h = _stump_votes(X, f, thr, pol)
        w = w * np.exp(-alpha * y * h)
        w /= w.sum()
    else:
        model.stopped = "max rounds"
    return model


def decision_function(model, vectors):
    X = np.atleast_2d(np.asarray(vectors, dtype=float))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    score = np.zeros(len(X))
    for f, t, p, a in model.stumps:
        score += a * _stump_votes(X, f, t, p)
    return score


def predict(model, vector):
    """Label (+1/-1) and score of one vector; a zero score maps to +1."""
    s = float(decision_function(model, [vector])[0])
    return (1 if s >= 0 else -1), s


def predict_many(model, vectors):
    s = decision_function(model, vectors)
    return np.where(s >= 0, 1, -1), s


def training_error_curve(model, vectors, labels):
    """Training error after each round (for inspection)."""
    X = np.asarray(vectors, dtype=float)
    y = np.asarray(labels)
    score = np.zeros(len(X))
    out = []
    for f, t, p, a in model.stumps:
        score += a * _stump_votes(X, f, t, p)
        out.append(float(np.mean(np.where(score >= 0, 1, -1) != y)))
    return out


__all__ = ["StumpModel", "decision_function", "predict", "predict_many", "train",
           "training_error_curve"]
