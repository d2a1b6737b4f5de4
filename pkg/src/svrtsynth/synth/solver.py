"""Built-in feasibility checker for small systems of linear inequalities.

Systems are ``A @ v <= b``.  Variables that never share a row are solved
independently; single-variable components reduce to interval intersection and
the rest go through Fourier-Motzkin elimination.  A feasible answer comes with
a witness point recovered by back-substitution.
"""

from __future__ import annotations

import time

import numpy as np

TOL = 1e-9
MAX_ROWS = 4000


class SolverTimeout(Exception):
    pass


def _dedupe(A, b):
    """Scale rows to unit max-coefficient and keep the tightest of parallel rows."""
    if len(A) == 0:
        return A, b
    scale = np.abs(A).max(axis=1)
    zero = scale <= TOL
    scale[zero] = 1.0
    A = A / scale[:, None]
    b = b / scale
    A = np.round(A, 12)
    keys = {}
    keep_A, keep_b = [], []
    for row, rhs, z in zip(A, b, zero):
        if z:
            keep_A.append(row)
            keep_b.append(rhs)
            continue
        k = row.tobytes()
        if k in keys:
            i = keys[k]
            keep_b[i] = min(keep_b[i], rhs)
        else:
            keys[k] = len(keep_A)
            keep_A.append(row)
            keep_b.append(rhs)
    return np.array(keep_A), np.array(keep_b)


def _components(A, n):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for row in A:
        nz = np.flatnonzero(np.abs(row) > TOL)
        for j in nz[1:]:
            ra, rb = find(nz[0]), find(j)
            if ra != rb:
                parent[rb] = ra
    groups = {}
    for j in range(n):
        groups.setdefault(find(j), []).append(j)
    return list(groups.values())


def _interval(col, b):
    lo, hi = -np.inf, np.inf
    pos = col > TOL
    neg = col < -TOL
    if pos.any():
        hi = np.min(b[pos] / col[pos])
    if neg.any():
        lo = np.max(b[neg] / col[neg])
    return lo, hi


def _pick(lo, hi):
    if lo == -np.inf and hi == np.inf:
        return 0.0
    if lo == -np.inf:
        return hi
    if hi == np.inf:
        return lo
    return 0.5 * (lo + hi)


def _fm(A, b, deadline):
    """Fourier-Motzkin on one component.  Returns a witness or None."""
    m, n = A.shape
    alive = list(range(n))
    stack = []
    while alive:
        if deadline is not None and time.perf_counter() > deadline:
            raise SolverTimeout
        best, best_score = None, None
        for j in alive:
            p = int(np.sum(A[:, j] > TOL))
            q = int(np.sum(A[:, j] < -TOL))
            score = p * q - p - q
            if best_score is None or score < best_score:
                best, best_score = j, score
        j = best
        col = A[:, j]
        P, N = col > TOL, col < -TOL
        Z = ~(P | N)
        Ap, bp = A[P] / col[P][:, None], b[P] / col[P]
        An, bn = A[N] / -col[N][:, None], b[N] / -col[N]
        stack.append((j, Ap, bp, An, bn))
        newA = (Ap[:, None, :] + An[None, :, :]).reshape(-1, n)
        newb = (bp[:, None] + bn[None, :]).reshape(-1)
        A = np.vstack([A[Z], newA])
        b = np.concatenate([b[Z], newb])
        A[:, j] = 0.0
        A, b = _dedupe(A, b)
        if len(A) and (np.abs(A) <= TOL).all(axis=1).any():
            triv = (np.abs(A) <= TOL).all(axis=1)
            if (b[triv] < -TOL).any():
                return None
            A, b = A[~triv], b[~triv]
        if len(A) > MAX_ROWS:
            raise SolverTimeout
        alive.remove(j)
    if len(b) and (b < -TOL).any():
        return None
    x = np.zeros(n)
    for j, Ap, bp, An, bn in reversed(stack):
        hi = np.min(bp - Ap @ x + Ap[:, j] * x[j]) if len(bp) else np.inf
        lo = np.max(An @ x - An[:, j] * x[j] - bn) if len(bn) else -np.inf
        if lo > hi + 1e-7:
            return None
        x[j] = _pick(lo, hi) if lo <= hi else 0.5 * (lo + hi)
    return x


def feasible(A, b, deadline=None):
    """Decide ``A @ v <= b``.  Returns ``(True, witness)`` or ``(False, None)``.

    Raises :class:`SolverTimeout` past ``deadline`` (a ``perf_counter`` value)
    or when elimination grows beyond ``MAX_ROWS`` rows.
    """
    A = np.asarray(A, dtype=float).reshape(len(b), -1)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if n == 0:
        ok = bool((b >= -TOL).all())
        return ok, (np.zeros(0) if ok else None)
    x = np.zeros(n)
    zero_rows = (np.abs(A) <= TOL).all(axis=1)
    if (b[zero_rows] < -TOL).any():
        return False, None
    A, b = A[~zero_rows], b[~zero_rows]
    for comp in _components(A, n):
        rows = (np.abs(A[:, comp]) > TOL).any(axis=1)
        sub_A, sub_b = A[rows][:, comp], b[rows]
        if len(comp) == 1:
            lo, hi = _interval(sub_A[:, 0], sub_b)
            if lo > hi + TOL:
                return False, None
            x[comp[0]] = _pick(lo, hi) if lo <= hi else 0.5 * (lo + hi)
            continue
        sub_A, sub_b = _dedupe(sub_A, sub_b)
        w = _fm(sub_A, sub_b, deadline)
        if w is None:
            return False, None
        x[comp] = w
    return True, x


def box_rows(coefs, lo, hi):
    """Rows for ``lo <= coefs @ v <= hi`` (infinite bounds are skipped)."""
    rows, rhs = [], []
    coefs = np.asarray(coefs, dtype=float)
    if hi != np.inf:
        rows.append(coefs)
        rhs.append(hi)
    if lo != -np.inf:
        rows.append(-coefs)
        rhs.append(-lo)
    return rows, rhs
