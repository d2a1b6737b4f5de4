"""Fitting a program to one parsing.

The emitted slots must match the parsed shapes one-to-one: identity-equality
pattern exactly (up to renaming), relation sets exactly, coordinates within
``eps_pos`` and scales within ``eps_scale``.  The slot-to-shape match is found
by backtracking; at each step the numeric constraints gathered so far go to
the built-in linear solver.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .dsl import LATENT_BITS, expand
from .smtlib import configured_solver, emit_constraints, run_external
from .solver import SolverTimeout, feasible

EPS_POS = 2.0
EPS_SCALE = 0.05
TIME_LIMIT = 1.0
RELAX_LIMIT = 2000   # matchings inspected when scoring violations


@dataclass
class FitResult:
    satisfiable: bool
    status: str                      # "sat", "unsat" or "unknown"
    latent_assignment: dict | None
    residual_bits: float
    violations: int
    solver_time: float
    matching: tuple | None = None    # slot i -> parsed shape matching[i]


class _System:
    """Rows over the numeric latents of one expansion."""

    def __init__(self, names):
        self.index = {n: i for i, n in enumerate(names)}
        self.n = len(names)

    def coefs(self, lin):
        v = np.zeros(self.n)
        for name, c in lin.terms.items():
            v[self.index[name]] += c
        return v

    def box(self, lin, obs, eps):
        a = self.coefs(lin)
        return [a, -a], [obs + eps - lin.const, -(obs - eps - lin.const)]


def _compatible(ex, parsing, slot, shape, assigned, id_map, id_rev):
    sid = ex.slots[slot].id
    ident = parsing.shapes[shape].identity
    if sid in id_map and id_map[sid] != ident:
        return False
    if ident in id_rev and id_rev[ident] != sid:
        return False
    for t, l in assigned.items():
        a, b = (t, slot) if t < slot else (slot, t)
        pa, pb = (l, shape) if l < shape else (shape, l)
        if ((a, b) in ex.borders) != ((pa, pb) in parsing.borders):
            return False
        if ((t, slot) in ex.contains) != ((l, shape) in parsing.contains):
            return False
        if ((slot, t) in ex.contains) != ((shape, l) in parsing.contains):
            return False
    return True


def _slot_rows(sys_, ex, slot, shape, eps_pos, eps_scale):
    s = ex.slots[slot]
    rows, rhs = [], []
    for lin, o, eps in ((s.x.lin, shape.x, eps_pos), (s.y.lin, shape.y, eps_pos),
                        (s.scale, shape.scale, eps_scale)):
        r, b = sys_.box(lin, o, eps)
        rows += r
        rhs += b
    return rows, rhs


def _residual_bits(ex, sys_, names, matching, parsing, eps_pos, eps_scale):
    """Latent encoding bits plus the slack of a least-squares fit."""
    bits = sum(LATENT_BITS[k] for k in ex.latents.values())
    rows, obs, scale = [], [], []
    for i, j in enumerate(matching):
        s, shp = ex.slots[i], parsing.shapes[j]
        for lin, o, eps in ((s.x.lin, shp.x, eps_pos), (s.y.lin, shp.y, eps_pos),
                            (s.scale, shp.scale, eps_scale)):
            rows.append(sys_.coefs(lin))
            obs.append(o - lin.const)
            scale.append(eps)
    for lin in ex.asserts:
        rows.append(sys_.coefs(lin) * 1e3)
        obs.append(-lin.const * 1e3)
        scale.append(1.0)
    if not rows:
        return bits
    A, y = np.array(rows), np.array(obs)
    if sys_.n:
        sol, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = y - A @ sol
    else:
        r = y
    return float(bits + np.sum(np.log2(1 + np.abs(r[:len(scale)]) / np.array(scale))))


def count_violations(ex, parsing, eps_pos=EPS_POS, eps_scale=EPS_SCALE, limit=RELAX_LIMIT,
                     deadline=None):
    """Approximate minimum number of unsatisfied requirements over matchings.

    Counts the cardinality gap, identity-pattern and relation mismatches and
    slots whose coordinates a least-squares relaxation cannot bring within
    tolerance; takes the minimum over up to ``limit`` slot/shape matchings
    (fewer if ``deadline`` passes first).
    """
    ns, n = len(ex.slots), len(parsing)
    gap = abs(ns - n)
    names = sorted(k for k, v in ex.latents.items() if v != "id")
    sys_ = _System(names)
    best = None
    if ns <= n:
        pairs_iter = (tuple(zip(range(ns), perm)) for perm in itertools.permutations(range(n), ns))
    else:
        pairs_iter = (tuple(zip(perm, range(n))) for perm in itertools.permutations(range(ns), n))
    for count, pairs in enumerate(pairs_iter):
        if count >= limit or (count and deadline is not None
                                  and time.perf_counter() > deadline):
            break
        v = gap
        for (i, j), (t, l) in itertools.combinations(pairs, 2):
            if (ex.slots[i].id == ex.slots[t].id) != (parsing.shapes[j].identity
                                                      == parsing.shapes[l].identity):
                v += 1
        m = dict(pairs)
        prog_b = {(min(m[a], m[b]), max(m[a], m[b])) for a, b in ex.borders if a in m and b in m}
        prog_c = {(m[a], m[b]) for a, b in ex.contains if a in m and b in m}
        inside = set(m.values())
        par_b = {e for e in parsing.borders if e[0] in inside and e[1] in inside}
        par_c = {e for e in parsing.contains if e[0] in inside and e[1] in inside}
        v += len(prog_b ^ par_b) + len(prog_c ^ par_c)
        if best is not None and v >= best:
            continue
        rows, obs, owner, tol = [], [], [], []
        for i, j in pairs:
            s, shp = ex.slots[i], parsing.shapes[j]
            if not (s.x.linear and s.y.linear):
                continue
            for lin, o, eps in ((s.x.lin, shp.x, eps_pos), (s.y.lin, shp.y, eps_pos),
                                (s.scale, shp.scale, eps_scale)):
                rows.append(sys_.coefs(lin))
                obs.append(o - lin.const)
                owner.append(i)
                tol.append(eps)
        if rows:
            A, y = np.array(rows), np.array(obs)
            r = y - A @ np.linalg.lstsq(A, y, rcond=None)[0] if sys_.n else y
            bad = {owner[q] for q in range(len(r)) if abs(r[q]) > tol[q] + 1e-9}
            v += len(bad)
        if best is None or v < best:
            best = v
        if best == gap:
            break
    return int(best if best is not None else gap)


def fit(p, parsing, time_limit=TIME_LIMIT, eps_pos=EPS_POS, eps_scale=EPS_SCALE,
        solver=None, score_violations=True):
    """Check whether program ``p`` can emit ``parsing``.

    ``solver`` is an external command (defaults to ``$SVRT_SOLVER``); it is
    only consulted for non-linear programs.  A timeout yields status
    ``"unknown"``, treated as unsatisfiable, with ``solver_time = time_limit``.
    With ``score_violations=False`` a failed fit reports one violation instead
    of scoring the relaxation (the search only needs the verdict).
    """
    if time_limit <= 0:
        raise ValueError("time_limit must be positive")
    t0 = time.perf_counter()
    deadline = t0 + time_limit
    ex = expand(p)
    if ex.accepts_all:
        return FitResult(True, "sat", {}, 0.0, 0, time.perf_counter() - t0)

    def done(status, assignment=None, matching=None, residual=0.0, timed_out=False):
        elapsed = time_limit if timed_out else time.perf_counter() - t0
        if status == "sat":
            return FitResult(True, status, assignment, residual, 0, elapsed, matching)
        v = 1
        if score_violations:
            # scoring the relaxation may use what is left of the limit plus 5%
            v = max(1, count_violations(ex, parsing, eps_pos, eps_scale,
                                        deadline=t0 + 1.05 * time_limit))
        return FitResult(False, status, None, math.inf, v, elapsed)

    if len(ex.slots) != len(parsing):
        return done("unsat")
    if not ex.linear:
        cmd = solver or configured_solver()
        if not cmd:
            return done("unknown")
        status = run_external(emit_constraints(p, [parsing], eps_pos, eps_scale), cmd,
                              timeout=time_limit)
        if status == "sat":
            bits = sum(LATENT_BITS[k] for k in ex.latents.values())
            return done("sat", {}, None, bits)
        return done(status, timed_out=time.perf_counter() - t0 >= time_limit)

    names = sorted(k for k, v in ex.latents.items() if v != "id")
    sys_ = _System(names)
    base_rows, base_rhs = [], []
    for lin in ex.asserts:
        a = sys_.coefs(lin)
        base_rows += [a, -a]
        base_rhs += [-lin.const, lin.const]
    n = len(parsing)
    slot_rows = {}

    def rows_for(i, j):
        key = (i, j)
        if key not in slot_rows:
            slot_rows[key] = _slot_rows(sys_, ex, i, parsing.shapes[j], eps_pos, eps_scale)
        return slot_rows[key]

    order = list(range(n))
    assigned, id_map, id_rev = {}, {}, {}
    used = [False] * n
    seen_vars = set()
    result = {}

    def consistent(rows, rhs):
        if not rows:
            return True, np.zeros(sys_.n)
        ok, w = feasible(np.array(rows), np.array(rhs), deadline)
        return ok, w

    def search(depth, rows, rhs):
        if time.perf_counter() > deadline:
            raise SolverTimeout
        if depth == n:
            ok, w = consistent(rows, rhs)
            if ok:
                result["w"] = w
                return True
            return False
        i = order[depth]
        lins = (ex.slots[i].x.lin, ex.slots[i].y.lin, ex.slots[i].scale)
        slot_vars = set().union(*(l.terms for l in lins))
        # a slot whose three coordinates are distinct fresh latents cannot conflict
        fresh = (not (slot_vars & seen_vars) and all(len(l.terms) == 1 for l in lins)
                 and len(slot_vars) == 3 and not ex.asserts)
        for j in range(n):
            if used[j] or not _compatible(ex, parsing, i, j, assigned, id_map, id_rev):
                continue
            r, b = rows_for(i, j)
            new_rows, new_rhs = rows + r, rhs + b
            if not fresh:
                ok, _ = consistent(new_rows, new_rhs)
                if not ok:
                    continue
            sid, ident = ex.slots[i].id, parsing.shapes[j].identity
            added = sid not in id_map
            assigned[i] = j
            used[j] = True
            if added:
                id_map[sid] = ident
                id_rev[ident] = sid
            before = set(seen_vars)
            seen_vars.update(slot_vars)
            if search(depth + 1, new_rows, new_rhs):
                return True
            seen_vars.clear()
            seen_vars.update(before)
            del assigned[i]
            used[j] = False
            if added:
                del id_map[sid]
                del id_rev[ident]
        return False

    try:
        found = search(0, list(base_rows), list(base_rhs))
    except SolverTimeout:
        return done("unknown", timed_out=True)
    if not found:
        return done("unsat")
    matching = tuple(assigned[i] for i in range(n))
    w = result["w"]
    assignment = {name: float(w[k]) for k, name in enumerate(names)}
    for sid, ident in id_map.items():
        if ex.latents.get(sid) == "id":
            assignment[sid] = int(ident)
    residual = _residual_bits(ex, sys_, names, matching, parsing, eps_pos, eps_scale)
    return done("sat", assignment, matching, residual)
