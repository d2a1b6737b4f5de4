"""Random fit instances shared by the solver cross-checks."""

import itertools

import numpy as np

from svrtsynth.parsing import Parsing, ShapeRecord
from svrtsynth.synth.dsl import Add, AssertLinear, Draw, Neg, Num, Program, Relate, Sym


def random_linear_instance(rng, max_slots=3):
    """A small linear program and a parsing that it may or may not fit.

    The parsing is drawn from the program at random latent values and then
    perturbed, so both outcomes are common and many sit near the tolerance.
    """
    n = int(rng.integers(1, max_slots + 1))
    consts, lats, stmts = [], [], []
    ids = []
    for i in range(n):
        if ids and rng.random() < 0.5:
            ids.append(ids[int(rng.integers(len(ids)))])
        else:
            name = f"I{i}"
            if rng.random() < 0.5:
                lats.append((name, "id"))
            else:
                consts.append((name, float(i)))
            ids.append(name)
    values = {}
    exprs = []
    for i in range(n):
        slot = []
        for axis, kind, lo, hi in (("X", "x", 10, 118), ("Y", "y", 10, 118), ("S", "scale", 4, 20)):
            r = rng.random()
            if r < 0.4 or i == 0:
                name = f"{axis}{i}"
                lats.append((name, kind))
                values[name] = float(rng.uniform(lo, hi))
                slot.append(Sym(name))
            elif r < 0.7:
                prev = f"{axis}{int(rng.integers(0, i))}"
                if prev not in values:
                    name = f"{axis}{i}"
                    lats.append((name, kind))
                    values[name] = float(rng.uniform(lo, hi))
                    slot.append(Sym(name))
                else:
                    off = float(rng.integers(-30, 31)) if kind != "scale" else 0.0
                    slot.append(Add(Sym(prev), Num(off)) if off else Sym(prev))
            else:
                name = f"K{axis}{i}"
                consts.append((name, float(rng.integers(lo, hi))))
                slot.append(Sym(name))
        exprs.append(slot)
        stmts.append(Draw(Sym(ids[i]), *slot))
    if n >= 2 and rng.random() < 0.3:
        stmts.append(Relate("borders", 0, 1))
    xs = [v for v in values if v.startswith("X")]
    if len(xs) >= 2 and rng.random() < 0.3:
        a, b = xs[:2]
        stmts.append(AssertLinear(Add(Sym(a), Neg(Sym(b)))))
        values[b] = values[a]
    p = Program(tuple(consts), tuple(lats), tuple(stmts))
    env = dict(consts) | values
    uniq = list(dict.fromkeys(ids))
    labels = [uniq.index(i) for i in ids]
    if rng.random() < 0.1:
        labels[int(rng.integers(n))] = n
    shapes = []
    for i, slot in enumerate(exprs):
        vals = [evaluate(e, env) for e in slot]
        jitter = rng.normal(0, 2.0, 3) * np.array([1, 1, 0.03])
        if rng.random() < 0.3:
            jitter[int(rng.integers(0, 3))] += rng.choice([-1, 1]) * rng.uniform(2, 12)
        shapes.append(ShapeRecord(vals[0] + jitter[0], vals[1] + jitter[1],
                                  labels[i], vals[2] + jitter[2]))
    borders = set()
    if any(isinstance(s, Relate) for s in stmts) != (rng.random() < 0.1):
        if n >= 2:
            borders.add((0, 1))
    perm = rng.permutation(n)
    inv = {int(k): i for i, k in enumerate(perm)}
    shapes = [shapes[int(k)] for k in perm]
    borders = {tuple(sorted((inv[a], inv[b]))) for a, b in borders}
    if rng.random() < 0.1 and n >= 2:
        shapes = shapes[:-1]
        borders = {e for e in borders if max(e) < len(shapes)}
    return p, Parsing(tuple(shapes), borders)


def evaluate(e, env):
    """Direct evaluation of a linear expression tree, independent of the expander."""
    if isinstance(e, Sym):
        return env[e.name]
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, Add):
        return evaluate(e.left, env) + evaluate(e.right, env)
    raise TypeError(e)


def _names(e):
    if isinstance(e, Sym):
        return {e.name}
    if isinstance(e, Neg):
        return _names(e.arg)
    if isinstance(e, Add):
        return _names(e.left) | _names(e.right)
    return set()


def grid_fit(p, parsing, eps_pos, eps_scale, step=1.0):
    """Brute force: try every latent value on a grid and every matching.

    Only for programs of Draw statements without relations, asserts or
    identity latents beyond one shared id.  Candidate grid values for each
    latent are those that put some slot within tolerance of some shape.
    """
    draws = [s for s in p.statements if isinstance(s, Draw)]
    if len(draws) != len(parsing):
        return False
    env0 = dict(p.constants)
    lats = [n for n, k in p.latents if k != "id"]
    cands = {}
    for name in lats:
        vals = set()
        for d in draws:
            for e, attr in ((d.x, "x"), (d.y, "y")):
                if _names(e) != {name}:
                    continue
                # e = a * name + c with a = +-1
                c = evaluate(e, env0 | {name: 0.0})
                a = evaluate(e, env0 | {name: 1.0}) - c
                if a == 0:
                    continue
                for s in parsing.shapes:
                    centre = (getattr(s, attr) - c) / a
                    vals.update(np.arange(np.ceil(centre - eps_pos / step) * step,
                                          centre + eps_pos + 1e-9, step))
        cands[name] = sorted(vals)
    for combo in itertools.product(*(cands[n] for n in lats)):
        env = env0 | dict(zip(lats, combo))
        for perm in itertools.permutations(range(len(draws))):
            ok = True
            for d, j in zip(draws, perm):
                s = parsing.shapes[j]
                if (abs(evaluate(d.x, env) - s.x) > eps_pos + 1e-9
                        or abs(evaluate(d.y, env) - s.y) > eps_pos + 1e-9
                        or abs(evaluate(d.scale, env) - s.scale) > eps_scale + 1e-9):
                    ok = False
                    break
            if ok:
                return True
    return False


def random_grid_instance(rng):
    """Integer instance with <= 3 coordinate latents in difference form.

    Every slot coordinate is a latent, latent + c, c - latent, a constant or
    a difference of two latents plus c; with integer data and an integer
    tolerance the constraint matrix is totally unimodular, so a real solution
    exists exactly when a 1-pixel grid solution does.
    """
    n_slots = int(rng.integers(1, 4))
    n_lat = int(rng.integers(1, 4))
    lats = [f"L{k}" for k in range(n_lat)]
    truth = {l: int(rng.integers(20, 100)) for l in lats}
    unused = list(lats)
    scales = [float(rng.integers(5, 15)) for _ in range(n_slots)]
    consts = [("J", 0.0)] + [(f"S{i}", s) for i, s in enumerate(scales)]
    stmts, true_xy = [], []
    for i in range(n_slots):
        coord = []
        for _ in range(2):
            if unused:
                l = unused.pop()
                form = int(rng.integers(0, 3))
            else:
                l = lats[int(rng.integers(n_lat))]
                form = int(rng.integers(0, 5))
            c = float(rng.integers(-20, 21))
            if form == 0:
                e, v = Sym(l), truth[l]
            elif form == 1:
                e, v = Add(Sym(l), Num(c)), truth[l] + c
            elif form == 2:
                e, v = Add(Num(c + 128), Neg(Sym(l))), c + 128 - truth[l]
            elif form == 3:
                used = [x for x in lats if x not in unused]
                m = used[int(rng.integers(len(used)))]
                e, v = Add(Add(Sym(l), Neg(Sym(m))), Num(c + 60)), truth[l] - truth[m] + c + 60
            else:
                e, v = Num(c + 64), c + 64
            coord.append(e)
            true_xy.append(v)
        stmts.append(Draw(Sym("J"), coord[0], coord[1], Sym(f"S{i}")))
    p = Program(tuple(consts), tuple((l, "x") for l in lats if l not in unused), tuple(stmts))
    shapes = []
    for i in range(n_slots):
        x, y = true_xy[2 * i], true_xy[2 * i + 1]
        dx, dy = (int(v) for v in rng.integers(-4, 5, 2))
        shapes.append(ShapeRecord(float(x + dx), float(y + dy), 0, scales[i]))
    return p, Parsing(tuple(shapes[k] for k in rng.permutation(n_slots)))
