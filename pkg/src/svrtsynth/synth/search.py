"""Program search: least-cost program that fits every training parsing.

The first training parsing fixes the sketch: one slot per shape, the identity
partition and the relation set.  The base program gives every slot its own
coordinate and scale latents.  Candidate refinements replace a latent by an
expression of other latents and shared constants (ties, offsets, mirrors,
midpoints, parallelograms, right-angle turns, constant values), or replace a
group of positions by ``Move`` statements sharing one distance latent.  Each
candidate is screened numerically on every training parsing; combinations are
then ranked by branch and bound on the bits they save and verified with
:func:`fit`.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoProgramFound
from . import dsl
from .dsl import Add, Draw, Index, Move, Mul, Neg, Program, Relate, Repeat, Sym
from .fit import EPS_POS, EPS_SCALE, _compatible, fit
from .smtlib import configured_solver

MAX_MATCHINGS = 720
MAX_POPS = 20000
LAYER_BITS = 4.0
# tolerances for proposing a relation; far tighter than the fit tolerances so
# that only regularities that hold almost exactly become candidates
SCREEN_POS = 0.05
SCREEN_SCALE = 0.005


@dataclass
class Budget:
    max_cost_bits: float = 1024.0
    per_fit_time_limit: float = 1.0
    wall_clock: float = 60.0
    max_verifications: int = 300

    def scaled(self, factor):
        return Budget(self.max_cost_bits, self.per_fit_time_limit * factor,
                      self.wall_clock * factor, int(self.max_verifications * factor))


@dataclass
class SearchLog:
    """Verified candidates in the order tried: (cost_bits, layer, fits, summary)."""
    frontier: list = field(default_factory=list)
    candidates: int = 0
    pops: int = 0
    stopped: str = ""

    def record(self, program, fits):
        c = program.cost_bits
        self.frontier.append((c, int(c // LAYER_BITS), fits, _summary(program)))


def _summary(p):
    return " ".join(dsl.stmt_sexpr(s, "").strip() for s in p.statements)


@dataclass(frozen=True)
class Refinement:
    key: str
    targets: frozenset
    refs: frozenset
    exprs: tuple = ()            # ((target latent, expression with Sym("$C")), ...)
    const: float | None = None
    move: tuple | None = None    # ((source slot, target slot), ...) sharing one distance
    masks: tuple | None = field(default=None, compare=False, hash=False, repr=False)


# -- structure -------------------------------------------------------------------------

def structural_matchings(ex, parsing, cap=MAX_MATCHINGS):
    """Slot-to-shape matchings consistent with identities and relations."""
    n = len(parsing)
    if len(ex.slots) != n:
        return []
    out = []
    assigned, id_map, id_rev = {}, {}, {}
    used = [False] * n

    def rec(i):
        if len(out) >= cap:
            return
        if i == n:
            out.append(tuple(assigned[k] for k in range(n)))
            return
        for j in range(n):
            if used[j] or not _compatible(ex, parsing, i, j, assigned, id_map, id_rev):
                continue
            sid, ident = ex.slots[i].id, parsing.shapes[j].identity
            added = sid not in id_map
            assigned[i], used[j] = j, True
            if added:
                id_map[sid], id_rev[ident] = ident, sid
            rec(i + 1)
            del assigned[i]
            used[j] = False
            if added:
                del id_map[sid], id_rev[ident]

    rec(0)
    return out


def _observations(parsing):
    return np.array([[s.x, s.y, s.scale] for s in parsing.shapes], dtype=float).reshape(-1, 3)


# -- constants --------------------------------------------------------------------------

def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(i) for i in out]


def _intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo <= hi:
                out.append((lo, hi))
    return _merge(out)


def simplest_in(lo, hi, max_power=10):
    """Number in [lo, hi] with the fewest binary digits, then nearest zero."""
    for k in range(max_power + 1):
        den = 1 << k
        a = math.ceil(lo * den - 1e-9)
        b = math.floor(hi * den + 1e-9)
        if a <= b:
            v = 0 if a <= 0 <= b else (a if a > 0 else b)
            return v / den
    return 0.5 * (lo + hi)


def _pick_constant(intervals):
    best = None
    for lo, hi in intervals:
        v = simplest_in(lo, hi)
        key = (dsl.number_bits(v), abs(v))
        if best is None or key < best[0]:
            best = (key, v)
    return None if best is None else best[1]


# -- candidate generation -------------------------------------------------------------------

_COORD = ("X", "Y", "S")


def _name(c, j):
    return f"{_COORD[c]}{j}"


class _Screen:
    """Numeric screening of candidate relations over all matchings of all images."""

    def __init__(self, aligned, eps_pos, eps_scale):
        self.aligned = aligned   # per image: array (matchings, slots, 3)
        self.eps = (eps_pos, eps_pos, eps_scale)

    def holds(self, fn, tol):
        """Per-image masks of the matchings where ``|fn| <= tol``, or None if one is empty."""
        masks = []
        for O in self.aligned:
            m = np.abs(fn(O)) <= tol + 1e-9
            if not m.any():
                return None
            masks.append(m)
        return tuple(masks)

    def constant(self, fn, width):
        """Simplest constant within ``width`` of ``fn`` on every image, with its masks."""
        common = None
        for O in self.aligned:
            q = fn(O)
            u = _merge([(v - width, v + width) for v in np.unique(np.round(q, 9))])
            common = u if common is None else _intersect(common, u)
            if not common:
                return None
        v = _pick_constant(common)
        return None if v is None else (v, self.holds(lambda O: fn(O) - v, width))


def candidate_refinements(n, screen):
    """All single refinements that pass the numeric screen on every image.

    A refinement of slot ``j`` only references slots with smaller indices, so
    any conflict-free set of them substitutes without cycles.
    """
    out = []
    e_pos, _, e_s = screen.eps

    def add(key, target, expr, refs, masks):
        if masks is not None:
            out.append(Refinement(key, frozenset([target]), frozenset(refs),
                                  ((target, expr),), None, None, masks))

    def add_const(key, target, expr, refs, found, nonzero=False):
        if found is None or found[1] is None or (nonzero and found[0] == 0):
            return
        v, masks = found
        out.append(Refinement(key, frozenset([target]), frozenset(refs),
                              ((target, expr),), v, None, masks))

    for j in range(n):
        for c in (0, 1):
            t = _name(c, j)
            add_const(f"{t}=const", t, Sym("$C"), (),
                      screen.constant(lambda O, j=j, c=c: O[:, j, c], e_pos))
            others = list(range(j))
            for i in others:
                ri = _name(c, i)
                add(f"{t}={ri}", t, Sym(ri), (ri,),
                    screen.holds(lambda O, i=i: O[:, j, c] - O[:, i, c], 2 * e_pos))
                add_const(f"{t}={ri}+C", t, Add(Sym(ri), Sym("$C")), (ri,),
                          screen.constant(lambda O, i=i: O[:, j, c] - O[:, i, c], 2 * e_pos),
                          nonzero=True)
                add_const(f"{t}=C-{ri}", t, Add(Sym("$C"), Neg(Sym(ri))), (ri,),
                          screen.constant(lambda O, i=i: O[:, j, c] + O[:, i, c], 2 * e_pos))
            for i, h in itertools.combinations(others, 2):
                ri, rh = _name(c, i), _name(c, h)
                add(f"{t}=mid({ri},{rh})", t, Mul(0.5, Add(Sym(ri), Sym(rh))), (ri, rh),
                    screen.holds(lambda O, i=i, h=h: O[:, j, c] - 0.5 * (O[:, i, c] + O[:, h, c]),
                                 2 * e_pos))
            for i, h in itertools.permutations(others, 2):
                ri, rh = _name(c, i), _name(c, h)
                add(f"{t}=2{rh}-{ri}", t, Add(Mul(2.0, Sym(rh)), Neg(Sym(ri))), (ri, rh),
                    screen.holds(lambda O, i=i, h=h: O[:, j, c] - (2 * O[:, h, c] - O[:, i, c]),
                                 4 * e_pos))
            for (h, g), i in itertools.product(itertools.combinations(others, 2), others):
                if i in (h, g):
                    continue
                rh, rg, ri = _name(c, h), _name(c, g), _name(c, i)
                add(f"{t}={rh}+{rg}-{ri}", t, Add(Add(Sym(rh), Sym(rg)), Neg(Sym(ri))),
                    (rh, rg, ri),
                    screen.holds(lambda O, h=h, g=g, i=i:
                                 O[:, j, c] - (O[:, h, c] + O[:, g, c] - O[:, i, c]), 4 * e_pos))
            # quarter turn: p_j = p_a + R(+-90)(p_b - p_a)
            oc = 1 - c
            for a, b in itertools.permutations(others, 2):
                for sign in (1.0, -1.0):
                    # x_j = x_a - sign*(y_b - y_a) ; y_j = y_a + sign*(x_b - x_a)
                    s = -sign if c == 0 else sign

                    def fn(O, a=a, b=b, s=s):
                        return O[:, j, c] - (O[:, a, c] + s * (O[:, b, oc] - O[:, a, oc]))

                    ra, rb, rao = _name(c, a), _name(oc, b), _name(oc, a)
                    diff = Add(Sym(rb), Neg(Sym(rao))) if s > 0 else Add(Sym(rao), Neg(Sym(rb)))
                    add(f"{t}={ra}{'+' if s > 0 else '-'}({rb}-{rao})", t,
                        Add(Sym(ra), diff), (ra, rb, rao), screen.holds(fn, 4 * e_pos))
        t = _name(2, j)
        add_const(f"{t}=const", t, Sym("$C"), (),
                  screen.constant(lambda O, j=j: O[:, j, 2], e_s))
        for i in range(j):
            ri = _name(2, i)
            add(f"{t}={ri}", t, Sym(ri), (ri,),
                screen.holds(lambda O, i=i: O[:, j, 2] - O[:, i, 2], 2 * e_s))
            add(f"{t}=-{ri}", t, Neg(Sym(ri)), (ri,),
                screen.holds(lambda O, i=i: O[:, j, 2] + O[:, i, 2], 2 * e_s))
    return out


def _dist(O, a, b):
    return np.hypot(O[:, a, 0] - O[:, b, 0], O[:, a, 1] - O[:, b, 1])


def move_refinements(n, screen):
    """Equal-distance groups, expressed with Moves sharing one distance latent."""
    out = []
    tol = 2 * screen.eps[0]
    for r in range(n):
        others = [i for i in range(n) if i != r]
        for size in (3, 2):
            for group in itertools.combinations(others, size):
                def spread(O, group=group):
                    d = np.stack([_dist(O, r, a) for a in group])
                    return d.max(axis=0) - d.min(axis=0)
                masks = screen.holds(spread, tol)
                if masks is not None:
                    out.append(_move_ref(tuple((r, a) for a in group), masks))
    for (i, a), (h, b) in itertools.combinations(itertools.permutations(range(n), 2), 2):
        if len({i, a, h, b}) < 4 or i > h:
            continue
        masks = screen.holds(lambda O, i=i, a=a, h=h, b=b: _dist(O, i, a) - _dist(O, h, b), tol)
        if masks is not None:
            out.append(_move_ref(((i, a), (h, b)), masks))
    return out


def _move_ref(pairs, masks=None):
    targets = frozenset(itertools.chain.from_iterable((_name(0, a), _name(1, a)) for _, a in pairs))
    key = "equidistant(" + ",".join(f"{s}->{t}" for s, t in pairs) + ")"
    return Refinement(key, targets, frozenset(), move=pairs, masks=masks)


# -- program assembly ------------------------------------------------------------------------

@dataclass
class Sketch:
    n: int
    ids: tuple            # identity latent name per slot
    id_names: tuple       # distinct identity latents in order
    borders: tuple
    contains: tuple

    @classmethod
    def from_parsing(cls, p):
        order = {}
        ids = []
        for s in p.shapes:
            order.setdefault(s.identity, f"I{len(order)}")
            ids.append(order[s.identity])
        return cls(len(p), tuple(ids), tuple(order.values()),
                   tuple(sorted(p.borders)), tuple(sorted(p.contains)))


def build_program(sketch, chosen):
    """Assemble a program from a sketch and a conflict-free set of refinements."""
    n = sketch.n
    subst, consts = {}, []
    moves = {}
    for ref in chosen:
        if ref.move is not None:
            moves[ref.key] = ref
            continue
        mapping = {}
        if ref.const is not None:
            cname = f"C{len(consts)}"
            consts.append((cname, float(ref.const)))
            mapping["$C"] = Sym(cname)
        for target, expr in ref.exprs:
            subst[target] = dsl.substitute(expr, mapping)
    removed = set(subst)
    move_of = {}
    move_latents = []
    for k, ref in enumerate(sorted(moves.values(), key=lambda r: r.key)):
        dname = f"D{k}"
        move_latents.append((dname, "dist"))
        for src, tgt in ref.move:
            aname = f"A{tgt}"
            move_latents.append((aname, "angle"))
            move_of[tgt] = (src, dname, aname)
        removed |= ref.targets
    latents = [(i, "id") for i in sketch.id_names]
    for j in range(n):
        for c, kind in ((0, "x"), (1, "y"), (2, "scale")):
            if _name(c, j) not in removed:
                latents.append((_name(c, j), kind))
    latents += move_latents

    def expr(c, j):
        name = _name(c, j)
        return subst.get(name, Sym(name))

    # emission order: a Move target comes after its source
    order, placed = [], set()
    pending = list(range(n))
    while pending:
        for j in pending:
            if j not in move_of or move_of[j][0] in placed:
                order.append(j)
                placed.add(j)
                pending.remove(j)
                break
        else:
            raise ValueError("cyclic Move dependencies")
    pos = {j: k for k, j in enumerate(order)}
    stmts = []
    for j in order:
        if j in move_of:
            src, dname, aname = move_of[j]
            stmts.append(Move(pos[src], Sym(dname), Sym(aname), Sym(sketch.ids[j]), expr(2, j)))
        else:
            stmts.append(Draw(Sym(sketch.ids[j]), expr(0, j), expr(1, j), expr(2, j)))
    for a, b in sketch.borders:
        pa, pb = sorted((pos[a], pos[b]))
        stmts.append(Relate("borders", pa, pb))
    for a, b in sketch.contains:
        stmts.append(Relate("contains", pos[a], pos[b]))
    rel = sorted((s for s in stmts if isinstance(s, Relate)), key=lambda r: (r.kind, r.a, r.b))
    body = [s for s in stmts if not isinstance(s, Relate)]
    return Program(tuple(consts), tuple(latents), tuple(body + rel))


# -- repeat compression -------------------------------------------------------------------------

def _lin(p, e):
    return dsl.to_lin(e, p.constant_map(), p.latent_kinds(), {})


def compress_repeats(p):
    """Fold runs of Draws in arithmetic progression into ``Repeat`` loops when cheaper."""
    stmts = list(p.statements)
    out, k = [], 0
    while k < len(stmts):
        s = stmts[k]
        best = None
        if isinstance(s, Draw):
            run = [s]
            for t in stmts[k + 1:k + dsl.MAX_REPEAT]:
                if not (isinstance(t, Draw) and t.id == s.id and t.scale == s.scale):
                    break
                run.append(t)
            for m in range(len(run), 1, -1):
                loop = _as_loop(p, run[:m])
                if loop is not None and dsl.statement_cost(loop) < sum(
                        dsl.statement_cost(r) for r in run[:m]):
                    best = (loop, m)
                    break
        if best:
            out.append(best[0])
            k += best[1]
        else:
            out.append(s)
            k += 1
    return Program(p.constants, p.latents, tuple(out), p.cost_override)


def _as_loop(p, run):
    exprs = []
    for attr in ("x", "y"):
        lins = [_lin(p, getattr(d, attr)) for d in run]
        step = lins[1] - lins[0]
        if any(lins[m] != lins[0] + step * m for m in range(len(lins))):
            return None
        e0, e1 = getattr(run[0], attr), getattr(run[1], attr)
        if step == dsl.Lin():
            exprs.append(e0)
        else:
            exprs.append(Add(e0, Mul(Index("k"), Add(e1, Neg(e0)))))
    return Repeat(len(run), (Draw(run[0].id, exprs[0], exprs[1], run[0].scale),), "k")


# -- search -----------------------------------------------------------------------------------

def _fits_all(program, parsings, limit, eps_pos, eps_scale):
    for q in parsings:
        r = fit(program, q, limit, eps_pos, eps_scale, score_violations=False)
        if not r.satisfiable:
            return False
    return True


def _slots_of(ref):
    if ref.move is None:
        return set(), set()
    return {src for src, _ in ref.move}, {tgt for _, tgt in ref.move}


def _valid(chosen):
    """Targets disjoint, nothing references a replaced latent, Moves do not chain."""
    targets, sources, moved = set(), set(), set()
    for r in chosen:
        if targets & r.targets:
            return False
        targets |= r.targets
        src, tgt = _slots_of(r)
        sources |= src
        moved |= tgt
    return not (sources & moved) and not any(r.refs & targets for r in chosen)


class _BranchAndBound:
    """Highest-saving set of refinements, one option per target set.

    A partial choice is pruned when its saving plus the best remaining
    savings cannot beat the incumbent, when it is structurally invalid, or
    when no single slot-to-shape matching of some training image satisfies
    all of its refinements at once.  Rejected complete choices (``nogoods``)
    are skipped so repeated calls walk down the ranking.
    """

    def __init__(self, dims, saving, n_images, node_limit):
        self.dims = dims
        self.saving = saving
        self.n_images = n_images
        self.node_limit = node_limit
        self.nodes = 0
        best = [max(saving[r.key] for r in opts) for opts in dims]
        self.bound = np.concatenate([np.cumsum(best[::-1])[::-1], [0.0]])

    def best(self, nogoods, floor=0.0):
        self.found, self.found_saving = None, floor
        self.nodes = 0
        self._walk(0, [], 0.0, None, set(), set(), set(), set(), nogoods)
        return self.found

    def _walk(self, d, chosen, gain, masks, targets, refs, sources, moved, nogoods):
        self.nodes += 1
        if self.nodes > self.node_limit:
            return
        if gain + self.bound[d] <= self.found_saving + 1e-9:
            return
        if d == len(self.dims):
            if frozenset(r.key for r in chosen) not in nogoods:
                self.found, self.found_saving = list(chosen), gain
            return
        for r in self.dims[d]:
            if r.targets & targets or r.targets & refs or r.refs & targets:
                continue
            src, tgt = _slots_of(r)
            if src & moved or tgt & sources:
                continue
            joint = r.masks if masks is None else tuple(m & o for m, o in zip(masks, r.masks))
            if not all(m.any() for m in joint):
                continue
            chosen.append(r)
            self._walk(d + 1, chosen, gain + self.saving[r.key], joint, targets | r.targets,
                       refs | r.refs, sources | src, moved | tgt, nogoods)
            chosen.pop()
        self._walk(d + 1, chosen, gain, masks, targets, refs, sources, moved, nogoods)


def synthesize(parsings, budget=None, eps_pos=EPS_POS, eps_scale=EPS_SCALE, log=None,
               screen_pos=SCREEN_POS, screen_scale=SCREEN_SCALE):
    """Least-cost program (within budget) fitting every training parsing.

    Candidate relations are proposed when they hold within ``screen_pos`` /
    ``screen_scale`` on every training parsing; programs are verified with
    the fit tolerances ``eps_pos`` / ``eps_scale``.

    Raises :class:`NoProgramFound` when the parsings do not share one sketch
    (shape count, identity pattern, relations) or the base program exceeds
    ``budget.max_cost_bits``.
    """
    parsings = list(parsings)
    if not parsings:
        raise ValueError("synthesize needs at least one parsing")
    budget = budget or Budget()
    log = log if log is not None else SearchLog()
    t0 = time.perf_counter()
    sketch = Sketch.from_parsing(parsings[0])
    base = build_program(sketch, [])
    if base.cost_bits > budget.max_cost_bits:
        log.stopped = "base over budget"
        raise NoProgramFound(f"base program costs {base.cost_bits} bits")
    ex = dsl.expand(base)
    aligned = []
    for q in parsings:
        ms = structural_matchings(ex, q)
        if not ms:
            log.stopped = "sketch mismatch"
            raise NoProgramFound("training parsings do not share one sketch")
        O = _observations(q)
        aligned.append(np.stack([O[list(m)] for m in ms]))
    screen = _Screen(aligned, screen_pos, screen_scale)
    limit = budget.per_fit_time_limit
    if not _fits_all(base, parsings, limit, eps_pos, eps_scale):
        log.record(base, False)
        raise NoProgramFound("base program does not fit the training parsings")
    log.record(base, True)
    best = base

    cands = candidate_refinements(sketch.n, screen)
    if configured_solver():
        # Moves with latent angles are only checkable by an external solver
        cands += move_refinements(sketch.n, screen)
    log.candidates = len(cands)
    base_cost = base.cost_bits
    saving = {r.key: base_cost - build_program(sketch, [r]).cost_bits for r in cands}
    cands = [r for r in cands if saving[r.key] > 0]
    if not cands:
        log.stopped = "optimal"
        return compress_repeats(best)
    # one dimension per target set, richest first; options by decreasing saving
    dims = {}
    for r in cands:
        dims.setdefault(r.targets, []).append(r)
    dim_list = [sorted(opts, key=lambda r: (-saving[r.key], r.key)) for opts in dims.values()]
    dim_list.sort(key=lambda opts: (-saving[opts[0].key], sorted(opts[0].targets)))
    bnb = _BranchAndBound(dim_list, saving, len(parsings), MAX_POPS)
    nogoods = set()
    verified = 0
    floor = 0.0

    def verify(chosen):
        nonlocal verified
        prog = build_program(sketch, chosen)
        if prog.cost_bits > budget.max_cost_bits:
            return None
        verified += 1
        ok = _fits_all(prog, parsings, limit, eps_pos, eps_scale)
        log.record(prog, ok)
        return prog if ok else None

    def out_of_time():
        if time.perf_counter() - t0 > budget.wall_clock:
            log.stopped = "wall clock"
        elif verified >= budget.max_verifications:
            log.stopped = "verification limit"
        else:
            return False
        return True

    while not out_of_time():
        chosen = bnb.best(nogoods, floor)
        log.pops += bnb.nodes
        if chosen is None:
            log.stopped = "pop limit" if bnb.nodes > MAX_POPS else "optimal"
            break
        nogoods.add(frozenset(r.key for r in chosen))
        prog = verify(chosen)
        if prog is not None:
            best = prog
            log.stopped = "optimal"
            break
        # repair: keep the refinements that still fit when added in order of saving
        kept = []
        for r in sorted(chosen, key=lambda r: -saving[r.key]):
            if out_of_time():
                break
            prog = verify(kept + [r])
            if prog is not None:
                kept.append(r)
                if prog.cost_bits < best.cost_bits:
                    best = prog
        floor = max(floor, base_cost - best.cost_bits)
    return compress_repeats(best)


__all__ = ["Budget", "Refinement", "SearchLog", "Sketch", "build_program",
           "candidate_refinements", "compress_repeats", "move_refinements",
           "simplest_in", "structural_matchings", "synthesize"]
