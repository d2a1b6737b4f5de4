"""The 23 SVRT problems: generators, rule oracles, (SS, LR) types, datasets.

Each problem pairs a constructive generator for both categories with a rule
oracle that reads the ground truth back.  Generators only build layouts; the
oracles recompute the rule from instance geometry and declared relations, so
the sweep ``rule_oracle(generate_example(...)) == category`` is a genuine
consistency check rather than a tautology.

Size bands (outer radius in pixels) and margins are declared constants:
"similar size" means an absolute scale ratio in [0.9, 1.1]; "different size"
means a ratio of at least 1.5.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import contours as cg
from .contours import Aligned, Borders, Contains, Equidistant
from .errors import AmbiguousRule, PlacementExhausted, UnknownProblem
from .rng import child_seed, derive_seed, make_rng

REGENERATIONS = 8
SIMILAR = (0.9, 1.1)
DIFFERENT = 1.5
EQUI_TOL = 0.5

NORMAL = (9.0, 14.0)
CROWD = (7.0, 10.5)  # five or six shapes
SMALL = (5.0, 8.0)
LARGE = (16.0, 22.0)
OUTER = (34.0, 46.0)
INNER = (5.0, 9.0)


class Category(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    def flip(self):
        return Category.NEGATIVE if self is Category.POSITIVE else Category.POSITIVE


POS, NEG = Category.POSITIVE, Category.NEGATIVE


@dataclass(frozen=True)
class ProblemType:
    ss: int
    lr: int

    def __post_init__(self):
        if not (0 <= self.ss <= 3 and 0 <= self.lr <= 3):
            raise ValueError("SS and LR levels range over 0..3")
        if (self.ss, self.lr) == (0, 0):
            raise ValueError("(SS, LR) = (0, 0) is the null type")


def admissible_types():
    return [ProblemType(s, l) for s in range(4) for l in range(4) if (s, l) != (0, 0)]


@dataclass
class GroundTruth:
    problem_id: int
    instances: list
    borders: frozenset = frozenset()   # unordered pairs stored as (low, high)
    contains: frozenset = frozenset()  # (outer, inner)
    width: int = cg.DEFAULT_SIZE
    height: int = cg.DEFAULT_SIZE
    seed: int | None = None

    def __len__(self):
        return len(self.instances)

    def centres(self):
        return np.array([x.centre for x in self.instances], dtype=float).reshape(-1, 2)


@dataclass
class Plan:
    items: list
    constraints: list = field(default_factory=list)
    layout: Callable | None = None


class _Builder:
    def __init__(self, rng, width, height):
        self.rng = rng
        self.width = width
        self.height = height
        self.next_id = 0

    def fresh(self):
        c = cg.gen_contour(child_seed(self.rng), identity=self.next_id)
        self.next_id += 1
        return c

    def size(self, band):
        return float(self.rng.uniform(*band))

    def similar(self, s):
        return s * float(self.rng.uniform(0.93, 1.07))

    def angle(self):
        return float(self.rng.uniform(0, 2 * np.pi))

    def unit(self, theta=None):
        theta = self.angle() if theta is None else theta
        return np.array([math.cos(theta), math.sin(theta)])

    def point(self, margin):
        return np.array([self.rng.uniform(margin, self.width - 1 - margin),
                         self.rng.uniform(margin, self.height - 1 - margin)])


# -- ground-truth predicates --------------------------------------------------

def _angle_eq(a, b, tol=1e-6):
    d = (a - b) % (2 * np.pi)
    return min(d, 2 * np.pi - d) < tol


def identical(a, b):
    return (a.identity == b.identity and abs(a.scale - b.scale) < 1e-9
            and _angle_eq(a.rotation, b.rotation))


def same_identity(a, b):
    return a.identity == b.identity


def classes(gt):
    """Identity classes as lists of instance indices, in first-seen order."""
    out = {}
    for i, x in enumerate(gt.instances):
        out.setdefault(x.identity, []).append(i)
    return list(out.values())


def _class_sizes(gt):
    return sorted(len(c) for c in classes(gt))


def _all_identical(gt, idx):
    return all(identical(gt.instances[idx[0]], gt.instances[k]) for k in idx[1:])


def _ratio(a, b):
    a, b = abs(a), abs(b)
    return max(a, b) / min(a, b)


def _similar(a, b):
    return _ratio(a, b) <= SIMILAR[1]


def _dist(gt, i, j):
    c = gt.centres()
    return float(np.hypot(*(c[i] - c[j])))


def _aligned_even(pts, tol=EQUI_TOL):
    """Points form an evenly spaced row in some order; returns the order or None."""
    pts = np.asarray(pts, dtype=float)
    for order in itertools.permutations(range(len(pts))):
        if order[0] > order[-1]:
            continue
        q = pts[list(order)]
        steps = np.diff(q, axis=0)
        if np.all(np.abs(steps - steps[0]) <= tol):
            return list(order)
    return None


def _collinear_deviation(pts):
    """Largest perpendicular distance from the line through the farthest pair."""
    pts = np.asarray(pts, dtype=float)
    best = (-1, 0, 0)
    for i, j in itertools.combinations(range(len(pts)), 2):
        d = np.hypot(*(pts[i] - pts[j]))
        if d > best[0]:
            best = (d, i, j)
    d, i, j = best
    u = (pts[j] - pts[i]) / d
    rel = pts - pts[i]
    return float(np.abs(rel[:, 0] * u[1] - rel[:, 1] * u[0]).max())


def _square_error(pts):
    """Max deviation of 4 points from a square, in pixels (inf if degenerate)."""
    pts = np.asarray(pts, dtype=float)
    best = np.inf
    for order in itertools.permutations(range(1, 4)):
        q = pts[[0, *order]]
        sides = np.hypot(*(np.roll(q, -1, axis=0) - q).T)
        diag = np.array([np.hypot(*(q[2] - q[0])), np.hypot(*(q[3] - q[1]))])
        s = sides.mean()
        err = max(np.abs(sides - s).max(), np.abs(diag - s * math.sqrt(2)).max())
        best = min(best, err)
    return float(best)


def _symmetry_error(pts, axis_x):
    """Min over perfect matchings of the worst mirror mismatch about x = axis_x."""
    pts = [tuple(p) for p in np.asarray(pts, dtype=float)]

    def matchings(idx):
        if not idx:
            yield []
            return
        a = idx[0]
        for k in range(1, len(idx)):
            rest = idx[1:k] + idx[k + 1:]
            for m in matchings(rest):
                yield [(a, idx[k])] + m

    best = np.inf
    for m in matchings(list(range(len(pts)))):
        err = max(max(abs(pts[a][0] + pts[b][0] - 2 * axis_x), abs(pts[a][1] - pts[b][1]))
                  for a, b in m)
        best = min(best, err)
    return float(best)


def _no_relations(gt):
    return not gt.borders and not gt.contains


# -- the 23 problems ------------------------------------------------------------
# Each block: one comment line with the transcribed rule (positive vs negative).

# 1: two identical shapes vs two different shapes
def _gen1(cat, b):
    if cat is POS:
        c, s = b.fresh(), b.size(NORMAL)
        return Plan([(c, s, 0.0), (c, s, 0.0)])
    return Plan([(b.fresh(), b.size(NORMAL), 0.0), (b.fresh(), b.size(NORMAL), 0.0)])


def _rule1(gt):
    x = gt.instances
    if len(x) != 2 or not _no_relations(gt):
        return None, None
    return identical(x[0], x[1]), not same_identity(x[0], x[1])


# 2: a large shape contains a small one: small away from the boundary vs touching it
def _gen2(cat, b):
    return Plan([(b.fresh(), b.size(OUTER), 0.0), (b.fresh(), b.size(INNER), 0.0)],
                [Contains(0, 1, touching=cat is NEG)])


def _rule2(gt):
    if len(gt) != 2 or len(gt.contains) != 1:
        return None, None
    (o, i), = gt.contains
    touching = (min(o, i), max(o, i)) in gt.borders
    return not touching and not gt.borders, touching and len(gt.borders) == 1


# 3: four shapes: three touching in a chain plus a lone one vs two touching pairs
def _gen3(cat, b):
    items = [(b.fresh(), b.size(NORMAL), 0.0) for _ in range(4)]
    if cat is POS:
        return Plan(items, [Borders(0, 1), Borders(1, 2)])
    return Plan(items, [Borders(0, 1), Borders(2, 3)])


def _rule3(gt):
    if len(gt) != 4 or gt.contains or len(gt.borders) != 2:
        return None, None
    (a, b_), (c, d) = sorted(gt.borders)
    chained = len({a, b_, c, d}) == 3
    return chained, not chained


# 4: two shapes: one inside the other vs side by side
def _gen4(cat, b):
    if cat is POS:
        return Plan([(b.fresh(), b.size(OUTER), 0.0), (b.fresh(), b.size(INNER), 0.0)],
                    [Contains(0, 1)])
    return Plan([(b.fresh(), b.size((20.0, 30.0)), 0.0), (b.fresh(), b.size(INNER), 0.0)])


def _rule4(gt):
    if len(gt) != 2 or gt.borders:
        return None, None
    return len(gt.contains) == 1, not gt.contains


# 5: four shapes: two pairs of identical shapes vs four different shapes
def _gen5(cat, b):
    if cat is POS:
        items = []
        for _ in range(2):
            c, s = b.fresh(), b.size(NORMAL)
            items += [(c, s, 0.0), (c, s, 0.0)]
        return Plan(items)
    return Plan([(b.fresh(), b.size(NORMAL), 0.0) for _ in range(4)])


def _rule5(gt):
    if len(gt) != 4 or not _no_relations(gt):
        return None, None
    cl = classes(gt)
    pairs = sorted(len(c) for c in cl) == [2, 2] and all(_all_identical(gt, c) for c in cl)
    return pairs, len(cl) == 4


# 6: two pairs of identical shapes: equal within-pair distances vs unequal
def _gen6(cat, b):
    items = []
    for _ in range(2):
        c, s = b.fresh(), b.size(NORMAL)
        items += [(c, s, 0.0), (c, s, 0.0)]
    ratio = 1.0
    if cat is NEG:
        ratio = float(b.rng.uniform(1.35, 1.9))
        if b.rng.uniform() < 0.5:
            ratio = 1.0 / ratio

    def layout(rng):
        d1 = float(rng.uniform(30.0, 44.0)) / max(ratio, 1.0)
        d2 = d1 * ratio
        p0 = b.point(16)
        p1 = p0 + d1 * b.unit()
        p2 = b.point(16)
        p3 = p2 + d2 * b.unit()
        return {0: p0, 1: p1, 2: p2, 3: p3}

    return Plan(items, [Equidistant((0, 1), (2, 3), ratio=ratio)], layout)


def _pair_distances(gt, cl):
    return [_dist(gt, *c) for c in cl]


def _rule6(gt):
    if len(gt) != 4 or not _no_relations(gt):
        return None, None
    cl = classes(gt)
    if sorted(len(c) for c in cl) != [2, 2] or not all(_all_identical(gt, c) for c in cl):
        return None, None
    d1, d2 = _pair_distances(gt, cl)
    return abs(d1 - d2) <= EQUI_TOL, max(d1, d2) / min(d1, d2) >= 1.3


# 7: six shapes: three pairs of identical shapes vs two triplets of identical shapes
def _gen7(cat, b):
    groups = [2, 2, 2] if cat is POS else [3, 3]
    items = []
    for g in groups:
        c, s = b.fresh(), b.size(CROWD)
        items += [(c, s, 0.0)] * g
    return Plan(items)


def _rule7(gt):
    if len(gt) != 6 or not _no_relations(gt):
        return None, None
    cl = classes(gt)
    if not all(_all_identical(gt, c) for c in cl):
        return None, None
    sizes = sorted(len(c) for c in cl)
    return sizes == [2, 2, 2], sizes == [3, 3]


# 8: a small shape inside a larger copy of itself vs inside a different shape or outside a copy
def _gen8(cat, b):
    outer = b.size(OUTER)
    inner = outer * float(b.rng.uniform(0.14, 0.2))
    c = b.fresh()
    if cat is POS:
        return Plan([(c, outer, 0.0), (c, inner, 0.0)], [Contains(0, 1)])
    if b.rng.uniform() < 0.5:
        return Plan([(c, outer, 0.0), (b.fresh(), inner, 0.0)], [Contains(0, 1)])
    outer = b.size((20.0, 30.0))
    return Plan([(c, outer, 0.0), (c, outer * float(b.rng.uniform(0.25, 0.4)), 0.0)])


def _rule8(gt):
    if len(gt) != 2 or gt.borders:
        return None, None
    a, c = gt.instances
    same = same_identity(a, c) and not a.reflected and not c.reflected
    inside = len(gt.contains) == 1
    return inside and same, inside != same


def _row_layout(b, n, step=(30.0, 40.0)):
    def layout(rng):
        d = float(rng.uniform(*step)) * b.unit()
        p0 = b.point(12)
        return {k: p0 + k * d for k in range(n)}
    return layout


# 9: three shapes evenly spaced in a row: the large one in the middle vs at an end
def _gen9(cat, b):
    small = b.size(SMALL)
    items = [(b.fresh(), small, 0.0), (b.fresh(), b.similar(small), 0.0)]
    large = (b.fresh(), b.size(LARGE), 0.0)
    items.insert(1 if cat is POS else 0, large)
    return Plan(items, [Aligned((0, 1, 2))], _row_layout(b, 3, (32.0, 40.0)))


def _rule9(gt):
    if len(gt) != 3 or not _no_relations(gt):
        return None, None
    order = _aligned_even(gt.centres())
    if order is None:
        return None, None
    sc = [abs(x.scale) for x in gt.instances]
    big = int(np.argmax(sc))
    smalls = [k for k in range(3) if k != big]
    if not (_similar(sc[smalls[0]], sc[smalls[1]])
            and all(sc[big] / sc[k] >= DIFFERENT for k in smalls)):
        return None, None
    return order[1] == big, order[1] != big


def _square_layout(b, side=(36.0, 52.0)):
    def layout(rng):
        s = float(rng.uniform(*side))
        u = s * b.unit()
        v = np.array([-u[1], u[0]])
        centre = b.point(50)
        p0 = centre - (u + v) / 2
        return {0: p0, 1: p0 + u, 2: p0 + u + v, 3: p0 + v}
    return layout


# 10: four shapes at the corners of a square vs scattered
def _gen10(cat, b):
    items = [(b.fresh(), b.size(CROWD), 0.0) for _ in range(4)]
    if cat is POS:
        return Plan(items, layout=_square_layout(b))

    def layout(rng):
        while True:
            pts = [b.point(14) for _ in range(4)]
            if _square_error(pts) >= 8.0:
                return dict(enumerate(pts))

    return Plan(items, layout=layout)


def _rule10(gt):
    if len(gt) != 4 or not _no_relations(gt) or len(classes(gt)) != 4:
        return None, None
    err = _square_error(gt.centres())
    return err <= 1.0, err >= 5.0


# 11: a small shape touching a large one from outside vs apart
def _gen11(cat, b):
    items = [(b.fresh(), b.size((18.0, 26.0)), 0.0), (b.fresh(), b.size((6.0, 10.0)), 0.0)]
    return Plan(items, [Borders(0, 1)] if cat is POS else [])


def _rule11(gt):
    if len(gt) != 2 or gt.contains:
        return None, None
    return len(gt.borders) == 1, not gt.borders


# 12: one large and two small shapes: the smalls equidistant from the large vs not
def _gen12(cat, b):
    small = b.size(SMALL)
    items = [(b.fresh(), b.size(LARGE), 0.0), (b.fresh(), small, 0.0),
             (b.fresh(), b.similar(small), 0.0)]
    ratio = 1.0 if cat is POS else float(b.rng.uniform(1.35, 1.8))

    def layout(rng):
        d = float(rng.uniform(30.0, 40.0))
        p0 = b.point(50)
        t = b.angle()
        t2 = t + float(rng.uniform(np.pi / 3, 5 * np.pi / 3))
        return {0: p0, 1: p0 + d * b.unit(t), 2: p0 + d * ratio * b.unit(t2)}

    return Plan(items, [Equidistant((0, 1), (0, 2), ratio=ratio)], layout)


def _rule12(gt):
    if len(gt) != 3 or not _no_relations(gt):
        return None, None
    sc = [abs(x.scale) for x in gt.instances]
    big = int(np.argmax(sc))
    s1, s2 = [k for k in range(3) if k != big]
    if not (_similar(sc[s1], sc[s2]) and min(sc[big] / sc[s1], sc[big] / sc[s2]) >= DIFFERENT):
        return None, None
    d1, d2 = _dist(gt, big, s1), _dist(gt, big, s2)
    return abs(d1 - d2) <= EQUI_TOL, max(d1, d2) / min(d1, d2) >= 1.3


# 13: two large-small pairs: same relative position of small to large vs different
def _gen13(cat, b):
    l1 = b.size(LARGE)
    s1 = b.size(SMALL)
    items = [(b.fresh(), l1, 0.0), (b.fresh(), b.similar(l1), 0.0),
             (b.fresh(), s1, 0.0), (b.fresh(), b.similar(s1), 0.0)]

    def layout(rng):
        # each small shape must be clearly nearest to its own large shape
        while True:
            a, c = b.point(34), b.point(34)
            if np.hypot(*(a - c)) < 70:
                continue
            v = float(rng.uniform(30.0, 36.0)) * b.unit()
            w = v
            if cat is NEG:
                t = float(rng.uniform(np.pi / 3, 5 * np.pi / 3))
                w = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]) @ v
            r = np.hypot(*v)
            if np.hypot(*(a + v - c)) > r + 8 and np.hypot(*(c + w - a)) > r + 8:
                return {0: a, 1: c, 2: a + v, 3: c + w}

    return Plan(items, layout=layout)


def _rule13(gt):
    if len(gt) != 4 or not _no_relations(gt) or len(classes(gt)) != 4:
        return None, None
    sc = np.array([abs(x.scale) for x in gt.instances])
    order = np.argsort(sc)
    smalls, larges = order[:2], order[2:]
    if not (_similar(*sc[smalls]) and _similar(*sc[larges])
            and sc[larges].min() / sc[smalls].max() >= DIFFERENT):
        return None, None
    c = gt.centres()
    offsets = []
    partners = set()
    for s in smalls:
        partner = min(larges, key=lambda l: np.hypot(*(c[s] - c[l])))
        partners.add(int(partner))
        offsets.append(c[s] - c[partner])
    if len(partners) != 2:
        return None, None
    gap = float(np.hypot(*(offsets[0] - offsets[1])))
    return gap <= 2 * EQUI_TOL, gap >= 10.0


# 14: three shapes evenly spaced on a line vs the middle one pushed off the line
def _gen14(cat, b):
    items = [(b.fresh(), b.size(NORMAL), 0.0) for _ in range(3)]
    if cat is POS:
        return Plan(items, [Aligned((0, 1, 2))], _row_layout(b, 3))

    def layout(rng):
        base = _row_layout(b, 3)(rng)
        d = base[1] - base[0]
        n = np.array([-d[1], d[0]]) / np.hypot(*d)
        base[1] = base[1] + float(rng.choice([-1, 1])) * float(rng.uniform(14.0, 22.0)) * n
        return base

    return Plan(items, layout=layout)


def _rule14(gt):
    if len(gt) != 3 or not _no_relations(gt) or len(classes(gt)) != 3:
        return None, None
    dev = _collinear_deviation(gt.centres())
    return dev <= EQUI_TOL and _aligned_even(gt.centres()) is not None, dev >= 8.0


# 15: four shapes at the corners of a square: all identical vs all different
def _gen15(cat, b):
    if cat is POS:
        c, s = b.fresh(), b.size(CROWD)
        items = [(c, s, 0.0)] * 4
    else:
        items = [(b.fresh(), b.size(CROWD), 0.0) for _ in range(4)]
    return Plan(items, layout=_square_layout(b))


def _rule15(gt):
    if len(gt) != 4 or not _no_relations(gt) or _square_error(gt.centres()) > 1.0:
        return None, None
    cl = classes(gt)
    return len(cl) == 1 and _all_identical(gt, cl[0]), len(cl) == 4


# 16: six copies of one shape, left three mirrored onto the right: reflected vs translated
def _gen16(cat, b):
    c, s = b.fresh(), b.size((7.0, 9.5))
    sign = -1.0 if cat is POS else 1.0
    items = [(c, s, 0.0)] * 3 + [(c, sign * s, 0.0)] * 3
    axis = (b.width - 1) / 2.0

    def layout(rng):
        pts = {}
        for k in range(3):
            x = float(rng.uniform(s + 3, axis - s - 4))
            y = float(rng.uniform(s + 3, b.height - 4 - s))
            pts[k] = np.array([x, y])
            pts[k + 3] = np.array([2 * axis - x, y])
        return pts

    return Plan(items, layout=layout)


def _rule16(gt):
    if len(gt) != 6 or not _no_relations(gt) or len(classes(gt)) != 1:
        return None, None
    x = gt.instances
    axis = (gt.width - 1) / 2.0
    if len({round(abs(i.scale), 9) for i in x}) != 1:
        return None, None
    c = gt.centres()
    left = [k for k in range(6) if c[k, 0] < axis]
    right = [k for k in range(6) if c[k, 0] > axis]
    if len(left) != 3 or len(right) != 3:
        return None, None
    flips = []
    for k in left:
        m = min(right, key=lambda r: np.hypot(c[r, 0] - (2 * axis - c[k, 0]), c[r, 1] - c[k, 1]))
        if np.hypot(c[m, 0] - (2 * axis - c[k, 0]), c[m, 1] - c[k, 1]) > EQUI_TOL:
            return None, None
        flips.append(x[m].reflected != x[k].reflected)
    return all(flips), not any(flips)


# 17: three identical shapes and an odd one: the odd one equidistant from the three vs not
def _gen17(cat, b):
    c, s = b.fresh(), b.size(CROWD)
    items = [(b.fresh(), b.size(CROWD), 0.0)] + [(c, s, 0.0)] * 3
    if cat is POS:
        radii = [1.0, 1.0, 1.0]
    else:
        radii = [1.0, float(b.rng.uniform(1.3, 1.6)), float(b.rng.uniform(0.8, 1.6))]
        b.rng.shuffle(radii)

    def layout(rng):
        r = float(rng.uniform(28.0, 34.0))
        p0 = b.point(58)
        t0 = b.angle()
        gaps = rng.uniform(1.6, 2.6, size=2)
        angles = [t0, t0 + gaps[0], t0 + gaps[0] + gaps[1]]
        return {0: p0, **{k + 1: p0 + r * radii[k] * b.unit(angles[k]) for k in range(3)}}

    cons = [Equidistant((0, 1), (0, k)) for k in (2, 3)] if cat is POS else []
    return Plan(items, cons, layout)


def _rule17(gt):
    if len(gt) != 4 or not _no_relations(gt):
        return None, None
    cl = sorted(classes(gt), key=len)
    if [len(k) for k in cl] != [1, 3] or not _all_identical(gt, cl[1]):
        return None, None
    odd = cl[0][0]
    d = [_dist(gt, odd, k) for k in cl[1]]
    return max(d) - min(d) <= EQUI_TOL, max(d) / min(d) >= 1.3


# 18: six different shapes placed symmetrically about the vertical mid-line vs scattered
def _gen18(cat, b):
    items = [(b.fresh(), b.size(CROWD), 0.0) for _ in range(6)]
    axis = (b.width - 1) / 2.0

    def layout(rng):
        if cat is POS:
            pts = {}
            for k in range(3):
                x = float(rng.uniform(13, axis - 14))
                y = float(rng.uniform(13, b.height - 14))
                pts[2 * k] = np.array([x, y])
                pts[2 * k + 1] = np.array([2 * axis - x, y])
            return pts
        while True:
            pts = [b.point(13) for _ in range(6)]
            if _symmetry_error(pts, axis) >= 8.0:
                return dict(enumerate(pts))

    return Plan(items, layout=layout)


def _rule18(gt):
    if len(gt) != 6 or not _no_relations(gt) or len(classes(gt)) != 6:
        return None, None
    err = _symmetry_error(gt.centres(), (gt.width - 1) / 2.0)
    return err <= EQUI_TOL, err >= 5.0


def _two_copies(cat, b, scale_ratio=1.0, sign=1.0, rotation=0.0):
    c = b.fresh()
    s = b.size(NORMAL) if scale_ratio == 1.0 else b.size((7.0, 9.0))
    if cat is POS:
        return Plan([(c, s, 0.0), (c, sign * s * scale_ratio, rotation)])
    return Plan([(c, s, 0.0), (b.fresh(), b.size(NORMAL), 0.0)])


# 19: two shapes, one a rescaled copy of the other vs two different shapes
def _gen19(cat, b):
    return _two_copies(cat, b, scale_ratio=float(b.rng.uniform(1.5, 2.0)))


def _rule19(gt):
    if len(gt) != 2 or not _no_relations(gt):
        return None, None
    a, c = gt.instances
    pos = (same_identity(a, c) and a.scale > 0 and c.scale > 0
           and _angle_eq(a.rotation, c.rotation) and _ratio(a.scale, c.scale) >= DIFFERENT)
    return pos, not same_identity(a, c)


# 20: two shapes, one a mirror image of the other vs two different shapes
def _gen20(cat, b):
    return _two_copies(cat, b, sign=-1.0)


def _rule20(gt):
    if len(gt) != 2 or not _no_relations(gt):
        return None, None
    a, c = gt.instances
    pos = (same_identity(a, c) and abs(a.scale + c.scale) < 1e-9
           and _angle_eq(a.rotation, c.rotation))
    return pos, not same_identity(a, c)


# 21: two shapes, one a rotated and rescaled copy of the other vs two different shapes
def _gen21(cat, b):
    rot = float(b.rng.uniform(np.pi / 6, 11 * np.pi / 6))
    return _two_copies(cat, b, scale_ratio=float(b.rng.uniform(1.5, 1.9)), rotation=rot)


def _rule21(gt):
    if len(gt) != 2 or not _no_relations(gt):
        return None, None
    a, c = gt.instances
    turn = (a.rotation - c.rotation) % (2 * np.pi)
    pos = (same_identity(a, c) and a.scale > 0 and c.scale > 0
           and min(turn, 2 * np.pi - turn) >= np.pi / 6 - 1e-9
           and _ratio(a.scale, c.scale) >= DIFFERENT)
    return pos, not same_identity(a, c)


# 22: three shapes evenly spaced in a row: all identical vs all different
def _gen22(cat, b):
    if cat is POS:
        c, s = b.fresh(), b.size(NORMAL)
        items = [(c, s, 0.0)] * 3
    else:
        items = [(b.fresh(), b.size(NORMAL), 0.0) for _ in range(3)]
    return Plan(items, [Aligned((0, 1, 2))], _row_layout(b, 3))


def _rule22(gt):
    if len(gt) != 3 or not _no_relations(gt) or _aligned_even(gt.centres()) is None:
        return None, None
    cl = classes(gt)
    return len(cl) == 1 and _all_identical(gt, cl[0]), len(cl) == 3


# 23: a large shape and two small ones: both small inside the large vs one inside, one outside
def _gen23(cat, b):
    items = [(b.fresh(), b.size((44.0, 52.0)), 0.0), (b.fresh(), b.size((5.0, 7.0)), 0.0),
             (b.fresh(), b.size((5.0, 7.0)), 0.0)]
    cons = [Contains(0, 1)]
    if cat is POS:
        cons.append(Contains(0, 2))
    return Plan(items, cons)


def _rule23(gt):
    if len(gt) != 3 or gt.borders:
        return None, None
    outers = {o for o, _ in gt.contains}
    if len(outers) != 1:
        return None, None
    return len(gt.contains) == 2, len(gt.contains) == 1


# 101 (extension): two shapes identical vs identical only after a rotation
def _gen101(cat, b):
    c, s = b.fresh(), b.size(NORMAL)
    rot = 0.0 if cat is POS else float(b.rng.uniform(np.pi / 6, 11 * np.pi / 6))
    return Plan([(c, s, 0.0), (c, s, rot)])


def _rule101(gt):
    if len(gt) != 2 or not _no_relations(gt):
        return None, None
    a, c = gt.instances
    if not (same_identity(a, c) and abs(a.scale - c.scale) < 1e-9):
        return None, None
    turn = (a.rotation - c.rotation) % (2 * np.pi)
    turn = min(turn, 2 * np.pi - turn)
    return turn < 1e-6, turn >= np.pi / 6 - 1e-9


@dataclass(frozen=True)
class ProblemSpec:
    id: int
    type: ProblemType
    rule: str
    generator: Callable = field(repr=False)
    predicate: Callable = field(repr=False)

    @property
    def ss_level(self):
        return self.type.ss

    @property
    def lr_level(self):
        return self.type.lr

    def rule_oracle(self, gt):
        pos, neg = self.predicate(gt)
        if bool(pos) == bool(neg):
            raise AmbiguousRule(f"problem {self.id}: ground truth satisfies "
                                f"{'both' if pos else 'neither'} rule(s)")
        return POS if pos else NEG


_RULES = {
    1: ((2, 0), "two identical shapes / two different shapes"),
    2: ((0, 1), "small shape inside a large one away from its boundary / touching it"),
    3: ((0, 1), "three shapes touching in a chain plus one alone / two touching pairs"),
    4: ((0, 1), "one shape inside the other / side by side"),
    5: ((2, 0), "two pairs of identical shapes / four different shapes"),
    6: ((2, 3), "two identical pairs at equal distances / unequal distances"),
    7: ((2, 0), "three pairs of identical shapes / two triplets of identical shapes"),
    8: ((2, 1), "small copy inside a larger identical shape / not both inside and identical"),
    9: ((1, 2), "row of three with the large shape in the middle / at an end"),
    10: ((0, 2), "four shapes on the corners of a square / scattered"),
    11: ((0, 1), "small shape touching a large one / apart"),
    12: ((1, 3), "two small shapes equidistant from a large one / unequal distances"),
    13: ((1, 2), "two large-small pairs with the same relative offset / different offsets"),
    14: ((0, 2), "three shapes aligned and evenly spaced / middle one off the line"),
    15: ((2, 0), "four identical shapes on a square / four different shapes on a square"),
    16: ((3, 0), "right half mirrors the left half / right half translates it"),
    17: ((2, 3), "odd shape equidistant from three identical ones / unequal distances"),
    18: ((0, 2), "six shapes symmetric about the vertical mid-line / scattered"),
    19: ((2, 0), "two shapes, one a rescaled copy of the other / two different shapes"),
    20: ((2, 0), "two shapes, one a mirror image of the other / two different shapes"),
    21: ((2, 0), "two shapes, one a rotated rescaled copy of the other / two different shapes"),
    22: ((2, 0), "three identical shapes in a row / three different shapes in a row"),
    23: ((0, 1), "two small shapes inside a large one / one inside and one outside"),
}

CATALOG = {
    pid: ProblemSpec(pid, ProblemType(*t), text, globals()[f"_gen{pid}"],
                     globals()[f"_rule{pid}"])
    for pid, (t, text) in _RULES.items()
}

EXTENSIONS = {
    101: ProblemSpec(101, ProblemType(3, 0), "two identical shapes / identical after a rotation",
                     _gen101, _rule101),
}

PROBLEM_IDS = tuple(sorted(CATALOG))


def get_problem(problem_id, extensions=False):
    try:
        pid = int(problem_id)
    except (TypeError, ValueError):
        raise UnknownProblem(f"unknown problem {problem_id!r}") from None
    if pid in CATALOG:
        return CATALOG[pid]
    if extensions and pid in EXTENSIONS:
        return EXTENSIONS[pid]
    raise UnknownProblem(f"unknown problem {problem_id!r}")


def ss_lr(problem_id):
    return get_problem(problem_id).type


def type_table():
    """Problems grouped by (SS, LR)."""
    table = {}
    for pid, spec in CATALOG.items():
        table.setdefault((spec.ss_level, spec.lr_level), []).append(pid)
    return table


def _relations(constraints, order):
    where = {old: new for new, old in enumerate(order)}
    borders, contains = set(), set()
    for con in constraints:
        if isinstance(con, Borders):
            a, c = where[con.a], where[con.b]
            borders.add((min(a, c), max(a, c)))
        elif isinstance(con, Contains):
            o, i = where[con.outer], where[con.inner]
            contains.add((o, i))
            if con.touching:
                borders.add((min(o, i), max(o, i)))
    return frozenset(borders), frozenset(contains)


def _stray_containment(placed, constraints):
    """True when one shape lies inside another without a declared Contains."""
    declared = {(c.outer, c.inner) for c in constraints if isinstance(c, Contains)}
    for i, j in itertools.permutations(range(len(placed)), 2):
        if (i, j) not in declared and abs(placed[i].scale) > abs(placed[j].scale):
            if cg.point_in_polygon(placed[j].points(), placed[i].points()).all():
                return True
    return False


def generate_example(problem_id, category, rng, width=cg.DEFAULT_SIZE, height=cg.DEFAULT_SIZE,
                     extensions=False, seed=None):
    """Draw one image of ``category`` for a problem.

    Returns ``(ImageCanvas, GroundTruth)``.  Instances are listed in a random
    order so that parsing order carries no category information.
    """
    spec = get_problem(problem_id, extensions)
    category = Category(category)
    last = None
    for _ in range(REGENERATIONS):
        b = _Builder(rng, width, height)
        plan = spec.generator(category, b)
        try:
            placed = cg.place_nonoverlapping(plan.items, plan.constraints, rng, width, height,
                                             layout=plan.layout)
        except PlacementExhausted as exc:
            last = exc
            continue
        if _stray_containment(placed, plan.constraints):
            last = PlacementExhausted("undeclared containment")
            continue
        order = [int(k) for k in rng.permutation(len(placed))]
        instances = [placed[k] for k in order]
        borders, contains = _relations(plan.constraints, order)
        canvas = cg.rasterize(instances, width, height, allow_touching=borders)
        gt = GroundTruth(spec.id, instances, borders, contains, width, height, seed)
        return canvas, gt
    raise PlacementExhausted(f"problem {spec.id}: {last}")


def rule_oracle(problem_id, ground_truth, extensions=False):
    return get_problem(problem_id, extensions).rule_oracle(ground_truth)


# -- datasets -------------------------------------------------------------------

_SPLIT_KEY = {"train": 0, "test": 1}


@dataclass
class Example:
    name: str
    category: Category
    split: str
    seed: int
    canvas: object = field(repr=False)
    ground_truth: GroundTruth = field(repr=False)

    def digest(self):
        return hashlib.sha256(self.canvas.bitmap.tobytes()).hexdigest()


@dataclass
class Dataset:
    problem_id: int
    seed: int
    examples: list

    def split(self, name):
        return [e for e in self.examples if e.split == name]

    @property
    def train(self):
        return self.split("train")

    @property
    def test(self):
        return self.split("test")

    def manifest(self, header=()):
        """Line-oriented listing: image file, category, split, seed."""
        lines = [f"# {h}" for h in header]
        lines.append(f"# problem={self.problem_id} seed={self.seed}")
        for e in self.examples:
            lines.append(f"{e.name}.pgm {e.category.value} {e.split} {e.seed}")
        return "\n".join(lines) + "\n"


def example_from_seed(problem_id, category, split, index, seed, **kw):
    rng = make_rng(seed)
    canvas, gt = generate_example(problem_id, category, rng, seed=seed, **kw)
    name = f"p{int(problem_id):03d}_{split}_{index:04d}"
    return Example(name, Category(category), split, seed, canvas, gt)


def make_dataset(problem_id, n_train_pairs=3, n_test=94, seed=0, **kw):
    """Train set of ``n_train_pairs`` per category plus a balanced test set.

    The test set holds ``ceil(n_test / 2)`` positives and the rest negatives.
    Every image has its own derived seed, recorded in the manifest.
    """
    get_problem(problem_id, kw.get("extensions", False))
    if n_train_pairs < 1:
        raise ValueError("n_train_pairs must be >= 1")
    if n_test < 2:
        raise ValueError("n_test must be >= 2")
    cats = []
    for k in range(n_train_pairs):
        cats += [("train", POS), ("train", NEG)]
    n_pos = (n_test + 1) // 2
    cats += [("test", POS if k < n_pos else NEG) for k in range(n_test)]
    examples = []
    counters = {"train": 0, "test": 0}
    for split, cat in cats:
        idx = counters[split]
        counters[split] += 1
        s = derive_seed(seed, int(problem_id), _SPLIT_KEY[split], idx)
        examples.append(example_from_seed(problem_id, cat, split, idx, s, **kw))
    return Dataset(int(problem_id), int(seed), examples)
