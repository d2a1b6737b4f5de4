"""Random closed contours, similarity transforms, rasterization and placement.

Contours live in a local frame centred on their generation centre and are
normalised so that the largest vertex radius is 1.  A :class:`ShapeInstance`
places a contour on the canvas; its ``scale`` is therefore the outer radius in
pixels, and a negative scale marks a mirrored copy.

Distances between rasterized contours use the Chebyshev (8-neighbour) metric on
pixel coordinates: two outlines *border* when their closest pixels are adjacent
(distance 1) and are *separated* when at least one background pixel lies
between them (distance >= 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GenerationExhausted,
    PlacementError,
    PlacementExhausted,
    PlacementOutOfBounds,
    SeparationViolation,
)
from .rng import make_rng

DEFAULT_SIZE = 128
DEFAULT_COMPLEXITY = 4
CONTOUR_RETRIES = 100
PLACEMENT_ATTEMPTS = 10_000
ITEM_RETRIES = 25
MIN_RADIUS_RATIO = 0.45


@dataclass(eq=False)
class Contour:
    points: np.ndarray  # (n, 2), closure implicit
    identity: int = 0

    def __len__(self):
        return len(self.points)

    def with_identity(self, identity):
        return Contour(self.points, identity)


@dataclass(eq=False)
class ShapeInstance:
    contour: Contour
    centre: tuple
    scale: float
    rotation: float = 0.0

    @property
    def identity(self):
        return self.contour.identity

    @property
    def reflected(self):
        return self.scale < 0

    def points(self):
        """World-frame vertices: reflect, scale, rotate, then translate."""
        return similarity(self.contour.points, self.centre, self.scale, self.rotation)

    def moved(self, centre):
        return ShapeInstance(self.contour, (float(centre[0]), float(centre[1])),
                             self.scale, self.rotation)


@dataclass(eq=False)
class ImageCanvas:
    width: int
    height: int
    bitmap: np.ndarray  # uint8, 1 = contour pixel
    instances: list = field(default_factory=list)

    def to_pgm(self, comments=()):
        """Binary PGM (P5): 0 background, 255 contour."""
        header = "P5\n"
        for c in comments:
            header += f"# {c}\n"
        header += f"{self.width} {self.height}\n255\n"
        return header.encode("ascii") + (self.bitmap.astype(np.uint8) * 255).tobytes()


def read_pgm(data):
    """Inverse of :meth:`ImageCanvas.to_pgm` (bitmap only)."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        end = data.index(b"\n", pos)
        line = data[pos:end]
        pos = end + 1
        if line.startswith(b"#"):
            continue
        tokens.extend(line.split())
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    raw = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
    return (raw > 0).astype(np.uint8)


def rotation_matrix(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def similarity(points, centre, scale, rotation):
    pts = np.asarray(points, dtype=float)
    if scale < 0:
        pts = pts * np.array([-1.0, 1.0])
    pts = pts * abs(scale)
    pts = pts @ rotation_matrix(rotation).T
    return pts + np.asarray(centre, dtype=float)


# -- geometry -----------------------------------------------------------------

def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - \
           (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def is_simple(points):
    """O(n^2) check that a closed polygon has no self-intersections."""
    p = np.asarray(points, dtype=float)
    n = len(p)
    if n < 3:
        return False
    a = p
    b = np.roll(p, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))  # first and last edges share a vertex
    i, j = i[keep], j[keep]
    a1, b1, a2, b2 = a[i], b[i], a[j], b[j]
    d1 = _orient(a1, b1, a2)
    d2 = _orient(a1, b1, b2)
    d3 = _orient(a2, b2, a1)
    d4 = _orient(a2, b2, b1)
    crossing = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    # collinear disjoint segments pass the sign test; reject them by bbox
    bbox = (np.minimum(a1[:, 0], b1[:, 0]) <= np.maximum(a2[:, 0], b2[:, 0])) & \
           (np.minimum(a2[:, 0], b2[:, 0]) <= np.maximum(a1[:, 0], b1[:, 0])) & \
           (np.minimum(a1[:, 1], b1[:, 1]) <= np.maximum(a2[:, 1], b2[:, 1])) & \
           (np.minimum(a2[:, 1], b2[:, 1]) <= np.maximum(a1[:, 1], b1[:, 1]))
    return not np.any(crossing & bbox)


def point_in_polygon(points, polygon):
    """Even-odd rule; ``points`` is (m, 2), returns bool array."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x1, y1 = poly[:, 0][None, :], poly[:, 1][None, :]
    x2, y2 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    straddle = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    hits = straddle & (x < xint)
    return (np.count_nonzero(hits, axis=1) % 2) == 1


def polygon_centroid(points):
    """Area centroid (centre of mass of the enclosed region)."""
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return float(cx), float(cy)


# -- generation ---------------------------------------------------------------

def gen_contour(rng_seed, complexity=DEFAULT_COMPLEXITY, identity=0):
    """Random star-shaped simple closed contour around the origin.

    The radius of a circle is perturbed by a random low-order harmonic series
    and sampled at ``complexity * 8`` equally spaced angles.  The result is
    normalised to unit outer radius.  Candidates whose inner radius falls
    below ``MIN_RADIUS_RATIO`` or that self-intersect are redrawn.
    """
    if complexity < 3:
        raise ValueError("complexity must be >= 3")
    rng = make_rng(rng_seed)
    n = int(complexity) * 8
    theta = np.arange(n) * (2 * np.pi / n)
    for _ in range(CONTOUR_RETRIES):
        n_harm = int(rng.integers(2, 6))
        r = np.ones(n)
        for k in range(2, 2 + n_harm):
            amp = rng.uniform(-0.35, 0.35) / k ** 0.7
            r += amp * np.cos(k * theta + rng.uniform(0, 2 * np.pi))
        r *= rng.uniform(0.92, 1.08, size=n)
        if r.min() <= 0 or r.min() / r.max() < MIN_RADIUS_RATIO:
            continue
        r /= r.max()
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        if is_simple(pts):
            return Contour(pts, identity)
    raise GenerationExhausted(f"no simple contour after {CONTOUR_RETRIES} draws")


def transform(shape, centre, scale, rotation=0.0):
    """Apply ``x -> centre + R(rotation) |scale| F(scale) x``.

    ``F`` mirrors across the vertical axis when ``scale`` is negative.  When
    ``shape`` is already a :class:`ShapeInstance` the map is composed with its
    own placement, so ``transform(transform(c, *t1), *t2)`` describes the same
    vertices as the composite similarity.
    """
    if scale == 0:
        raise ValueError("|scale| must be > 0")
    centre = (float(centre[0]), float(centre[1]))
    if isinstance(shape, Contour):
        return ShapeInstance(shape, centre, float(scale), float(rotation))
    c1 = np.asarray(shape.centre, dtype=float)
    if scale < 0:
        c1 = c1 * np.array([-1.0, 1.0])
    new_centre = rotation_matrix(rotation) @ (abs(scale) * c1) + np.asarray(centre)
    rot1 = -shape.rotation if scale < 0 else shape.rotation
    return ShapeInstance(shape.contour, (float(new_centre[0]), float(new_centre[1])),
                         float(shape.scale * scale), float(rotation + rot1))


# -- rasterization ------------------------------------------------------------

def bresenham(x0, y0, x1, y1):
    pts = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        pts.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return pts
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def outline_pixels(instance):
    """Unique (x, y) pixels of the closed outline as an (m, 2) int array."""
    v = np.rint(instance.points()).astype(int)
    pix = []
    n = len(v)
    for k in range(n):
        a, b = v[k], v[(k + 1) % n]
        pix.extend(bresenham(int(a[0]), int(a[1]), int(b[0]), int(b[1])))
    return np.unique(np.array(pix, dtype=int), axis=0)


def in_bounds(pixels, width, height, margin=1):
    return bool(np.all((pixels[:, 0] >= margin) & (pixels[:, 0] <= width - 1 - margin)
                       & (pixels[:, 1] >= margin) & (pixels[:, 1] <= height - 1 - margin)))


_NEIGHBOURS = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)])


def _touching_labels(pixels, labels):
    """Labels found in the 3x3 neighbourhood of ``pixels``."""
    h, w = labels.shape
    nb = (pixels[:, None, :] + _NEIGHBOURS[None, :, :]).reshape(-1, 2)
    ok = (nb[:, 0] >= 0) & (nb[:, 0] < w) & (nb[:, 1] >= 0) & (nb[:, 1] < h)
    nb = nb[ok]
    return set(np.unique(labels[nb[:, 1], nb[:, 0]]).tolist())


def pixel_distance(pa, pb):
    """Chebyshev distance between two pixel sets (brute force)."""
    d = np.abs(pa[:, None, :] - pb[None, :, :]).max(axis=2)
    return int(d.min())


def _pair(a, b):
    return (a, b) if a < b else (b, a)


def rasterize(instances, width=DEFAULT_SIZE, height=DEFAULT_SIZE, allow_touching=()):
    """Draw outlines onto a binary canvas and enforce the separation rule.

    ``allow_touching`` lists index pairs that may border (distance 1); all
    other pairs must be separated by at least one background pixel.  Shared
    pixels are always an error.
    """
    allowed = {_pair(*p) for p in allow_touching}
    bitmap = np.zeros((height, width), dtype=np.uint8)
    labels = np.full((height, width), -1, dtype=np.int32)
    pix = []
    for i, inst in enumerate(instances):
        p = outline_pixels(inst)
        if not in_bounds(p, width, height):
            raise PlacementOutOfBounds(f"instance {i} leaves the canvas")
        hit = labels[p[:, 1], p[:, 0]]
        if np.any(hit >= 0):
            j = int(hit[hit >= 0][0])
            raise SeparationViolation(f"instances {j} and {i} overlap", (j, i))
        labels[p[:, 1], p[:, 0]] = i
        bitmap[p[:, 1], p[:, 0]] = 1
        pix.append(p)
    for i, p in enumerate(pix):
        for j in _touching_labels(p, labels) - {-1, i}:
            if _pair(i, j) not in allowed:
                raise SeparationViolation(f"instances {i} and {j} touch", _pair(i, j))
    return ImageCanvas(width, height, bitmap, list(instances))


# -- placement constraints ----------------------------------------------------

@dataclass(frozen=True)
class Contains:
    """``inner`` lies strictly inside ``outer``; ``touching`` makes it border too."""
    outer: int
    inner: int
    touching: bool = False

    @property
    def target(self):
        return self.inner


@dataclass(frozen=True)
class Borders:
    """``b`` touches ``a`` from outside (minimum pixel distance exactly 1)."""
    a: int
    b: int

    @property
    def target(self):
        return self.b


@dataclass(frozen=True)
class Equidistant:
    """|d1 - d0| == ratio * |c1 - c0|; the second point of ``second`` is derived."""
    first: tuple
    second: tuple
    tol: float = 0.5
    ratio: float = 1.0

    @property
    def target(self):
        return self.second[1]


@dataclass(frozen=True)
class Aligned:
    """Centres collinear; with ``even`` the last one continues the progression."""
    indices: tuple
    even: bool = True
    tol: float = 0.5

    @property
    def target(self):
        return self.indices[-1] if self.even else None


@dataclass(frozen=True)
class Fixed:
    index: int
    centre: tuple

    @property
    def target(self):
        return self.index


@dataclass(frozen=True)
class Apart:
    """Pure check: centres at least ``distance`` apart."""
    a: int
    b: int
    distance: float

    @property
    def target(self):
        return None


class _Layout:
    def __init__(self, items, width, height):
        self.items = items
        self.width = width
        self.height = height
        self.placed = [None] * len(items)
        self.pixels = [None] * len(items)

    def instance(self, i, centre):
        c, s, r = self.items[i]
        return ShapeInstance(c, (float(centre[0]), float(centre[1])), float(s), float(r))


def _uniform_centre(layout, i, rng):
    s = abs(layout.items[i][1]) + 2
    return (rng.uniform(s, layout.width - 1 - s), rng.uniform(s, layout.height - 1 - s))


def _dilate(pixels, shape):
    m = np.zeros(shape, dtype=bool)
    h, w = shape
    nb = (pixels[:, None, :] + _NEIGHBOURS[None, :, :]).reshape(-1, 2)
    ok = (nb[:, 0] >= 0) & (nb[:, 0] < w) & (nb[:, 1] >= 0) & (nb[:, 1] < h)
    nb = nb[ok]
    m[nb[:, 1], nb[:, 0]] = True
    return m


def _march(layout, anchor, i, start, direction, inside):
    """Slide item ``i`` along ``direction`` until it borders ``anchor``.

    Returns the placed instance or ``None`` when the first contact would
    overlap pixels.  ``inside`` keeps every vertex within the anchor polygon.
    """
    shape = (layout.height, layout.width)
    anchor_pix = layout.pixels[anchor]
    owned = np.zeros(shape, dtype=bool)
    owned[anchor_pix[:, 1], anchor_pix[:, 0]] = True
    near = _dilate(anchor_pix, shape)
    anchor_poly = layout.placed[anchor].points()

    def status(t):
        inst = layout.instance(i, np.asarray(start) + t * direction)
        p = outline_pixels(inst)
        if not in_bounds(p, layout.width, layout.height):
            return None, inst, p
        if owned[p[:, 1], p[:, 0]].any():
            return 0, inst, p
        if near[p[:, 1], p[:, 0]].any():
            return 1, inst, p
        return 2, inst, p

    step = 0.5
    t_prev = 0.0
    st, _, _ = status(0.0)
    if st != 2:
        return None
    t = step
    for _ in range(400):
        st, inst, p = status(t)
        if st is None:
            return None
        if st < 2:
            break
        t_prev = t
        t += step
    else:
        return None
    lo, hi = t_prev, t
    for _ in range(12):
        if st == 1:
            break
        mid = 0.5 * (lo + hi)
        st, inst, p = status(mid)
        if st is None:
            return None
        if st == 2:
            lo = mid
        else:
            hi = mid
    if st != 1:
        return None
    if inside and not np.all(point_in_polygon(inst.points(), anchor_poly)):
        return None
    return inst


def _place_item(layout, i, rules, rng, pinned):
    if i in pinned:
        return layout.instance(i, pinned[i])
    rule = rules.get(i)
    c, s, r = layout.items[i]
    if rule is None:
        return layout.instance(i, _uniform_centre(layout, i, rng))
    if isinstance(rule, Fixed):
        return layout.instance(i, rule.centre)
    if isinstance(rule, Contains):
        outer = layout.placed[rule.outer]
        oc = np.asarray(outer.centre)
        if rule.touching:
            u = rng.uniform(0, 2 * np.pi)
            return _march(layout, rule.outer, i, oc, np.array([math.cos(u), math.sin(u)]),
                          inside=True)
        # room left between the inner disc and the outer contour's inner radius
        r_in = abs(outer.scale) * float(np.min(np.hypot(*outer.contour.points.T)))
        room = r_in - abs(s) - 3.0
        if room <= 0:
            return None
        rad = room * math.sqrt(rng.uniform(0, 1)) * 0.8
        u = rng.uniform(0, 2 * np.pi)
        return layout.instance(i, oc + rad * np.array([math.cos(u), math.sin(u)]))
    if isinstance(rule, Borders):
        anchor = layout.placed[rule.a]
        u = rng.uniform(0, 2 * np.pi)
        d = np.array([math.cos(u), math.sin(u)])
        start = np.asarray(anchor.centre) + d * (abs(anchor.scale) + abs(s) + 4.0)
        return _march(layout, rule.a, i, start, -d, inside=False)
    if isinstance(rule, Equidistant):
        a0, a1 = rule.first
        b0 = rule.second[0]
        dist = float(np.hypot(*(np.asarray(layout.placed[a1].centre)
                                - np.asarray(layout.placed[a0].centre))))
        u = rng.uniform(0, 2 * np.pi)
        return layout.instance(i, np.asarray(layout.placed[b0].centre)
                               + rule.ratio * dist * np.array([math.cos(u), math.sin(u)]))
    if isinstance(rule, Aligned):
        p0 = np.asarray(layout.placed[rule.indices[-3]].centre)
        p1 = np.asarray(layout.placed[rule.indices[-2]].centre)
        return layout.instance(i, 2 * p1 - p0)
    raise TypeError(f"unsupported placement rule {rule!r}")


def _item_ok(layout, i, inst, touch_ok):
    p = outline_pixels(inst)
    if not in_bounds(p, layout.width, layout.height):
        return None
    shape = (layout.height, layout.width)
    for j in range(i):
        q = layout.pixels[j]
        cj = np.asarray(layout.placed[j].centre)
        gap = np.hypot(*(np.asarray(inst.centre) - cj)) - abs(inst.scale) - abs(layout.placed[j].scale)
        if gap > 5.0:
            continue
        dil = _dilate(q, shape)
        if not dil[p[:, 1], p[:, 0]].any():
            continue
        own = np.zeros(shape, dtype=bool)
        own[q[:, 1], q[:, 0]] = True
        if own[p[:, 1], p[:, 0]].any() or _pair(i, j) not in touch_ok:
            return None
    return p


def constraint_holds(con, instances, pixels=None):
    """Check a declared constraint on placed instances."""
    if pixels is None:
        pixels = [outline_pixels(x) for x in instances]
    if isinstance(con, Contains):
        inner_pts = instances[con.inner].points()
        if not np.all(point_in_polygon(inner_pts, instances[con.outer].points())):
            return False
        d = pixel_distance(pixels[con.outer], pixels[con.inner])
        return d == 1 if con.touching else d >= 2
    if isinstance(con, Borders):
        return pixel_distance(pixels[con.a], pixels[con.b]) == 1
    if isinstance(con, Equidistant):
        c = [np.asarray(instances[k].centre) for k in (*con.first, *con.second)]
        return abs(con.ratio * np.hypot(*(c[1] - c[0])) - np.hypot(*(c[3] - c[2]))) <= con.tol
    if isinstance(con, Aligned):
        c = np.array([instances[k].centre for k in con.indices], dtype=float)
        d = c[-1] - c[0]
        norm = np.hypot(*d)
        if norm == 0:
            return False
        perp = np.abs((c[:, 0] - c[0, 0]) * d[1] - (c[:, 1] - c[0, 1]) * d[0]) / norm
        if perp.max() > con.tol:
            return False
        if con.even:
            steps = np.diff(c, axis=0)
            return bool(np.all(np.abs(steps - steps[0]) <= con.tol))
        return True
    if isinstance(con, Fixed):
        return np.allclose(instances[con.index].centre, con.centre)
    if isinstance(con, Apart):
        a, b = np.asarray(instances[con.a].centre), np.asarray(instances[con.b].centre)
        return np.hypot(*(a - b)) >= con.distance
    raise TypeError(f"unsupported constraint {con!r}")


def touching_pairs(constraints):
    pairs = set()
    for con in constraints:
        if isinstance(con, Borders):
            pairs.add(_pair(con.a, con.b))
        elif isinstance(con, Contains) and con.touching:
            pairs.add(_pair(con.outer, con.inner))
    return pairs


def place_nonoverlapping(items, constraints=(), rng=None, width=DEFAULT_SIZE,
                         height=DEFAULT_SIZE, attempts=PLACEMENT_ATTEMPTS, layout=None):
    """Place ``items`` = [(contour, scale, rotation), ...] on the canvas.

    Constraints that pin a position (``Contains``, ``Borders``,
    ``Equidistant``, even ``Aligned``, ``Fixed``) must name a target with a
    larger index than the shapes they depend on; every other item is drawn
    uniformly.  Each candidate is checked against earlier items for bounds and
    separation and redrawn up to ``ITEM_RETRIES`` times; a failed item restarts
    the whole layout.  ``layout(rng) -> {index: centre}`` pins centres afresh
    on every restart; constraints targeting a pinned item are only checked.
    The final layout is re-checked against every declared constraint.
    Raises :class:`PlacementExhausted` once ``attempts`` item draws are spent.
    """
    if rng is None:
        rng = np.random.default_rng()
    rules = {}
    for con in constraints:
        t = con.target
        if t is None:
            continue
        if t in rules:
            raise ValueError(f"item {t} is positioned by two constraints")
        rules[t] = con
    touch_ok = touching_pairs(constraints)
    spent = 0
    while spent < attempts:
        state = _Layout(items, width, height)
        pinned = layout(rng) if layout is not None else {}
        failed = False
        for i in range(len(items)):
            for _ in range(1 if i in pinned else ITEM_RETRIES):
                spent += 1
                inst = _place_item(state, i, rules, rng, pinned)
                p = None if inst is None else _item_ok(state, i, inst, touch_ok)
                if p is not None:
                    state.placed[i] = inst
                    state.pixels[i] = p
                    break
                if spent >= attempts:
                    break
            if state.placed[i] is None:
                failed = True
                break
        if failed:
            continue
        if all(constraint_holds(c, state.placed, state.pixels) for c in constraints):
            return state.placed
    raise PlacementExhausted(f"no valid layout within {attempts} attempts")


__all__ = [
    "Aligned", "Apart", "Borders", "Contains", "Contour", "Equidistant", "Fixed",
    "ImageCanvas", "PlacementError", "ShapeInstance", "constraint_holds",
    "gen_contour", "is_simple", "outline_pixels", "pixel_distance", "place_nonoverlapping",
    "point_in_polygon", "polygon_centroid", "rasterize", "read_pgm", "touching_pairs",
    "transform",
]
