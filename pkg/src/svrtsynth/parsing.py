"""Symbolic parsings: shape records plus borders/contains relations.

A parsing lists ``Shape(x, y, identity, scale)`` records and the topological
relations between them.  Corrected parsings come straight from generator
ground truth; :func:`degrade_parsing` re-introduces the error classes of the
legacy parser (reflection-blind identities, identity splits under rotation or
rescaling, per-identity scale normalisation, centre-of-mass coordinates and
spurious tiny shapes).
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .contours import polygon_centroid
from .errors import ParseError, TooManyShapes

SENTINEL = -1000.0
SPLIT_ANGLE_DEG = 5.0
SPLIT_SCALE_BAND = (0.95, 1.05)
GLITCH_NEAR = 20.0       # max outline gap (px) for shapes to count as mutually near
GLITCH_SIZE = (2.0, 4.0)


@dataclass(frozen=True)
class ShapeRecord:
    x: float
    y: float
    identity: int
    scale: float
    rotation: float | None = None


def _pair(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Parsing:
    shapes: tuple = ()
    borders: frozenset = frozenset()
    contains: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        object.__setattr__(self, "borders", frozenset(_pair(int(a), int(b))
                                                      for a, b in self.borders))
        object.__setattr__(self, "contains", frozenset((int(a), int(b))
                                                       for a, b in self.contains))
        n = len(self.shapes)
        for kind, rel in (("borders", self.borders), ("contains", self.contains)):
            for a, b in rel:
                if not (0 <= a < n and 0 <= b < n):
                    raise ValueError(f"{kind}({a}, {b}) refers to a missing shape")
                if a == b:
                    raise ValueError(f"{kind}({a}, {b}) is reflexive")
        for a, b in self.contains:
            if (b, a) in self.contains:
                raise ValueError(f"contains({a}, {b}) and contains({b}, {a}) both present")

    def __len__(self):
        return len(self.shapes)

    def identities(self):
        return [s.identity for s in self.shapes]

    def canonical(self):
        """Same parsing with identities relabelled by first appearance."""
        return replace(self, shapes=tuple(replace(s, identity=i)
                                          for s, i in zip(self.shapes, relabel(self.identities()))))


def relabel(ids):
    seen = {}
    return [seen.setdefault(i, len(seen)) for i in ids]


def quantize(v):
    """Round to the six significant digits the text form keeps."""
    return None if v is None else float(format_float(v))


def _quantized(s):
    return ShapeRecord(quantize(s.x), quantize(s.y), s.identity, quantize(s.scale),
                       quantize(s.rotation))


def extract_parsing(gt, include_rotation=False):
    """Corrected parsing from ground truth: generation centres, true identities,
    signed outer-radius scales (negative = reflected copy).

    Values are rounded to the text precision so that files round-trip exactly.
    """
    ids = relabel([x.identity for x in gt.instances])
    shapes = tuple(
        _quantized(ShapeRecord(x.centre[0], x.centre[1], k, x.scale,
                               x.rotation if include_rotation else None))
        for x, k in zip(gt.instances, ids))
    return Parsing(shapes, gt.borders, gt.contains)


# -- degradation ---------------------------------------------------------------

@dataclass(frozen=True)
class DegradationProfile:
    reflection_blind: bool = False
    transform_identity_split: bool = False
    split_angle_deg: float = SPLIT_ANGLE_DEG
    split_scale_band: tuple = SPLIT_SCALE_BAND
    normalize_scales: bool = False
    centre_of_mass: bool = False
    glitch_rate: float = 0.0

    def is_identity(self):
        return not (self.reflection_blind or self.transform_identity_split
                    or self.normalize_scales or self.centre_of_mass or self.glitch_rate > 0)


PRESETS = {
    "corrected": DegradationProfile(),
    # the legacy parser was blind to reflections and rescaled every identity to 1
    "reflection_blind": DegradationProfile(reflection_blind=True, normalize_scales=True),
    "transform_split": DegradationProfile(transform_identity_split=True, normalize_scales=True),
    "glitch": DegradationProfile(glitch_rate=0.1),
    "sasquatch": DegradationProfile(reflection_blind=True, transform_identity_split=True,
                                    normalize_scales=True, centre_of_mass=True, glitch_rate=0.1),
}


def profile_from_text(text):
    """Preset name, or comma-separated ``flag=value`` overrides on top of one.

    ``"sasquatch"``, ``"corrected,glitch_rate=1"`` and
    ``"reflection_blind=1,normalize_scales=0"`` are all accepted.
    """
    prof = PRESETS["corrected"]
    names = {f.name: f for f in fields(DegradationProfile)}
    for part in filter(None, (p.strip() for p in (text or "").split(","))):
        if "=" not in part:
            if part not in PRESETS:
                raise ValueError(f"unknown degradation preset {part!r}; "
                                 f"choose from {sorted(PRESETS)}")
            prof = PRESETS[part]
            continue
        key, value = (s.strip() for s in part.split("=", 1))
        if key not in names or key == "split_scale_band":
            raise ValueError(f"unknown degradation flag {key!r}")
        if key in ("glitch_rate", "split_angle_deg"):
            v = float(value)
        else:
            v = value.lower() in ("1", "true", "yes", "on")
        prof = replace(prof, **{key: v})
    return prof


def _near_triples(shapes):
    out = []
    for tri in itertools.combinations(range(len(shapes)), 3):
        ok = True
        for a, b in itertools.combinations(tri, 2):
            sa, sb = shapes[a], shapes[b]
            gap = math.hypot(sa.x - sb.x, sa.y - sb.y) - abs(sa.scale) - abs(sb.scale)
            if gap > GLITCH_NEAR:
                ok = False
                break
        if ok:
            out.append(tri)
    return out


def _fresh_id(shapes):
    return max((s.identity for s in shapes), default=-1) + 1


def _angle_gap(a, b):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


def degrade_parsing(p, profile, rng=None, ground_truth=None):
    """Apply legacy-parser errors to a corrected parsing.

    Steps run in a fixed order: centre of mass, glitch injection (on the
    original geometry), reflection blindness, identity splitting, scale
    normalisation.  Rotation-based splitting reads ``ShapeRecord.rotation``
    when present and otherwise the ground truth, if given.
    """
    if profile.is_identity():
        return p
    shapes = list(p.shapes)
    borders, contains = set(p.borders), set(p.contains)

    if profile.centre_of_mass:
        if ground_truth is None:
            raise ValueError("centre_of_mass needs the ground truth geometry")
        for k, inst in enumerate(ground_truth.instances):
            cx, cy = polygon_centroid(inst.points())
            shapes[k] = replace(shapes[k], x=float(cx), y=float(cy))

    if profile.glitch_rate > 0:
        if rng is None:
            raise ValueError("glitch injection needs an rng")
        triples = _near_triples(shapes)
        if triples and rng.uniform() < profile.glitch_rate:
            # the tightest cluster hosts the spurious shape, at its centroid
            def spread(tri):
                return sum(math.hypot(shapes[a].x - shapes[b].x, shapes[a].y - shapes[b].y)
                           for a, b in itertools.combinations(tri, 2))
            tri = min(triples, key=spread)
            gx = float(np.mean([shapes[k].x for k in tri]))
            gy = float(np.mean([shapes[k].y for k in tri]))
            size = float(rng.uniform(*GLITCH_SIZE))
            rot = 0.0 if any(s.rotation is not None for s in shapes) else None
            shapes.append(ShapeRecord(gx, gy, _fresh_id(shapes), size, rot))

    if profile.reflection_blind:
        by_id = {}
        for k, s in enumerate(shapes):
            by_id.setdefault(s.identity, []).append(k)
        nxt = _fresh_id(shapes)
        for ident, members in by_id.items():
            signs = {shapes[k].scale < 0 for k in members}
            if len(signs) == 2:
                for k in members:
                    if shapes[k].scale < 0:
                        shapes[k] = replace(shapes[k], identity=nxt)
                nxt += 1
        shapes = [replace(s, scale=abs(s.scale)) for s in shapes]

    if profile.transform_identity_split:
        def rotation(k):
            if shapes[k].rotation is not None:
                return shapes[k].rotation
            if ground_truth is not None and k < len(ground_truth.instances):
                return ground_truth.instances[k].rotation
            return 0.0

        lo, hi = profile.split_scale_band
        limit = math.radians(profile.split_angle_deg)
        by_id = {}
        for k, s in enumerate(shapes):
            by_id.setdefault(s.identity, []).append(k)
        nxt = _fresh_id(shapes)
        for ident, members in by_id.items():
            clusters = []  # (representative index, identity)
            for k in members:
                for rep, cid in clusters:
                    ratio = abs(shapes[k].scale) / abs(shapes[rep].scale)
                    if lo <= ratio <= hi and _angle_gap(rotation(k), rotation(rep)) <= limit:
                        shapes[k] = replace(shapes[k], identity=cid)
                        break
                else:
                    cid = ident if not clusters else nxt
                    if clusters:
                        nxt += 1
                    clusters.append((k, cid))
                    shapes[k] = replace(shapes[k], identity=cid)

    if profile.normalize_scales:
        top = {}
        for s in shapes:
            top[s.identity] = max(top.get(s.identity, 0.0), abs(s.scale))
        shapes = [replace(s, scale=s.scale / top[s.identity]) if top[s.identity] > 0 else s
                  for s in shapes]

    ids = relabel([s.identity for s in shapes])
    shapes = [_quantized(replace(s, identity=i)) for s, i in zip(shapes, ids)]
    return Parsing(tuple(shapes), frozenset(borders), frozenset(contains))


# -- text form ---------------------------------------------------------------------

def format_float(v):
    """Six significant digits, always with a decimal point or exponent."""
    text = f"{float(v):.6g}"
    if not any(ch in text for ch in ".einf"):
        text += ".0"
    return text


def serialize(p):
    lines = []
    for s in p.shapes:
        args = [format_float(s.x), format_float(s.y), str(int(s.identity)), format_float(s.scale)]
        if s.rotation is not None:
            args.append(format_float(s.rotation))
        lines.append(f"Shape({', '.join(args)})")
    for a, b in sorted(p.borders):
        lines.append(f"borders({a}, {b})")
    for a, b in sorted(p.contains):
        lines.append(f"contains({a}, {b})")
    return "".join(line + "\n" for line in lines)


_TOKEN = re.compile(r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
                    r"|(?P<name>[A-Za-z_]\w*)|(?P<punct>[(),]))")
_INT = re.compile(r"[-+]?\d+$")


def _tokens(line, lineno):
    pos = 0
    out = []
    while pos < len(line):
        if not line[pos:].strip():
            break
        m = _TOKEN.match(line, pos)
        if m is None or m.end() == pos:
            col = pos + len(line[pos:]) - len(line[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {line[col - 1]!r}", lineno, col)
        kind = m.lastgroup
        col = m.start(kind) + 1
        out.append((kind, m.group(kind), col))
        pos = m.end()
    return out


def _statement(line, lineno):
    toks = _tokens(line, lineno)
    if not toks:
        return None
    kind, name, col = toks[0]
    if kind != "name":
        raise ParseError(f"expected a statement name, got {name!r}", lineno, col)
    if name not in ("Shape", "borders", "contains"):
        raise ParseError(f"unknown statement {name!r}", lineno, col)
    end_col = len(line) + 1
    if len(toks) < 2 or toks[1][1] != "(":
        raise ParseError("expected '('", lineno, toks[1][2] if len(toks) > 1 else end_col)
    args = []
    k = 2
    while True:
        if k >= len(toks):
            raise ParseError("unterminated argument list", lineno, end_col)
        kind, val, col = toks[k]
        if kind != "num":
            raise ParseError(f"expected a number, got {val!r}", lineno, col)
        args.append((val, col))
        k += 1
        if k >= len(toks):
            raise ParseError("unterminated argument list", lineno, end_col)
        kind, val, col = toks[k]
        k += 1
        if val == ")":
            break
        if val != ",":
            raise ParseError(f"expected ',' or ')', got {val!r}", lineno, col)
    if k < len(toks):
        raise ParseError(f"trailing input {toks[k][1]!r}", lineno, toks[k][2])
    return name, args, col


def _int_arg(arg, lineno):
    val, col = arg
    if not _INT.match(val):
        raise ParseError(f"expected an integer, got {val!r}", lineno, col)
    return int(val)


def parse(text):
    """Read the line-oriented parsing format; raises :class:`ParseError`."""
    shapes, rels = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        st = _statement(line, lineno)
        if st is None:
            continue
        name, args, _ = st
        first_col = line.index("(") + 1
        if name == "Shape":
            if len(args) not in (4, 5):
                raise ParseError(f"Shape takes 4 or 5 arguments, got {len(args)}",
                                 lineno, first_col)
            x, y = float(args[0][0]), float(args[1][0])
            ident = _int_arg(args[2], lineno)
            scale = float(args[3][0])
            rot = float(args[4][0]) if len(args) == 5 else None
            shapes.append(ShapeRecord(x, y, ident, scale, rot))
        else:
            if len(args) != 2:
                raise ParseError(f"{name} takes 2 arguments, got {len(args)}", lineno, first_col)
            a, b = (_int_arg(x, lineno) for x in args)
            rels.append((name, a, b, lineno, args))
    borders, contains = set(), set()
    n = len(shapes)
    for name, a, b, lineno, args in rels:
        for v, (_, col) in zip((a, b), args):
            if not 0 <= v < n:
                raise ParseError(f"shape index {v} out of range (have {n} shapes)", lineno, col)
        if a == b:
            raise ParseError(f"{name}({a}, {b}) relates a shape to itself", lineno, args[0][1])
        if name == "borders":
            borders.add(_pair(a, b))
        else:
            if (b, a) in contains:
                raise ParseError(f"contains({a}, {b}) contradicts contains({b}, {a})",
                                 lineno, args[0][1])
            contains.add((a, b))
    return Parsing(tuple(shapes), frozenset(borders), frozenset(contains))


# -- vector form ----------------------------------------------------------------------

def vector_length(max_shapes):
    return 4 * max_shapes + 2 * max_shapes * max_shapes


def vectorize(p, max_shapes):
    """Fixed-length numeric vector for the boosting baseline.

    Layout: ``max_shapes`` slots of (x, y, identity, scale) in parsing order,
    identities relabelled by first appearance and empty slots filled with
    ``SENTINEL``; then the borders incidence matrix (symmetric) and the
    contains matrix (row = outer), each flattened row-major.
    """
    n = len(p.shapes)
    if n > max_shapes:
        raise TooManyShapes(f"parsing has {n} shapes, vector holds {max_shapes}")
    slots = np.full((max_shapes, 4), SENTINEL)
    ids = relabel(p.identities())
    for k, (s, i) in enumerate(zip(p.shapes, ids)):
        slots[k] = (s.x, s.y, i, s.scale)
    bord = np.zeros((max_shapes, max_shapes))
    cont = np.zeros((max_shapes, max_shapes))
    for a, b in p.borders:
        bord[a, b] = bord[b, a] = 1
    for a, b in p.contains:
        cont[a, b] = 1
    return np.concatenate([slots.ravel(), bord.ravel(), cont.ravel()])


def vectorize_many(parsings, max_shapes=None):
    if max_shapes is None:
        max_shapes = max((len(p) for p in parsings), default=0)
    return np.stack([vectorize(p, max_shapes) for p in parsings]) if parsings else \
        np.zeros((0, vector_length(max_shapes)))
