"""Program AST for the synthesizer: expressions, statements, expansion, cost.

A program declares named constants (shared by every image of a category) and
latents (solved per image), then runs statements that emit shape records and
assert relations.  Expressions are linear in the latents; the one exception is
a ``Move`` whose angle depends on a latent.

Text form is an S-expression, e.g.::

    (program
      (latents (I0 id) (X0 x) (Y0 y) (S0 scale) (X1 x) (Y1 y))
      (draw I0 X0 Y0 S0)
      (draw I0 X1 Y1 S0))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import MalformedProgram

# cost weights in bits
B0 = 4.0
C_DRAW = 8.0
C_MOVE = 8.0
C_RELATE = 4.0
C_REPEAT = 6.0
C_ASSERT = 4.0
C_CONST = 10.0
C_LATENT = 16.0
C_NEG = 1.0
C_ADD = 1.0
C_INDEX = 2.0
C_COEF = 2.0
C_LITERAL = 10.0

MAX_REPEAT = 8
LATENT_KINDS = ("id", "x", "y", "scale", "dist", "angle")
# bits to encode one latent value per image, by kind (1 px / 1/32 scale grids)
LATENT_BITS = {"id": 3.0, "x": 7.0, "y": 7.0, "scale": 5.0, "dist": 7.0, "angle": 6.0}


def number_bits(v):
    """Magnitude bits plus binary-precision bits of a number."""
    v = Fraction(v).limit_denominator(1 << 16)
    mag = math.ceil(math.log2(1 + abs(math.floor(abs(v)))))
    den = v.denominator
    prec = math.ceil(math.log2(den)) if den > 1 else 0
    return float(mag + prec)


# -- expressions ---------------------------------------------------------------

@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Index:
    var: str = "k"


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    """``coef * arg`` where ``coef`` is a number or a loop :class:`Index`."""
    coef: object
    arg: object


# -- statements ------------------------------------------------------------------

@dataclass(frozen=True)
class Draw:
    id: Sym
    x: object
    y: object
    scale: object


@dataclass(frozen=True)
class Move:
    """New shape at slot ``source``'s centre + dist * (cos angle, sin angle)."""
    source: int
    dist: object
    angle: object
    id: Sym
    scale: object


@dataclass(frozen=True)
class Relate:
    kind: str
    a: int
    b: int


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple
    var: str = "k"


@dataclass(frozen=True)
class AssertLinear:
    """Category constraint ``expr == 0``."""
    expr: object


@dataclass(frozen=True)
class AcceptAll:
    """Matches any parsing; only used for the fallback program."""


@dataclass(frozen=True)
class Program:
    constants: tuple = ()   # ((name, value), ...)
    latents: tuple = ()     # ((name, kind), ...)
    statements: tuple = ()
    cost_override: float | None = field(default=None, compare=False)

    @property
    def cost_bits(self):
        return cost(self)

    @property
    def accepts_all(self):
        return any(isinstance(s, AcceptAll) for s in self.statements)

    def constant_map(self):
        return dict(self.constants)

    def latent_kinds(self):
        return dict(self.latents)

    def __str__(self):
        return to_sexpr(self)


def accept_all(max_cost_bits):
    return Program(statements=(AcceptAll(),), cost_override=float(max_cost_bits))


# -- cost -------------------------------------------------------------------------

def expr_cost(e):
    if isinstance(e, Sym):
        return 0.0
    if isinstance(e, Num):
        return C_LITERAL + number_bits(e.value)
    if isinstance(e, Index):
        return C_INDEX
    if isinstance(e, Neg):
        return C_NEG + expr_cost(e.arg)
    if isinstance(e, Add):
        return C_ADD + expr_cost(e.left) + expr_cost(e.right)
    if isinstance(e, Mul):
        c = C_INDEX if isinstance(e.coef, Index) else C_COEF + number_bits(e.coef)
        return c + expr_cost(e.arg)
    raise MalformedProgram(f"not an expression: {e!r}")


def statement_cost(s):
    if isinstance(s, Draw):
        return C_DRAW + sum(expr_cost(e) for e in (s.id, s.x, s.y, s.scale))
    if isinstance(s, Move):
        return C_MOVE + sum(expr_cost(e) for e in (s.id, s.dist, s.angle, s.scale))
    if isinstance(s, Relate):
        return C_RELATE
    if isinstance(s, Repeat):
        return C_REPEAT + sum(statement_cost(b) for b in s.body)
    if isinstance(s, AssertLinear):
        return C_ASSERT + expr_cost(s.expr)
    if isinstance(s, AcceptAll):
        return 0.0
    raise MalformedProgram(f"not a statement: {s!r}")


def cost(p):
    """Description length of a program in bits.

    ``B0`` plus every statement and expression node, ``C_CONST`` per declared
    constant and ``C_LATENT`` per declared latent.  References are free: a
    quantity is paid for once where it is declared.
    """
    if p.cost_override is not None:
        return p.cost_override
    return (B0 + sum(statement_cost(s) for s in p.statements)
            + C_CONST * len(p.constants) + C_LATENT * len(p.latents))


# -- linear forms -----------------------------------------------------------------

class Lin:
    """Sparse linear form ``sum(coef * latent) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}
        self.const = float(const)

    @classmethod
    def var(cls, name):
        return cls({name: 1.0})

    def __add__(self, other):
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0.0) + v
        return Lin(t, self.const + other.const)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        c = float(c)
        return Lin({k: v * c for k, v in self.terms.items()}, self.const * c)

    def __eq__(self, other):
        return isinstance(other, Lin) and self.terms == other.terms and self.const == other.const

    def __hash__(self):
        return hash((tuple(sorted(self.terms.items())), self.const))

    def __repr__(self):
        return f"Lin({self.terms}, {self.const})"

    def is_constant(self):
        return not self.terms

    def value(self, assignment):
        return self.const + sum(v * assignment[k] for k, v in self.terms.items())


@dataclass(frozen=True)
class Polar:
    """Non-linear offset ``dist * cos(angle)`` (or ``sin``)."""
    dist: Lin
    angle: Lin
    trig: str   # "cos" | "sin"

    def value(self, assignment):
        f = math.cos if self.trig == "cos" else math.sin
        return self.dist.value(assignment) * f(self.angle.value(assignment))


@dataclass
class Coord:
    lin: Lin
    polar: tuple = ()

    @property
    def linear(self):
        return not self.polar

    def __add__(self, other):
        return Coord(self.lin + other.lin, self.polar + other.polar)

    def value(self, assignment):
        return self.lin.value(assignment) + sum(p.value(assignment) for p in self.polar)


@dataclass
class Slot:
    id: str
    x: Coord
    y: Coord
    scale: Lin


@dataclass
class Expansion:
    slots: list
    borders: set
    contains: set
    asserts: list
    latents: dict
    accepts_all: bool = False

    @property
    def linear(self):
        return all(s.x.linear and s.y.linear for s in self.slots)


def to_lin(e, consts, latents, env):
    if isinstance(e, Sym):
        if e.name in consts:
            return Lin(const=consts[e.name])
        if e.name in latents:
            return Lin.var(e.name)
        raise MalformedProgram(f"undeclared symbol {e.name!r}")
    if isinstance(e, Num):
        return Lin(const=e.value)
    if isinstance(e, Index):
        if e.var not in env:
            raise MalformedProgram(f"loop index {e.var!r} used outside its Repeat")
        return Lin(const=env[e.var])
    if isinstance(e, Neg):
        return -to_lin(e.arg, consts, latents, env)
    if isinstance(e, Add):
        return to_lin(e.left, consts, latents, env) + to_lin(e.right, consts, latents, env)
    if isinstance(e, Mul):
        c = to_lin(e.coef, consts, latents, env) if isinstance(e.coef, Index) else Lin(const=e.coef)
        return to_lin(e.arg, consts, latents, env) * c.const
    raise MalformedProgram(f"not an expression: {e!r}")


def _id_name(e, consts, latents):
    if not isinstance(e, Sym):
        raise MalformedProgram(f"identity must be a symbol, got {e!r}")
    if e.name not in consts and e.name not in latents:
        raise MalformedProgram(f"undeclared symbol {e.name!r}")
    if e.name in latents and latents[e.name] != "id":
        raise MalformedProgram(f"latent {e.name!r} is not an identity")
    return e.name


def expand(p):
    """Unroll a program into emitted slots, relation sets and assertions.

    Raises :class:`MalformedProgram` on undeclared symbols, out-of-range
    slots, bad Repeat counts or relations between a slot and itself.
    """
    consts = p.constant_map()
    latents = p.latent_kinds()
    if len(consts) != len(p.constants) or len(latents) != len(p.latents):
        raise MalformedProgram("duplicate declaration")
    if set(consts) & set(latents):
        raise MalformedProgram("a name is both constant and latent")
    for name, kind in p.latents:
        if kind not in LATENT_KINDS:
            raise MalformedProgram(f"unknown latent kind {kind!r}")
    out = Expansion([], set(), set(), [], latents, p.accepts_all)

    def run(stmts, env):
        for s in stmts:
            if isinstance(s, AcceptAll):
                continue
            if isinstance(s, Draw):
                out.slots.append(Slot(
                    _id_name(s.id, consts, latents),
                    Coord(to_lin(s.x, consts, latents, env)),
                    Coord(to_lin(s.y, consts, latents, env)),
                    to_lin(s.scale, consts, latents, env)))
            elif isinstance(s, Move):
                if not 0 <= s.source < len(out.slots):
                    raise MalformedProgram(f"Move from slot {s.source} before it exists")
                src = out.slots[s.source]
                d = to_lin(s.dist, consts, latents, env)
                a = to_lin(s.angle, consts, latents, env)
                if a.is_constant():
                    dx = Coord(d * math.cos(a.const))
                    dy = Coord(d * math.sin(a.const))
                else:
                    dx = Coord(Lin(), (Polar(d, a, "cos"),))
                    dy = Coord(Lin(), (Polar(d, a, "sin"),))
                out.slots.append(Slot(_id_name(s.id, consts, latents), src.x + dx, src.y + dy,
                                      to_lin(s.scale, consts, latents, env)))
            elif isinstance(s, Relate):
                n = len(out.slots)
                if not (0 <= s.a < n and 0 <= s.b < n):
                    raise MalformedProgram(f"relation on slot not yet emitted: {s}")
                if s.a == s.b:
                    raise MalformedProgram(f"reflexive relation {s}")
                if s.kind == "borders":
                    out.borders.add((min(s.a, s.b), max(s.a, s.b)))
                elif s.kind == "contains":
                    if (s.b, s.a) in out.contains:
                        raise MalformedProgram(f"contains cycle at {s}")
                    out.contains.add((s.a, s.b))
                else:
                    raise MalformedProgram(f"unknown relation {s.kind!r}")
            elif isinstance(s, Repeat):
                if not (isinstance(s.count, int) and 1 <= s.count <= MAX_REPEAT):
                    raise MalformedProgram(f"Repeat count must be in 1..{MAX_REPEAT}")
                for k in range(s.count):
                    run(s.body, {**env, s.var: float(k)})
            elif isinstance(s, AssertLinear):
                out.asserts.append(to_lin(s.expr, consts, latents, env))
            else:
                raise MalformedProgram(f"not a statement: {s!r}")

    run(p.statements, {})
    return out


def check_program(p):
    expand(p)
    return p


# -- substitution helpers used by the search ------------------------------------------

def substitute(e, mapping):
    """Replace latent references by expressions (applied to a fixpoint)."""
    if isinstance(e, Sym):
        if e.name in mapping:
            return substitute(mapping[e.name], mapping)
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Add):
        return Add(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Mul):
        return Mul(e.coef, substitute(e.arg, mapping))
    return e


def symbols(e):
    if isinstance(e, Sym):
        return {e.name}
    if isinstance(e, Neg):
        return symbols(e.arg)
    if isinstance(e, Add):
        return symbols(e.left) | symbols(e.right)
    if isinstance(e, Mul):
        return symbols(e.arg)
    return set()


def statement_symbols(s):
    if isinstance(s, Draw):
        return set().union(*(symbols(e) for e in (s.id, s.x, s.y, s.scale)))
    if isinstance(s, Move):
        return set().union(*(symbols(e) for e in (s.id, s.dist, s.angle, s.scale)))
    if isinstance(s, Repeat):
        return set().union(set(), *(statement_symbols(b) for b in s.body))
    if isinstance(s, AssertLinear):
        return symbols(s.expr)
    return set()


# -- S-expressions ---------------------------------------------------------------------

def _num(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def expr_sexpr(e):
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Num):
        return _num(e.value)
    if isinstance(e, Index):
        return f"(index {e.var})"
    if isinstance(e, Neg):
        return f"(- {expr_sexpr(e.arg)})"
    if isinstance(e, Add):
        return f"(+ {expr_sexpr(e.left)} {expr_sexpr(e.right)})"
    if isinstance(e, Mul):
        c = expr_sexpr(e.coef) if isinstance(e.coef, Index) else _num(e.coef)
        return f"(* {c} {expr_sexpr(e.arg)})"
    raise MalformedProgram(f"not an expression: {e!r}")


def stmt_sexpr(s, indent="  "):
    if isinstance(s, Draw):
        return f"{indent}(draw {' '.join(expr_sexpr(e) for e in (s.id, s.x, s.y, s.scale))})"
    if isinstance(s, Move):
        args = " ".join(expr_sexpr(e) for e in (s.dist, s.angle, s.id, s.scale))
        return f"{indent}(move {s.source} {args})"
    if isinstance(s, Relate):
        return f"{indent}(relate {s.kind} {s.a} {s.b})"
    if isinstance(s, Repeat):
        body = "\n".join(stmt_sexpr(b, indent + "  ") for b in s.body)
        return f"{indent}(repeat {s.count} {s.var}\n{body})"
    if isinstance(s, AssertLinear):
        return f"{indent}(assert (= {expr_sexpr(s.expr)} 0))"
    if isinstance(s, AcceptAll):
        return f"{indent}(accept-all)"
    raise MalformedProgram(f"not a statement: {s!r}")


def to_sexpr(p):
    lines = ["(program"]
    if p.cost_override is not None:
        lines.append(f"  (cost {_num(p.cost_override)})")
    if p.constants:
        lines.append("  (constants " + " ".join(f"({n} {_num(v)})" for n, v in p.constants) + ")")
    if p.latents:
        lines.append("  (latents " + " ".join(f"({n} {k})" for n, k in p.latents) + ")")
    lines += [stmt_sexpr(s) for s in p.statements]
    return "\n".join(lines) + ")\n"


def _read(text):
    text = "\n".join(line.split(";", 1)[0] for line in text.splitlines())   # ; comments
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def node():
        nonlocal pos
        if pos >= len(tokens):
            raise MalformedProgram("unexpected end of program text")
        t = tokens[pos]
        pos += 1
        if t == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(node())
            if pos >= len(tokens):
                raise MalformedProgram("unbalanced parentheses")
            pos += 1
            return items
        if t == ")":
            raise MalformedProgram("unexpected ')'")
        return t

    tree = node()
    if pos != len(tokens):
        raise MalformedProgram("trailing text after program")
    return tree


def _is_number(t):
    try:
        float(t)
        return True
    except (TypeError, ValueError):
        return False


def _expr(t):
    if isinstance(t, str):
        return Num(float(t)) if _is_number(t) else Sym(t)
    head = t[0] if t else None
    if head == "index" and len(t) == 2:
        return Index(t[1])
    if head == "-" and len(t) == 2:
        return Neg(_expr(t[1]))
    if head == "+" and len(t) == 3:
        return Add(_expr(t[1]), _expr(t[2]))
    if head == "*" and len(t) == 3:
        coef = _expr(t[1])
        if isinstance(coef, Num):
            coef = coef.value
        elif not isinstance(coef, Index):
            raise MalformedProgram("multiplier must be a number or loop index")
        return Mul(coef, _expr(t[2]))
    raise MalformedProgram(f"bad expression {t!r}")


def _stmt(t):
    if not isinstance(t, list) or not t:
        raise MalformedProgram(f"bad statement {t!r}")
    head, args = t[0], t[1:]
    if head == "draw" and len(args) == 4:
        e = [_expr(a) for a in args]
        return Draw(e[0], e[1], e[2], e[3])
    if head == "move" and len(args) == 5:
        e = [_expr(a) for a in args[1:]]
        return Move(int(args[0]), e[0], e[1], e[2], e[3])
    if head == "relate" and len(args) == 3:
        return Relate(args[0], int(args[1]), int(args[2]))
    if head == "repeat" and len(args) >= 2:
        return Repeat(int(args[0]), tuple(_stmt(b) for b in args[2:]), args[1])
    if head == "assert" and len(args) == 1 and args[0][0] == "=" and args[0][2] == "0":
        return AssertLinear(_expr(args[0][1]))
    if head == "accept-all" and not args:
        return AcceptAll()
    raise MalformedProgram(f"bad statement {t!r}")


def from_sexpr(text):
    tree = _read(text)
    if not isinstance(tree, list) or not tree or tree[0] != "program":
        raise MalformedProgram("expected (program ...)")
    consts, lats, stmts, override = (), (), [], None
    for item in tree[1:]:
        if isinstance(item, list) and item and item[0] == "constants":
            consts = tuple((n, float(v)) for n, v in item[1:])
        elif isinstance(item, list) and item and item[0] == "latents":
            lats = tuple((n, k) for n, k in item[1:])
        elif isinstance(item, list) and item and item[0] == "cost":
            override = float(item[1])
        else:
            stmts.append(_stmt(item))
    p = Program(consts, lats, tuple(stmts), override)
    check_program(p)
    return p
