"""SMT-LIB v2 emission of fit problems and the optional external solver hook."""

from __future__ import annotations

import math
import os
import shlex
import subprocess
from decimal import Decimal

from ..errors import MalformedProgram
from .dsl import expand

SOLVER_ENV = "SVRT_SOLVER"


def smt_number(v):
    """Exact decimal text of a float, no exponent; negatives as ``(- x)``."""
    d = Decimal(float(v))
    text = format(abs(d), "f")
    if "." not in text:
        text += ".0"
    return f"(- {text})" if d < 0 else text


def _sym(name, k):
    return f"{name}_p{k}"


def _lin(lin, k):
    terms = [smt_number(lin.const)] if lin.const != 0 or not lin.terms else []
    for name, c in sorted(lin.terms.items()):
        v = _sym(name, k)
        terms.append(v if c == 1 else f"(* {smt_number(c)} {v})")
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


def _angle_parts(angle, k):
    """cos/sin of ``latent + c`` as linear forms in the unit-vector pair."""
    if len(angle.terms) != 1 or next(iter(angle.terms.values())) != 1:
        raise MalformedProgram("a latent angle must be one latent plus a constant")
    name = next(iter(angle.terms))
    c, s = f"cos_{name}_p{k}", f"sin_{name}_p{k}"
    cc, sc = math.cos(angle.const), math.sin(angle.const)
    cos_t = f"(- (* {smt_number(cc)} {c}) (* {smt_number(sc)} {s}))"
    sin_t = f"(+ (* {smt_number(sc)} {c}) (* {smt_number(cc)} {s}))"
    return name, cos_t, sin_t


def _coord(coord, k, units):
    parts = [_lin(coord.lin, k)]
    for pol in coord.polar:
        name, cos_t, sin_t = _angle_parts(pol.angle, k)
        units.add(name)
        parts.append(f"(* {_lin(pol.dist, k)} {cos_t if pol.trig == 'cos' else sin_t})")
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def emit_constraints(p, parsings, eps_pos=2.0, eps_scale=0.05):
    """Self-contained SMT-LIB document: does ``p`` fit every parsing?

    Booleans ``m_p{k}_s{i}_{j}`` choose which parsed shape slot ``i`` becomes;
    identity-pattern and relation mismatches are forbidden pairwise and
    numeric tolerances are implied by the chosen match.  The logic is
    QF_LRA unless a Move has a latent angle (then QF_NRA).
    """
    ex = expand(p)
    logic = "QF_LRA" if ex.linear else "QF_NRA"
    out = [f"(set-logic {logic})", "(set-option :produce-models false)"]
    if ex.accepts_all:
        out += ["(check-sat)", "(exit)"]
        return "\n".join(out) + "\n"
    numeric = sorted(n for n, kind in ex.latents.items() if kind != "id")
    slots = ex.slots
    for k, parsing in enumerate(parsings):
        units = set()
        coords = [(_coord(s.x, k, units), _coord(s.y, k, units), _lin(s.scale, k)) for s in slots]
        for name in numeric:
            out.append(f"(declare-const {_sym(name, k)} Real)")
        for name in sorted(units):
            c, s = f"cos_{name}_p{k}", f"sin_{name}_p{k}"
            out += [f"(declare-const {c} Real)", f"(declare-const {s} Real)",
                    f"(assert (= (+ (* {c} {c}) (* {s} {s})) 1.0))"]
        shapes = parsing.shapes
        n = len(shapes)
        if n != len(slots):
            out.append("(assert false)")
            continue
        m = [[f"m_p{k}_s{i}_{j}" for j in range(n)] for i in range(n)]
        for row in m:
            for v in row:
                out.append(f"(declare-const {v} Bool)")
        for i in range(n):
            out.append(f"(assert (or {' '.join(m[i])}))" if n > 1 else f"(assert {m[i][0]})")
            out.append(f"(assert (or {' '.join(m[t][i] for t in range(n))}))"
                       if n > 1 else f"(assert {m[0][i]})")
            for j in range(n):
                for l in range(j + 1, n):
                    out.append(f"(assert (not (and {m[i][j]} {m[i][l]})))")
                    out.append(f"(assert (not (and {m[j][i]} {m[l][i]})))")
        for i in range(n):
            for t in range(i + 1, n):
                same_slot = slots[i].id == slots[t].id
                for j in range(n):
                    for l in range(n):
                        if j == l:
                            continue
                        same_shape = shapes[j].identity == shapes[l].identity
                        ok = same_slot == same_shape
                        ok = ok and (((i, t) in ex.borders)
                                     == ((min(j, l), max(j, l)) in parsing.borders))
                        ok = ok and ((i, t) in ex.contains) == ((j, l) in parsing.contains)
                        ok = ok and ((t, i) in ex.contains) == ((l, j) in parsing.contains)
                        if not ok:
                            out.append(f"(assert (not (and {m[i][j]} {m[t][l]})))")
        for i, (x, y, s) in enumerate(coords):
            for j, shape in enumerate(shapes):
                box = []
                for expr, obs, eps in ((x, shape.x, eps_pos), (y, shape.y, eps_pos),
                                       (s, shape.scale, eps_scale)):
                    box.append(f"(<= {smt_number(obs - eps)} {expr})")
                    box.append(f"(<= {expr} {smt_number(obs + eps)})")
                out.append(f"(assert (=> {m[i][j]} (and {' '.join(box)})))")
        for lin in ex.asserts:
            out.append(f"(assert (= {_lin(lin, k)} 0.0))")
    out += ["(check-sat)", "(exit)"]
    return "\n".join(out) + "\n"


def configured_solver():
    cmd = os.environ.get(SOLVER_ENV, "").strip()
    return shlex.split(cmd) if cmd else None


def run_external(document, command=None, timeout=None):
    """Pipe a document to an external solver; returns 'sat', 'unsat' or 'unknown'."""
    command = command or configured_solver()
    if not command:
        return "unknown"
    if isinstance(command, str):
        command = shlex.split(command)
    if os.path.basename(command[0]).startswith("z3") and "-in" not in command:
        command = [*command, "-in"]
    try:
        res = subprocess.run(command, input=document, capture_output=True, text=True,
                             timeout=timeout)
    except (subprocess.TimeoutExpired, OSError):
        return "unknown"
    for line in res.stdout.splitlines():
        word = line.strip()
        if word in ("sat", "unsat", "unknown"):
            return word
    return "unknown"


__all__ = ["emit_constraints", "run_external", "configured_solver", "smt_number"]
