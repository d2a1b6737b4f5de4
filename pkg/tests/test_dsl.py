import math

import pytest
from hypothesis import given, strategies as st

from svrtsynth.errors import MalformedProgram
from svrtsynth.synth import dsl
from svrtsynth.synth.dsl import (AcceptAll, Add, AssertLinear, Draw, Index, Move, Mul, Neg, Num,
                                 Program, Relate, Repeat, Sym, accept_all, cost, expand,
                                 from_sexpr, to_sexpr)

CONSTS = (("A", 3.0), ("B", 40.0))
LATS = (("I", "id"), ("X", "x"), ("Y", "y"), ("S", "scale"))


def test_empty_program_costs_base():
    assert cost(Program()) == dsl.B0


def test_draw_of_constants():
    p = Program(constants=CONSTS)
    q = Program(constants=CONSTS + (("J", 0.0), ("C", 10.0), ("D", 20.0), ("E", 1.0)),
                statements=(Draw(Sym("J"), Sym("C"), Sym("D"), Sym("E")),))
    assert cost(q) == cost(p) + dsl.C_DRAW + 4 * dsl.C_CONST


def test_latent_replacing_constant():
    a = Program(constants=(("J", 0.0), ("C", 1.0)), latents=(("X", "x"), ("Y", "y")),
                statements=(Draw(Sym("J"), Sym("X"), Sym("Y"), Sym("C")),))
    b = Program(constants=(("J", 0.0),), latents=(("X", "x"), ("Y", "y"), ("C", "scale")),
                statements=a.statements)
    assert cost(b) - cost(a) == dsl.C_LATENT - dsl.C_CONST > 0


def test_expression_costs():
    assert dsl.expr_cost(Sym("X")) == 0
    assert dsl.expr_cost(Neg(Sym("X"))) == dsl.C_NEG
    assert dsl.expr_cost(Add(Sym("X"), Sym("Y"))) == dsl.C_ADD
    assert dsl.expr_cost(Num(5.0)) == dsl.C_LITERAL + 3
    assert dsl.expr_cost(Mul(0.5, Sym("X"))) == dsl.C_COEF + 1
    assert dsl.expr_cost(Mul(Index("k"), Sym("X"))) == dsl.C_INDEX


@pytest.mark.parametrize("v, bits", [(0, 0), (1, 1), (3, 2), (4, 3), (0.5, 1), (-2.25, 4)])
def test_number_bits(v, bits):
    assert dsl.number_bits(v) == bits


def test_accept_all_cost():
    p = accept_all(500)
    assert p.accepts_all and cost(p) == 500


# -- monotonicity --------------------------------------------------------------

names = st.sampled_from(["A", "B", "I", "X", "Y", "S"])
exprs = st.recursive(
    names.map(Sym) | st.integers(-50, 50).map(lambda v: Num(float(v))) | st.just(Index("k")),
    lambda inner: st.one_of(inner.map(Neg), st.tuples(inner, inner).map(lambda t: Add(*t)),
                            st.tuples(st.integers(-4, 4).map(float), inner).map(lambda t: Mul(*t))),
    max_leaves=6)
simple = st.one_of(
    st.tuples(exprs, exprs, exprs).map(lambda t: Draw(Sym("I"), *t)),
    st.tuples(st.integers(0, 3), exprs, exprs, exprs).map(
        lambda t: Move(t[0], t[1], t[2], Sym("I"), t[3])),
    st.tuples(st.sampled_from(["borders", "contains"]), st.integers(0, 3), st.integers(0, 3))
      .map(lambda t: Relate(*t)),
    exprs.map(AssertLinear))
statements = st.one_of(simple, st.lists(simple, min_size=1, max_size=3).map(
    lambda b: Repeat(2, tuple(b))))


@st.composite
def programs(draw):
    consts = tuple((f"c{k}", float(draw(st.integers(-9, 9)))) for k in range(draw(st.integers(0, 3))))
    lats = tuple((f"l{k}", draw(st.sampled_from(dsl.LATENT_KINDS)))
                 for k in range(draw(st.integers(0, 3))))
    return Program(consts, lats, tuple(draw(st.lists(statements, max_size=4))))


@given(programs(), statements, st.integers(0, 4))
def test_cost_strictly_increases_with_statement(p, s, at):
    at = min(at, len(p.statements))
    q = Program(p.constants, p.latents, p.statements[:at] + (s,) + p.statements[at:])
    assert cost(q) > cost(p)


@given(programs())
def test_cost_strictly_increases_with_declaration(p):
    assert cost(Program(p.constants + (("new", 1.0),), p.latents, p.statements)) > cost(p)
    assert cost(Program(p.constants, p.latents + (("new", "x"),), p.statements)) > cost(p)


@given(programs())
def test_cost_deterministic_and_roundtrip(p):
    assert cost(p) == cost(p)
    text = to_sexpr(p)
    # the reader validates, so only round-trip well-formed programs
    try:
        dsl.check_program(p)
    except MalformedProgram:
        return
    q = from_sexpr(text)
    assert q == p and math.isclose(cost(q), cost(p))


# -- expansion and text form -------------------------------------------------

def test_expand_repeat_and_move():
    p = Program(constants=(("J", 0.0), ("D", 30.0), ("T", 0.0)), latents=LATS,
                statements=(Repeat(3, (Draw(Sym("I"), Add(Sym("X"), Mul(Index("k"), Num(10.0))),
                                            Sym("Y"), Sym("S")),)),
                            Move(0, Sym("D"), Sym("T"), Sym("J"), Sym("S")),
                            Relate("contains", 0, 3)))
    e = expand(p)
    assert len(e.slots) == 4
    assert [s.x.lin.const for s in e.slots[:3]] == [0.0, 10.0, 20.0]
    assert e.slots[3].x.lin.const == 30.0 and e.linear
    assert e.contains == {(0, 3)}


def test_variable_angle_move_is_nonlinear():
    p = Program(constants=(("J", 0.0), ("D", 30.0)), latents=LATS + (("T", "angle"),),
                statements=(Draw(Sym("I"), Sym("X"), Sym("Y"), Sym("S")),
                            Move(0, Sym("D"), Sym("T"), Sym("J"), Sym("S"))))
    assert not expand(p).linear


@pytest.mark.parametrize("stmts, lats", [
    ((Draw(Sym("I"), Sym("Q"), Sym("Y"), Sym("S")),), LATS),          # undeclared
    ((Draw(Sym("X"), Sym("X"), Sym("Y"), Sym("S")),), LATS),          # x latent as identity
    ((Relate("borders", 0, 1),), LATS),                               # no slots yet
    ((Draw(Sym("I"), Sym("X"), Sym("Y"), Sym("S")), Relate("borders", 0, 0)), LATS),
    ((Repeat(9, (Draw(Sym("I"), Sym("X"), Sym("Y"), Sym("S")),)),), LATS),
    ((Move(0, Sym("X"), Sym("Y"), Sym("I"), Sym("S")),), LATS),       # move before a slot
    ((Draw(Sym("I"), Index("k"), Sym("Y"), Sym("S")),), LATS),       # index outside repeat
    ((), (("Z", "colour"),)),
])
def test_malformed(stmts, lats):
    with pytest.raises(MalformedProgram):
        expand(Program(latents=lats, statements=stmts))


@pytest.mark.parametrize("text", ["(draw I X Y S)", "(program (draw I X)", "(program (foo))",
                                  "(program) extra", "(program (latents (I id)) (draw I X 0 1))"])
def test_malformed_text(text):
    with pytest.raises(MalformedProgram):
        from_sexpr(text)


def test_text_with_comments():
    p = from_sexpr("; header line\n(program\n  (latents (I id) (X x) (Y y))\n"
                   "  (draw I X Y 1)) ; trailing\n")
    assert p.statements == (Draw(Sym("I"), Sym("X"), Sym("Y"), Num(1.0)),)
    assert from_sexpr(to_sexpr(accept_all(7))).cost_bits == 7
    assert isinstance(from_sexpr("(program (accept-all))").statements[0], AcceptAll)
