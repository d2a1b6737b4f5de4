import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import evaluate, grid_fit, random_grid_instance, random_linear_instance
from svrtsynth.errors import MalformedProgram
from svrtsynth.parsing import Parsing, ShapeRecord
from svrtsynth.synth import fit
from svrtsynth.synth.dsl import Add, Draw, Num, Program, Relate, Sym, accept_all

PAIR = Program(latents=(("I", "id"), ("X", "x"), ("Y", "y"), ("X2", "x"), ("Y2", "y")),
               statements=(Draw(Sym("I"), Sym("X"), Sym("Y"), Num(1.0)),
                           Draw(Sym("I"), Sym("X2"), Sym("Y2"), Num(1.0))))


def _parsing(*shapes, borders=(), contains=()):
    return Parsing(tuple(ShapeRecord(*s) for s in shapes), borders, contains)


def test_shared_identity_fits_identical_pair():
    r = fit(PAIR, _parsing((30, 40, 0, 1.0), (90, 80, 0, 1.0)))
    assert r.satisfiable and r.status == "sat" and r.violations == 0
    a = r.latent_assignment
    assert {(a["X"], a["Y"]), (a["X2"], a["Y2"])} == {(30, 40), (90, 80)}


def test_shared_identity_rejects_different_pair():
    r = fit(PAIR, _parsing((30, 40, 0, 1.0), (90, 80, 1, 1.0)))
    assert not r.satisfiable and r.status == "unsat" and r.violations >= 1
    assert r.residual_bits == float("inf")


@pytest.mark.parametrize("n", [0, 1])
def test_fewer_shapes_than_draws(n):
    shapes = [(30, 40, 0, 1.0)][:n]
    r = fit(PAIR, _parsing(*shapes))
    assert not r.satisfiable and r.violations >= 2 - n


def test_tolerances():
    p = Program(constants=(("I", 0.0), ("X", 50.0), ("Y", 50.0), ("S", 10.0)),
                statements=(Draw(Sym("I"), Sym("X"), Sym("Y"), Sym("S")),))
    assert fit(p, _parsing((52, 48, 0, 10.05))).satisfiable
    assert not fit(p, _parsing((52.1, 50, 0, 10))).satisfiable
    assert not fit(p, _parsing((50, 50, 0, 10.06))).satisfiable
    assert fit(p, _parsing((53, 50, 0, 10)), eps_pos=3).satisfiable


def test_relations_must_match_exactly():
    p = Program(PAIR.constants, PAIR.latents, PAIR.statements + (Relate("contains", 0, 1),))
    assert fit(p, _parsing((30, 40, 0, 1.0), (90, 80, 0, 1.0), contains={(1, 0)})).satisfiable
    assert not fit(p, _parsing((30, 40, 0, 1.0), (90, 80, 0, 1.0))).satisfiable
    assert not fit(PAIR, _parsing((30, 40, 0, 1.0), (90, 80, 0, 1.0), borders={(0, 1)})).satisfiable


def test_witness_reproduces_parsing():
    for seed in range(100):
        p, q = random_linear_instance(np.random.default_rng(seed))
        r = fit(p, q)
        if not r.satisfiable:
            continue
        env = dict(p.constants) | r.latent_assignment
        for d, j in zip([s for s in p.statements if isinstance(s, Draw)], r.matching):
            s = q.shapes[j]
            assert abs(evaluate(d.x, env) - s.x) <= 2 + 1e-6
            assert abs(evaluate(d.y, env) - s.y) <= 2 + 1e-6
            assert abs(evaluate(d.scale, env) - s.scale) <= 0.05 + 1e-6
        assert np.isfinite(r.residual_bits)


@given(st.integers(0, 100_000))
@settings(max_examples=60)
def test_agrees_with_grid_search(seed):
    p, q = random_grid_instance(np.random.default_rng(seed))
    assert fit(p, q, eps_pos=2.0, eps_scale=0.05).satisfiable == grid_fit(p, q, 2.0, 0.05)


def test_accept_all_fits_everything():
    r = fit(accept_all(100), _parsing((1, 2, 0, 1.0)))
    assert r.satisfiable and r.residual_bits == 0


def _hard_case(n=9):
    p = Program(constants=(("J", 0.0), ("S", 5.0), ("Y", 50.0)), latents=(("X", "x"),),
                statements=tuple(Draw(Sym("J"), Sym("X"), Sym("Y"), Sym("S")) for _ in range(n)))
    q = Parsing(tuple(ShapeRecord(50.0 + (30 if i == n - 1 else 0.1 * i), 50.0, 0, 5.0)
                      for i in range(n)))
    return p, q


@pytest.mark.parametrize("limit", [0.05, 0.2])
def test_timeout_discipline(limit):
    p, q = _hard_case()
    t0 = time.perf_counter()
    r = fit(p, q, time_limit=limit)
    elapsed = time.perf_counter() - t0
    assert r.status == "unknown" and not r.satisfiable
    assert r.solver_time == limit
    assert elapsed <= 1.1 * limit


def test_nonlinear_without_solver_is_unknown(monkeypatch):
    monkeypatch.delenv("SVRT_SOLVER", raising=False)
    from svrtsynth.synth.dsl import Move
    p = Program(constants=(("J", 0.0), ("D", 30.0)),
                latents=(("X", "x"), ("Y", "y"), ("T", "angle")),
                statements=(Draw(Sym("J"), Sym("X"), Sym("Y"), Num(1.0)),
                            Move(0, Sym("D"), Sym("T"), Sym("J"), Num(1.0))))
    r = fit(p, _parsing((30, 40, 0, 1.0), (60, 40, 0, 1.0)))
    assert r.status == "unknown" and not r.satisfiable


def test_bad_inputs():
    with pytest.raises(ValueError):
        fit(PAIR, Parsing(), time_limit=0)
    with pytest.raises(MalformedProgram):
        fit(Program(statements=(Draw(Sym("Q"), Num(1.0), Num(1.0), Num(1.0)),)), Parsing())
