import math

import pytest

from svrtsynth.protocol import (AdaBoostAgent, Agent, ChanceAgent, OracleAgent, PerfRecord,
                                ProgramSynthesisAgent, curve_to_gnuplot, learning_curve,
                                make_agent, records_to_csv, run_protocol)
from svrtsynth.stats import beta_star


def test_oracle_is_perfect():
    r = run_protocol(3, OracleAgent(), n_reps=3, n_test=20, seed=1)
    assert r.alpha == 1.0 and r.beta_star == 1.0 and r.n_reps == 3


def test_chance_agent_full_protocol():
    r = run_protocol(5, ChanceAgent(), n_reps=40, n_test=94, seed=0)
    assert abs(r.alpha - 0.5) <= 0.02
    assert beta_star(0.48) <= r.beta_star <= beta_star(0.52)
    assert abs(beta_star(0.5) - 0.1134) < 1e-4


def test_reproducible_and_order_free():
    a = run_protocol(1, ChanceAgent(), n_reps=4, n_test=10, seed=7)
    b = run_protocol(1, ChanceAgent(), n_reps=4, n_test=10, seed=7, jobs=2)
    c = run_protocol(1, ChanceAgent(), n_reps=4, n_test=10, seed=8)
    assert a.rep_accuracies == b.rep_accuracies
    assert a.rep_accuracies != c.rep_accuracies


def test_agents_cannot_see_test_labels():
    class Peek(Agent):
        def predict(self, sample, rng):
            assert sample.label is None
            return "positive"

    r = run_protocol(2, Peek(), n_reps=2, n_test=10, seed=0)
    assert r.alpha == 0.5


def test_no_learning_between_test_samples():
    class Counter(Agent):
        def __init__(self):
            self.seen = 0

        def predict(self, sample, rng):
            self.seen += 1
            return "positive"

    agent = Counter()
    run_protocol(2, agent, n_reps=2, n_test=10, seed=0)
    assert agent.seen == 0      # each repetition works on its own copy


def test_learning_curves():
    pts = learning_curve(4, OracleAgent(), [1, 2, 3], reps=2, n_test=10)
    assert [(t, a, s) for t, a, s in pts] == [(1, 1.0, 0.0), (2, 1.0, 0.0), (3, 1.0, 0.0)]
    pts = learning_curve(4, ChanceAgent(), [1, 5], reps=5, n_test=40, seed=3)
    for _, a, s in pts:
        assert abs(a - 0.5) <= 4 * math.sqrt(0.25 / 200)
        assert s > 0
    text = curve_to_gnuplot(pts, ["h"]).splitlines()
    assert text[:2] == ["# h", "# t alpha stderr"] and len(text) == 4
    with pytest.raises(ValueError):
        learning_curve(4, OracleAgent(), [])


def test_program_synthesis_agent_easy_problem():
    r = run_protocol(1, ProgramSynthesisAgent(), n_reps=2, n_test=20, seed=2)
    assert r.alpha >= 0.9


def test_adaboost_agent_runs():
    r = run_protocol(20, AdaBoostAgent(), train_pairs=10, n_reps=1, n_test=20, seed=0)
    assert 0 <= r.alpha <= 1


def test_make_agent():
    assert isinstance(make_agent("ps"), ProgramSynthesisAgent)
    assert make_agent("adaboost", n_stumps=7).n_stumps == 7
    with pytest.raises(ValueError):
        make_agent("human")
    with pytest.raises(ValueError):
        run_protocol(1, OracleAgent(), n_reps=0)


def test_perf_record_and_csv():
    r = PerfRecord(16, "ps", 3, 40, [1.0, 0.5])
    assert r.alpha == 0.75 and r.beta_star == pytest.approx(beta_star(0.75))
    assert r.beta_star_per_rep == pytest.approx((1 + beta_star(0.5)) / 2)
    lines = records_to_csv([r], ["cfg"]).splitlines()
    assert lines[0] == "# cfg"
    assert lines[2].split(",")[:7] == ["16", "ps", "0.750000", f"{beta_star(0.75):.6f}",
                                       "0.250000", "3", "0"]
