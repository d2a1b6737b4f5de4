"""Few-shot experiment protocol: agents, repeated runs and learning curves.

An agent is trained once per repetition on a small labelled set of samples
and then labels every test sample without further learning.  Each
repetition draws a fresh dataset from its own seed, so repetitions can run
in any order or in parallel and still aggregate to the same record.
"""

from __future__ import annotations

import copy
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import boost
from .errors import NoProgramFound
from .parsing import PRESETS, DegradationProfile, degrade_parsing, extract_parsing, vectorize_many
from .problems import NEG, POS, make_dataset, rule_oracle, ss_lr
from .rng import derive_seed, make_rng
from .stats import beta_star, mean_stderr
from .synth import Budget, accept_all, classify, synthesize

POSITIVE, NEGATIVE = POS.value, NEG.value


@dataclass
class Sample:
    parsing: object
    ground_truth: object = field(repr=False)
    label: str | None = None      # hidden from agents at test time


class Agent:
    """Train-then-predict interface; subclasses override both methods."""
    tag = "agent"

    def train(self, problem_id, samples, rng):
        pass

    def predict(self, sample, rng):
        raise NotImplementedError


class OracleAgent(Agent):
    """Applies the generating rule to the ground truth."""
    tag = "oracle"

    def train(self, problem_id, samples, rng):
        self.problem_id = problem_id

    def predict(self, sample, rng):
        return rule_oracle(self.problem_id, sample.ground_truth).value


class ChanceAgent(Agent):
    tag = "chance"

    def predict(self, sample, rng):
        return POSITIVE if rng.random() < 0.5 else NEGATIVE


class ProgramSynthesisAgent(Agent):
    """One synthesized program per category; test samples go to the better fit.

    When no program is found for a category within the budget, that category
    falls back to the accept-all program at the maximal cost.
    """
    tag = "ps"

    def __init__(self, budget=None):
        self.budget = budget or Budget()
        self.programs = {}
        self.fallbacks = []

    def train(self, problem_id, samples, rng):
        self.programs, self.fallbacks = {}, []
        for cat in (POSITIVE, NEGATIVE):
            ps = [s.parsing for s in samples if s.label == cat]
            try:
                self.programs[cat] = synthesize(ps, self.budget)
            except NoProgramFound:
                self.programs[cat] = accept_all(self.budget.max_cost_bits)
                self.fallbacks.append(cat)

    def predict(self, sample, rng):
        d = classify(sample.parsing, self.programs[POSITIVE], self.programs[NEGATIVE], rng,
                     time_limit=self.budget.per_fit_time_limit)
        return d.label


class AdaBoostAgent(Agent):
    tag = "adaboost"

    def __init__(self, n_stumps=100, max_shapes=8):
        self.n_stumps = n_stumps
        self.max_shapes = max_shapes

    def train(self, problem_id, samples, rng):
        X = vectorize_many([s.parsing for s in samples], self.max_shapes)
        y = np.array([1 if s.label == POSITIVE else -1 for s in samples])
        self.model = boost.train(X, y, self.n_stumps)

    def predict(self, sample, rng):
        x = vectorize_many([sample.parsing], self.max_shapes)[0]
        return POSITIVE if boost.predict(self.model, x)[0] > 0 else NEGATIVE


AGENTS = {"oracle": OracleAgent, "chance": ChanceAgent, "ps": ProgramSynthesisAgent,
          "adaboost": AdaBoostAgent}


def make_agent(name, **kw):
    try:
        cls = AGENTS[name]
    except KeyError:
        raise ValueError(f"unknown agent {name!r}; choose from {sorted(AGENTS)}") from None
    return cls(**kw)


@dataclass
class PerfRecord:
    problem_id: int
    agent: str
    train_pairs: int
    n_test: int
    rep_accuracies: list

    @property
    def n_reps(self):
        return len(self.rep_accuracies)

    @property
    def alpha(self):
        return float(np.mean(self.rep_accuracies))

    @property
    def stderr(self):
        return mean_stderr(self.rep_accuracies)[1]

    @property
    def beta_star(self):
        return beta_star(self.alpha)

    @property
    def beta_star_per_rep(self):
        """Mean of beta* over repetitions, logged next to beta*(mean alpha)."""
        return float(np.mean([beta_star(a) for a in self.rep_accuracies]))


def _samples(examples, profile, seed, rep, split_key):
    out = []
    for k, e in enumerate(examples):
        rng = make_rng(seed, rep, split_key, k)
        p = degrade_parsing(extract_parsing(e.ground_truth), profile, rng, e.ground_truth)
        out.append(Sample(p, e.ground_truth, e.category.value))
    return out


def run_rep(problem_id, agent, train_pairs, n_test, seed, rep, profile):
    """One repetition: fresh dataset, train, test.  Returns the accuracy."""
    ds_seed = derive_seed(seed, int(problem_id), rep)
    ds = make_dataset(problem_id, train_pairs, n_test, seed=ds_seed)
    train = _samples(ds.train, profile, ds_seed, rep, 0)
    test = _samples(ds.test, profile, ds_seed, rep, 1)
    agent = copy.deepcopy(agent)
    agent.train(problem_id, train, make_rng(ds_seed, 2))
    correct = 0
    for k, s in enumerate(test):
        blind = Sample(s.parsing, s.ground_truth, None)
        if agent.predict(blind, make_rng(ds_seed, 3, k)) == s.label:
            correct += 1
    return correct / len(test)


def _profile(profile):
    if profile is None:
        return PRESETS["corrected"]
    if isinstance(profile, DegradationProfile):
        return profile
    return PRESETS[profile]


def _map(fn, args, jobs):
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as ex:
        return list(ex.map(fn, *zip(*args)))


def run_protocol(problem_id, agent, train_pairs=3, n_test=94, n_reps=40, seed=0,
                 profile=None, jobs=1):
    """Repeat train-then-test ``n_reps`` times; alpha is the mean accuracy."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    profile = _profile(profile)
    args = [(problem_id, agent, train_pairs, n_test, seed, rep, profile) for rep in range(n_reps)]
    accs = _map(run_rep, args, jobs)
    return PerfRecord(int(problem_id), agent.tag, int(train_pairs), int(n_test), accs)


def learning_curve(problem_id, agent, t_values, reps=5, seed=0, n_test=94, profile=None,
                   jobs=1):
    """(t, alpha(t), stderr) for each number of training pairs ``t``."""
    t_values = list(t_values)
    if not t_values:
        raise ValueError("t_values must be non-empty")
    out = []
    for t in t_values:
        r = run_protocol(problem_id, agent, t, n_test, reps, seed, profile, jobs)
        out.append((int(t), r.alpha, r.stderr))
    return out


def curve_to_gnuplot(points, header=()):
    lines = [f"# {h}" for h in header]
    lines.append("# t alpha stderr")
    lines += [f"{t} {a:.6f} {s:.6f}" for t, a, s in points]
    return "\n".join(lines) + "\n"


def records_to_csv(records, header=()):
    out = io.StringIO()
    for h in header:
        out.write(f"# {h}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["problem", "agent", "alpha", "beta_star", "stderr", "ss", "lr", "n_reps",
                "train_pairs", "n_test", "beta_star_per_rep"])
    for r in records:
        t = ss_lr(r.problem_id)
        se = r.stderr
        w.writerow([r.problem_id, r.agent, f"{r.alpha:.6f}", f"{r.beta_star:.6f}",
                    "NA" if math.isnan(se) else f"{se:.6f}", t.ss, t.lr, r.n_reps,
                    r.train_pairs, r.n_test, f"{r.beta_star_per_rep:.6f}"])
    return out.getvalue()


__all__ = ["AGENTS", "AdaBoostAgent", "Agent", "ChanceAgent", "OracleAgent", "PerfRecord",
           "ProgramSynthesisAgent", "Sample", "curve_to_gnuplot", "learning_curve",
           "make_agent", "records_to_csv", "run_protocol", "run_rep"]
