"""Success-run statistics, published reference numbers and group reports.

A machine with single-trial accuracy ``alpha`` passes the human protocol when
it gives ``K`` correct answers in a row within ``N`` trials.  The chance of
that is the absorbing-state mass of a (K+1)-state Markov chain after N steps.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .problems import PROBLEM_IDS, ss_lr

RUN_LENGTH = 7
TRIALS = 35
N_SUBJECTS = 20


def _check_probability(p, name):
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise DomainError(f"{name} must lie in [0, 1], got {p}")


def transition_matrix(alpha, K=RUN_LENGTH):
    """Column-stochastic chain over the current run length 0..K (K absorbing).

    Row 0 collects every failure (1 - alpha) from the transient states; the
    subdiagonal advances the run by one with probability alpha.
    """
    M = np.zeros((K + 1, K + 1))
    M[0, :K] = 1.0 - alpha
    M[np.arange(1, K + 1), np.arange(K)] = alpha
    M[K, K] = 1.0
    return M


def run_distribution(alpha, K=RUN_LENGTH, N=TRIALS):
    """State distribution after ``N`` steps, starting from run length 0."""
    _check_probability(alpha, "alpha")
    if K < 1 or N < 0:
        raise DomainError("need K >= 1 and N >= 0")
    M = transition_matrix(alpha, K)
    q = np.zeros(K + 1)
    q[0] = 1.0
    for _ in range(N):
        q = M @ q
    return q


def beta_star(alpha, K=RUN_LENGTH, N=TRIALS):
    """Probability of ``K`` consecutive correct answers within ``N`` trials."""
    return float(run_distribution(float(alpha), int(K), int(N))[K])


def alpha_star(beta):
    """Accuracy equivalent of a success fraction: (1 + beta) / 2."""
    beta = float(beta)
    _check_probability(beta, "beta")
    return (1.0 + beta) / 2.0


def simulate_beta_star(alpha, trials=1_000_000, K=RUN_LENGTH, N=TRIALS, rng=None):
    """Monte Carlo estimate of :func:`beta_star` and its standard error."""
    rng = rng if rng is not None else np.random.default_rng(0)
    hits = 0
    chunk = 100_000
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        correct = rng.random((m, N)) < alpha
        # run length after each trial; a run of K anywhere means success
        run = np.zeros(m, dtype=np.int64)
        ok = np.zeros(m, dtype=bool)
        for t in range(N):
            run = np.where(correct[:, t], run + 1, 0)
            ok |= run >= K
        hits += int(ok.sum())
        done += m
    p = hits / trials
    return p, math.sqrt(max(p * (1 - p), 1e-300) / trials)


# -- published numbers ---------------------------------------------------------------

NA = None

# problem: (human beta, PS sasquatch beta*, PS corrected beta*, best-CNN beta*,
#           LeNet alpha, GoogLeNet alpha, vanilla CNN alpha), all as fractions
_TABLE = {
    1: (0.95, 1.0000, 1.0000, 0.3388, 0.57, 0.50, 0.611),
    2: (1.00, 1.0000, 0.9251, 1.0000, 1.00, 1.00, 1.000),
    3: (1.00, 0.9917, 0.9729, 1.0000, NA, NA, 1.000),
    4: (1.00, 1.0000, 1.0000, 1.0000, 1.00, 1.00, 1.000),
    5: (0.80, 0.9859, 0.9975, 0.4624, 0.54, 0.50, 0.653),
    6: (0.40, 0.2057, 0.1551, 0.9806, 0.76, 0.86, 0.870),
    7: (0.80, 0.9417, 0.9379, 0.2282, 0.53, 0.50, 0.566),
    8: (1.00, 0.9998, 0.9997, 0.9995, 0.94, 0.91, 0.934),
    9: (0.85, 1.0000, 1.0000, 1.0000, 1.00, 1.00, 0.886),
    10: (0.95, 1.0000, 1.0000, 1.0000, 0.99, 1.00, 1.000),
    11: (1.00, 1.0000, 1.0000, 1.0000, NA, NA, 1.000),
    12: (0.90, 0.1656, 0.1251, 1.0000, 0.97, 1.00, 1.000),
    13: (0.85, 0.8891, 0.9809, 0.9932, NA, NA, 0.897),
    14: (0.95, 1.0000, 0.9999, 1.0000, 0.90, 1.00, 0.961),
    15: (0.90, 1.0000, 1.0000, 0.5776, 0.52, 0.50, 0.689),
    16: (0.55, 0.9996, 1.0000, 1.0000, 0.98, 0.50, 0.765),
    17: (0.55, 0.4006, 0.3773, 0.9998, 0.75, 0.95, 0.884),
    18: (0.85, 0.9999, 0.9994, 1.0000, 0.99, 0.99, 1.000),
    19: (0.95, 0.9259, 1.0000, 0.3094, 0.51, 0.50, 0.600),
    20: (0.95, 0.1134, 1.0000, 0.2282, 0.55, 0.50, 0.566),
    21: (0.65, 0.1134, 1.0000, 0.2815, 0.51, 0.51, 0.589),
    22: (1.00, 1.0000, 1.0000, 0.3724, 0.59, 0.50, 0.623),
    23: (1.00, 0.9905, 0.9967, 1.0000, 0.87, 1.00, 0.932),
}
MACHINE_COLUMNS = ("ps_sasquatch", "ps_corrected", "cnn_best", "lenet", "googlenet", "vanilla_cnn")

# AdaBoost test accuracy by parsing type: (sasquatch 20/80, corrected 20/80, corrected 1000/1000)
_BOOST_TABLE = {
    2: (0.5125, 0.5750, 0.5990),
    3: (0.6875, 0.5000, 0.5180),
    11: (1.0000, 1.0000, 1.0000),
    16: (0.9500, 1.0000, 1.0000),
    20: (0.5000, 1.0000, 1.0000),
    21: (0.5250, 0.3875, 0.4740),
}


@dataclass(frozen=True)
class HumanRecord:
    problem_id: int
    beta: float

    def __post_init__(self):
        k = self.beta * N_SUBJECTS
        if abs(k - round(k)) > 1e-9:
            raise ValueError("human beta must be a multiple of 1/20")


@dataclass
class PublishedTables:
    human: list
    machine: dict             # column -> {problem: value or None}
    boost: dict = field(default_factory=dict)

    def human_table(self):
        return {r.problem_id: r.beta for r in self.human}


def published_tables():
    """Baked-in reference numbers; missing cells are ``None``."""
    human = [HumanRecord(p, row[0]) for p, row in sorted(_TABLE.items())]
    machine = {c: {p: row[k + 1] for p, row in sorted(_TABLE.items())}
               for k, c in enumerate(MACHINE_COLUMNS)}
    boost = {p: dict(zip(("sasquatch_20", "corrected_20", "corrected_1000"), row))
             for p, row in sorted(_BOOST_TABLE.items())}
    return PublishedTables(human, machine, boost)


# -- reports ------------------------------------------------------------------------

def mean_stderr(values):
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if len(v) == 0:
        return math.nan, math.nan
    if len(v) == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


@dataclass
class GroupReport:
    rows: list              # per problem: dict(problem, ss, lr, beta, beta_star, flag)
    groups: list            # per type: dict(ss, lr, n, mean_beta, mean_beta_star)
    overall: dict           # {"beta": (mean, stderr), "beta_star": (mean, stderr)}

    def to_csv(self, header=()):
        out = io.StringIO()
        for h in header:
            out.write(f"# {h}\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["section", "problem", "ss", "lr", "n", "beta", "beta_star", "flag"])
        for r in self.rows:
            w.writerow(["problem", r["problem"], r["ss"], r["lr"], 1, _fmt(r["beta"]),
                        _fmt(r["beta_star"]), r["flag"]])
        for g in self.groups:
            w.writerow(["type", "", g["ss"], g["lr"], g["n"], _fmt(g["mean_beta"]),
                        _fmt(g["mean_beta_star"]), ""])
        (mb, sb), (ms, ss) = self.overall["beta"], self.overall["beta_star"]
        w.writerow(["overall", "", "", "", len(self.rows), _fmt(mb), _fmt(ms), ""])
        w.writerow(["overall_stderr", "", "", "", len(self.rows), _fmt(sb), _fmt(ss), ""])
        return out.getvalue()


def _fmt(v):
    return "NA" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6f}"


def group_report(records=None, human_table=None):
    """Per-problem comparison plus per-(SS, LR)-type and overall means.

    ``records`` maps problem id to a machine beta* (a number, or an object
    with a ``beta_star`` attribute); ``human_table`` maps problem id to the
    human beta.  Problems missing from either side are flagged.
    """
    records = records or {}
    if not isinstance(records, dict):
        records = {r.problem_id: r for r in records}
    human_table = human_table or {}
    pids = sorted(set(records) | set(human_table))
    rows = []
    for pid in pids:
        t = ss_lr(pid)
        ss, lr = t.ss, t.lr
        r = records.get(pid)
        bs = getattr(r, "beta_star", r)
        hb = human_table.get(pid)
        flag = ",".join(f for f, missing in (("no-machine", bs is None and records),
                                               ("no-human", hb is None and human_table))
                        if missing)
        rows.append(dict(problem=pid, ss=ss, lr=lr, beta=hb, beta_star=bs, flag=flag))
    groups = []
    for key in sorted({(r["ss"], r["lr"]) for r in rows}):
        sel = [r for r in rows if (r["ss"], r["lr"]) == key]
        groups.append(dict(ss=key[0], lr=key[1], n=len(sel),
                           mean_beta=mean_stderr(r["beta"] for r in sel)[0],
                           mean_beta_star=mean_stderr(r["beta_star"] for r in sel)[0]))
    overall = {"beta": mean_stderr(r["beta"] for r in rows),
               "beta_star": mean_stderr(r["beta_star"] for r in rows)}
    return GroupReport(rows, groups, overall)


__all__ = ["HumanRecord", "PublishedTables", "GroupReport", "alpha_star", "beta_star",
           "group_report", "mean_stderr", "published_tables", "run_distribution",
           "simulate_beta_star", "transition_matrix", "PROBLEM_IDS"]
