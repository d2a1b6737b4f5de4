"""Two-program classification of a test parsing."""

from __future__ import annotations

from dataclasses import dataclass

from ..rng import make_rng
from .fit import EPS_POS, EPS_SCALE, TIME_LIMIT, FitResult, fit

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass
class Decision:
    label: str
    margin: float
    rule: str            # "one-fits", "both-fit", "neither-fits" or "tie"
    positive_fit: FitResult
    negative_fit: FitResult


def decide(fit_pos, fit_neg, cost_pos, cost_neg, rng=None):
    """Decision rule over two fit results.

    Exactly one program fits: take it (margin = the other's violation count).
    Both fit: smaller cost_bits + residual_bits.  Neither: fewer violations.
    Exact ties go to a coin flip from ``rng`` with margin 0.
    """
    if fit_pos.satisfiable != fit_neg.satisfiable:
        if fit_pos.satisfiable:
            return Decision(POSITIVE, float(fit_neg.violations), "one-fits", fit_pos, fit_neg)
        return Decision(NEGATIVE, float(fit_pos.violations), "one-fits", fit_pos, fit_neg)
    if fit_pos.satisfiable:
        rule = "both-fit"
        s_pos = cost_pos + fit_pos.residual_bits
        s_neg = cost_neg + fit_neg.residual_bits
    else:
        rule = "neither-fits"
        s_pos, s_neg = float(fit_pos.violations), float(fit_neg.violations)
    if s_pos < s_neg:
        return Decision(POSITIVE, s_neg - s_pos, rule, fit_pos, fit_neg)
    if s_neg < s_pos:
        return Decision(NEGATIVE, s_pos - s_neg, rule, fit_pos, fit_neg)
    rng = rng if rng is not None else make_rng(0)
    label = POSITIVE if rng.random() < 0.5 else NEGATIVE
    return Decision(label, 0.0, "tie", fit_pos, fit_neg)


def classify(test, p_pos, p_neg, rng=None, time_limit=TIME_LIMIT, eps_pos=EPS_POS,
             eps_scale=EPS_SCALE, solver=None):
    """Label a test parsing by which category program explains it better."""
    fp = fit(p_pos, test, time_limit, eps_pos, eps_scale, solver=solver)
    fn = fit(p_neg, test, time_limit, eps_pos, eps_scale, solver=solver)
    return decide(fp, fn, p_pos.cost_bits, p_neg.cost_bits, rng)


__all__ = ["Decision", "POSITIVE", "NEGATIVE", "classify", "decide"]
