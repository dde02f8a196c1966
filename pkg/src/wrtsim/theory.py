"""Closed-form height predictions and rigorous finite-n brackets.

Two kinds of results live here.  The asymptotic expansions for the tree
height evaluate the published formulas with every o(1) term dropped; each
evaluator returns a structured value carrying its main terms and the order
of what was dropped, because at log log / log log log scales a bare float
would overstate what the formula claims.  The crude bounds, in contrast,
are exact finite-n statements: the union-bound threshold gives
P(height >= x*) <= delta at the simulated n, and the first-child-path
criterion bounds the probability that the greedy chain falls behind a given
index sequence.  Those two brackets are the desk-scale checkable face of the
asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .walks import WalkPmf, bernoulli_walk_pmf
from .weights import WeightSequence

__all__ = [
    "Expansion",
    "height_expansion_powers_of_log",
    "height_first_order_quick",
    "crude_upper_threshold",
    "crude_lower_criterion",
    "iid_max_expansion",
    "greedy_violation",
]


@dataclass(frozen=True)
class Expansion:
    """A formula value with explicit slack metadata."""

    value: float
    terms: dict
    dropped: str          # order of the omitted correction
    slack: float = 0.0    # numerical slack added by series truncation

    def __float__(self):
        return self.value


def height_expansion_powers_of_log(n: float, alpha: float, logL_at_logn: float = 0.0) -> Expansion:
    """Height expansion for mean depth varying like integrals of x^{-alpha} L.

        log n / (alpha llog)
      + log n / (alpha llog)^2 * [ sum_k r^k (logL + (k+1) logloglog n)
                                   + 1 + alpha + log alpha ],  r = logL/(alpha llog).

    The series needs |r| < 1; terms are accumulated until they fall below
    1e-14 of the partial sum, and the geometric tail bound joins the slack.
    The o(1) inside the bracket is dropped (order recorded).
    """
    ln = math.log(n)
    lln = math.log(ln)
    if lln <= 0:
        raise ValueError("need n > e^e for the double-log scale")
    llln = math.log(lln)
    r = logL_at_logn / (alpha * lln)
    if abs(r) >= 1.0:
        raise ValueError("series ratio |logL/(alpha log log n)| >= 1")
    first = ln / (alpha * lln)
    series = 0.0
    k = 0
    while True:
        term = r**k * (logL_at_logn + (k + 1) * llln)
        series += term
        k += 1
        if abs(term) < 1e-14 * max(abs(series), 1.0) or k > 10000:
            break
    tail = abs(r) ** k * (abs(logL_at_logn) + (k + 1) * abs(llln)) / max(1.0 - abs(r), 1e-9)
    bracket = series + 1.0 + alpha + math.log(alpha)
    second = first / (alpha * lln) * bracket
    return Expansion(
        value=first + second,
        terms={"first": first, "second": second, "bracket": bracket, "series": series},
        dropped="o(1) inside the bracket (scale log n/(log log n)^2)",
        slack=first / (alpha * lln) * tail,
    )


def height_first_order_quick(
    n: float | None, alpha: float, beta: float, log_n: float | None = None
) -> Expansion:
    """First-order height for quickly converging mean depth, by beta case.

    Pass ``log_n`` directly for scales where n itself overflows floats.
    """
    if alpha <= 1:
        raise ValueError("quick regimes require alpha > 1")
    if beta <= 0:
        raise ValueError("beta must be positive")
    ln = math.log(n) if log_n is None else float(log_n)
    if beta < 1:
        v = ln ** (1.0 - beta) / ((alpha - 1.0) * (1.0 - beta))
        return Expansion(v, {"log_n_power": 1.0 - beta}, "multiplicative 1 + o(1)")
    if beta == 1:
        lln = math.log(ln)
        return Expansion(lln / math.log(alpha), {"llog_n": lln}, "multiplicative 1 + o(1)")
    if ln <= 1 or math.log(ln) <= 0:
        raise ValueError("n too small for the triple-log scale")
    llln = math.log(math.log(ln))
    return Expansion(llln / math.log(beta), {"lllog_n": llln}, "multiplicative 1 + o(1)")


def crude_upper_threshold(
    seq: WeightSequence, n: int, delta: float, pmf: WalkPmf | None = None
) -> int:
    """Smallest integer x with n * P(H_n + 1 >= x) <= delta.

    P(tree height >= x*) <= delta holds rigorously at this finite n by the
    union bound over vertices; the walk tail includes the pmf's truncation
    loss, so the threshold stays conservative.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if pmf is None:
        pmf = bernoulli_walk_pmf(seq, n)
    for x in range(1, pmf.offset + len(pmf.probs) + 2):
        if n * pmf.prob_ge(x - 1) <= delta:
            return x
    raise RuntimeError("threshold search exhausted the walk support")  # pragma: no cover


def _cum_inv_W(seq: WeightSequence, top: int) -> np.ndarray:
    """cumsum of 1/W_i, prefixed with 0 (index k holds sum_{i<=k} 1/W_i)."""
    out = np.empty(top + 1, dtype=np.float64)
    out[0] = 0.0
    carry = 0.0
    lo = 1
    while lo <= top:
        hi = min(lo + (1 << 20) - 1, top)
        w = seq.weight_block(lo, hi + 1)
        Wb = carry + np.cumsum(w)
        out[lo : hi + 1] = 1.0 / Wb
        carry = float(Wb[-1])
        lo = hi + 1
    return np.cumsum(out)


def crude_lower_criterion(seq: WeightSequence, i_sequence) -> float:
    """Union bound on P(the greedy first-child chain falls behind i_r):

        sum_r exp( - sum_{i = i_r + 1}^{i_{r+1}} w_{i_r} / W_i ).

    Requires certified non-increasing positive weights (the chain argument
    compares the weight at the current endpoint with the weight at i_r).
    The sum runs over the given finite sequence, bounding violations up to
    its last entry; an empty step contributes a vacuous term of 1.
    """
    if seq.nonincreasing is not True:
        raise ValueError("criterion requires certified non-increasing weights")
    iseq = [int(v) for v in i_sequence]
    if iseq[0] != 1 or any(b < a for a, b in zip(iseq, iseq[1:])):
        raise ValueError("index sequence must start at 1 and be non-decreasing")
    cum = _cum_inv_W(seq, iseq[-1])
    total = 0.0
    for r in range(len(iseq) - 1):
        w_r = seq.weight_at(iseq[r])
        inner = w_r * float(cum[iseq[r + 1]] - cum[iseq[r]])
        total += math.exp(-inner)
    return total


def greedy_violation(greedy_path, i_sequence) -> bool:
    """Whether the recorded greedy chain ever falls behind the index sequence.

    The chain satisfies the height bound when I_r <= i_r for every r with
    i_r inside the tree; a truncated chain (no next child within n) counts as
    a violation at the first missing step whose bound lies inside the tree.
    """
    path = list(greedy_path)
    iseq = [int(v) for v in i_sequence]
    n = path[-1] if path else 1
    for r, bound in enumerate(iseq):
        if r < len(path):
            if path[r] > bound:
                return True
        else:
            return True  # chain ended before reaching this step
    return False


def iid_max_expansion(regime: str, n: float, **kw) -> Expansion:
    """Expansion of the maximum of n independent copies of the depth walk.

    Regimes (matching the tree-height cases):

    * ``powers_of_log_lt1``  alpha in (0,1): same shape as the tree height
      with bracket constant 1 + log alpha - log(1-alpha)
      (the tree has 1 + alpha + log alpha: the coefficient of
      log n/(log log n)^2 is where the two part ways)
    * ``powers_of_log_eq1_div`` alpha = 1 with diverging mean depth and
      J(x) = int_1^x L(u)/u du (requires mean depth at log n to be
      negligible against mean depth at n; the opposite case is unsupported)
    * ``powers_of_log_eq1_conv`` alpha = 1 with converging mean depth and
      I(x) = int_x^infty L(u)/u du (same caveat)
    * ``powers_of_log_gt1``  alpha > 1: log n / log log n (first order only)
    * ``quick_beta_lt1``     log n / ((alpha-1) (log log n)^beta)
    * ``quick_beta_eq1``     log n / (alpha log log n)
    * ``quick_beta_gt1``     log n / log log n
    """
    ln = math.log(n)
    lln = math.log(ln)
    llln = math.log(lln)
    if regime == "powers_of_log_lt1":
        alpha = kw["alpha"]
        logL = kw.get("logL_at_logn", 0.0)
        if not (0 < alpha < 1):
            raise ValueError("this case needs alpha in (0,1)")
        base = height_expansion_powers_of_log(n, alpha, logL)
        # swap the bracket constant: (1 + alpha + log alpha) -> (1 + log alpha - log(1-alpha))
        delta_const = -math.log(1.0 - alpha) - alpha
        second_scale = ln / (alpha * lln) ** 2
        return Expansion(
            value=base.value + second_scale * delta_const,
            terms={**base.terms, "constant_shift": delta_const},
            dropped=base.dropped,
            slack=base.slack,
        )
    if regime == "powers_of_log_eq1_div":
        logJ = kw["logJ_at_logn"]
        r = logJ / lln
        if abs(r) >= 1.0:
            raise ValueError("series ratio >= 1")
        series = logJ / (1.0 - r) + llln / (1.0 - r) ** 2
        return Expansion(
            value=ln / lln + ln / lln**2 * (series + 1.0),
            terms={"series": series},
            dropped="o(1) inside the bracket",
        )
    if regime == "powers_of_log_eq1_conv":
        logI = kw["logI_at_loglogn"]
        return Expansion(
            value=ln / lln + ln / lln**2 * (logI + llln + 1.0),
            terms={"logI": logI},
            dropped="o(1) inside the bracket",
        )
    if regime == "powers_of_log_gt1":
        return Expansion(ln / lln, {}, "multiplicative 1 + o(1)")
    if regime == "quick_beta_lt1":
        alpha, beta = kw["alpha"], kw["beta"]
        return Expansion(ln / ((alpha - 1.0) * lln**beta), {}, "multiplicative 1 + o(1)")
    if regime == "quick_beta_eq1":
        alpha = kw["alpha"]
        return Expansion(ln / (alpha * lln), {}, "multiplicative 1 + o(1)")
    if regime == "quick_beta_gt1":
        return Expansion(ln / lln, {}, "multiplicative 1 + o(1)")
    raise ValueError(f"unsupported comparison regime: {regime}")
