"""Shared fixtures-in-code for the test suite: example families and oracles."""

import math

import numpy as np

from wrtsim.svfun import SvDescriptor
from wrtsim.weights import WeightSequence

EULER = 0.5772156649015329


def quick_decay_family(alpha: float, beta: float) -> WeightSequence:
    """w_n = exp(-(alpha-1) log^beta n) * beta log^{beta-1} n / n  (n >= 2, w1 = 1).

    Built so the total-weight tail equals exp(-(alpha-1) log^beta n)/(alpha-1)
    exactly, which puts the mean-depth gap in the quick-converging regime with
    an asymptotically constant corrective factor.  Tail bounds use w
    decreasing and W >= 1.
    """
    am1 = alpha - 1.0
    expr = (
        f"where(i < 1.5, 1.0, exp(-{am1!r}*log(maximum(i, 2.0))**{beta!r})"
        f"*{beta!r}*log(maximum(i, 2.0))**({beta!r}-1)/i)"
    )
    w_tail = f"exp(-{am1!r}*log(n)**{beta!r})/{am1!r}"
    sq_tail = (
        f"exp(-2*{am1!r}*log(n)**{beta!r})*{beta!r}*log(n)**({beta!r}-1)/(n*{am1!r})"
    )
    return WeightSequence.custom(
        expr, w1=1.0, sq_tail_expr=sq_tail, w_tail_expr=w_tail, nonincreasing=True
    )


def quick_decay_J(alpha: float, beta: float, n_probe: int = 1 << 22) -> SvDescriptor:
    """Constant corrective factor 1/((alpha-1) W_inf) for the quick family."""
    from wrtsim.weights import prefix_at

    seq = quick_decay_family(alpha, beta)
    st = prefix_at(seq, [n_probe])[0]
    w_inf = st.W + math.exp(-(alpha - 1.0) * math.log(n_probe) ** beta) / (alpha - 1.0)
    return SvDescriptor.const(1.0 / ((alpha - 1.0) * w_inf))


def synthetic_table_from_integral(alpha: float, L: SvDescriptor, n_max: int) -> WeightSequence:
    """A table whose mean-depth sum equals 1 + int_{log 2}^{log n} x^{-alpha} L dx.

    Inverts a_n - a_{n-1} = w_n / W_n: given target increments r_n, the
    weights are w_n = W_n r_n with W_n = W_{n-1} / (1 - r_n).
    """
    from scipy.integrate import quad

    ns = np.arange(1, n_max + 1, dtype=np.float64)
    targets = np.zeros(n_max)
    targets[0] = 1.0
    lo = math.log(2.0)
    vals = [0.0]
    grid = np.log(ns[1:])
    acc = 0.0
    prev = lo
    for g in grid:
        if g > prev:
            v, _ = quad(lambda x: x**-alpha * float(L.value(max(x, L.x0))), prev, g, limit=200)
            acc += v
            prev = g
        vals.append(acc)
    targets[1:] = 1.0 + np.asarray(vals[1:])
    r = np.diff(np.concatenate([[1.0], targets])).copy()
    r[0] = 1.0  # a_1 = 1 by construction
    if np.any(r[1:] >= 1.0) or np.any(r < 0):
        raise ValueError("target increments out of range")
    logW = -np.cumsum(np.log1p(-np.concatenate([[0.0], r[1:]])))
    W = np.exp(logW)
    w = W * r
    w[0] = 1.0
    return WeightSequence.table(w.tolist())


def tv_distance(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)
