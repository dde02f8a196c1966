"""Exact computations for inhomogeneous Bernoulli walks tied to tree heights.

The height of the (n+1)-th vertex is distributed as 1 + H_n, where
H_j = sum_{i=2..j} B_i and the B_i are independent Bernoulli(w_i/W_i).
This module computes, by dynamic programming over walk values:

* plain walk pmfs (sequential convolution),
* barrier-constrained point probabilities
  P(H_n = t_n, H_{i_r} <= r for every epoch boundary r < t_n),
  which equal the expected weighted count of barrier-respecting vertices
  at height t_n,
* the same quantity through an exponential change of measure: a product
  prefactor times a weighted excursion expectation of the recentred epoch
  walk S_r = sum_{s<=r} (X_s - 1), along with the closed-form upper bound
  obtained by dropping the excursion term,
* the coupled pair walk (two walks forbidden to jump together after their
  split index), which turns pair sums over vertices into one-dimensional
  sums — verified against exhaustive enumeration at small n,
* first/second-moment reports: exact value, lower/upper envelopes, the
  split-tail error terms and the post-window excursion expectation.

Epoch schedules enter as plain integer arrays ``epochs = [1=i_0, i_1, ...,
i_{t_n}]`` with i_{t_n-1} < n <= i_{t_n}, plus per-epoch tilts
``thetas[r-1] = theta_r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import enumerate_small
from .weights import WeightSequence, q_array

__all__ = [
    "WalkPmf",
    "TiltedParams",
    "TiltedIdentity",
    "ManyToTwoResult",
    "MomentReport",
    "bernoulli_walk_pmf",
    "walk_pair_pmf",
    "validate_epochs",
    "epoch_of_index",
    "tilted_params",
    "barrier_probability",
    "tilted_identity_eval",
    "excursion_expectation",
    "many_to_two_check",
    "second_moment_exact",
    "second_moment_bound",
    "moment_report",
    "en_lower_check",
]

_Q2_CAP = 2000  # exact pair-walk second moment: O(n t^2) DP with stored suffixes


# ----------------------------------------------------------------------
# plain pmf
# ----------------------------------------------------------------------


@dataclass
class WalkPmf:
    """pmf of a nonnegative integer walk value, starting at ``offset``."""

    probs: np.ndarray
    offset: int
    n: int
    trunc_loss: float = 0.0

    def mass(self) -> float:
        return float(self.probs.sum())

    def mean(self) -> float:
        k = np.arange(self.offset, self.offset + len(self.probs))
        return float(np.dot(k, self.probs))

    def prob_ge(self, x: int) -> float:
        """Upper bound on P(value >= x): computed tail plus truncation loss."""
        k = x - self.offset
        if k <= 0:
            return min(1.0, self.mass() + self.trunc_loss)
        if k >= len(self.probs):
            return self.trunc_loss
        return float(self.probs[k:].sum()) + self.trunc_loss

    def tv_distance(self, other: dict | "WalkPmf") -> float:
        mine = {self.offset + k: float(p) for k, p in enumerate(self.probs)}
        if isinstance(other, WalkPmf):
            other = {other.offset + k: float(p) for k, p in enumerate(other.probs)}
        keys = set(mine) | set(other)
        return 0.5 * sum(abs(mine.get(k, 0.0) - other.get(k, 0.0)) for k in keys)


def _step(probs: np.ndarray, q: float, out: np.ndarray) -> None:
    """One Bernoulli(q) convolution step into ``out`` (same length, overflow drops)."""
    np.multiply(probs, 1.0 - q, out=out)
    out[1:] += probs[:-1] * q


def bernoulli_walk_pmf(seq: WeightSequence, n: int, tol: float = 1e-17) -> WalkPmf:
    """Exact pmf of H_n = sum_{i=2..n} Bernoulli(w_i/W_i).

    The support is grown lazily; once the top cell stays below ``tol`` the
    support freezes and further leakage is accumulated into ``trunc_loss``
    (reported, and added to tail probabilities).
    """
    q = q_array(seq, n)
    probs = np.array([1.0])
    buf = np.empty(1)
    loss = 0.0
    for i in range(2, n + 1):
        qi = float(q[i - 1])
        if probs[-1] * qi > tol:
            probs = np.append(probs, 0.0)
            buf = np.empty(len(probs))
        else:
            loss += probs[-1] * qi
        _step(probs, qi, buf[: len(probs)])
        probs, buf = buf[: len(probs)], probs
    return WalkPmf(probs=probs.copy(), offset=0, n=n, trunc_loss=loss)


def walk_pair_pmf(seq: WeightSequence, j: int, n: int) -> np.ndarray:
    """Joint pmf P(H_j = a, H_n = b) as a (j) x (n) array (small-n oracle)."""
    if not (1 <= j <= n):
        raise ValueError("need 1 <= j <= n")
    q = q_array(seq, n)
    pj = np.array([1.0])
    for i in range(2, j + 1):
        new = np.zeros(len(pj) + 1)
        new[:-1] = pj * (1 - q[i - 1])
        new[1:] += pj * q[i - 1]
        pj = new
    joint = np.diag(pj)  # after step j: H_n value == H_j value
    for i in range(j + 1, n + 1):
        new = np.zeros((joint.shape[0], joint.shape[1] + 1))
        new[:, :-1] = joint * (1 - q[i - 1])
        new[:, 1:] += joint * q[i - 1]
        joint = new
    return joint


# ----------------------------------------------------------------------
# epochs, tilts
# ----------------------------------------------------------------------


def validate_epochs(epochs: np.ndarray, n: int) -> int:
    """Check i_0 = 1 < i_1 < ... and i_{t_n-1} < n <= i_{t_n}; returns t_n."""
    epochs = np.asarray(epochs)
    if epochs[0] != 1:
        raise ValueError("epochs must start at i_0 = 1")
    if np.any(np.diff(epochs) <= 0):
        raise ValueError("epoch boundaries must be strictly increasing")
    tn = len(epochs) - 1
    if tn < 1 or not (epochs[tn - 1] < n <= epochs[tn]):
        raise ValueError("need i_{t_n - 1} < n <= i_{t_n}")
    return tn


def epoch_of_index(epochs: np.ndarray, n: int) -> np.ndarray:
    """t_i for i = 2..n as an array (index i-2): the epoch containing i."""
    out = np.empty(n - 1, dtype=np.int64)
    r = 1
    for i in range(2, n + 1):
        while i > epochs[r]:
            r += 1
        out[i - 2] = r
    return out


@dataclass
class TiltedParams:
    """Per-index tilted success probabilities p_i and their epoch tilts."""

    thetas: np.ndarray       # theta_r for r = 1..t_n (index r-1)
    theta_by_index: np.ndarray  # theta_{t_i} for i = 2..n
    p: np.ndarray            # p_i for i = 2..n
    q: np.ndarray            # q_i for i = 2..n


def tilted_params(q: np.ndarray, epochs: np.ndarray, thetas: np.ndarray, n: int) -> TiltedParams:
    """p_i = e^{theta_{t_i}} q_i / (1 + (e^{theta_{t_i}} - 1) q_i) for i = 2..n."""
    ti = epoch_of_index(epochs, n)
    th_i = np.asarray(thetas, dtype=np.float64)[ti - 1]
    qi = q[1:n]
    em1 = np.expm1(th_i)
    p = np.exp(th_i) * qi / (1.0 + em1 * qi)
    return TiltedParams(np.asarray(thetas, dtype=np.float64), th_i, p, qi)


# ----------------------------------------------------------------------
# barrier DP (original measure)
# ----------------------------------------------------------------------


_DP_BUDGET = 2_000_000


def barrier_probability(seq: WeightSequence, epochs, n: int, n_cap: int = _DP_BUDGET) -> float:
    """P(H_n = t_n and H_{i_r} <= r for all r < t_n): expected weighted count
    of height-t_n vertices whose ancestral line respects the barrier."""
    if n > n_cap:
        raise ValueError(
            f"n={n} exceeds the DP budget {n_cap} (one vector op per index); "
            f"pass n_cap={n} to override"
        )
    epochs = np.asarray(epochs, dtype=np.int64)
    tn = validate_epochs(epochs, n)
    q = q_array(seq, n)
    return _barrier_dp(q, epochs, tn, n)


def _barrier_dp(q: np.ndarray, epochs: np.ndarray, tn: int, n: int) -> float:
    bdry = {int(epochs[r]): r for r in range(1, tn)}
    dist = np.zeros(tn + 1)
    dist[0] = 1.0
    buf = np.empty_like(dist)
    for i in range(2, n + 1):
        _step(dist, float(q[i - 1]), buf)
        dist, buf = buf, dist
        r = bdry.get(i)
        if r is not None:
            dist[r + 1 :] = 0.0
    return float(dist[tn])


# ----------------------------------------------------------------------
# tilted identity
# ----------------------------------------------------------------------


def excursion_expectation(
    p: np.ndarray, epochs: np.ndarray, thetas: np.ndarray, n: int, start_epoch: int = 0
) -> float:
    """E[ exp( sum_{r} (theta_{r+1} - theta_r) S_r ) ; S_{t_n} = 0, S_r <= 0 ]

    under independent Bernoulli(p_i) steps, where S_r recentres the epoch sums
    by one per epoch.  ``start_epoch = T`` restricts to epochs T+1..t_n and
    measures S relative to S_T (the post-window excursion used by the
    second-moment criterion); p is indexed by i-2 over the full range.
    """
    tn = len(epochs) - 1
    k = tn - start_epoch  # number of epochs in play
    if k <= 0:
        raise ValueError("window must contain at least one epoch")
    off = k  # v = S - S_T + (partial epoch sum); valid states v in [-k, 1]
    dist = np.zeros(k + 2)
    dist[off] = 1.0
    buf = np.empty_like(dist)
    i_lo = int(epochs[start_epoch]) + 1
    r = start_epoch + 1
    for i in range(i_lo, n + 1):
        _step(dist, float(p[i - 2]), buf)
        dist, buf = buf, dist
        if i == epochs[r] and r < tn:
            dist[:-1] = dist[1:]  # boundary: S_r = v - 1
            dist[-1] = 0.0
            dist[off + 1 :] = 0.0  # S_r <= 0 strictly enforced before t_n
            svals = np.minimum(np.arange(len(dist)) - off, 0)
            dist *= np.exp((thetas[r] - thetas[r - 1]) * svals)
            r += 1
    # final epoch ends at i = n: S_{t_n} = v - 1 must be 0
    return float(dist[off + 1])


@dataclass
class TiltedIdentity:
    lhs: float            # product prefactor x excursion expectation
    upper_bound: float    # closed form: exp(sum (e^theta - 1) q - sum theta)
    excursion: float
    log_prefactor: float


def tilted_identity_eval(
    seq: WeightSequence, epochs, thetas, n: int, n_cap: int = _DP_BUDGET
) -> TiltedIdentity:
    """Both sides of the change-of-measure identity for the barrier quantity.

    lhs = prod_{i=2..n} (1 + (e^{theta_{t_i}} - 1) q_i) * exp(-sum_r theta_r)
          * E[exp(sum (theta_{r+1}-theta_r) S_r); S_{t_n}=0, S_r <= 0]
    and the bound replaces the expectation by 1 and the product by its
    exponential majorant.  With theta identically 0 the lhs reduces to the
    plain barrier probability.
    """
    if n > n_cap:
        raise ValueError(
            f"n={n} exceeds the DP budget {n_cap}; pass n_cap={n} to override"
        )
    epochs = np.asarray(epochs, dtype=np.int64)
    thetas = np.asarray(thetas, dtype=np.float64)
    tn = validate_epochs(epochs, n)
    if len(thetas) < tn:
        raise ValueError("need one theta per epoch")
    q = q_array(seq, n)
    tp = tilted_params(q, epochs, thetas, n)
    log_prod = float(np.sum(np.log1p(np.expm1(tp.theta_by_index) * tp.q)))
    log_theta = -float(np.sum(thetas[:tn]))
    exc = excursion_expectation(tp.p, epochs, thetas, n)
    lhs = math.exp(log_prod + log_theta) * exc
    ub = math.exp(float(np.sum(np.expm1(tp.theta_by_index) * tp.q)) + log_theta)
    return TiltedIdentity(lhs=lhs, upper_bound=ub, excursion=exc, log_prefactor=log_prod + log_theta)


# ----------------------------------------------------------------------
# coupled pair walk (split at l, no joint jumps after the split)
# ----------------------------------------------------------------------


def _pair_step(joint: np.ndarray, q: float, out: np.ndarray) -> None:
    """One conditioned-pair step: (1,0),(0,1) w.p. q/(1+q); (0,0) w.p. (1-q)/(1+q)."""
    a = q / (1.0 + q)
    b = (1.0 - q) / (1.0 + q)
    np.multiply(joint, b, out=out)
    out[1:, :] += a * joint[:-1, :]
    out[:, 1:] += a * joint[:, :-1]


def _resolve_f(f) -> callable:
    if callable(f):
        return f
    kind = f[0]
    if kind == "one":
        return lambda lab: 1.0
    if kind == "label_eq":
        target = f[1]
        return lambda lab: 1.0 if lab == target else 0.0
    if kind == "identity":
        return float
    raise ValueError(f"unknown label functional: {f}")


def _resolve_F(F, n: int):
    """Returns (path_fn, final_fn): path_fn for enumeration, final_fn(height) for DP.

    Only final-height functionals are supported in the declared family, so
    both sides stay exactly computable.
    """
    kind = F[0]
    if kind == "one":
        return (lambda path: 1.0), (lambda h: 1.0)
    if kind == "final_eq":
        target = F[1]
        return (lambda path: 1.0 if path[-1] == target else 0.0), (
            lambda h: 1.0 if h == target else 0.0
        )
    if kind == "final_le":
        target = F[1]
        return (lambda path: 1.0 if path[-1] <= target else 0.0), (
            lambda h: 1.0 if h <= target else 0.0
        )
    raise ValueError(f"unknown path functional: {F}")


@dataclass
class ManyToTwoResult:
    lhs: float
    rhs: float

    @property
    def diff(self) -> float:
        return abs(self.lhs - self.rhs)


def many_to_two_check(seq: WeightSequence, n: int, f, F) -> ManyToTwoResult:
    """Pair-sum identity: enumeration (lhs) vs coupled-walk evaluation (rhs).

    lhs averages f(label of the most recent common ancestor) x F(path) x
    F(path) over weight-biased vertex pairs in the enumerated tree law; rhs
    evaluates sum_l (w_l/W_l)^2 prod_{i>l}(1 - q_i^2) f(l) E[F F-bar] with the
    split-coupled pair walk.
    """
    if n > 6:
        raise ValueError("pair enumeration is supported for n <= 6")
    f_fn = _resolve_f(f)
    path_fn, final_fn = _resolve_F(F, n)
    law = enumerate_small(seq, n)
    lhs = law.pair_functional(f_fn, path_fn)

    q = q_array(seq, n)
    rhs = 0.0
    size = n + 1
    for ell in range(1, n + 1):
        if f_fn(ell) == 0.0 or q[ell - 1] == 0.0:
            continue
        # forward joint DP over (H, Hbar)
        joint = np.zeros((size, size))
        joint[0, 0] = 1.0
        buf = np.empty_like(joint)
        for i in range(2, n + 1):
            qi = float(q[i - 1])
            if i < ell:
                # diagonal step: both walks share the same jump
                np.multiply(joint, 1.0 - qi, out=buf)
                buf[1:, 1:] += qi * joint[:-1, :-1]
                joint, buf = buf, joint
            elif i == ell:
                joint[1:, 1:] = joint[:-1, :-1]
                joint[0, :] = 0.0
                joint[:, 0] = 0.0
            else:
                _pair_step(joint, qi, buf)
                joint, buf = buf, joint
        finals = np.array([final_fn(h) for h in range(size)])
        eff = float(finals @ joint @ finals)
        pref = q[ell - 1] ** 2 * float(np.prod(1.0 - q[ell:n] ** 2))
        rhs += pref * f_fn(ell) * eff
    return ManyToTwoResult(lhs=lhs, rhs=rhs)


# ----------------------------------------------------------------------
# exact second moment of the barrier quantity and its envelope
# ----------------------------------------------------------------------


def second_moment_exact(seq: WeightSequence, epochs, n: int) -> float:
    """Exact expectation of the squared barrier quantity, via the pair walk.

    Requires n = i_{t_n} (the window bookkeeping assumes complete epochs) and
    n <= 2000: the suffix-value DP stores one (t_n+1)^2 table per index.
    """
    epochs = np.asarray(epochs, dtype=np.int64)
    tn = validate_epochs(epochs, n)
    if epochs[tn] != n:
        raise ValueError("exact second moment requires n = i_{t_n}")
    if n > _Q2_CAP:
        raise ValueError(f"exact second moment supported for n <= {_Q2_CAP}")
    q = q_array(seq, n)
    m = tn + 1
    bdry = {int(epochs[r]): r for r in range(1, tn)}

    # suffix values V[i][a, b]: success probability given joint state after
    # step i (all barrier checks at boundaries <= i already applied)
    V = [None] * (n + 1)
    v = np.zeros((m, m))
    v[tn, tn] = 1.0
    V[n] = v
    for i in range(n, 1, -1):
        qi = float(q[i - 1])
        nv = np.empty((m, m))
        _pair_step_value(V[i], qi, nv)
        r = bdry.get(i - 1)
        if r is not None:
            nv[r + 1 :, :] = 0.0
            nv[:, r + 1 :] = 0.0
        V[i - 1] = nv

    # forward diagonal walk (shared jumps), with boundary pruning
    diag = np.zeros(m)
    diag[0] = 1.0
    total = q[0] ** 2 * float(np.prod(1.0 - q[1:n] ** 2)) * float(V[1][0, 0])
    for ell in range(2, n + 1):
        dl = np.zeros(m)
        dl[1:] = diag[:-1]  # forced joint jump at the split index
        r = bdry.get(ell)
        if r is not None:
            dl[r + 1 :] = 0.0
        pref = q[ell - 1] ** 2 * float(np.prod(1.0 - q[ell:n] ** 2))
        total += pref * float(np.dot(dl, np.diagonal(V[ell])))
        qi = float(q[ell - 1])
        nd = diag * (1.0 - qi)
        nd[1:] += diag[:-1] * qi
        diag = nd
        if r is not None:
            diag[r + 1 :] = 0.0
    return total


def _pair_step_value(v: np.ndarray, q: float, out: np.ndarray) -> None:
    """Backward conditioned-pair step on a value function."""
    a = q / (1.0 + q)
    b = (1.0 - q) / (1.0 + q)
    np.multiply(v, b, out=out)
    out[:-1, :] += a * v[1:, :]
    out[:, :-1] += a * v[:, 1:]


def second_moment_bound(
    seq: WeightSequence, epochs, thetas, n: int, exact_first_moment: float
) -> float:
    """Envelope for the squared barrier quantity from the pair decomposition:

    (prod (1-p_i^2)^{-1}) exp(sum e^{2 theta} q^2) E[Q]^2
      + exp(sum (e^theta - 1) q - sum theta)
        * sum_{l>=2} q_l^2 exp(theta_{t_l} + sum_{i>l}(e^theta - 1) q_i
                               - sum_{r > t_l} theta_r).
    """
    epochs = np.asarray(epochs, dtype=np.int64)
    thetas = np.asarray(thetas, dtype=np.float64)
    tn = validate_epochs(epochs, n)
    if epochs[tn] != n:
        raise ValueError("the envelope requires n = i_{t_n}")
    q = q_array(seq, n)
    tp = tilted_params(q, epochs, thetas, n)
    ti = epoch_of_index(epochs, n)

    log_main = -float(np.sum(np.log1p(-tp.p**2))) + float(
        np.sum(np.exp(2.0 * tp.theta_by_index) * tp.q**2)
    )
    term_main = math.exp(log_main) * exact_first_moment**2

    gq = np.expm1(tp.theta_by_index) * tp.q  # (e^theta - 1) q_i, i = 2..n
    suffix_gq = np.concatenate([np.cumsum(gq[::-1])[::-1], [0.0]])  # sum over i > l
    theta_cum = np.concatenate([[0.0], np.cumsum(thetas[:tn])])
    log_front = float(np.sum(gq)) - float(theta_cum[tn])
    total_tail = 0.0
    for ell in range(2, n + 1):
        tl = int(ti[ell - 2])
        log_term = (
            float(thetas[tl - 1])
            + float(suffix_gq[ell - 1])
            - float(theta_cum[tn] - theta_cum[tl])
        )
        total_tail += q[ell - 1] ** 2 * math.exp(log_term)
    return term_main + math.exp(log_front) * total_tail


# ----------------------------------------------------------------------
# moment report
# ----------------------------------------------------------------------


@dataclass
class MomentReport:
    n: int
    t_n: int
    T: int
    first_moment_exact: float
    first_moment_upper: float   # closed-form envelope
    first_moment_lower: float   # product-minorant x excursion expectation
    excursion_full: float
    E_window: float             # post-window excursion expectation E(n)
    delta1: float
    delta1_tail_bound: float | None
    delta2: float
    second_moment_exact: float | None
    second_moment_bound: float | None


def moment_report(
    seq: WeightSequence,
    epochs,
    thetas,
    n: int,
    T: int,
    delta_horizon: int | None = None,
) -> MomentReport:
    """All first/second-moment quantities for the barrier count at one n.

    ``T`` is the window start (T < t_n); delta sums run over the barrier
    epochs up to ``delta_horizon`` (default t_n) with a certified tail bound
    past the horizon when the family provides one.
    """
    epochs = np.asarray(epochs, dtype=np.int64)
    thetas = np.asarray(thetas, dtype=np.float64)
    tn = validate_epochs(epochs, n)
    if not (0 <= T < tn):
        raise ValueError("need 0 <= T < t_n")
    if delta_horizon is None:
        delta_horizon = tn
    q = q_array(seq, int(epochs[min(delta_horizon, tn)]))
    tp = tilted_params(q[: n], epochs, thetas, n)

    exact = _barrier_dp(q, epochs, tn, n)
    ub = math.exp(float(np.sum(np.expm1(tp.theta_by_index) * tp.q)) - float(np.sum(thetas[:tn])))
    exc = excursion_expectation(tp.p, epochs, thetas, n)
    lower = (
        math.exp(
            float(np.sum(np.expm1(tp.theta_by_index) * tp.q))
            - 0.5 * float(np.sum(np.exp(2 * tp.theta_by_index) * tp.q**2))
            - float(np.sum(thetas[:tn]))
        )
        * exc
    )
    # post-window excursion: epochs T+1..t_n (needs complete epochs: n = i_{t_n})
    E_window = None
    if epochs[tn] == n:
        E_window = excursion_expectation(tp.p, epochs, thetas, n, start_epoch=T)

    # delta sums over i > i_T within the horizon
    iT = int(epochs[T])
    hz = int(epochs[min(delta_horizon, tn)])
    ti_full = epoch_of_index(epochs, hz)
    th_full = thetas[ti_full - 1]
    qi_full = q[1:hz]
    mask = np.arange(2, hz + 1) > iT
    delta1 = float(np.sum(np.exp(2.0 * th_full[mask]) * qi_full[mask] ** 2))
    # remainder past the horizon, certified at the final provided tilt level
    # (exact for constant tilts; later epochs carry larger tilts, so this is a
    # truncation indicator, not a bound on the full series)
    from .weights import prefix_at

    stats = prefix_at(seq, [hz])[0]
    base_tail = seq.sq_ratio_tail_bound(hz, stats.W)
    tail = None
    if base_tail is not None:
        tail = math.exp(2.0 * float(thetas[min(delta_horizon, tn) - 1])) * base_tail

    # delta2: sum over l > i_T of e^{2 theta_{t_l}} q_l^2
    #   * exp( sum_{r=T+1}^{t_l - 1} theta_r - sum_{i=i_T+1}^{i_{t_l - 1}} (e^theta - 1) q_i )
    gq = np.expm1(th_full) * qi_full  # i = 2..hz
    theta_cum = np.concatenate([[0.0], np.cumsum(thetas)])
    # cumulative gq up to each epoch boundary
    gq_cum = np.concatenate([[0.0], np.cumsum(gq)])  # index by i-1
    delta2 = 0.0
    for ell in range(iT + 1, hz + 1):
        tl = int(ti_full[ell - 2]) if ell >= 2 else 0
        s_theta = float(theta_cum[max(tl - 1, T)] - theta_cum[T]) if tl - 1 >= T else 0.0
        i_hi = int(epochs[tl - 1])
        s_gq = float(gq_cum[max(i_hi, iT) - 1] - gq_cum[iT - 1]) if i_hi > iT else 0.0
        delta2 += (
            math.exp(2.0 * float(th_full[ell - 2]))
            * qi_full[ell - 2] ** 2
            * math.exp(s_theta - s_gq)
        )

    q2 = None
    q2_bound = None
    if epochs[tn] == n and n <= _Q2_CAP:
        q2 = second_moment_exact(seq, epochs, n)
        q2_bound = second_moment_bound(seq, epochs, thetas, n, exact)
    return MomentReport(
        n=n,
        t_n=tn,
        T=T,
        first_moment_exact=exact,
        first_moment_upper=ub,
        first_moment_lower=lower,
        excursion_full=exc,
        E_window=E_window,
        delta1=delta1,
        delta1_tail_bound=tail,
        delta2=delta2,
        second_moment_exact=q2,
        second_moment_bound=q2_bound,
    )


# ----------------------------------------------------------------------
# window-excursion trend report
# ----------------------------------------------------------------------


@dataclass
class WindowTrendRow:
    n: int
    t_n: int
    T: int
    E_window: float
    log_E_per_epoch: float
    part2_value: float  # exp(-(theta_{t_n} - theta_T) sqrt(t_n - T)) reference scale


def en_lower_check(seq: WeightSequence, schedule, n_grid, T_fn=None) -> list[WindowTrendRow]:
    """log E(n) / (t_n - T(n)) over a grid of complete-epoch sizes.

    The calibration e^{theta_t} (a_{i_t} - a_{i_{t-1}}) = 1 must hold past the
    schedule's monotone index; rows report the per-epoch log of the window
    excursion (which should stay bounded below) and the comparison scale from
    the square-root envelope (reported, not asserted: its constant is not
    pinned down).
    """
    rows = []
    for n in n_grid:
        tn = schedule.t_of(n)
        if schedule.i_of(tn) != n:
            raise ValueError(f"n={n} is not an epoch boundary")
        T = schedule.default_T(n) if T_fn is None else int(T_fn(n))
        T = max(T, schedule.r0)
        if T >= tn:
            raise ValueError(f"window start T={T} must be below t_n={tn}")
        epochs, thetas = schedule.walk_inputs(n)
        q = q_array(seq, n)
        tp = tilted_params(q, epochs, thetas, n)
        E = excursion_expectation(tp.p, epochs, thetas, n, start_epoch=T)
        k = tn - T
        part2 = math.exp(-(thetas[tn - 1] - thetas[T - 1]) * math.sqrt(k)) if T >= 1 else float("nan")
        rows.append(
            WindowTrendRow(
                n=n, t_n=tn, T=T, E_window=E,
                log_E_per_epoch=math.log(E) / k if E > 0 else float("-inf"),
                part2_value=part2,
            )
        )
    return rows
