"""Epoch schedules: the index sequences and tilts that track tree height.

A schedule pairs an increasing integer sequence ``i_t`` (the tree size at
which the height is expected to pass t) with per-epoch tilts
``theta_t = -log(a_{i_t} - a_{i_{t-1}})``, so that each tilted epoch
increment has mean one.  Heuristic worth keeping in mind (not used by any
computation here): an epoch's height increment is a sum of many rare
indicators, so under the calibrated tilt it behaves like a unit-rate
Poisson jump, which is what makes a branching-process picture of the
height plausible; this package only ever evaluates the finite-n objects.
Four closed-form regimes are supported, matching the ways the mean
attachment depth a_n can flatten out:

* ``powers_of_log``      a_n grows/converges like integrals of x^{-alpha} L(x)
                         up to log n; i_t = floor(exp(ell_t)) with
                         ell_t = alpha t log t - (1-alpha) t log log t
                                 - t log L(alpha t log t)
                                 - t (1 + alpha + (1-alpha) log alpha + eta)
* ``quick_beta_lt1``     a_inf - a_n ~ exp(-(alpha-1) log^beta n) J(...),
                         beta in (0,1); i_t = floor(exp(kappa^{1/beta}
                         t^{1/(1-beta)}))
* ``quick_beta_eq1``     beta = 1; i_t = floor(exp(kappa^t)), kappa > 1
* ``quick_beta_gt1``     beta > 1; i_t = floor(exp(exp(kappa^t))), kappa > 1

Indices below a calibrated start s0 fall back to i_t = t + 1; s0 is found by
scanning for the first index from which the closed form is strictly
increasing with positive a-differences, and r0 is the first index from which
the tilts are nonnegative and non-decreasing.  Both scans are numeric: the
underlying existence arguments give no constructive bound.

Beyond roughly e^700 the double/triple exponentials leave the float range;
the schedule keeps exact integers only up to its cap n_max and exposes
log i_t for the formula range beyond (integer-demanding operations then fail
loudly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .svfun import SvDescriptor
from .weights import WeightSequence, prefix_at

__all__ = [
    "Regime",
    "Schedule",
    "ScheduleError",
    "make_schedule",
    "ThetaResidualReport",
    "theta_expansion_residual",
    "KeyQuantityRow",
    "key_quantity",
    "AssumptionResidualReport",
    "assumption_residual",
]

_VARIANTS = ("powers_of_log", "quick_beta_lt1", "quick_beta_eq1", "quick_beta_gt1")


class ScheduleError(RuntimeError):
    pass


@dataclass(frozen=True)
class Regime:
    """Closed-form schedule family with its expansion predictions."""

    variant: str
    alpha: float
    eta: float = 0.0           # powers_of_log offset knob (sign controls summability)
    beta: float = 0.0
    kappa: float = 0.0
    L: SvDescriptor | None = None   # corrective factor (powers_of_log)
    J: SvDescriptor | None = None   # corrective factor (quick regimes)

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown regime variant: {self.variant}")
        if self.variant == "powers_of_log":
            if self.alpha <= 0:
                raise ValueError("powers_of_log requires alpha > 0")
        else:
            if self.alpha <= 1:
                raise ValueError("quick regimes require alpha > 1")
        if self.variant == "quick_beta_lt1" and not (0 < self.beta < 1 and self.kappa > 0):
            raise ValueError("quick_beta_lt1 requires beta in (0,1), kappa > 0")
        if self.variant == "quick_beta_eq1" and not self.kappa > 1:
            raise ValueError("quick_beta_eq1 requires kappa > 1")
        if self.variant == "quick_beta_gt1" and not (self.beta > 1 and self.kappa > 1):
            raise ValueError("quick_beta_gt1 requires beta > 1, kappa > 1")

    # ------------------------------------------------------------------
    @property
    def growth_sign(self) -> float:
        """For beta < 1: kappa^{1/beta} - (alpha-1)(1-beta) kappa.

        Its sign decides whether the per-epoch mass estimate diverges or
        vanishes, i.e. which side of the height bracket the schedule supports.
        """
        if self.variant != "quick_beta_lt1":
            raise ValueError("growth_sign is defined for the beta < 1 regime")
        return self.kappa ** (1.0 / self.beta) - (self.alpha - 1.0) * (1.0 - self.beta) * self.kappa

    def log_i_formula(self, t: float) -> float:
        """log of the closed-form index value at t (no flooring)."""
        v = self.variant
        if v == "powers_of_log":
            return self.ell(t)
        if v == "quick_beta_lt1":
            return self.kappa ** (1.0 / self.beta) * t ** (1.0 / (1.0 - self.beta))
        if v == "quick_beta_eq1":
            return self.kappa**t
        return math.exp(self.kappa**t)

    def ell(self, t: float) -> float:
        """The exponent sequence for powers_of_log (defined for t >= 2)."""
        if self.variant != "powers_of_log":
            raise ValueError("ell is defined for powers_of_log")
        if t < 2:
            raise ValueError("ell requires t >= 2")
        a = self.alpha
        lt = math.log(t)
        x = a * t * lt
        logL = float(self.L.log_value(max(x, self.L.x0))) if self.L is not None else 0.0
        return (
            a * t * lt
            - (1.0 - a) * t * math.log(lt)
            - t * logL
            - t * (1.0 + a + (1.0 - a) * math.log(a) + self.eta)
        )

    def theta_prediction(self, t: float) -> float:
        """Leading expansion of the calibrated tilt at epoch t."""
        v = self.variant
        a = self.alpha
        if v == "powers_of_log":
            x = a * t * math.log(t)
            logL = float(self.L.log_value(max(x, self.L.x0))) if self.L is not None else 0.0
            return (
                a * math.log(t)
                - (1.0 - a) * math.log(math.log(t))
                - (1.0 - a) * math.log(a)
                - logL
            )
        if v == "quick_beta_lt1":
            return (a - 1.0) * self.kappa * t ** (self.beta / (1.0 - self.beta))
        if v == "quick_beta_eq1":
            x = math.exp(self.kappa ** (t - 1.0))
            logJ = float(self.J.log_value(max(x, self.J.x0))) if self.J is not None else 0.0
            return (a - 1.0) * self.kappa ** (t - 1.0) - logJ
        # beta > 1: theta_t ~ (alpha-1) log ell_{t-1} with log ell_{t-1} = exp(beta kappa^{t-1})
        return (a - 1.0) * math.exp(self.beta * self.kappa ** (t - 1.0))

    @property
    def residual_form(self) -> str:
        """difference: |theta - prediction| -> 0; ratio: |theta/prediction - 1| -> 0."""
        return "difference" if self.variant == "powers_of_log" else "ratio"

    def key_quantity_prediction(self, t: float) -> float:
        """Predicted log of i_t * exp(sum (e^theta - 1) q - sum theta)."""
        v = self.variant
        if v == "powers_of_log":
            return -self.eta * t
        if v == "quick_beta_lt1":
            return self.growth_sign * t ** (1.0 / (1.0 - self.beta))
        if v == "quick_beta_eq1":
            return (self.kappa - self.alpha) / (self.kappa - 1.0) * self.kappa**t
        return math.exp(self.kappa**t) - (self.alpha - 1.0) * math.exp(
            self.beta * self.kappa ** (t - 1.0)
        )

    def default_T(self, n: int) -> int:
        """Window start for the lower-bound bracket (proof-convenient defaults)."""
        ln = math.log(n)
        v = self.variant
        if v == "powers_of_log":
            return max(1, int(ln ** (4.0 / 5.0)))
        if v == "quick_beta_lt1":
            return max(1, int(ln ** ((1.0 - self.beta) ** 1.5)))
        if v == "quick_beta_eq1":
            return max(1, int(math.sqrt(math.log(max(ln, 2.0)))))
        return max(1, int(math.log(max(math.log(max(ln, 2.0)), 2.0))))

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"variant": self.variant, "alpha": self.alpha}
        if self.variant == "powers_of_log":
            d["eta"] = self.eta
            if self.L is not None:
                d["L"] = self.L.to_dict()
        else:
            d["kappa"] = self.kappa
            if self.variant != "quick_beta_eq1":
                d["beta"] = self.beta
            if self.J is not None:
                d["J"] = self.J.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Regime":
        v = d["variant"]
        L = SvDescriptor.from_dict(d["L"]) if "L" in d else None
        J = SvDescriptor.from_dict(d["J"]) if "J" in d else None
        beta = {"quick_beta_eq1": 1.0}.get(v, d.get("beta", 0.0))
        return cls(
            variant=v,
            alpha=d["alpha"],
            eta=d.get("eta", 0.0),
            beta=beta,
            kappa=d.get("kappa", 0.0),
            L=L,
            J=J,
        )


@dataclass
class Schedule:
    """Calibrated epoch schedule over a weight sequence, capped at n_max."""

    regime: Regime
    seq: WeightSequence
    n_max: int
    s0: int
    r0: int
    t_max: int
    i_vals: np.ndarray      # i_t for t = 0..t_max (exact integers)
    a_at_i: np.ndarray      # a_{i_t}
    W_at_i: np.ndarray
    theta: np.ndarray       # theta_t for t = 1..t_max at index t (theta[0] unused)

    def i_of(self, t: int) -> int:
        if t < 0:
            raise ValueError("t must be >= 0")
        if t > self.t_max:
            raise ScheduleError(
                f"i_{t} exceeds the schedule cap n_max={self.n_max}; use log_i"
            )
        return int(self.i_vals[t])

    def log_i(self, t: float) -> float:
        """log i_t; valid past the cap (formula value, ignoring the floor)."""
        if t <= self.t_max:
            return math.log(float(self.i_vals[int(t)]))
        return self.regime.log_i_formula(t)

    def t_of(self, n: int) -> int:
        """The unique r with i_{r-1} < n <= i_r."""
        if not (1 <= n <= self.n_max):
            raise ScheduleError(f"n={n} outside [1, {self.n_max}]")
        if n > self.i_vals[self.t_max]:
            raise ScheduleError(f"n={n} beyond the last computed boundary")
        return int(np.searchsorted(self.i_vals, n, side="left"))

    def theta_of(self, t: int) -> float:
        if t < 1:
            raise ValueError("t must be >= 1")
        if t > self.t_max:
            raise ScheduleError(f"theta_{t} beyond the computed range")
        return float(self.theta[t])

    def default_T(self, n: int) -> int:
        return self.regime.default_T(n)

    def walk_inputs(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(epochs, thetas) arrays for the walk DPs at size n."""
        tn = self.t_of(n)
        return self.i_vals[: tn + 1].copy(), self.theta[1 : tn + 1].copy()

    def calibration_residual(self) -> np.ndarray:
        """|e^{theta_t}(a_{i_t} - a_{i_{t-1}}) - 1| for t in (s0, t_max]."""
        ts = np.arange(self.s0 + 1, self.t_max + 1)
        diffs = self.a_at_i[ts] - self.a_at_i[ts - 1]
        return np.abs(np.exp(self.theta[ts]) * diffs - 1.0)

    def key_quantity(self, t: int, s: int | None = None) -> "KeyQuantityRow":
        return key_quantity(self, t, s)

    def csv_rows(self):
        """(t, i_t, theta_t, a_{i_t}, key-quantity log) rows for dumping."""
        rows = []
        for t in range(1, self.t_max + 1):
            kq = self.key_quantity(t)
            rows.append((t, int(self.i_vals[t]), float(self.theta[t]),
                         float(self.a_at_i[t]), kq.log_value))
        return rows


def _formula_int(regime: Regime, t: int, n_max: int) -> int | None:
    """floor(exp(log_i_formula(t))) if within the cap, else None."""
    try:
        lv = regime.log_i_formula(t)
    except (ValueError, OverflowError):
        return None
    if lv > math.log(n_max) + 1e-12:
        return None
    return int(math.floor(math.exp(lv)))


def make_schedule(regime: Regime, seq: WeightSequence, n_max: int) -> Schedule:
    """Calibrate s0/r0 and materialise the schedule up to n_max."""
    if n_max < 4:
        raise ValueError("n_max too small")
    t_lo = 2 if regime.variant == "powers_of_log" else 1
    formula: dict[int, int] = {}
    t = t_lo
    while True:
        v = _formula_int(regime, t, n_max)
        if v is None:
            if t == t_lo:  # formula overflows immediately: nothing usable
                raise ScheduleError("no schedule indices within n_max")
            break
        formula[t] = v
        t += 1
    t_hi = t - 1

    # s0 scan: smallest s with the closed form strictly increasing on [s, t_hi]
    # and exceeding the fallback value s (= i_{s-1})
    s0 = None
    for s in range(max(t_lo, 1), t_hi + 1):
        if formula[s] <= s:
            continue
        if all(formula[u + 1] > formula[u] for u in range(s, t_hi)):
            s0 = s
            break
    if s0 is None:
        raise ScheduleError("no valid s0 within n_max: closed form never stabilises")

    while True:
        i_vals = np.array(
            [t + 1 for t in range(0, s0)] + [formula[t] for t in range(s0, t_hi + 1)],
            dtype=np.int64,
        )
        t_max = len(i_vals) - 1
        stats = prefix_at(seq, i_vals.tolist())
        by_n = {s.n: s for s in stats}
        a_at = np.array([by_n[int(n)].a for n in i_vals])
        W_at = np.array([by_n[int(n)].W for n in i_vals])
        diffs = np.diff(a_at)
        bad = np.nonzero(diffs[s0:] <= 0)[0]  # a-diff for t in (s0, t_max]
        if bad.size == 0:
            break
        s0 = s0 + int(bad[0]) + 1  # restart past the last nonpositive difference
        if s0 >= t_hi:
            raise ScheduleError("no valid s0 within n_max: a-differences vanish")
        while s0 < t_hi and (formula[s0] <= s0):
            s0 += 1

    theta = np.zeros(t_max + 1)
    for t in range(s0 + 1, t_max + 1):
        theta[t] = -math.log(a_at[t] - a_at[t - 1])

    # r0 scan: tilts nonnegative and non-decreasing from r0 on
    r0 = None
    for r in range(1, t_max + 1):
        seg = theta[r : t_max + 1]
        if np.all(seg >= 0) and np.all(np.diff(seg) >= 0):
            r0 = r
            break
    if r0 is None:
        raise ScheduleError("tilts never become monotone within the computed range")

    return Schedule(
        regime=regime,
        seq=seq,
        n_max=n_max,
        s0=s0,
        r0=r0,
        t_max=t_max,
        i_vals=i_vals,
        a_at_i=a_at,
        W_at_i=W_at,
        theta=theta,
    )


# ----------------------------------------------------------------------
# expansion residuals
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaResidualReport:
    ts: tuple
    residuals: tuple
    form: str
    passes: bool
    inconclusive: bool


def theta_expansion_residual(schedule: Schedule) -> ThetaResidualReport:
    """Tilt residuals against the regime's predicted expansion.

    Difference form for the log-power regime (the prediction carries all
    diverging terms); ratio form for the quick regimes.  Pass requires a
    strict decrease over the last half of the usable range; fewer than four
    usable epochs is inconclusive.
    """
    reg = schedule.regime
    ts = list(range(schedule.s0 + 1, schedule.t_max + 1))
    res = []
    for t in ts:
        pred = reg.theta_prediction(t)
        th = float(schedule.theta[t])
        if reg.residual_form == "difference":
            res.append(abs(th - pred))
        else:
            res.append(abs(th / pred - 1.0))
    inconclusive = len(ts) < 4
    passes = False
    if not inconclusive:
        half = ts[len(ts) // 2 - 1 :]
        vals = res[len(ts) // 2 - 1 :]
        passes = all(vals[k + 1] < vals[k] for k in range(len(vals) - 1)) and len(half) >= 2
    return ThetaResidualReport(tuple(ts), tuple(res), reg.residual_form, passes, inconclusive)


@dataclass(frozen=True)
class KeyQuantityRow:
    t: int
    s: int | None
    log_value: float
    predicted: float


def key_quantity(schedule: Schedule, t: int, s: int | None = None) -> KeyQuantityRow:
    """log of (i_t/i_s) exp( sum_{i in (i_s, i_t]} (e^{theta_{t_i}} - 1) q_i
    - sum_{r in (s, t]} theta_r ), with s = 0 meaning the full form.

    Per-epoch grouping makes this exact from the cached a-values: within
    epoch r the tilt is constant, so the inner sum telescopes to
    (e^{theta_r} - 1)(a_{i_r} - a_{i_{r-1}}).
    """
    if t > schedule.t_max:
        raise ScheduleError("t beyond computed range")
    lo = 0 if s is None else s
    if not (0 <= lo <= t):
        raise ValueError("need 0 <= s <= t")
    if lo == t:
        return KeyQuantityRow(t, s, 0.0, 0.0)
    a = schedule.a_at_i
    th = schedule.theta
    total = math.log(float(schedule.i_vals[t])) - math.log(float(schedule.i_vals[lo]))
    for r in range(lo + 1, t + 1):
        total += math.expm1(float(th[r])) * float(a[r] - a[r - 1]) - float(th[r])
    if s is None:
        pred = schedule.regime.key_quantity_prediction(t)
    else:
        pred = schedule.regime.key_quantity_prediction(t) - schedule.regime.key_quantity_prediction(lo)
    return KeyQuantityRow(t, s, total, pred)


# ----------------------------------------------------------------------
# a_n assumption residuals
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionResidualReport:
    n_grid: tuple
    residuals: tuple
    reference_n: int
    passes: bool


def assumption_residual(
    seq: WeightSequence, regime: Regime, n_grid, a_inf: float | None = None
) -> AssumptionResidualReport:
    """Normalised residual of a_n against the regime's assumed form.

    powers_of_log: d_n = a_n - int_1^{log n} x^{-alpha} L(x) dx converges to a
    constant faster than the envelope (log n)^{-1-alpha} (log log n)^2 L(log n);
    the profile compares d_n with its value at the largest grid point.

    quick regimes: (a_inf - a_n) / (exp(-(alpha-1) log^beta n) J(exp(log^beta n)))
    tends to 1; the profile is |ratio - 1| against the envelope
    (log n)^{min(4 beta - 2, 0)}.
    """
    from scipy.integrate import quad

    grid = sorted(set(int(n) for n in n_grid))
    if len(grid) < 3:
        raise ValueError("need at least 3 grid points")
    stats = {s.n: s for s in prefix_at(seq, grid)}
    if regime.variant == "powers_of_log":
        a = regime.alpha
        L = regime.L or SvDescriptor.const(1.0)

        def d(n):
            x0 = 1.0
            val, _ = quad(lambda x: x**-a * float(L.value(max(x, L.x0))), x0, math.log(n), limit=400)
            return stats[n].a - val

        d_ref = d(grid[-1])
        resid = []
        for n in grid[:-1]:
            env = (
                math.log(n) ** (-1.0 - a)
                * math.log(math.log(n)) ** 2
                * float(L.value(max(math.log(n), L.x0)))
            )
            resid.append(abs(d(n) - d_ref) / env)
        passes = _profile_passes(resid)
        return AssumptionResidualReport(tuple(grid[:-1]), tuple(resid), grid[-1], passes)

    # quick regimes
    if a_inf is None:
        from .weights import a_infinity

        a_inf, _ = a_infinity(seq, max(64 * grid[-1], 1 << 22))
    a = regime.alpha
    beta = regime.beta if regime.variant != "quick_beta_eq1" else 1.0
    J = regime.J or SvDescriptor.const(1.0)
    resid = []
    for n in grid:
        ln = math.log(n)
        scale = math.exp(-(a - 1.0) * ln**beta) * float(J.value(max(math.exp(ln**beta), J.x0)))
        ratio = (a_inf - stats[n].a) / scale
        env = ln ** min(4.0 * beta - 2.0, 0.0)
        resid.append(abs(ratio - 1.0) / env)
    return AssumptionResidualReport(tuple(grid), tuple(resid), grid[-1], _profile_passes(resid))


def _profile_passes(resid, floor: float = 1e-9) -> bool:
    """Non-increasing profile, or residuals already at numerical noise."""
    if max(resid) < floor:
        return True
    return all(resid[k + 1] <= resid[k] for k in range(len(resid) - 1))
