"""Epoch schedules for the four slow-growth regimes.

A schedule chooses tree sizes i_t at which the height is expected to pass t,
then calibrates one tilt per epoch from the mean-depth increments.  The four
closed forms cover mean depth varying like powers of log n (heights of order
log n / log log n) and three speeds of quick convergence (heights of order
(log n)^{1-beta}, log log n, and log log log n).
"""

import math

import numpy as np

from wrtsim import Regime, SvDescriptor, WeightSequence, make_schedule, theta_expansion_residual
from wrtsim.schedules import key_quantity

EULER = 0.5772156649015329


def show(name, reg, seq, n_max):
    s = make_schedule(reg, seq, n_max)
    print(f"== {name} ==")
    print(f"  monotone from s0={s.s0}, tilts monotone from r0={s.r0}, "
          f"{s.t_max + 1} boundaries up to n_max={n_max:.0e}")
    print(f"  i_t: {s.i_vals[max(0, s.t_max - 6):].tolist()}")
    cal = s.calibration_residual()
    print(f"  calibration |e^theta * a-diff - 1| worst: {cal.max():.2e}")
    rep = theta_expansion_residual(s)
    print(f"  tilt expansion residuals ({rep.form}): "
          f"{[round(r, 4) for r in rep.residuals]}")
    rows = [key_quantity(s, t) for t in range(s.s0 + 1, s.t_max + 1)]
    print(f"  log key quantity: {[round(r.log_value, 2) for r in rows]}")
    print(f"  predicted       : {[round(r.predicted, 2) for r in rows]}\n")


show(
    "powers of log: w_i = 1/i",
    Regime("powers_of_log", alpha=1.0, eta=0.0, L=SvDescriptor.one_minus_over_x(EULER)),
    WeightSequence.harmonic(),
    3 * 10**6,
)

show(
    "quick, beta = 1: w_i = i^-2",
    Regime("quick_beta_eq1", alpha=2.0, kappa=1.5, J=SvDescriptor.const(6.0 / math.pi**2)),
    WeightSequence.power_law(2.0),
    10**7,
)

# the beta < 1 and beta > 1 regimes need stretched-exponential weight decay;
# w_n = exp(-(alpha-1) log^beta n) * beta log^(beta-1) n / n hits the target
def stretched(alpha, beta):
    am1 = alpha - 1.0
    expr = (
        f"where(i < 1.5, 1.0, exp(-{am1!r}*log(maximum(i, 2.0))**{beta!r})"
        f"*{beta!r}*log(maximum(i, 2.0))**({beta!r}-1)/i)"
    )
    return WeightSequence.custom(expr, nonincreasing=True)


show(
    "quick, beta = 1/2 (stretched-exponential decay)",
    Regime("quick_beta_lt1", alpha=2.0, beta=0.5, kappa=0.7, J=SvDescriptor.const(0.69)),
    stretched(2.0, 0.5),
    10**7,
)

show(
    "quick, beta = 1.2 (double-exponential boundaries)",
    Regime("quick_beta_gt1", alpha=2.0, beta=1.2, kappa=1.15),
    stretched(2.0, 1.2),
    2 * 10**6,
)

print("beyond the cap, boundaries exist only in log form:")
reg = Regime("quick_beta_gt1", alpha=2.0, beta=1.2, kappa=1.15)
for t in (8, 10, 12):
    print(f"  log i_{t} = {reg.log_i_formula(t):.3e}")
