"""wrtsim: weighted recursive trees with slowly growing total weight.

Simulation at scale (counter-based streams, height-only memory layout) plus
exact finite-n verification of the identities, change-of-measure bounds and
epoch schedules that control the tree height.
"""

from .engine import (
    DynamicSampler,
    WrtState,
    collapse_weights,
    diameter,
    enumerate_small,
    greedy_first_child_path,
    grow,
    height_stats,
)
from .schedules import (
    Regime,
    Schedule,
    assumption_residual,
    key_quantity,
    make_schedule,
    theta_expansion_residual,
)
from .svfun import SvDescriptor, integral_asymptotic_gap, j_to_l, sv_residual
from .theory import (
    crude_lower_criterion,
    crude_upper_threshold,
    height_expansion_powers_of_log,
    height_first_order_quick,
    iid_max_expansion,
)
from .walks import (
    WalkPmf,
    barrier_probability,
    bernoulli_walk_pmf,
    many_to_two_check,
    moment_report,
    tilted_identity_eval,
)
from .weights import (
    PrefixStats,
    SquareTailAssumption,
    WeightSequence,
    a_infinity,
    prefix_at,
    prefix_stream,
    s2_tail,
    tail_square_profile,
    transfer_constant,
)

__version__ = "0.1.0"
