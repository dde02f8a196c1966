"""Exhaustive enumeration against walk laws: the identities, exactly.

At small n every tree outcome can be enumerated with its probability.  Two
facts reduce tree functionals to one-dimensional walk computations:

* the ancestral height path of a weight-biased vertex is distributed as an
  inhomogeneous Bernoulli walk with success ratios w_i / W_i;
* pair sums over two weight-biased vertices reduce to a coupled pair of
  walks that are forbidden to jump together after their split index.

Both hold exactly, not asymptotically; the checks below print worst-case
deviations at machine precision.
"""

import itertools

import numpy as np

from wrtsim import WeightSequence, bernoulli_walk_pmf, enumerate_small, many_to_two_check
from wrtsim.weights import q_array

rng = np.random.default_rng(0)

print("== weight-biased ancestral path law vs walk path law (TV distance) ==")
for trial in range(3):
    n = 6
    seq = WeightSequence.table(rng.uniform(0.1, 3.0, n).tolist())
    law = enumerate_small(seq, n).weighted_path_law()
    q = q_array(seq, n)
    walk = {}
    for bits in itertools.product([0, 1], repeat=n - 1):
        p = 1.0
        for i, b in enumerate(bits):
            p *= q[i + 1] if b else 1.0 - q[i + 1]
        path = (0,) + tuple(np.cumsum(bits))
        walk[path] = walk.get(path, 0.0) + p
    tv = 0.5 * sum(abs(law.get(k, 0) - walk.get(k, 0)) for k in set(law) | set(walk))
    print(f"  random table #{trial}: TV = {tv:.2e}")

print("\n== the height law of the next vertex is the walk law shifted by one ==")
seq = WeightSequence.constant(1.0)
pmf = bernoulli_walk_pmf(seq, 7)
law = enumerate_small(seq, 7).weighted_path_law()
height_law = {}
for path, p in law.items():
    height_law[path[-1]] = height_law.get(path[-1], 0.0) + p
print("  walk pmf      :", [round(float(p), 6) for p in pmf.probs])
print("  enumerated law:", [round(float(height_law.get(k, 0.0)), 6) for k in range(len(pmf.probs))])

print("\n== pair identity (coupled walks) ==")
for f, F, label in [
    (("one",), ("one",), "total mass"),
    (("label_eq", 1), ("final_le", 2), "root ancestor, low finals"),
    (("identity",), ("one",), "mean split label"),
]:
    seq = WeightSequence.table([3.0, 1.0, 4.0, 1.0, 5.0])
    res = many_to_two_check(seq, 5, f, F)
    print(f"  {label:<28}: lhs {res.lhs:.10f}  rhs {res.rhs:.10f}  diff {res.diff:.2e}")

print("\n== collapsing early labels onto the root preserves the law ==")
base = WeightSequence.table([1.0, 1.0, 1.0, 1.0])
coll = WeightSequence.collapsed(base, 2)
print("  collapsed weights:", [coll.weight_at(i) for i in (1, 2, 3, 4)])
print("  (the height law equals the label-2 contraction of the base law;")
print("   tests/test_engine.py verifies the distributional identity)")
