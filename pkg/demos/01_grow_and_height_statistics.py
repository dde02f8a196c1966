"""Growing weighted recursive trees and reading off height statistics.

Each new vertex picks its parent with probability proportional to the
parent's predetermined weight.  The mean attachment depth a_n = sum w_i/W_i
tracks the depth of a weight-biased vertex; the maximum depth (the tree
height) is the quantity everything else in this package revolves around.
"""

import numpy as np

from wrtsim import WeightSequence, grow, height_stats, prefix_at

seq = WeightSequence.harmonic()  # w_i = 1/i: total weight grows like log n

print("== one tree, three sizes ==")
for n in (10**3, 10**5, 10**6):
    st = grow(seq, n, seed=42)
    a_n = prefix_at(seq, [n])[0].a
    print(
        f"n={n:>9,}: height {st.max_height:>2}, "
        f"weighted mean depth {st.weighted_depth_mean:6.3f} (a_n - 1 = {a_n - 1:6.3f}), "
        f"greedy first-child chain length {len(st.greedy_path) - 1}"
    )

print("\n== determinism: the stream is keyed by (seed, vertex) ==")
a = grow(seq, 5000, seed=7)
b = grow(seq, 2000, seed=7).extend(5000)
print("regrown prefix identical:", np.array_equal(a.heights, b.heights))

print("\n== depth histogram at n = 1e5 ==")
st = grow(seq, 10**5, seed=1)
hs = height_stats(st)
bar = max(hs.histogram)
for h, c in enumerate(hs.histogram):
    print(f"  depth {h:>2}: {'#' * max(1, int(40 * c / bar))} {c}")

print("\n== a faster-decaying family is much shorter ==")
for alpha in (1.5, 2.0, 3.0):
    st = grow(WeightSequence.power_law(alpha), 10**6, seed=3)
    print(f"  w_i = i^-{alpha}: height {st.max_height}")
