import math

import numpy as np
import pytest
from numpy.random import Generator, Philox

from wrtsim.engine import (
    DynamicSampler,
    collapse_weights,
    diameter,
    enumerate_small,
    greedy_first_child_path,
    grow,
    height_stats,
)
from wrtsim.weights import WeightSequence, prefix_at


def test_grow_n2_always_trivial():
    for seed in range(5):
        st = grow(WeightSequence.harmonic(), 2, seed, mode="full")
        assert st.parents[1] == 1
        assert st.heights.tolist() == [0, 1]
        assert st.max_height == 1


def test_grow_n1():
    st = grow(WeightSequence.constant(1.0), 1, 0)
    assert st.max_height == 0
    assert height_stats(st).max_height == 0


def test_grow_deterministic_and_extendable():
    seq = WeightSequence.harmonic()
    a = grow(seq, 5000, seed=42)
    b = grow(seq, 5000, seed=42)
    assert np.array_equal(a.heights, b.heights)
    c = grow(seq, 2000, seed=42)
    assert np.array_equal(a.heights[:2000], c.heights)
    d = c.extend(5000)
    assert np.array_equal(a.heights, d.heights)
    # chunk size must not change the draw
    e = grow(seq, 5000, seed=42, chunk=777)
    assert np.array_equal(a.heights, e.heights)


def test_grow_full_mode_consistency():
    st = grow(WeightSequence.power_law(2.0), 3000, seed=7, mode="full")
    h = st.heights
    p = st.parents
    assert p[0] == 0
    assert h[0] == 0
    for i in range(1, st.n):
        assert h[i] == h[p[i] - 1] + 1
        assert p[i] <= i  # labels are 1-based, parent precedes child
    assert st.max_height < st.n
    assert np.all(h[1:] <= np.arange(1, st.n))


def test_grow_uniform_choice_frequency():
    # constant weights, n=3: parent of vertex 3 uniform on {1, 2}
    seq = WeightSequence.constant(1.0)
    hits = 0
    reps = 20000
    for seed in range(reps):
        st = grow(seq, 3, seed=seed, mode="full")
        hits += st.parents[2] == 1
    p = hits / reps
    sigma = math.sqrt(0.25 / reps)
    assert abs(p - 0.5) <= 3.5 * sigma


def test_grow_zero_weights_never_parents():
    seq = WeightSequence.table([2.0, 0.0, 1.0, 0.0, 1.0])
    for seed in range(200):
        st = grow(seq, 5, seed=seed, mode="full")
        assert 2 not in st.parents[2:]
        assert 4 not in st.parents


def test_star_tree_diameter():
    # enormous root weight: everything attaches to the root, diameter 2
    seq = WeightSequence.table([1e12] + [1.0] * 9)
    st = grow(seq, 10, seed=3, mode="full")
    assert st.max_height == 1
    assert diameter(st) == 2


def test_diameter_bounds_and_trivial():
    st2 = grow(WeightSequence.harmonic(), 2, 0, mode="full")
    assert diameter(st2) == 1
    for seed in range(20):
        st = grow(WeightSequence.harmonic(), 300, seed, mode="full")
        d = diameter(st)
        assert d >= st.max_height
        assert d <= 2 * st.max_height


def test_diameter_requires_full_mode():
    st = grow(WeightSequence.harmonic(), 10, 0)
    with pytest.raises(ValueError):
        diameter(st)


def test_greedy_path_structure():
    for seed in range(50):
        st = grow(WeightSequence.harmonic(), 500, seed, mode="full")
        path = greedy_first_child_path(st)
        assert path[0] == 1
        assert path[1] == 2  # vertex 2 always attaches to the root
        # each entry is the smallest-label child of its predecessor
        par = st.parents
        for a, b in zip(path[:-1], path[1:]):
            children = np.nonzero(par == a)[0] + 1
            assert children.min() == b
        # chain length lower-bounds the height
        assert len(path) - 1 <= st.max_height


def test_greedy_second_step_frequency():
    # constant weights: P(I_2 = 3) = P(vertex 3 attaches to vertex 2) = 1/2
    hits = 0
    reps = 20000
    for seed in range(reps):
        st = grow(WeightSequence.constant(1.0), 3, seed)
        path = st.greedy_path
        hits += len(path) >= 3 and path[2] == 3
    sigma = math.sqrt(0.25 / reps)
    assert abs(hits / reps - 0.5) <= 3.5 * sigma


def test_weighted_depth_mean_matches_histogram():
    seq = WeightSequence.harmonic()
    st = grow(seq, 4000, seed=11)
    w = seq.weight_block(1, st.n + 1)
    ref = float(np.dot(w, st.heights)) / w.sum()
    assert st.weighted_depth_mean == pytest.approx(ref, rel=1e-12)


# ----------------------------------------------------------------------
# dynamic sampler
# ----------------------------------------------------------------------


def test_sampler_uniform_frequencies():
    s = DynamicSampler(capacity=2)
    for w in (1.0, 1.0, 1.0):
        s.add_weight(w)
    rng = Generator(Philox(key=1))
    counts = np.zeros(3)
    reps = 60000
    for _ in range(reps):
        counts[s.sample_index(rng) - 1] += 1
    p = counts / reps
    sigma = math.sqrt((1 / 3) * (2 / 3) / reps)
    assert np.all(np.abs(p - 1 / 3) <= 4 * sigma)


def test_sampler_zero_weight_never_sampled():
    s = DynamicSampler()
    for w in (2.0, 0.0, 1.0):
        s.add_weight(w)
    rng = Generator(Philox(key=2))
    draws = {s.sample_index(rng) for _ in range(5000)}
    assert 2 not in draws
    assert draws == {1, 3}


def test_sampler_empty_raises():
    s = DynamicSampler()
    rng = Generator(Philox(key=3))
    with pytest.raises(ValueError):
        s.sample_index(rng)


def test_sampler_rebuild_drift():
    s = DynamicSampler(capacity=4)
    rng = np.random.default_rng(5)
    ws = rng.uniform(0, 2, 5000)
    for w in ws:
        s.add_weight(float(w))
    before = s.total
    s.rebuild()
    assert s.total == pytest.approx(float(np.sum(ws)), rel=1e-12)
    assert before == pytest.approx(s.total, rel=1e-12)


def test_sampler_chi2_against_exact_ratios():
    # grow a sampler to 3000 indices with power-law weights; chi^2 on the top 50
    seq = WeightSequence.power_law(2.0)
    w = seq.weight_block(1, 3001)
    s = DynamicSampler()
    for v in w:
        s.add_weight(float(v))
    rng = Generator(Philox(key=8))
    reps = 200000
    counts = np.zeros(3000)
    for _ in range(reps):
        counts[s.sample_index(rng) - 1] += 1
    p = w / w.sum()
    top = 50
    expected = reps * p[:top]
    chi2 = float(np.sum((counts[:top] - expected) ** 2 / expected))
    # chi^2_{50} 1% quantile is ~76.2
    assert chi2 < 76.2


# ----------------------------------------------------------------------
# collapse + enumeration
# ----------------------------------------------------------------------


def test_collapse_identity_and_example():
    base = WeightSequence.table([1.0, 1.0, 1.0])
    assert collapse_weights(base, 1) is base
    c = collapse_weights(base, 2)
    assert [c.weight_at(i) for i in (1, 2, 3)] == [2.0, 0.0, 1.0]


def test_enumerate_small_counts_and_mass():
    seq = WeightSequence.table([3.0, 1.0, 4.0, 1.0, 5.0])
    law = enumerate_small(seq, 5)
    assert len(law.assignments) == math.factorial(4)
    assert law.total == pytest.approx(1.0, abs=1e-12)


def test_enumerate_small_n2_n3():
    law2 = enumerate_small(WeightSequence.constant(1.0), 2)
    assert len(law2.assignments) == 1
    assert law2.assignments[0][1] == 1.0
    law3 = enumerate_small(WeightSequence.constant(1.0), 3)
    assert sorted(p for _, p in law3.assignments) == [0.5, 0.5]


def test_enumerate_cap():
    with pytest.raises(ValueError):
        enumerate_small(WeightSequence.harmonic(), 10)


def test_enumeration_matches_monte_carlo_max_height():
    # constant weights, n=7: TV between simulated and enumerated max-height law
    seq = WeightSequence.constant(1.0)
    law = enumerate_small(seq, 7).max_height_law()
    reps = 100000
    counts: dict = {}
    for seed in range(reps):
        st = grow(seq, 7, seed=seed)
        mh = st.max_height
        counts[mh] = counts.get(mh, 0) + 1
    tv = 0.5 * sum(
        abs(law.get(k, 0.0) - counts.get(k, 0) / reps) for k in set(law) | set(counts)
    )
    assert tv < 0.01


def test_collapsed_enumeration_equals_collapsed_law():
    # law of T_4 after collapsing labels {1,2} == law of the tree grown with
    # collapsed weights, as joint height vectors with labels 2..N pinned to 0
    base = WeightSequence.table([1.0, 1.0, 1.0, 1.0])
    N = 2
    coll = collapse_weights(base, N)
    law_direct = enumerate_small(coll, 4).height_vector_law()

    law_base = enumerate_small(base, 4)
    law_collapsed: dict = {}
    for parents, p in law_base.assignments:
        # collapsing 2..N onto the root rewires any parent with label <= N to 1
        def collapsed_height(v):
            d = 0
            while v != 1:
                par = parents[v - 2]
                v = 1 if par <= N else par
                d += 1
            return d

        key = tuple(collapsed_height(v) for v in range(1, 5))
        law_collapsed[key] = law_collapsed.get(key, 0.0) + p
    tv = 0.5 * sum(
        abs(law_direct.get(k, 0.0) - law_collapsed.get(k, 0.0))
        for k in set(law_direct) | set(law_collapsed)
    )
    assert tv <= 1e-12


def test_ancestor_path_definition():
    seq = WeightSequence.table([1.0, 2.0, 3.0, 4.0])
    law = enumerate_small(seq, 4)
    parents = (1, 2, 2)  # 2->1, 3->2, 4->2
    h = law.heights(parents)
    assert h[1:] == [0, 1, 2, 2]
    # ancestor of 4 with label <= 1 is the root; <= 2 or 3 is vertex 2
    assert law.ancestor_path(parents, 4) == (0, 1, 1, 2)
    assert law.mrca(parents, 3, 4) == 2
    assert law.mrca(parents, 1, 4) == 1
