"""Growing weighted recursive trees at scale.

A tree over labels 1..n attaches vertex i+1 to a parent chosen among 1..i
with probability w_k / W_i.  Because the weights are predetermined, the
attachment law at every step is known ahead of time: growth draws one uniform
per vertex from a counter-based stream and inverts it against the cumulative
weight prefix, which is distributed identically to sequential sampling from a
dynamic structure but runs as chunked vector operations.  A Fenwick-backed
:class:`DynamicSampler` provides the incremental add/sample/rebuild surface
for callers that do interleave insertions with draws.

Memory discipline: height-only growth keeps one float64 cumulative weight and
one uint32 height per vertex (plus a transient per-chunk working set), so 1e8
vertices stay near 2 GB and 1e7 well under 500 MB.
"""

from __future__ import annotations

import itertools
import math

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .weights import WeightSequence

__all__ = [
    "DynamicSampler",
    "WrtState",
    "grow",
    "HeightStats",
    "height_stats",
    "diameter",
    "greedy_first_child_path",
    "collapse_weights",
    "EnumeratedLaw",
    "enumerate_small",
]

_CHUNK = 1 << 20
_STREAM_GROWTH = 0xA1  # second Philox key word reserved for growth uniforms


class DynamicSampler:
    """Weighted index sampling over a growing weight list.

    Backed by a binary indexed (Fenwick) prefix-sum tree sized ahead by
    doubling.  ``rebuild()`` recomputes the internal sums from the stored raw
    weights to flush accumulated floating-point drift; it also runs
    automatically every ``rebuild_every`` insertions.
    """

    def __init__(self, capacity: int = 1024, rebuild_every: int = 1 << 26):
        self._cap = max(int(capacity), 1)
        self._tree = np.zeros(self._cap + 1, dtype=np.float64)
        self._w = np.zeros(self._cap, dtype=np.float64)
        self._n = 0
        self._since_rebuild = 0
        self._rebuild_every = rebuild_every

    def __len__(self) -> int:
        return self._n

    @property
    def total(self) -> float:
        s = 0.0
        i = self._n
        while i > 0:
            s += self._tree[i]
            i -= i & (-i)
        return float(s)

    def add_weight(self, w: float) -> None:
        if w < 0 or not math.isfinite(w):
            raise ValueError("weights must be finite and nonnegative")
        if self._n == self._cap:
            self._grow()
        self._n += 1
        self._w[self._n - 1] = w
        i = self._n
        while i <= self._cap:
            self._tree[i] += w
            i += i & (-i)
        self._since_rebuild += 1
        if self._since_rebuild >= self._rebuild_every:
            self.rebuild()

    def _grow(self) -> None:
        self._cap *= 2
        w = self._w
        self._w = np.zeros(self._cap, dtype=np.float64)
        self._w[: self._n] = w[: self._n]
        self._tree = np.zeros(self._cap + 1, dtype=np.float64)
        self._rebuild_tree()

    def _rebuild_tree(self) -> None:
        self._tree[1 : self._n + 1] = self._w[: self._n]
        self._tree[self._n + 1 :] = 0.0
        for i in range(1, self._cap + 1):
            j = i + (i & (-i))
            if j <= self._cap:
                self._tree[j] += self._tree[i]

    def rebuild(self) -> None:
        self._rebuild_tree()
        self._since_rebuild = 0

    def sample_index(self, rng: Generator) -> int:
        """Index k drawn with probability w_k / total (1-based).

        Zero-weight indices are never returned: a strict descent over exact
        stored partial sums cannot separate equal prefixes.
        """
        if self._n == 0:
            raise ValueError("cannot sample from an empty sampler")
        total = self.total
        if total <= 0:
            raise ValueError("cannot sample: total weight is zero")
        rem = rng.random() * total
        pos = 0
        bit = 1 << (self._cap.bit_length() - 1)
        while bit:
            nxt = pos + bit
            if nxt <= self._cap and self._tree[nxt] <= rem:
                rem -= self._tree[nxt]
                pos = nxt
            bit >>= 1
        idx = pos + 1
        while idx <= self._n and self._w[idx - 1] == 0.0:  # defensive, see docstring
            idx += 1
        if idx > self._n:
            idx = int(np.max(np.nonzero(self._w[: self._n])[0])) + 1
        return idx


@dataclass
class WrtState:
    """A grown tree: heights per vertex, optional parents, growth metadata."""

    seq: WeightSequence
    n: int
    seed: int | tuple
    mode: str
    heights: np.ndarray          # uint32, heights[i-1] = height of vertex i
    parents: np.ndarray | None   # int32 parent labels (full mode), parents[0] = 0
    greedy_path: np.ndarray      # labels along the first-child chain from the root
    max_height: int
    total_weight: float
    weighted_depth_mean: float   # sum_i w_i * height_i / W_n

    def extend(self, m: int) -> "WrtState":
        """Regrow to m >= n under the same stream discipline (identical prefix)."""
        if m < self.n:
            raise ValueError("extend target must be >= current size")
        return grow(self.seq, m, self.seed, mode=self.mode)


def _philox_key(seed) -> list:
    if isinstance(seed, (tuple, list)):
        a, b = seed
        return [int(a) & (2**64 - 1), ((int(b) & (2**55 - 1)) << 8) | _STREAM_GROWTH]
    return [int(seed) & (2**64 - 1), _STREAM_GROWTH]


def grow(
    seq: WeightSequence,
    n: int,
    seed: int | tuple = 0,
    mode: str = "height_only",
    chunk: int = _CHUNK,
) -> WrtState:
    """Grow a tree to n vertices; deterministic given (seq, n, seed).

    One uniform per vertex is consumed in label order from a counter-based
    stream keyed by the seed, so growing to n and later to m > n reproduces
    the first n heights bit for bit.  Cost per vertex is O(log n) from the
    binary search against the cumulative weights.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if mode not in ("height_only", "full"):
        raise ValueError("mode must be 'height_only' or 'full'")
    g = Generator(Philox(key=_philox_key(seed)))

    # cumulative weights for the whole range (the only full-length float array)
    cum = np.empty(n, dtype=np.float64)
    lo = 1
    carry = 0.0
    while lo <= n:
        hi = min(lo + chunk - 1, n)
        w = seq.weight_block(lo, hi + 1)
        np.cumsum(w, out=cum[lo - 1 : hi])
        cum[lo - 1 : hi] += carry
        carry = float(cum[hi - 1])
        lo = hi + 1
    if not np.isfinite(carry):
        raise OverflowError("total weight overflowed")
    if carry <= 0:
        raise ValueError("total weight must be positive")

    hl = [0] * n
    parents_arr = np.zeros(n, dtype=np.int32) if mode == "full" else None
    greedy = [1]
    cur = 1  # current endpoint (label) of the first-child chain
    wd = 0.0  # sum of w_i * height_i

    lo = 2
    while lo <= n:
        hi = min(lo + chunk - 1, n)
        m = hi - lo + 1
        u = g.random(m)
        u *= cum[lo - 2 : hi - 1]  # child c targets uniform on [0, W_{c-1})
        par = np.searchsorted(cum, u, side="right")  # 0-based parent positions
        pl = par.tolist()
        base = lo - 1  # 0-based position of label lo
        for k, p in enumerate(pl):
            hl[base + k] = hl[p] + 1
        if parents_arr is not None:
            parents_arr[lo - 1 : hi] = par
            parents_arr[lo - 1 : hi] += 1
        # extend the greedy first-child chain through this block
        pos = 0
        while True:
            hits = np.nonzero(par[pos:] == cur - 1)[0]
            if hits.size == 0:
                break
            j = pos + int(hits[0])
            cur = lo + j
            greedy.append(cur)
            pos = j + 1
        # weighted depth accumulation for the block
        wblk = np.diff(cum[lo - 2 : hi])
        wd += float(np.dot(wblk, np.asarray(hl[lo - 1 : hi], dtype=np.float64)))
        del par, u
        lo = hi + 1

    heights = np.asarray(hl, dtype=np.uint32)
    total = float(cum[-1])
    return WrtState(
        seq=seq,
        n=n,
        seed=seed,
        mode=mode,
        heights=heights,
        parents=parents_arr,
        greedy_path=np.asarray(greedy, dtype=np.int64),
        max_height=int(heights.max()) if n > 1 else 0,
        total_weight=total,
        weighted_depth_mean=wd / total,
    )


@dataclass(frozen=True)
class HeightStats:
    max_height: int
    histogram: np.ndarray  # histogram[h] = number of vertices at height h
    weighted_depth_mean: float


def height_stats(state: WrtState) -> HeightStats:
    hist = np.bincount(state.heights)
    return HeightStats(
        max_height=int(state.heights.max()),
        histogram=hist,
        weighted_depth_mean=state.weighted_depth_mean,
    )


def diameter(state: WrtState) -> int:
    """Exact diameter via the two-deepest-subtrees scan (full mode only)."""
    if state.parents is None:
        raise ValueError("diameter requires a tree grown in full mode")
    n = state.n
    if n == 1:
        return 0
    par = state.parents.tolist()
    best1 = [0] * (n + 1)  # deepest downward path length from each vertex
    best2 = [0] * (n + 1)
    for v in range(n, 1, -1):
        p = par[v - 1]
        d = best1[v] + 1
        if d > best1[p]:
            best2[p] = best1[p]
            best1[p] = d
        elif d > best2[p]:
            best2[p] = d
    return max(best1[v] + best2[v] for v in range(1, n + 1))


def greedy_first_child_path(state: WrtState) -> np.ndarray:
    """Labels I_0=1 < I_1 < ... along the first-child chain within the tree.

    The chain length lower-bounds the height.  Recorded during growth in both
    modes; meaningful as a height bound only for non-increasing weights (the
    state's sequence advertises this via ``seq.nonincreasing``).
    """
    return state.greedy_path


def collapse_weights(seq: WeightSequence, N: int) -> WeightSequence:
    """Transfer the weight of labels 2..N onto the root: (W_N, 0,...,0, w_{N+1},...)."""
    return WeightSequence.collapsed(seq, N)


# ----------------------------------------------------------------------
# exhaustive enumeration of small trees (oracle)
# ----------------------------------------------------------------------

_ENUM_CAP = 9


class EnumeratedLaw:
    """Exact law of the tree over labels 1..n, as (parent vector, probability).

    Parent vectors list the parent label of vertices 2..n; the probability of
    an assignment is the product of w_{parent(i)} / W_{i-1}.  Functionals used
    by the identity checks (heights, ancestor paths, most recent common
    ancestors) are evaluated lazily per assignment.
    """

    def __init__(self, seq: WeightSequence, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        if n > _ENUM_CAP:
            raise ValueError(f"enumeration supports n <= {_ENUM_CAP}")
        self.seq = seq
        self.n = n
        self.w = seq.weight_block(1, n + 1)
        self.W = np.cumsum(self.w)
        ranges = [range(1, i) for i in range(2, n + 1)]
        self.assignments: list[tuple[tuple, float]] = []
        for parents in itertools.product(*ranges):
            p = 1.0
            for k, lab in enumerate(parents):
                p *= self.w[lab - 1] / self.W[k]
            self.assignments.append((parents, p))
        self.total = math.fsum(p for _, p in self.assignments)

    # per-assignment functionals ----------------------------------------
    def heights(self, parents: tuple) -> list[int]:
        h = [0] * (self.n + 1)  # 1-indexed
        for k, p in enumerate(parents):
            h[k + 2] = h[p] + 1
        return h

    def ancestor_path(self, parents: tuple, i: int) -> tuple:
        """(height of the most recent ancestor of u_i with label <= k) for k=1..n."""
        h = self.heights(parents)
        out = []
        for k in range(1, self.n + 1):
            c = i
            while c > k:
                c = parents[c - 2]
            out.append(h[c])
        return tuple(out)

    def mrca(self, parents: tuple, i: int, j: int) -> int:
        anc = {i}
        c = i
        while c != 1:
            c = parents[c - 2]
            anc.add(c)
        c = j
        while c not in anc:
            c = parents[c - 2]
        return c

    # aggregated laws ----------------------------------------------------
    def weighted_path_law(self) -> dict:
        """Law of the ancestral height path of a weight-biased vertex."""
        Wn = self.W[-1]
        law: dict = {}
        for parents, p in self.assignments:
            for i in range(1, self.n + 1):
                if self.w[i - 1] == 0.0:
                    continue
                path = self.ancestor_path(parents, i)
                law[path] = law.get(path, 0.0) + p * self.w[i - 1] / Wn
        return law

    def max_height_law(self) -> dict:
        law: dict = {}
        for parents, p in self.assignments:
            mh = max(self.heights(parents))
            law[mh] = law.get(mh, 0.0) + p
        return law

    def height_vector_law(self) -> dict:
        """Joint law of (height of u_1, ..., height of u_n)."""
        law: dict = {}
        for parents, p in self.assignments:
            key = tuple(self.heights(parents)[1:])
            law[key] = law.get(key, 0.0) + p
        return law

    def pair_functional(self, f, F) -> float:
        """E[ sum_{i,j} (w_i w_j / W_n^2) f(mrca label) F(path_i) F(path_j) ]."""
        Wn = self.W[-1]
        tot = 0.0
        for parents, p in self.assignments:
            paths = [self.ancestor_path(parents, i) for i in range(1, self.n + 1)]
            Fv = [F(path) for path in paths]
            for i in range(1, self.n + 1):
                if Fv[i - 1] == 0.0 or self.w[i - 1] == 0.0:
                    continue
                for j in range(1, self.n + 1):
                    if Fv[j - 1] == 0.0 or self.w[j - 1] == 0.0:
                        continue
                    lab = self.mrca(parents, i, j)
                    tot += (
                        p
                        * self.w[i - 1]
                        * self.w[j - 1]
                        / Wn**2
                        * f(lab)
                        * Fv[i - 1]
                        * Fv[j - 1]
                    )
        return tot


def enumerate_small(seq: WeightSequence, n: int) -> EnumeratedLaw:
    return EnumeratedLaw(seq, n)
