"""Sublevel-set persistence of piecewise-linear signals and diagram distances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

__all__ = [
    "TimeSeries",
    "PersistenceDiagram",
    "sublevel_diagram",
    "bottleneck_distance",
    "diagram_union",
    "diagrams_equal",
]


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real signal.

    Parameters
    ----------
    values : array_like
        Samples ``S_1, ..., S_N``.
    dt : float
        Seconds per sample.
    """

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise ValueError("time series must contain at least one sample")
        if not np.all(np.isfinite(v)):
            raise ValueError("time series values must be finite")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


@dataclass(frozen=True)
class PersistenceDiagram:
    """Finite multiset of (birth, death) pairs, stored sorted lexicographically.

    The diagonal is implicit and never stored.
    """

    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        if pts.size and np.any(pts[:, 1] < pts[:, 0]):
            raise ValueError("diagram points must satisfy death >= birth")
        if len(pts):
            pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def births(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def persistence(self) -> np.ndarray:
        return self.points[:, 1] - self.points[:, 0]

    def shifted(self, c: float) -> "PersistenceDiagram":
        return PersistenceDiagram(self.points + c)

    def to_list(self) -> list:
        return [[float(b), float(d)] for b, d in self.points]


SeriesLike = Union[TimeSeries, Sequence[float], np.ndarray]


def _values(series: SeriesLike) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return TimeSeries(series).values


def _collapse_plateaus(v: list) -> list:
    # keep the first sample of each run of equal consecutive values
    return [x for k, x in enumerate(v) if k == 0 or x != v[k - 1]]


def _elder_pairs(vals: list) -> list:
    """(birth, death) pairs with positive persistence, unsorted."""
    n = len(vals)
    order = sorted(range(n), key=lambda i: (vals[i], i))
    # comparing positions in `order` is comparing (value, index)
    rank = [0] * n
    for r, i in enumerate(order):
        rank[i] = r
    parent = [-1] * n
    oldest = list(range(n))  # root -> sample index of the component minimum

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    pairs = []
    for i in order:
        parent[i] = i
        vi = vals[i]
        for j in (i - 1, i + 1):
            if j < 0 or j >= n or parent[j] == -1:
                continue
            ri, rj = find(i), find(j)
            if ri == rj:
                continue
            mi, mj = oldest[ri], oldest[rj]
            if rank[mi] < rank[mj]:
                survivor, dying, dmin = ri, rj, mj
            else:
                survivor, dying, dmin = rj, ri, mi
            if vals[dmin] < vi:
                pairs.append((vals[dmin], vi))
            parent[dying] = survivor
    lo, hi = vals[order[0]], vals[order[-1]]
    if hi > lo:
        pairs.append((lo, hi))
    return pairs


def sublevel_diagram(series: SeriesLike) -> PersistenceDiagram:
    """H0 sublevel-set diagram of the piecewise-linear interpolation of a series.

    Local minima are born at their value. At a merge the component whose
    minimum is higher dies (equal minima: the one at the larger sample index
    dies). The last component dies at the global maximum. Zero-persistence
    pairs are dropped, so a constant series gives an empty diagram.

    Only the ordered sequence of values matters; ``dt`` is ignored.
    """
    vals = _collapse_plateaus(_values(series).tolist())
    pairs = sorted(_elder_pairs(vals))
    return PersistenceDiagram(np.array(pairs, dtype=float).reshape(-1, 2))


def diagram_union(d1: PersistenceDiagram, d2: PersistenceDiagram) -> PersistenceDiagram:
    """Multiset union; multiplicities add."""
    return PersistenceDiagram(np.vstack([d1.points, d2.points]))


def diagrams_equal(d1: PersistenceDiagram, d2: PersistenceDiagram, atol: float = 1e-12) -> bool:
    """Multiset equality by sorted lexicographic comparison."""
    if len(d1) != len(d2):
        return False
    return bool(np.all(np.abs(d1.points - d2.points) <= atol))


def _matching_feasible(cost: np.ndarray, h1: np.ndarray, h2: np.ndarray, r: float) -> bool:
    n1, n2 = cost.shape
    n = n1 + n2
    # rows: D1 points then diagonal copies of D2; cols: D2 points then
    # diagonal copies of D1.
    adj = np.zeros((n, n), dtype=bool)
    adj[:n1, :n2] = cost <= r
    adj[np.arange(n1), n2 + np.arange(n1)] = h1 <= r
    adj[n1 + np.arange(n2), np.arange(n2)] = h2 <= r
    adj[n1:, n2:] = True
    match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_distance(d1: PersistenceDiagram, d2: PersistenceDiagram) -> float:
    """Exact bottleneck distance under the sup-norm, with diagonal matching.

    Binary search over the finite set of candidate radii (pairwise
    sup-distances and half-persistences); feasibility of each radius is a
    perfect-matching test (Hopcroft-Karp).
    """
    p1, p2 = d1.points, d2.points
    h1 = (p1[:, 1] - p1[:, 0]) / 2.0
    h2 = (p2[:, 1] - p2[:, 0]) / 2.0
    if len(p1) == 0 and len(p2) == 0:
        return 0.0
    if len(p1) == 0:
        return float(h2.max())
    if len(p2) == 0:
        return float(h1.max())
    cost = np.maximum(
        np.abs(p1[:, None, 0] - p2[None, :, 0]),
        np.abs(p1[:, None, 1] - p2[None, :, 1]),
    )
    candidates = np.unique(np.concatenate([[0.0], cost.ravel(), h1, h2]))
    lo, hi = 0, candidates.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _matching_feasible(cost, h1, h2, candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def as_diagram(points: Iterable) -> PersistenceDiagram:
    if isinstance(points, PersistenceDiagram):
        return points
    return PersistenceDiagram(np.asarray(list(points), dtype=float).reshape(-1, 2))
