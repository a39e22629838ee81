"""Brute-force references used to cross-check the fast algorithms.

Nothing here shares code with :mod:`topsig.persistence`; the diagram oracle
works from persistent ranks of sublevel sets instead of a union-find sweep,
and the bottleneck oracle enumerates matchings.
"""

from __future__ import annotations

import itertools

import numpy as np


def _runs(mask):
    """Maximal runs of True in a boolean sequence, as (start, stop) pairs."""
    runs, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def persistent_rank(values, s, t):
    """Rank of H0(X_s) -> H0(X_t) for the PL interpolation of ``values``.

    Sublevel components of a PL path are the maximal runs of samples at or
    below the level. The module is zero from the global maximum on.
    """
    v = list(values)
    if t >= max(v):
        return 0
    return sum(
        1
        for a, b in _runs([x <= t for x in v])
        if any(x <= s for x in v[a:b])
    )


def level_sweep_diagram(values):
    """Diagram from the persistent ranks at all critical values.

    The multiplicity of (v_i, v_j) is recovered by inclusion-exclusion over
    the grid of critical values. Returns a sorted list of (birth, death).
    """
    levels = sorted(set(float(x) for x in values))
    m = len(levels)

    def beta(i, j):
        # i, j index into levels; i = -1 stands for "below every value"
        if i < 0:
            return 0
        return persistent_rank(values, levels[i], levels[j])

    points = []
    for i in range(m):
        for j in range(i + 1, m):
            mult = beta(i, j - 1) - beta(i - 1, j - 1) - beta(i, j) + beta(i - 1, j)
            points.extend([(levels[i], levels[j])] * mult)
    return sorted(points)


def brute_force_bottleneck(p1, p2):
    """Bottleneck distance by enumerating every diagonal-augmented matching.

    Exponential; intended for diagrams with at most a handful of points.
    """
    p1 = [tuple(map(float, x)) for x in p1]
    p2 = [tuple(map(float, x)) for x in p2]
    # augment each side with diagonal slots for the other side's points
    left = p1 + [None] * len(p2)
    right = p2 + [None] * len(p1)

    def cost(i, j):
        a, b = left[i], right[j]
        if a is not None and b is not None:
            return max(abs(a[0] - b[0]), abs(a[1] - b[1]))
        if a is not None:
            return (a[1] - a[0]) / 2.0
        if b is not None:
            return (b[1] - b[0]) / 2.0
        return 0.0

    n = len(left)
    if n == 0:
        return 0.0
    best = np.inf
    for perm in itertools.permutations(range(n)):
        c = max(cost(i, perm[i]) for i in range(n))
        best = min(best, c)
    return float(best)


def batch_persistent_rank(batch, s, t):
    """Vectorised :func:`persistent_rank` over the rows of a 2-D array."""
    batch = np.asarray(batch, dtype=float)
    mask_t = batch <= t
    mask_s = batch <= s
    prev = np.zeros_like(mask_t)
    prev[:, 1:] = mask_t[:, :-1]
    run_id = np.cumsum(mask_t & ~prev, axis=1)
    # a run counts once: at its first sample lying at or below s
    tagged = np.where(mask_s, run_id, 0)
    seen = np.zeros_like(tagged)
    seen[:, 1:] = np.maximum.accumulate(tagged, axis=1)[:, :-1]
    first = mask_s & (run_id > seen)
    rank = first.sum(axis=1)
    rank[batch.max(axis=1) <= t] = 0
    return rank


def batch_level_sweep_multiplicities(batch, levels):
    """Diagram multiplicities for every row of ``batch``.

    Returns an integer array ``mult`` of shape (rows, m, m) where
    ``mult[r, i, j]`` counts the point (levels[i], levels[j]) in the diagram
    of row r. ``levels`` must contain every value occurring in ``batch``.
    """
    levels = sorted(float(x) for x in levels)
    batch = np.asarray(batch, dtype=float)
    m = len(levels)
    beta = np.zeros((batch.shape[0], m + 1, m), dtype=np.int64)
    for i in range(m):
        for j in range(i, m):
            beta[:, i + 1, j] = batch_persistent_rank(batch, levels[i], levels[j])
    mult = np.zeros((batch.shape[0], m, m), dtype=np.int64)
    for i in range(m):
        for j in range(i + 1, m):
            mult[:, i, j] = (
                beta[:, i + 1, j - 1] - beta[:, i, j - 1] - beta[:, i + 1, j] + beta[:, i, j]
            )
    return mult
