"""Sliding-window signature estimates and moving-block-bootstrap bands."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from topsig.functionals import (
    EvaluationGrid,
    FunctionalCurve,
    KernelSpec,
    TruncationSpec,
    normalized_functional,
)
from topsig.persistence import TimeSeries, sublevel_diagram
from topsig.simulator import rng_for

__all__ = [
    "WindowConfig",
    "BootstrapConfig",
    "SignatureEstimate",
    "windows",
    "window_curves",
    "empirical_signature",
    "mbb_indices",
    "mbb_resample",
    "bootstrap_replicates",
    "bootstrap_bands",
    "bands_from_replicates",
    "estimate_from_curves",
    "worker_count",
    "default_block_len",
]


@dataclass(frozen=True)
class WindowConfig:
    window_len: int = 150
    stride: int = 1

    def __post_init__(self):
        if self.window_len < 2:
            raise ValueError("window length must be >= 2")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")


@dataclass(frozen=True)
class BootstrapConfig:
    """``block_len=None`` picks :func:`default_block_len` from the window count."""

    replicates: int = 200
    block_len: Optional[int] = 100
    level: float = 0.01
    seed: int = 0
    band_kind: str = "pointwise"

    def __post_init__(self):
        if self.replicates < 2:
            raise ValueError("need at least 2 bootstrap replicates")
        if self.block_len is not None and self.block_len < 1:
            raise ValueError("block length must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if self.band_kind not in ("pointwise", "uniform"):
            raise ValueError(f"unknown band kind {self.band_kind!r}")


@dataclass(frozen=True)
class SignatureEstimate:
    mean: FunctionalCurve
    lower: FunctionalCurve
    upper: FunctionalCurve
    level: float
    replicates: int
    band_kind: str
    block_len: int
    config: dict = field(default_factory=dict)

    @property
    def grid(self) -> EvaluationGrid:
        return self.mean.grid

    def half_width(self) -> float:
        """Largest distance from the mean to either band edge."""
        return float(max(np.max(self.upper.values - self.mean.values),
                         np.max(self.mean.values - self.lower.values)))


def windows(series: TimeSeries, cfg: WindowConfig) -> list:
    """Overlapping windows ``X_n = (S_n, ..., S_{n+M-1})`` at the configured stride."""
    n, m = len(series), cfg.window_len
    if m > n:
        raise ValueError(f"window length {m} exceeds series length {n}")
    v = series.values
    return [TimeSeries(v[i:i + m], series.dt) for i in range(0, n - m + 1, cfg.stride)]


def _curve_chunk(args):
    chunk, spec, kernel, grid = args
    return np.stack([normalized_functional(sublevel_diagram(w), spec, kernel, grid).values for w in chunk])


def window_curves(series: TimeSeries, wcfg: WindowConfig, spec: TruncationSpec, kernel: KernelSpec,
                  grid: EvaluationGrid, workers: int = 1) -> np.ndarray:
    """Normalized functional of every window, shape (n_windows, grid.size).

    With ``workers > 1`` windows are split into contiguous chunks evaluated
    in separate processes; the stacked result is identical to the serial one.
    """
    ws = [w.values for w in windows(series, wcfg)]
    if workers <= 1 or len(ws) < 2 * workers:
        return _curve_chunk((ws, spec, kernel, grid))
    bounds = np.linspace(0, len(ws), workers + 1).astype(int)
    jobs = [(ws[a:b], spec, kernel, grid) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_curve_chunk, jobs))
    return np.vstack(parts)


def _weighted_mean(curves: np.ndarray, counts: np.ndarray) -> np.ndarray:
    # single code path for the empirical mean and every replicate, so that a
    # replicate using each window once is bit-identical to the mean
    return (counts @ curves) / counts.sum()


def empirical_signature(series: TimeSeries, wcfg: WindowConfig, spec: TruncationSpec,
                        kernel: KernelSpec, grid: EvaluationGrid, workers: int = 1) -> FunctionalCurve:
    curves = window_curves(series, wcfg, spec, kernel, grid, workers)
    return FunctionalCurve(grid, _weighted_mean(curves, np.ones(len(curves))))


def default_block_len(num_windows: int) -> int:
    """``max(1, floor(n ** 0.4))``: grows without bound but slower than sqrt(n)."""
    if num_windows < 1:
        raise ValueError("need at least one window")
    b = int(math.floor(num_windows**0.4))
    # guard against pow rounding just below an exact integer root
    if (b + 1) ** 5 <= num_windows**2:
        b += 1
    elif b**5 > num_windows**2:
        b -= 1
    return max(1, b)


def mbb_indices(n_windows: int, block_len: int, seed: int, replicate_index: int) -> np.ndarray:
    """Window indices of one moving-block-bootstrap replicate.

    ``ceil(n / L)`` block starts are drawn uniformly with replacement from the
    ``n - L + 1`` positions where a full block fits; the concatenated blocks
    are cut back to ``n`` indices.
    """
    if not 1 <= block_len <= n_windows:
        raise ValueError(f"block length must lie in [1, {n_windows}]")
    rng = rng_for(seed, "bootstrap", replicate_index)
    n_blocks = -(-n_windows // block_len)
    starts = rng.integers(0, n_windows - block_len + 1, size=n_blocks)
    idx = (starts[:, None] + np.arange(block_len)[None, :]).ravel()
    return idx[:n_windows]


def mbb_resample(window_curves: Sequence, cfg: BootstrapConfig, replicate_index: int) -> FunctionalCurve:
    """Mean curve of one bootstrap replicate from precomputed per-window curves."""
    if isinstance(window_curves, np.ndarray):
        raise TypeError("pass FunctionalCurve objects; use bootstrap_replicates for arrays")
    grid = window_curves[0].grid
    curves = np.stack([c.values for c in window_curves])
    L = cfg.block_len or default_block_len(len(curves))
    counts = np.bincount(mbb_indices(len(curves), L, cfg.seed, replicate_index), minlength=len(curves))
    return FunctionalCurve(grid, _weighted_mean(curves, counts.astype(float)))


def bootstrap_replicates(curves: np.ndarray, cfg: BootstrapConfig) -> np.ndarray:
    """All replicate means, shape (replicates, grid size)."""
    n = len(curves)
    L = cfg.block_len or default_block_len(n)
    out = np.empty((cfg.replicates, curves.shape[1]))
    for i in range(cfg.replicates):
        counts = np.bincount(mbb_indices(n, L, cfg.seed, i), minlength=n).astype(float)
        out[i] = _weighted_mean(curves, counts)
    return out


def bands_from_replicates(mean: np.ndarray, reps: np.ndarray, level: float, kind: str):
    """Pointwise percentile bands, or ``mean +/- q`` with q the (1-level)-quantile of sup deviations."""
    if kind == "pointwise":
        lower = np.quantile(reps, level / 2, axis=0)
        upper = np.quantile(reps, 1 - level / 2, axis=0)
        return lower, upper
    sup_dev = np.max(np.abs(reps - mean[None, :]), axis=1)
    q = np.quantile(sup_dev, 1 - level)
    return mean - q, mean + q


def bootstrap_bands(series: TimeSeries, wcfg: WindowConfig, spec: TruncationSpec, kernel: KernelSpec,
                    grid: EvaluationGrid, bcfg: BootstrapConfig, workers: int = 1,
                    config: Optional[dict] = None) -> SignatureEstimate:
    curves = window_curves(series, wcfg, spec, kernel, grid, workers)
    return estimate_from_curves(curves, grid, bcfg, config)


def estimate_from_curves(curves: np.ndarray, grid: EvaluationGrid, bcfg: BootstrapConfig,
                         config: Optional[dict] = None) -> SignatureEstimate:
    n = len(curves)
    L = bcfg.block_len or default_block_len(n)
    if L > n:
        raise ValueError(f"block length {L} exceeds the number of windows {n}")
    bcfg_used = BootstrapConfig(bcfg.replicates, L, bcfg.level, bcfg.seed, bcfg.band_kind)
    mean = _weighted_mean(curves, np.ones(n))
    reps = bootstrap_replicates(curves, bcfg_used)
    lower, upper = bands_from_replicates(mean, reps, bcfg.level, bcfg.band_kind)
    return SignatureEstimate(
        FunctionalCurve(grid, mean), FunctionalCurve(grid, lower), FunctionalCurve(grid, upper),
        bcfg.level, bcfg.replicates, bcfg.band_kind, L, dict(config or {}),
    )


def worker_count(env_var: str = "SIG_THREADS") -> int:
    """Worker cap from the environment; 0 or unset means one per CPU."""
    raw = os.environ.get(env_var, "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError(f"{env_var} must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)
