"""End-to-end experiments: template discrimination and band coverage."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from topsig.estimation import BootstrapConfig, WindowConfig, estimate_from_curves, window_curves
from topsig.functionals import ProjectionWindow, Silhouette, TruncationSpec, default_grid
from topsig.simulator import MarkovTruncGauss, NoiseModel, PaperPhi, SimulationConfig, simulate


@dataclass(frozen=True)
class PipelineConfig:
    """Signal, windowing, functional and bootstrap settings of one estimate."""

    duration: float = 30.0
    rate: float = 50.0
    tau: float = 0.1
    window_len: int = 150
    epsilon: float = 0.2
    p: float = 1.0
    proj_lower: float = -9.0
    proj_upper: float = 9.0
    replicates: int = 200
    block_len: int = 100
    level: float = 0.01


def _kernel(cfg: PipelineConfig) -> Silhouette:
    return Silhouette(ProjectionWindow(cfg.proj_lower, cfg.proj_upper))


def estimates(theta: float, sigma: float, seed: int, cfg: PipelineConfig = PipelineConfig(),
              workers: int = 1) -> dict:
    """Pointwise and uniform estimates from one simulated signal (same replicates for both)."""
    kernel = _kernel(cfg)
    grid = default_grid(kernel)
    sim = SimulationConfig(PaperPhi(theta), MarkovTruncGauss(), None, NoiseModel(sigma, cfg.tau),
                           cfg.duration, cfg.rate, seed)
    curves = window_curves(simulate(sim), WindowConfig(cfg.window_len), TruncationSpec(cfg.epsilon, cfg.p),
                           kernel, grid, workers)
    out = {}
    for kind in ("pointwise", "uniform"):
        bcfg = BootstrapConfig(cfg.replicates, cfg.block_len, cfg.level, seed, kind)
        out[kind] = estimate_from_curves(curves, grid, bcfg, {"theta": theta, "sigma": sigma, "seed": seed})
    return out


def template_comparison(sigma: float, seeds=(1, 2, 3), cfg: PipelineConfig = PipelineConfig(),
                        workers: int = 1) -> dict:
    """Compare two phi_1 runs with each other and with one phi_4 run.

    ``within_fraction`` is the share of grid nodes where each phi_1 mean lies
    inside the other's pointwise band. ``separation`` is the sup distance of the
    phi_1 and phi_4 means, ``half_width_sum`` the sum of their uniform half-widths.
    """
    a = estimates(1.0, sigma, seeds[0], cfg, workers)
    b = estimates(1.0, sigma, seeds[1], cfg, workers)
    c = estimates(4.0, sigma, seeds[2], cfg, workers)
    ma, mb = a["pointwise"].mean.values, b["pointwise"].mean.values
    inside = ((ma >= b["pointwise"].lower.values) & (ma <= b["pointwise"].upper.values)
              & (mb >= a["pointwise"].lower.values) & (mb <= a["pointwise"].upper.values))
    separation = a["uniform"].mean.sup_distance(c["uniform"].mean)
    widths = a["uniform"].half_width() + c["uniform"].half_width()
    return {
        "sigma": sigma,
        "within_fraction": float(inside.mean()),
        "phi1_sup_difference": float(np.max(np.abs(ma - mb))),
        "separation": separation,
        "half_width_sum": widths,
        "separated": bool(separation > widths),
        "estimates": {"phi1_a": a, "phi1_b": b, "phi4": c},
    }


def reference_signature(theta: float, sigma: float, runs: int = 50, duration: float = 300.0,
                        stride: int = 5, seed: int = 10_000, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Long-run mean signature pooled over independent long simulations."""
    kernel = _kernel(cfg)
    grid = default_grid(kernel)
    total, count = np.zeros(grid.size), 0
    for r in range(runs):
        sim = SimulationConfig(PaperPhi(theta), MarkovTruncGauss(), None, NoiseModel(sigma, cfg.tau),
                               duration, cfg.rate, seed + r)
        curves = window_curves(simulate(sim), WindowConfig(cfg.window_len, stride),
                               TruncationSpec(cfg.epsilon, cfg.p), kernel, grid)
        total += curves.sum(axis=0)
        count += len(curves)
    return total / count


def coverage_experiment(trials: int = 100, level: float = 0.1, theta: float = 1.0, sigma: float = 0.1,
                        reference_runs: int = 50, cfg: PipelineConfig = PipelineConfig(),
                        block_len: int = 100, duration: float = 30.0) -> dict:
    """Fraction of uniform bands from ``duration``-second signals that contain the long-run signature."""
    ref = reference_signature(theta, sigma, reference_runs, cfg=cfg)
    cfg = replace(cfg, level=level, block_len=block_len, duration=duration)
    hits = []
    for t in range(trials):
        est = estimates(theta, sigma, seed=t, cfg=cfg)["uniform"]
        hits.append(bool(np.all((ref >= est.lower.values) & (ref <= est.upper.values))))
    return {"trials": trials, "level": level, "coverage": float(np.mean(hits)), "block_len": block_len,
            "duration": duration}
