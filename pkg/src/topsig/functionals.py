"""Truncated persistence weights, compactly supported kernels and functionals.

A functional maps a diagram D to a function on a grid,

    rho(D)(t)  = sum_x w(x)^p k_x(t)
    Fbar(D)(t) = rho(D)(t) / sum_x w(x)^p      (0 when the sum vanishes)

with the truncated weight ``w(b, d) = (d - b - eps)_+``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from topsig.persistence import PersistenceDiagram

__all__ = [
    "TruncationSpec",
    "ProjectionWindow",
    "Silhouette",
    "PersistenceImage",
    "EvaluationGrid",
    "FunctionalCurve",
    "truncated_weight",
    "truncated_persistence",
    "truncated_power_sum",
    "project",
    "kernel_eval",
    "linear_functional",
    "normalized_functional",
    "default_grid",
    "time_lipschitz_estimate",
]


@dataclass(frozen=True)
class TruncationSpec:
    epsilon: float = 0.2
    p: float = 1.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")


@dataclass(frozen=True)
class ProjectionWindow:
    lower: float = -9.0
    upper: float = 9.0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("projection window needs lower < upper")


@dataclass(frozen=True)
class Silhouette:
    """Landscape tent of the projected point; supported on [lower, upper]."""

    window: ProjectionWindow = ProjectionWindow()

    dim = 1

    @property
    def time_lipschitz(self) -> float:
        return 2.0

    @property
    def point_lipschitz(self) -> float:
        return 2.0

    @property
    def diagonal_bound(self) -> float:
        return 0.0


@dataclass(frozen=True)
class PersistenceImage:
    """Gaussian bump on the projected point, tapered to a sup-ball of radius 2*sigma.

    The Gaussian keeps its ``1/(2 pi sigma^2)`` factor; the taper means the
    kernel does not integrate to one.
    """

    window: ProjectionWindow = ProjectionWindow()
    sigma: float = 1.0
    r: float = 1.1

    dim = 2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.r > 1:
            raise ValueError("r must be > 1")

    @property
    def time_lipschitz(self) -> float:
        return 2.0 ** (self.r + 1) / (math.pi * math.e * self.sigma**3)

    @property
    def point_lipschitz(self) -> float:
        return 2.0 ** (self.r - 1) * (self.r + 2) / (math.pi * self.sigma**3)

    @property
    def diagonal_bound(self) -> float:
        # sup of the kernel anywhere, including on the diagonal
        return 2.0**self.r / (2 * math.pi * self.sigma**2)


KernelSpec = Union[Silhouette, PersistenceImage]


@dataclass(frozen=True)
class EvaluationGrid:
    """Tensor grid of ``count`` uniform nodes per axis, endpoints included."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(a), float(b), int(c)) for a, b, c in self.axes)
        if len(axes) not in (1, 2):
            raise ValueError("grid must be 1- or 2-dimensional")
        for start, stop, count in axes:
            if not start < stop:
                raise ValueError("grid axis needs start < stop")
            if count < 2:
                raise ValueError("grid axis needs at least 2 nodes")
        object.__setattr__(self, "axes", axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(c for _, _, c in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def coords(self, axis: int = 0) -> np.ndarray:
        start, stop, count = self.axes[axis]
        return np.linspace(start, stop, count)

    def step(self, axis: int = 0) -> float:
        start, stop, count = self.axes[axis]
        return (stop - start) / (count - 1)

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (size, dim), row-major."""
        if self.dim == 1:
            return self.coords(0)[:, None]
        x, y = np.meshgrid(self.coords(0), self.coords(1), indexing="ij")
        return np.column_stack([x.ravel(), y.ravel()])

    def to_dict(self) -> dict:
        return {"dim": self.dim, "axes": [list(a) for a in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationGrid":
        grid = cls(tuple(tuple(a) for a in d["axes"]))
        if "dim" in d and int(d["dim"]) != grid.dim:
            raise ValueError("grid dim does not match its axes")
        return grid


def default_grid(kernel: KernelSpec, count: int | None = None) -> EvaluationGrid:
    """Uniform grid over the window padded by an eighth of its width on each side."""
    lo, hi = kernel.window.lower, kernel.window.upper
    pad = (hi - lo) / 8.0
    if kernel.dim == 1:
        return EvaluationGrid(((lo - pad, hi + pad, count or 512),))
    c = count or 64
    return EvaluationGrid(((lo - pad, hi + pad, c), (lo - pad, hi + pad, c)))


@dataclass(frozen=True)
class FunctionalCurve:
    grid: EvaluationGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def sup_distance(self, other: "FunctionalCurve") -> float:
        if self.grid != other.grid:
            raise ValueError("curves live on different grids")
        return float(np.max(np.abs(self.values - other.values)))

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


def truncated_weight(point, spec: TruncationSpec) -> float:
    b, d = point
    return max(d - b - spec.epsilon, 0.0)


def _weights(diagram: PersistenceDiagram, epsilon: float) -> np.ndarray:
    return np.maximum(diagram.persistence - epsilon, 0.0)


def truncated_power_sum(diagram: PersistenceDiagram, epsilon: float, q: float) -> float:
    """``sum_x w_eps(x)^q`` over points with positive weight."""
    w = _weights(diagram, epsilon)
    w = w[w > 0]
    return float(np.sum(w**q))


def truncated_persistence(diagram: PersistenceDiagram, spec: TruncationSpec) -> float:
    """``(sum_x w_eps(x)^p)^(1/p)``; 0 for an empty diagram."""
    return truncated_power_sum(diagram, spec.epsilon, spec.p) ** (1.0 / spec.p)


def _project_arrays(b, d, lower, upper):
    shift = np.minimum(np.maximum.reduce([d - upper, lower - b, np.zeros_like(b)]), (d - b) / 2.0)
    return b + shift, d - shift


def project(point, window: ProjectionWindow) -> tuple:
    """Move a point along (1, -1) onto the triangle with corner (lower, upper).

    Points already inside are unchanged; persistence never increases.
    """
    b, d = (np.asarray(x, dtype=float) for x in point)
    pb, pd = _project_arrays(b, d, window.lower, window.upper)
    return float(pb), float(pd)


def _kernel_matrix(kernel: KernelSpec, points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Kernel values, shape (n_points, n_nodes)."""
    b, d = _project_arrays(points[:, 0], points[:, 1], kernel.window.lower, kernel.window.upper)
    if isinstance(kernel, Silhouette):
        t = nodes[:, 0]
        half = (d - b)[:, None] / 2.0
        mid = (b + d)[:, None] / 2.0
        return np.maximum(half - np.abs(t[None, :] - mid), 0.0)
    sigma, r = kernel.sigma, kernel.r
    dx = b[:, None] - nodes[None, :, 0]
    dy = d[:, None] - nodes[None, :, 1]
    taper = np.maximum(2.0 - np.maximum(np.abs(dx), np.abs(dy)) / sigma, 0.0) ** r
    gauss = np.exp(-(dx**2 + dy**2) / (2 * sigma**2)) / (2 * np.pi * sigma**2)
    return taper * gauss


def kernel_eval(kernel: KernelSpec, point, t) -> float:
    """Kernel of one diagram point at one node (scalar ``t`` or an (x, y) pair)."""
    node = np.atleast_1d(np.asarray(t, dtype=float)).reshape(1, -1)
    if node.shape[1] != kernel.dim:
        raise ValueError(f"node must have {kernel.dim} coordinate(s)")
    pts = np.asarray(point, dtype=float).reshape(1, 2)
    return float(_kernel_matrix(kernel, pts, node)[0, 0])


def _check_grid(kernel: KernelSpec, grid: EvaluationGrid):
    if kernel.dim != grid.dim:
        raise ValueError(f"{type(kernel).__name__} needs a {kernel.dim}-D grid")


def _rho_and_mass(diagram, spec, kernel, grid):
    _check_grid(kernel, grid)
    w = _weights(diagram, spec.epsilon)
    keep = w > 0
    if not np.any(keep):
        return np.zeros(grid.size), 0.0
    wp = w[keep] ** spec.p
    K = _kernel_matrix(kernel, diagram.points[keep], grid.nodes())
    return wp @ K, float(np.sum(wp))


def linear_functional(diagram: PersistenceDiagram, spec: TruncationSpec, kernel: KernelSpec,
                      grid: EvaluationGrid) -> FunctionalCurve:
    rho, _ = _rho_and_mass(diagram, spec, kernel, grid)
    return FunctionalCurve(grid, rho)


def normalized_functional(diagram: PersistenceDiagram, spec: TruncationSpec, kernel: KernelSpec,
                          grid: EvaluationGrid) -> FunctionalCurve:
    """Weighted average of kernels; invariant to replicating the diagram."""
    rho, mass = _rho_and_mass(diagram, spec, kernel, grid)
    if mass > 0:
        rho = rho / mass
    return FunctionalCurve(grid, rho)


def time_lipschitz_estimate(curve: FunctionalCurve) -> float:
    """Largest ``|F(s) - F(t)| / ||s - t||_inf`` over neighbouring grid nodes.

    In 2-D the neighbours include diagonals, so with equal axis steps the
    value bounds the ratio over all node pairs.
    """
    a = curve.as_array()
    if curve.grid.dim == 1:
        return float(np.max(np.abs(np.diff(a))) / curve.grid.step(0))
    hx, hy = curve.grid.step(0), curve.grid.step(1)
    ratios = [
        np.abs(np.diff(a, axis=0)) / hx,
        np.abs(np.diff(a, axis=1)) / hy,
        np.abs(a[1:, 1:] - a[:-1, :-1]) / max(hx, hy),
        np.abs(a[1:, :-1] - a[:-1, 1:]) / max(hx, hy),
    ]
    return float(max(r.max() for r in ratios))


def kernel_from_dict(d: dict) -> KernelSpec:
    window = ProjectionWindow(float(d["lower"]), float(d["upper"]))
    kind = d.get("kind", "silhouette")
    if kind == "silhouette":
        return Silhouette(window)
    if kind == "image":
        return PersistenceImage(window, float(d["sigma"]), float(d["r"]))
    raise ValueError(f"unknown kernel kind {kind!r}")


def kernel_to_dict(kernel: KernelSpec) -> dict:
    out = {"lower": kernel.window.lower, "upper": kernel.window.upper}
    if isinstance(kernel, Silhouette):
        return {"kind": "silhouette", **out}
    return {"kind": "image", **out, "sigma": kernel.sigma, "r": kernel.r}
