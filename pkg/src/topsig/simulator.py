"""Synthetic observations S_n = phi(gamma_n) + W_n.

gamma is a discrete integral of positive velocities, ``gamma_{n+1} = gamma_n + h V_n``,
with V either i.i.d. uniform on [v_min, v_max] or a Markov chain whose
transitions are Gaussians of scale eta truncated to that interval. W is a
stationary Gaussian process with squared-exponential covariance.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr, ndtri

from topsig.persistence import TimeSeries

log = logging.getLogger(__name__)

__all__ = [
    "PaperPhi",
    "Sine",
    "Custom",
    "IidUniform",
    "MarkovTruncGauss",
    "ReparamModel",
    "NoiseModel",
    "SimulationConfig",
    "rng_for",
    "sample_reparam",
    "sample_reparam_batch",
    "sample_gp_noise",
    "simulate_signal",
    "simulate",
    "template_amplitude",
]


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Independent generator keyed by ``(seed, *tags)``.

    String tags are hashed with CRC32 so that streams are stable across runs
    and platforms.
    """
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for t in tags:
        key.append(zlib.crc32(t.encode()) if isinstance(t, str) else int(t))
    return np.random.default_rng(np.random.SeedSequence(key))


# -- periodic templates -----------------------------------------------------


def _frac(x) -> np.ndarray:
    """Fractional part in [0, 1); values that round up to 1.0 wrap to 0."""
    x = np.asarray(x, dtype=float)
    f = x - np.floor(x)
    return np.where(f >= 1.0, 0.0, f)


@dataclass(frozen=True)
class PaperPhi:
    """``theta (sin 6 pi t + |frac(t) - 1/2| - 1/2) + 5 sin 4 pi t``."""

    theta: float = 1.0

    def __call__(self, x):
        f = _frac(x)
        return self.theta * (np.sin(6 * np.pi * f) + np.abs(f - 0.5) - 0.5) + 5 * np.sin(4 * np.pi * f)


@dataclass(frozen=True)
class Sine:
    frequency_periods: int = 1

    def __post_init__(self):
        if int(self.frequency_periods) != self.frequency_periods or self.frequency_periods < 1:
            raise ValueError("frequency_periods must be a positive integer")

    def __call__(self, x):
        f = _frac(x)
        return np.sin(2 * np.pi * self.frequency_periods * f)


@dataclass(frozen=True)
class Custom:
    """One period given by samples at ``k / len(samples)``, linearly interpolated."""

    samples: tuple

    def __post_init__(self):
        s = tuple(float(v) for v in self.samples)
        if len(s) < 2 or not all(math.isfinite(v) for v in s):
            raise ValueError("custom template needs at least 2 finite samples")
        object.__setattr__(self, "samples", s)

    def __call__(self, x):
        f = _frac(x)
        s = np.asarray(self.samples + (self.samples[0],))
        knots = np.linspace(0.0, 1.0, s.size)
        return np.interp(f, knots, s)


PeriodicTemplate = Union[PaperPhi, Sine, Custom]


def template_amplitude(template: PeriodicTemplate, resolution: int = 200_001) -> float:
    """max - min of one period (exact for Custom, fine grid otherwise)."""
    if isinstance(template, Custom):
        return max(template.samples) - min(template.samples)
    if isinstance(template, Sine):
        return 2.0
    v = template(np.linspace(0.0, 1.0, resolution))
    return float(v.max() - v.min())


# -- reparametrizations -----------------------------------------------------


@dataclass(frozen=True)
class IidUniform:
    v_min: float = 0.5
    v_max: float = 1.5

    def __post_init__(self):
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")


@dataclass(frozen=True)
class MarkovTruncGauss:
    v_min: float = 0.5
    v_max: float = 1.5
    eta: float = 0.2

    def __post_init__(self):
        if not 0 < self.v_min < self.v_max:
            raise ValueError("need 0 < v_min < v_max")
        if not 0 < self.eta < (self.v_max - self.v_min) / 4:
            raise ValueError("need 0 < eta < (v_max - v_min) / 4")


@dataclass(frozen=True)
class ReparamModel:
    """Velocity law, time step ``h`` and start ``gamma0`` (None: uniform on [0, 1))."""

    velocity: Union[IidUniform, MarkovTruncGauss] = MarkovTruncGauss()
    h: float = 0.02
    gamma0: Optional[float] = None

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")


def _truncnorm_ppf(u, mu, sd, lo, hi):
    a = ndtr((lo - mu) / sd)
    b = ndtr((hi - mu) / sd)
    x = mu + sd * ndtri(a + u * (b - a))
    return np.clip(x, lo, hi)


def _velocities(vel, uniforms: np.ndarray) -> np.ndarray:
    """Map uniforms of shape (chains, n) to velocities."""
    lo, hi = vel.v_min, vel.v_max
    if isinstance(vel, IidUniform):
        return lo + (hi - lo) * uniforms
    v = np.empty_like(uniforms)
    v[:, 0] = lo + (hi - lo) * uniforms[:, 0]
    for k in range(1, uniforms.shape[1]):
        v[:, k] = _truncnorm_ppf(uniforms[:, k], v[:, k - 1], vel.eta, lo, hi)
    return v


def sample_reparam_batch(model: ReparamModel, n: int, seeds: Sequence[int]) -> np.ndarray:
    """Independent chains, one per seed; row i equals ``sample_reparam(model, n, seeds[i])``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rngs = [rng_for(s, "reparam") for s in seeds]
    starts = np.array([
        model.gamma0 if model.gamma0 is not None else r.random() for r in rngs
    ], dtype=float)
    u = np.stack([r.random(n) for r in rngs])
    v = _velocities(model.velocity, u)
    steps = np.cumsum(v, axis=1)
    gamma = np.empty((len(rngs), n + 1))
    gamma[:, 0] = starts
    gamma[:, 1:] = starts[:, None] + model.h * steps
    return gamma


def sample_reparam(model: ReparamModel, n: int, seed: int) -> np.ndarray:
    """``gamma_0, ..., gamma_n``; strictly increasing, deterministic in ``seed``."""
    return sample_reparam_batch(model, n, [seed])[0]


# -- noise --------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 0.1
    tau: float = 0.1

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def covariance(self, lag_seconds):
        lag = np.asarray(lag_seconds, dtype=float)
        return self.sigma**2 * np.exp(-(lag**2) / (2 * self.tau**2))


class EmbeddingError(RuntimeError):
    pass


PADDING = 4
JITTER = 1e-10
CHOLESKY_MAX_N = 4000


def _circulant_sample(model, n, dt, rng):
    m_half = PADDING * n
    c = model.covariance(np.arange(m_half) * dt)
    row = np.concatenate([c, c[-2:0:-1]])  # symmetric circulant, size 2(m_half - 1)
    lam = np.fft.fft(row).real
    if lam.min() < -JITTER * lam.max():
        raise EmbeddingError(
            f"circulant embedding not PSD (min eigenvalue {lam.min():.3g}); increase padding"
        )
    lam = np.maximum(lam, 0.0)
    m = row.size
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x = np.fft.fft(np.sqrt(lam / m) * z)
    return x.real[:n]


def _cholesky_sample(model, n, dt, rng):
    lags = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]) * dt
    cov = model.covariance(lags)
    cov[np.diag_indices(n)] += JITTER * model.sigma**2
    chol = np.linalg.cholesky(cov)
    return chol @ rng.standard_normal(n)


def sample_gp_noise(model: NoiseModel, n: int, dt: float, seed: int) -> np.ndarray:
    """Zero-mean stationary Gaussian sequence with covariance ``sigma^2 exp(-lag^2 / 2 tau^2)``.

    Circulant embedding (FFT) first; if the embedding is not positive
    semi-definite within the jitter tolerance, falls back to a Cholesky
    factorisation for ``n <= 4000`` and raises otherwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.sigma == 0:
        return np.zeros(n)
    rng = rng_for(seed, "noise")
    try:
        return _circulant_sample(model, n, dt, rng)
    except EmbeddingError:
        if n > CHOLESKY_MAX_N:
            raise
        log.warning("circulant embedding failed, using Cholesky for n=%d", n)
        return _cholesky_sample(model, n, dt, rng_for(seed, "noise", "cholesky"))


# -- full signal --------------------------------------------------------------


@dataclass(frozen=True)
class SimulationConfig:
    template: PeriodicTemplate = PaperPhi(1.0)
    velocity: Union[IidUniform, MarkovTruncGauss] = MarkovTruncGauss()
    gamma0: Optional[float] = None
    noise: NoiseModel = NoiseModel()
    duration: float = 30.0
    rate: float = 50.0
    seed: int = 0

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.rate))

    def reparam(self) -> ReparamModel:
        return ReparamModel(self.velocity, 1.0 / self.rate, self.gamma0)

    def to_dict(self) -> dict:
        t = self.template
        tmpl = {"kind": {PaperPhi: "paper-phi", Sine: "sine", Custom: "custom"}[type(t)], **asdict(t)}
        if isinstance(t, Custom):
            tmpl["samples"] = list(t.samples)
        vel = {"kind": "iid" if isinstance(self.velocity, IidUniform) else "markov", **asdict(self.velocity)}
        return {
            "template": tmpl,
            "reparam": {**vel, "gamma0": self.gamma0},
            "noise": asdict(self.noise),
            "duration": self.duration,
            "rate": self.rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        t = dict(d["template"])
        kind = t.pop("kind")
        template = {"paper-phi": PaperPhi, "sine": Sine, "custom": Custom}[kind](**t)
        r = dict(d["reparam"])
        gamma0 = r.pop("gamma0", None)
        vkind = r.pop("kind")
        velocity = (IidUniform if vkind == "iid" else MarkovTruncGauss)(**r)
        return cls(template, velocity, gamma0, NoiseModel(**d["noise"]),
                   float(d["duration"]), float(d["rate"]), int(d["seed"]))


def simulate_signal(template: PeriodicTemplate, reparam: ReparamModel, noise: NoiseModel,
                    duration: float, rate: float, seed: int) -> TimeSeries:
    """Sample ``S_n = phi(gamma_n) + W_n`` for ``round(duration * rate)`` samples at ``rate`` Hz.

    The reparametrization and noise draw from independent streams derived
    from ``seed``. ``reparam.h`` is overridden by ``1 / rate``.
    """
    n = int(round(duration * rate))
    if n < 2:
        raise ValueError("duration * rate must be at least 2")
    dt = 1.0 / rate
    model = ReparamModel(reparam.velocity, dt, reparam.gamma0)
    gamma = sample_reparam(model, n - 1, seed)
    w = sample_gp_noise(noise, n, dt, seed)
    return TimeSeries(template(gamma) + w, dt)


def simulate(config: SimulationConfig) -> TimeSeries:
    return simulate_signal(config.template, config.reparam(), config.noise,
                           config.duration, config.rate, config.seed)
