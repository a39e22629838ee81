"""Randomised checks of the stability, additivity and consistency inequalities.

Every check is deterministic given its seed and returns a :class:`CheckReport`.
``worst_margin`` is the smallest observed slack ``bound - measured`` (negative
means a violation); for exact-equality checks it is 0 on success and -1 on
mismatch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from topsig.functionals import (
    KernelSpec,
    Silhouette,
    TruncationSpec,
    default_grid,
    normalized_functional,
    truncated_power_sum,
)
from topsig.oracle import batch_level_sweep_multiplicities
from topsig.persistence import (
    PersistenceDiagram,
    bottleneck_distance,
    diagram_union,
    diagrams_equal,
    sublevel_diagram,
)
from topsig.simulator import NoiseModel, PaperPhi, Sine, rng_for, sample_gp_noise, template_amplitude

SLACK = 1e-9


@dataclass
class CheckReport:
    check_id: str
    trials: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, margin: float):
        self.trials += 1
        if margin < 0:
            self.violations += 1
        self.worst_margin = min(self.worst_margin, float(margin))

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "passed": self.passed,
            "trials": self.trials,
            "violations": self.violations,
            "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin,
            "config": self.config,
            "details": self.details,
        }


def random_series(rng: np.random.Generator, max_len: int = 200) -> np.ndarray:
    """Random PL test signal: a random walk, white noise, or a noisy oscillation."""
    n = int(rng.integers(2, max_len + 1))
    kind = rng.integers(3)
    scale = 10 ** rng.uniform(-1, 1)
    if kind == 0:
        x = np.cumsum(rng.normal(size=n))
    elif kind == 1:
        x = rng.normal(size=n)
    else:
        t = np.arange(n) / rng.uniform(5, 40)
        x = np.sin(2 * np.pi * t) + 0.3 * rng.normal(size=n)
    return scale * x


def random_perturbation(rng: np.random.Generator, n: int) -> np.ndarray:
    kind = rng.integers(4)
    amp = 10 ** rng.uniform(-3, 0.5)
    if kind == 0:
        return amp * rng.uniform(-1, 1, size=n)
    if kind == 1:
        return np.full(n, amp * rng.choice([-1.0, 1.0]))
    if kind == 2:
        e = np.zeros(n)
        e[rng.integers(n)] = amp * rng.normal()
        return e
    return amp * np.cumsum(rng.normal(size=n)) / math.sqrt(n)


# -- persistence core -------------------------------------------------------


def _multiplicities(diagram: PersistenceDiagram, m: int) -> np.ndarray:
    out = np.zeros((m, m), dtype=np.int64)
    for b, d in diagram.points:
        out[int(b), int(d)] += 1
    return out


def check_oracle(max_len: int = 12, alphabet: int = 3) -> CheckReport:
    """Union-find diagram vs. the rank-function oracle on every integer series."""
    report = CheckReport("oracle", config={"max_len": max_len, "alphabet": alphabet})
    levels = list(range(alphabet))
    for n in range(1, max_len + 1):
        batch = np.array(list(itertools.product(levels, repeat=n)), dtype=float)
        expected = batch_level_sweep_multiplicities(batch, levels)
        for row, exp in zip(batch, expected):
            got = _multiplicities(sublevel_diagram(row), alphabet)
            report.record(0.0 if np.array_equal(got, exp) else -1.0)
    return report


def check_bottleneck_stability(trials: int = 1000, seed: int = 0, max_len: int = 200) -> CheckReport:
    """``d_b(D(f), D(f + e)) <= ||e||_inf`` on random PL series."""
    rng = rng_for(seed, "check-bottleneck")
    report = CheckReport("bottleneck", config={"trials": trials, "seed": seed, "max_len": max_len})
    for _ in range(trials):
        f = random_series(rng, max_len)
        e = random_perturbation(rng, f.size)
        db = bottleneck_distance(sublevel_diagram(f), sublevel_diagram(f + e))
        report.record(np.max(np.abs(e)) + SLACK - db)
    return report


def _pl_refine(rng: np.random.Generator, values: np.ndarray) -> np.ndarray:
    """Same PL function re-sampled on a random finer grid containing every knot."""
    out = [values[:1]]
    for a, b in zip(values[:-1], values[1:]):
        k = int(rng.integers(0, 4))
        fr = np.sort(rng.uniform(0, 1, size=k))
        out.append(a + (b - a) * fr)
        out.append(np.array([b]))
    return np.concatenate(out)


def check_invariance(trials: int = 500, seed: int = 0) -> CheckReport:
    """Diagrams are unchanged by increasing time warps and shift with constant offsets."""
    rng = rng_for(seed, "check-invariance")
    report = CheckReport("invariance", config={"trials": trials, "seed": seed})
    for _ in range(trials):
        f = random_series(rng, 100)
        d = sublevel_diagram(f)
        warped = sublevel_diagram(_pl_refine(rng, f))
        report.record(0.0 if np.array_equal(d.points, warped.points) else -1.0)
        c = rng.normal() * 5
        report.record(0.0 if diagrams_equal(sublevel_diagram(f + c), d.shifted(c), 1e-9) else -1.0)
    return report


# -- periodic templates -------------------------------------------------------


def aligned_period(template, n: int) -> np.ndarray:
    """One period of ``template`` on n uniform samples, starting at a global maximum.

    The grid is placed on a numerically refined argmax, then rotated so that
    the largest sample comes first.
    """
    dense = np.linspace(0.0, 1.0, 20 * n, endpoint=False)
    j = int(np.argmax(template(dense)))
    h = 1.0 / (20 * n)
    res = minimize_scalar(lambda x: -float(template(x)), bounds=(dense[j] - h, dense[j] + h),
                          method="bounded", options={"xatol": 1e-14})
    period = template(res.x + np.arange(n) / n)
    return np.roll(period, -int(np.argmax(period))), float(res.x)


def tiled_signal(period: np.ndarray, periods: int, start: int) -> np.ndarray:
    """``periods`` periods of a sampled template starting at sample ``start`` of the period."""
    n = period.size
    reps = periods + 2
    return np.tile(period, reps)[start:start + periods * n + 1]


def split_at_maxima(signal: np.ndarray, n: int, start: int):
    """Left remainder, list of full max-to-max periods, right remainder."""
    first = (-start) % n
    cuts = list(range(first, signal.size, n))
    left = signal[:first + 1]
    full = [signal[a:b + 1] for a, b in zip(cuts[:-1], cuts[1:])]
    right = signal[cuts[-1]:]
    return left, full, right


def _start_index(phase0: float, n: int, start_at_max: bool) -> int:
    if start_at_max:
        return 0
    # sample of the aligned grid closest to template coordinate 0
    return int(round((-phase0) * n)) % n


def check_additivity(template=Sine(1), periods: Sequence[int] = range(1, 11), p: float = 1.0,
                     epsilon: float = 0.0, samples_per_period: int = 100,
                     start_at_max: bool = False) -> CheckReport:
    """Diagram of R periods = full-period copies plus a remainder with bounded p-persistence."""
    report = CheckReport("additivity", config={
        "template": repr(template), "periods": list(periods), "p": p, "epsilon": epsilon,
        "samples_per_period": samples_per_period, "start_at_max": start_at_max,
    })
    n = samples_per_period
    period, phase0 = aligned_period(template, n)
    if period[0] < np.max(period):
        report.details["skipped"] = "maximum not on the sample grid"
        return report
    d1 = sublevel_diagram(np.append(period, period[0]))
    start = _start_index(phase0, n, start_at_max)
    pers1 = truncated_power_sum(d1, epsilon, p)
    for R in periods:
        signal = tiled_signal(period, R, start)
        left, full, right = split_at_maxima(signal, n, start)
        rest = diagram_union(sublevel_diagram(left), sublevel_diagram(right))
        expected = rest
        for _ in full:
            expected = diagram_union(expected, d1)
        whole = sublevel_diagram(signal)
        report.record(0.0 if diagrams_equal(whole, expected) else -1.0)
        # remainder bound, compared in p-th powers
        report.record(2.0**p * pers1 + SLACK - truncated_power_sum(rest, epsilon, p))
        report.details[f"R={R}"] = {"copies": len(full), "remainder_points": len(rest)}
    return report


def check_consistency_rate(template=Sine(1), periods: Sequence[int] = (3, 6, 11, 21),
                           spec: TruncationSpec = TruncationSpec(), kernel: KernelSpec = Silhouette(),
                           samples_per_period: int = 100) -> CheckReport:
    """``||Fbar(R periods) - Fbar(one period)||_inf <= 4 (C + L_k A) / (R - 1)``."""
    amp = template_amplitude(template)
    C, Lk = kernel.diagonal_bound, kernel.point_lipschitz
    report = CheckReport("consistency", config={
        "template": repr(template), "periods": list(periods), "epsilon": spec.epsilon, "p": spec.p,
        "kernel": repr(kernel), "amplitude": amp,
    })
    grid = default_grid(kernel)
    n = samples_per_period
    period, phase0 = aligned_period(template, n)
    limit = normalized_functional(sublevel_diagram(np.append(period, period[0])), spec, kernel, grid)
    start = _start_index(phase0, n, False)
    diffs = {}
    record_high = -math.inf
    for R in sorted(periods):
        if R < 2:
            continue
        curve = normalized_functional(sublevel_diagram(tiled_signal(period, R, start)), spec, kernel, grid)
        diff = curve.sup_distance(limit)
        bound = 4 * (C + Lk * amp) / (R - 1)
        report.record(bound + SLACK - diff)
        # envelope: no later R may exceed the largest earlier difference
        if diffs:
            report.record(record_high + SLACK - diff)
        record_high = max(record_high, diff)
        diffs[R] = {"difference": diff, "bound": bound}
    report.details = {str(k): v for k, v in diffs.items()}
    return report


# -- functionals ------------------------------------------------------------


def random_diagram(rng: np.random.Generator, max_points: int = 20, max_pers: float = 6.0,
                   span: float = 10.0) -> PersistenceDiagram:
    k = int(rng.integers(1, max_points + 1))
    b = rng.uniform(-span, span, size=k)
    pers = rng.uniform(0, max_pers, size=k)
    return PersistenceDiagram(np.column_stack([b, b + pers]))


def perturb_diagram(rng: np.random.Generator, d: PersistenceDiagram, max_pers: float) -> PersistenceDiagram:
    """Jitter every point, drop a few and add a few short ones; persistence stays <= max_pers."""
    delta = 10 ** rng.uniform(-3, 0)
    pts = d.points + rng.uniform(-delta, delta, size=d.points.shape)
    pts[:, 1] = np.clip(pts[:, 1], pts[:, 0], pts[:, 0] + max_pers)
    keep = rng.random(len(pts)) > 0.1
    pts = pts[keep]
    extra = int(rng.integers(0, 3))
    if extra:
        b = rng.uniform(-10, 10, size=extra)
        pts = np.vstack([pts, np.column_stack([b, b + rng.uniform(0, 2 * delta, size=extra)])])
    return PersistenceDiagram(pts)


def check_functional_continuity(trials: int = 500, spec: TruncationSpec = TruncationSpec(0.2, 2.0),
                                kernel: KernelSpec = Silhouette(), seed: int = 0,
                                max_pers: float = 6.0) -> CheckReport:
    """Normalized functional is Lipschitz in the bottleneck distance with the stated constant."""
    if spec.p < 2:
        raise ValueError("the continuity bound is only asserted for p >= 2")
    rng = rng_for(seed, "check-continuity")
    grid = default_grid(kernel)
    C, Lk, p, eps = kernel.diagonal_bound, kernel.point_lipschitz, spec.p, spec.epsilon
    report = CheckReport("continuity", config={
        "trials": trials, "seed": seed, "epsilon": eps, "p": p, "kernel": repr(kernel), "U": max_pers,
    })
    skipped = 0
    for _ in range(trials):
        d1 = random_diagram(rng, max_pers=max_pers)
        d2 = perturb_diagram(rng, d1, max_pers)
        mass1 = truncated_power_sum(d1, eps, p)
        if mass1 == 0:
            skipped += 1
            continue
        lhs = normalized_functional(d1, spec, kernel, grid).sup_distance(
            normalized_functional(d2, spec, kernel, grid))
        lower = truncated_power_sum(d1, eps, p - 1) + truncated_power_sum(d2, eps, p - 1)
        const = Lk + 2 * p * (Lk * max_pers + C) * lower / mass1
        report.record(const * bottleneck_distance(d1, d2) + SLACK - lhs)
    report.details["skipped"] = skipped
    return report


def check_persistence_bounds(trials: int = 500, seed: int = 0) -> CheckReport:
    """Upper bound, Lipschitz bound and lower bound for truncated p-persistence.

    Also checks the equality case ``pers((1-a) f) = pers_{eps + 2a}(f)`` for
    single-point diagrams with ``max f = -min f = 1``.
    """
    rng = rng_for(seed, "check-persistence")
    report = CheckReport("persistence", config={"trials": trials, "seed": seed})
    counts = {"upper": [0, 0], "lipschitz": [0, 0], "lower": [0, 0], "tightness": [0, 0]}

    def rec(name, margin):
        counts[name][0] += 1
        counts[name][1] += int(margin < 0)
        report.record(margin)

    for _ in range(trials):
        f = random_series(rng, 150)
        dt = 10 ** rng.uniform(-2, 0)
        df = sublevel_diagram(f)

        # upper bound, Lipschitz case alpha = 1; needs (p - 1) > 1
        p = rng.uniform(2.05, 4.0)
        amp = float(f.max() - f.min())
        eps = rng.uniform(0.01, 1.0) * max(amp, 1e-3)
        T = (f.size - 1) * dt
        lip = float(np.max(np.abs(np.diff(f)))) / dt if f.size > 1 else 0.0
        bound = max(amp - eps, 0.0) ** p * (1 + p * T * (2 * lip / eps))
        val = truncated_power_sum(df, eps, p)
        rec("upper", bound * (1 + 1e-12) + SLACK - val)

        # Lipschitz in the function, p >= 2
        p = rng.uniform(2.0, 4.0)
        eps = rng.uniform(0, 0.5) * amp
        e = random_perturbation(rng, f.size)
        dg = sublevel_diagram(f + e)
        lhs = abs(truncated_power_sum(df, eps, p) - truncated_power_sum(dg, eps, p))
        rhs = p * float(np.max(np.abs(e))) * (truncated_power_sum(df, eps, p - 1) + truncated_power_sum(dg, eps, p - 1))
        rec("lipschitz", rhs * (1 + 1e-12) + SLACK - lhs)

        # lower bound under an additive perturbation
        p = rng.uniform(1.0, 4.0)
        eps = rng.uniform(0, 0.5) * amp
        w = random_perturbation(rng, f.size)
        a_w = float(w.max() - w.min())
        lhs = truncated_power_sum(sublevel_diagram(f + w), eps, p)
        rhs = truncated_power_sum(df, eps + a_w, p)
        rec("lower", lhs * (1 + 1e-12) + SLACK - rhs)

        # equality case on a valley normalised to [-1, 1]
        n = int(rng.integers(3, 60))
        k = int(rng.integers(1, n - 1))
        down = np.sort(rng.uniform(size=k))[::-1]
        up = np.sort(rng.uniform(size=n - k))
        g = np.concatenate([down, [-0.1], up])
        g = 2 * (g - g.min()) / (g.max() - g.min()) - 1
        a = rng.uniform(0, 0.9)
        p = rng.uniform(1.0, 4.0)
        eps = rng.uniform(0, 0.5)
        lhs = truncated_power_sum(sublevel_diagram((1 - a) * g), eps, p)
        rhs = truncated_power_sum(sublevel_diagram(g), eps + 2 * a, p)
        rec("tightness", 1e-9 - abs(lhs - rhs))

    report.details = {k: {"trials": v[0], "violations": v[1]} for k, v in counts.items()}
    return report


def check_reparam_stability(ladder: Sequence[float] = (0.8, 0.4, 0.2, 0.1, 0.05), periods: int = 30,
                            duration: float = 30.0, rate: float = 50.0,
                            noise: NoiseModel = NoiseModel(0.0, 0.1), draws: int = 1,
                            window: int = 150, stride: int = 5,
                            spec: TruncationSpec = TruncationSpec(), kernel: KernelSpec = Silhouette(),
                            template=PaperPhi(1.0), seed: int = 0) -> CheckReport:
    """Windowed signature distance shrinks as a warp approaches the identity.

    Warps are ``gamma_a(t) = R (s + a sin(2 pi s) / (2 pi))`` with ``s = t / T``,
    whose sup-distance to the identity warp is ``R a / (2 pi)``. The signature
    is the mean normalized functional over sliding windows, averaged over
    ``draws`` noise paths shared by every rung of the ladder. Qualitative:
    a violation is a rung whose distance exceeds the previous, coarser one.
    With noise switched on, small rungs hit a noise floor.
    """
    from topsig.estimation import WindowConfig, window_curves
    from topsig.persistence import TimeSeries

    report = CheckReport("stability", config={
        "ladder": list(ladder), "periods": periods, "duration": duration, "rate": rate,
        "sigma": noise.sigma, "tau": noise.tau, "draws": draws, "window": window, "stride": stride,
        "seed": seed,
    })
    grid = default_grid(kernel)
    dt = 1.0 / rate
    n = int(round(duration * rate))
    s = np.arange(n) / (n - 1)
    wcfg = WindowConfig(window, stride)
    noises = [sample_gp_noise(noise, n, dt, int(rng_for(seed, "stability", i).integers(2**63)))
              for i in range(draws)]

    def signature(a):
        base = template(periods * (s + a * np.sin(2 * np.pi * s) / (2 * np.pi)))
        return np.mean([window_curves(TimeSeries(base + w, dt), wcfg, spec, kernel, grid).mean(axis=0)
                        for w in noises], axis=0)

    ref = signature(0.0)
    dists = []
    for a in sorted(ladder, reverse=True):
        dist = float(np.max(np.abs(signature(a) - ref)))
        if dists:
            report.record(dists[-1] - dist)
        dists.append(dist)
        report.details[f"a={a}"] = {"warp_distance": periods * a / (2 * np.pi), "signature_distance": dist}
    return report


CHECKS: dict = {
    "oracle": check_oracle,
    "bottleneck": check_bottleneck_stability,
    "additivity": lambda: _merge("additivity", [
        check_additivity(Sine(1), range(1, 11), start_at_max=True),
        check_additivity(Sine(1), range(2, 11)),
        check_additivity(PaperPhi(1.0), range(2, 11)),
        check_additivity(PaperPhi(4.0), range(2, 11), p=2.0),
    ]),
    "consistency": check_consistency_rate,
    "continuity": check_functional_continuity,
    "persistence": check_persistence_bounds,
    "invariance": check_invariance,
    "stability": check_reparam_stability,
}


def _merge(check_id: str, reports: list) -> CheckReport:
    out = CheckReport(check_id)
    for i, r in enumerate(reports):
        out.trials += r.trials
        out.violations += r.violations
        out.worst_margin = min(out.worst_margin, r.worst_margin)
        out.details[f"run{i}"] = {"config": r.config, "details": r.details}
    return out


def run_suite(names: Optional[Sequence[str]] = None, seed: Optional[int] = None) -> list:
    """Run the named checks (all when ``names`` is None) in registry order."""
    names = list(CHECKS) if not names or "all" in names else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}")
    reports = []
    for name in CHECKS:
        if name not in names:
            continue
        fn: Callable = CHECKS[name]
        if seed is not None and name in ("bottleneck", "continuity", "persistence", "invariance", "stability"):
            reports.append(fn(seed=seed))
        else:
            reports.append(fn())
    return reports
