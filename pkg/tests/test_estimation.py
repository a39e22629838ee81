import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topsig.estimation import (
    BootstrapConfig,
    WindowConfig,
    bands_from_replicates,
    bootstrap_bands,
    bootstrap_replicates,
    default_block_len,
    empirical_signature,
    estimate_from_curves,
    mbb_indices,
    mbb_resample,
    window_curves,
    windows,
    worker_count,
)
from topsig.functionals import (
    EvaluationGrid,
    FunctionalCurve,
    Silhouette,
    TruncationSpec,
    default_grid,
    normalized_functional,
)
from topsig.persistence import TimeSeries, sublevel_diagram
from topsig.simulator import PaperPhi, SimulationConfig, simulate

K = Silhouette()
GRID = default_grid(K, 128)
SPEC = TruncationSpec()


@pytest.fixture(scope="module")
def signal():
    return simulate(SimulationConfig(PaperPhi(1.0), duration=8.0, seed=2))


def test_window_counts():
    s = TimeSeries(np.arange(5.0), 0.5)
    ws = windows(s, WindowConfig(3))
    assert len(ws) == 3 and all(w.dt == 0.5 for w in ws)
    assert np.array_equal(ws[2].values, [2, 3, 4])
    assert len(windows(s, WindowConfig(5))) == 1
    assert len(windows(TimeSeries(np.arange(10.0)), WindowConfig(3, stride=3))) == 3
    with pytest.raises(ValueError):
        windows(s, WindowConfig(6))
    with pytest.raises(ValueError):
        WindowConfig(1)


def test_config_validation():
    with pytest.raises(ValueError):
        BootstrapConfig(replicates=1)
    with pytest.raises(ValueError):
        BootstrapConfig(level=1.0)
    with pytest.raises(ValueError):
        BootstrapConfig(block_len=0)
    with pytest.raises(ValueError):
        BootstrapConfig(band_kind="simultaneous")


def test_empirical_signature_examples():
    s = TimeSeries([0.0, 2.0, 1.0, 3.0, 0.5])
    one = empirical_signature(s, WindowConfig(5), SPEC, K, GRID)
    assert np.array_equal(one.values, normalized_functional(sublevel_diagram(s), SPEC, K, GRID).values)
    two = empirical_signature(s, WindowConfig(4), SPEC, K, GRID)
    c1 = normalized_functional(sublevel_diagram(s.values[:4]), SPEC, K, GRID).values
    c2 = normalized_functional(sublevel_diagram(s.values[1:]), SPEC, K, GRID).values
    assert np.allclose(two.values, (c1 + c2) / 2, atol=1e-15)
    # periodic noiseless series whose windows all have the same values -> any window's curve
    per = TimeSeries(np.tile([0.0, 3.0, 1.0, 2.0], 6))
    sig = empirical_signature(per, WindowConfig(8, stride=4), SPEC, K, GRID)
    assert np.allclose(sig.values, normalized_functional(sublevel_diagram(per.values[:8]), SPEC, K, GRID).values)


@pytest.mark.parametrize("n", [1, 2, 31, 32, 100, 1351, 100_000, 3**10])
def test_default_block_len(n):
    b = default_block_len(n)
    assert b == max(1, int(np.floor(n**0.4 + 1e-9)))
    assert b**5 <= max(n**2, 1) or b == 1
    assert default_block_len(32) == 4 and default_block_len(100_000) == 100


def test_default_block_len_grows_slower_than_sqrt():
    ns = np.array([10**k for k in range(2, 9)])
    ratios = [default_block_len(int(n)) / np.sqrt(n) for n in ns]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    with pytest.raises(ValueError):
        default_block_len(0)


@given(st.integers(1, 300), st.data())
@settings(max_examples=100, deadline=None)
def test_mbb_indices_structure(n, data):
    L = data.draw(st.integers(1, n))
    idx = mbb_indices(n, L, seed=data.draw(st.integers(0, 99)), replicate_index=data.draw(st.integers(0, 99)))
    assert idx.size == n and idx.min() >= 0 and idx.max() < n
    blocks = idx[: (n // L) * L].reshape(-1, L)
    assert np.all(np.diff(blocks, axis=1) == 1)  # each block is a contiguous run


def test_mbb_determinism_and_errors():
    assert np.array_equal(mbb_indices(50, 5, 1, 3), mbb_indices(50, 5, 1, 3))
    assert not np.array_equal(mbb_indices(50, 5, 1, 3), mbb_indices(50, 5, 1, 4))
    with pytest.raises(ValueError):
        mbb_indices(10, 11, 0, 0)


def test_full_block_replicates_equal_mean(signal):
    curves = window_curves(signal, WindowConfig(150, 5), SPEC, K, GRID)
    n = len(curves)
    est = estimate_from_curves(curves, GRID, BootstrapConfig(20, n, 0.1, 0))
    assert np.array_equal(est.lower.values, est.mean.values)
    assert np.array_equal(est.upper.values, est.mean.values)
    assert est.half_width() == 0
    fc = [FunctionalCurve(GRID, c) for c in curves]
    rep = mbb_resample(fc, BootstrapConfig(2, n, 0.1, 0), 7)
    assert np.array_equal(rep.values, est.mean.values)
    with pytest.raises(TypeError):
        mbb_resample(curves, BootstrapConfig(2, n), 0)


def test_block_len_one_is_uniform():
    n, reps = 40, 4000
    counts = sum(np.bincount(mbb_indices(n, 1, 5, i), minlength=n) for i in range(reps))
    expected = reps
    se = np.sqrt(reps * n * (1 / n) * (1 - 1 / n))
    assert np.all(np.abs(counts - expected) < 4 * se)


def test_replicate_mean_unbiased_for_iid_resampling(signal):
    curves = window_curves(signal, WindowConfig(150, 3), SPEC, K, GRID)
    reps = bootstrap_replicates(curves, BootstrapConfig(3000, 1, 0.1, 4))
    mean = curves.mean(axis=0)
    se = reps.std(axis=0, ddof=1) / np.sqrt(len(reps))
    assert np.all(np.abs(reps.mean(axis=0) - mean) <= 3 * se + 1e-12)


def test_bands_from_replicates():
    mean = np.array([0.0, 1.0, 2.0])
    const = np.tile(mean, (10, 1))
    for kind in ("pointwise", "uniform"):
        lo, hi = bands_from_replicates(mean, const, 0.05, kind)
        assert np.array_equal(lo, mean) and np.array_equal(hi, mean)
    rng = np.random.default_rng(0)
    reps = mean + rng.normal(size=(500, 3)) * [1, 2, 3]
    lo, hi = bands_from_replicates(mean, reps, 0.1, "pointwise")
    med = np.median(reps, axis=0)
    assert np.all(lo <= med) and np.all(med <= hi)
    assert np.allclose(lo, np.quantile(reps, 0.05, axis=0))
    ulo, uhi = bands_from_replicates(mean, reps, 0.1, "uniform")
    q = np.quantile(np.max(np.abs(reps - mean), axis=1), 0.9)
    assert np.allclose(uhi - mean, q) and np.allclose(mean - ulo, q)
    inside = np.all(np.abs(reps - mean) <= q, axis=1).mean()
    assert inside == pytest.approx(0.9, abs=0.01)


def test_bootstrap_bands_deterministic_and_parallel_identical(signal):
    wcfg = WindowConfig(150, 2)
    bcfg = BootstrapConfig(30, None, 0.05, 9, "uniform")
    a = bootstrap_bands(signal, wcfg, SPEC, K, GRID, bcfg)
    b = bootstrap_bands(signal, wcfg, SPEC, K, GRID, bcfg, workers=2)
    assert a.block_len == default_block_len(len(windows(signal, wcfg)))
    for x, y in [(a.mean, b.mean), (a.lower, b.lower), (a.upper, b.upper)]:
        assert np.array_equal(x.values, y.values)
    assert np.all(a.lower.values <= a.mean.values) and np.all(a.mean.values <= a.upper.values)


def test_block_len_larger_than_windows_rejected(signal):
    curves = window_curves(signal, WindowConfig(150, 50), SPEC, K, GRID)
    with pytest.raises(ValueError):
        estimate_from_curves(curves, GRID, BootstrapConfig(5, len(curves) + 1))


def test_worker_count(monkeypatch):
    monkeypatch.setenv("SIG_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("SIG_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("SIG_THREADS", "-1")
    with pytest.raises(ValueError):
        worker_count()
