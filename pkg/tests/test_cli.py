import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topsig import io
from topsig.cli import RunConfig, main
from topsig.estimation import SignatureEstimate
from topsig.functionals import EvaluationGrid, FunctionalCurve
from topsig.persistence import PersistenceDiagram, TimeSeries


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("SIG_THREADS", "1")
    return tmp_path


# -- formats -------------------------------------------------------------------


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=30),
       st.sampled_from([0.02, 0.1, 1.0, 1 / 3]))
@settings(max_examples=50)
def test_series_csv_round_trip(values, dt):
    s = TimeSeries(values, dt)
    back = io.parse_series_csv(io.series_to_csv(s))
    assert np.array_equal(back.values, s.values)
    if len(values) > 1:
        assert back.dt == dt


def test_series_csv_errors():
    with pytest.raises(io.FormatError, match="empty"):
        io.parse_series_csv("")
    with pytest.raises(io.FormatError, match="line 1"):
        io.parse_series_csv("time,v\n0,1\n")
    with pytest.raises(io.FormatError, match="line 3"):
        io.parse_series_csv("t,value\n0,1\n1,x\n")
    with pytest.raises(io.FormatError, match="line 2"):
        io.parse_series_csv("t,value\n0,1,2\n")
    with pytest.raises(io.FormatError, match="no data"):
        io.parse_series_csv("t,value\n")


def test_diagram_json_sorted_and_tolerant():
    doc = {"points": [[1, 2], [0, 3], [0, 1]]}
    d = io.diagram_from_dict(doc)
    assert io.diagram_to_dict(d)["points"] == [[0, 1], [0, 3], [1, 2]]
    with pytest.raises(io.FormatError):
        io.diagram_from_dict({"pts": []})


def test_curve_and_estimate_round_trip():
    g = EvaluationGrid(((0, 1, 3),))
    c = FunctionalCurve(g, [0.1, 1 / 3, 2.0])
    back = io.curve_from_dict(json.loads(io.dumps(io.curve_to_dict(c, {"a": 1}))))
    assert np.array_equal(back.values, c.values) and back.grid == g
    assert io.curve_to_csv(c).splitlines()[0] == "t,value"
    est = SignatureEstimate(c, FunctionalCurve(g, [0, 0, 1]), FunctionalCurve(g, [1, 1, 3]), 0.01, 200,
                            "pointwise", 17, {"k": "v"})
    e2 = io.estimate_from_dict(json.loads(io.dumps(io.estimate_to_dict(est))))
    for name in ("mean", "lower", "upper"):
        assert np.array_equal(getattr(e2, name).values, getattr(est, name).values)
    assert (e2.level, e2.replicates, e2.band_kind, e2.block_len, e2.config) == (0.01, 200, "pointwise", 17, {"k": "v"})
    assert io.estimate_to_csv(est).splitlines()[0] == "t,mean,lower,upper"
    g2 = EvaluationGrid(((0, 1, 2), (0, 1, 2)))
    assert io.curve_to_csv(FunctionalCurve(g2, np.zeros(4))).splitlines()[0] == "x,y,value"


def test_run_config_round_trip():
    rc = RunConfig("bootstrap", {"window": {"window_len": 150}, "alpha": 0.01, "seed": 3, "paths": ["a"]})
    assert RunConfig.from_json(rc.to_json()) == rc


# -- commands ------------------------------------------------------------------


def test_simulate_defaults_and_determinism(workdir):
    assert main(["simulate", "-o", "a.csv", "--seed", "4"]) == 0
    assert main(["simulate", "-o", "b.csv", "--seed", "4", "--meta", "b_meta.json"]) == 0
    assert Path("a.csv").read_bytes() == Path("b.csv").read_bytes()
    s = io.read_series_csv("a.csv")
    assert len(s) == 1500 and s.dt == 0.02
    meta = io.read_json("a.json")["config"]
    assert meta["simulation"]["seed"] == 4 and meta["command"] == "simulate"
    # config file reproduces the run
    assert main(["simulate", "--config", "a.json", "-o", "c.csv"]) == 0
    assert Path("c.csv").read_bytes() == Path("a.csv").read_bytes()


def test_simulate_noiseless(workdir):
    assert main(["simulate", "-o", "q.csv", "--sigma", "0", "--template", "sine", "--reparam", "iid",
                 "--gamma0", "0", "--v-min", "1", "--v-max", "1", "--duration", "1", "--rate", "4"]) == 0
    assert np.allclose(io.read_series_csv("q.csv").values, [0, 1, 0, -1], atol=1e-12)


def test_simulate_errors(workdir):
    assert main(["simulate", "-o", "x.csv", "--eta", "0.5"]) == 2
    assert main(["simulate", "-o", "x.csv", "--template", "custom"]) == 2
    assert main(["simulate", "-o", "missing_dir/x.csv"]) == 3
    assert main(["simulate", "--config", "nope.json", "-o", "x.csv"]) == 3
    assert main(["simulate"]) == 2


def test_diagram_command(workdir):
    Path("s.csv").write_text("t,value\n0,0\n1,2\n2,1\n3,3\n")
    assert main(["diagram", "s.csv", "-o", "d.json"]) == 0
    assert io.read_json("d.json")["points"] == [[0, 3], [1, 2]]
    Path("m.csv").write_text("t,value\n0,0\n1,1\n2,2\n3,3\n")
    assert main(["diagram", "m.csv", "-o", "m.json"]) == 0
    assert io.read_json("m.json")["points"] == [[0, 3]]
    Path("e.csv").write_text("")
    assert main(["diagram", "e.csv", "-o", "e.json"]) == 3


def test_signature_and_bootstrap(workdir):
    main(["simulate", "-o", "s.csv", "--seed", "1", "--duration", "6"])
    assert main(["signature", "s.csv", "-o", "c.json", "--csv", "c.csv"]) == 0
    doc = io.read_json("c.json")
    cfg = doc["config"]
    assert cfg["truncation"] == {"epsilon": 0.2, "p": 1.0}
    assert cfg["window"]["window_len"] == 150 and cfg["kernel"]["lower"] == -9.0
    assert cfg["source"]["simulation"]["seed"] == 1
    curve = io.curve_from_dict(doc)
    t = curve.grid.coords(0)
    assert np.all(curve.values[(t < -9) | (t > 9)] == 0)
    assert main(["bootstrap", "s.csv", "-o", "e.json", "--replicates", "20", "--csv", "e.csv"]) == 0
    est = io.read_json("e.json")
    assert est["replicates"] == 20 and est["level"] == 0.01 and est["band_kind"] == "pointwise"
    assert est["block_len"] == int(151 ** 0.4)
    assert est["config"]["bootstrap"]["block_len"] is None
    n_windows = 300 - 150 + 1
    assert main(["bootstrap", "s.csv", "-o", "z.json", "--replicates", "5", "--block-len", str(n_windows)]) == 0
    z = io.read_json("z.json")
    assert z["lower"] == z["mean"] == z["upper"]
    assert main(["bootstrap", "s.csv", "-o", "x.json", "--replicates", "1"]) == 2
    assert main(["bootstrap", "s.csv", "-o", "x.json", "--block-len", "999"]) == 2
    assert main(["signature", "s.csv", "-o", "x.json", "--window", "301"]) == 2
    assert main(["signature", "s.csv", "-o", "img.json", "--kernel", "image", "--grid-count", "16"]) == 0
    assert io.read_json("img.json")["grid"]["dim"] == 2


def test_single_window_signature(workdir):
    Path("s.csv").write_text("t,value\n0,0\n1,2\n2,1\n3,3\n")
    assert main(["signature", "s.csv", "--window", "4", "--proj-lower", "-1", "--proj-upper", "4",
                 "--grid-count", "11", "--grid-min", "-1", "--grid-max", "4", "-o", "c.json"]) == 0
    v = io.read_json("c.json")["values"]
    # (0,3) weight 2.8 and (1,2) weight 0.8 at t = 1.5: (2.8 * 1.5 + 0.8 * 0.5) / 3.6
    assert v[5] == pytest.approx((2.8 * 1.5 + 0.8 * 0.5) / 3.6)


def test_plot_outputs(workdir):
    main(["simulate", "-o", "s.csv", "--seed", "2", "--duration", "5"])
    main(["bootstrap", "s.csv", "-o", "e.json", "--replicates", "10"])
    main(["signature", "s.csv", "-o", "c.json"])
    main(["signature", "s.csv", "-o", "i.json", "--kernel", "image", "--grid-count", "16"])
    assert main(["plot", "e.json", "-o", "e.svg"]) == 0
    assert main(["plot", "e.json", "-o", "e2.svg"]) == 0
    assert main(["plot", "c.json", "-o", "c.svg"]) == 0
    assert main(["plot", "i.json", "-o", "i.svg"]) == 0
    e = Path("e.svg").read_text()
    assert e.startswith("<?xml") and "<dc:date>" not in e
    assert Path("e.svg").read_bytes() == Path("e2.svg").read_bytes()
    assert "<image" in Path("i.svg").read_text()
    Path("bad.json").write_text('{"foo": 1}')
    assert main(["plot", "bad.json", "-o", "b.svg"]) == 3


def test_validate_command(workdir):
    assert main(["validate", "--suite", "bottleneck", "--out", "r.json", "--seed", "2"]) == 0
    rep = io.read_json("r.json")
    assert [r["check_id"] for r in rep] == ["bottleneck"] and rep[0]["passed"]
    assert main(["validate", "--suite", "nonsense"]) == 2


def test_validate_failure_exit_code(workdir, monkeypatch):
    from topsig import validation

    def failing(seed=None):
        r = validation.CheckReport("bottleneck")
        r.record(-1.0)
        return r

    monkeypatch.setitem(validation.CHECKS, "bottleneck", failing)
    assert main(["validate", "--suite", "bottleneck"]) == 1


def test_numeric_failure_exit_code(workdir):
    assert main(["simulate", "-o", "x.csv", "--tau", "4000", "--rate", "1", "--duration", "4500"]) == 4
