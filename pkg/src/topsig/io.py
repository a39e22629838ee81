"""File formats: signal CSV, diagram / curve / estimate JSON, curve and band CSV.

Floats are written with ``repr`` (shortest round-trip decimal), so a value
read back is bit-identical and the same run always produces the same bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from topsig.estimation import SignatureEstimate
from topsig.functionals import EvaluationGrid, FunctionalCurve
from topsig.persistence import PersistenceDiagram, TimeSeries


class FormatError(ValueError):
    """Input file exists but does not have the expected structure."""


def _f(x) -> str:
    return repr(float(x))


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, doc):
    Path(path).write_text(dumps(doc))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _floats(seq) -> list:
    return [float(x) for x in seq]


# -- time series ------------------------------------------------------------


def series_to_csv(series: TimeSeries) -> str:
    lines = ["t,value"]
    lines += [f"{_f(k * series.dt)},{_f(v)}" for k, v in enumerate(series.values)]
    return "\n".join(lines) + "\n"


def write_series_csv(path, series: TimeSeries):
    Path(path).write_text(series_to_csv(series))


def parse_series_csv(text: str, source: str = "<input>") -> TimeSeries:
    """Parse ``t,value`` CSV. ``dt`` is taken from the first two time stamps (1.0 for one row)."""
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise FormatError(f"{source}: empty file")
    header = [c.strip() for c in rows[0]]
    if header != ["t", "value"]:
        raise FormatError(f"{source}: line 1: expected header 't,value', got {','.join(header)!r}")
    times, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise FormatError(f"{source}: line {lineno}: expected 2 fields, got {len(row)}")
        try:
            t, v = float(row[0]), float(row[1])
        except ValueError:
            raise FormatError(f"{source}: line {lineno}: not a number: {','.join(row)!r}") from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise FormatError(f"{source}: line {lineno}: non-finite value")
        times.append(t)
        values.append(v)
    if not values:
        raise FormatError(f"{source}: no data rows")
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    if not dt > 0:
        raise FormatError(f"{source}: time stamps must increase")
    return TimeSeries(np.array(values), dt)


def read_series_csv(path) -> TimeSeries:
    return parse_series_csv(Path(path).read_text(), str(path))


# -- diagrams ----------------------------------------------------------------


def diagram_to_dict(diagram: PersistenceDiagram, config: Optional[dict] = None) -> dict:
    doc = {"points": [[float(b), float(d)] for b, d in diagram.points]}
    if config is not None:
        doc["config"] = config
    return doc


def diagram_from_dict(doc: dict) -> PersistenceDiagram:
    if not isinstance(doc, dict) or "points" not in doc:
        raise FormatError("diagram JSON needs a 'points' list")
    try:
        pts = np.array(doc["points"], dtype=float).reshape(-1, 2)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"diagram points must be [birth, death] pairs: {exc}") from None
    return PersistenceDiagram(pts)  # sorts on construction


# -- curves and estimates ----------------------------------------------------


def curve_to_dict(curve: FunctionalCurve, config: Optional[dict] = None) -> dict:
    return {"grid": curve.grid.to_dict(), "values": _floats(curve.values), "config": dict(config or {})}


def curve_from_dict(doc: dict) -> FunctionalCurve:
    try:
        return FunctionalCurve(EvaluationGrid.from_dict(doc["grid"]), np.array(doc["values"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"not a curve document: {exc}") from None


def curve_to_csv(curve: FunctionalCurve) -> str:
    nodes = curve.grid.nodes()
    if curve.grid.dim == 1:
        lines = ["t,value"] + [f"{_f(t)},{_f(v)}" for (t,), v in zip(nodes, curve.values)]
    else:
        lines = ["x,y,value"] + [f"{_f(x)},{_f(y)},{_f(v)}" for (x, y), v in zip(nodes, curve.values)]
    return "\n".join(lines) + "\n"


def estimate_to_dict(est: SignatureEstimate) -> dict:
    return {
        "grid": est.grid.to_dict(),
        "mean": _floats(est.mean.values),
        "lower": _floats(est.lower.values),
        "upper": _floats(est.upper.values),
        "level": est.level,
        "band_kind": est.band_kind,
        "replicates": est.replicates,
        "block_len": est.block_len,
        "config": est.config,
    }


def estimate_from_dict(doc: dict) -> SignatureEstimate:
    try:
        grid = EvaluationGrid.from_dict(doc["grid"])
        curves = [FunctionalCurve(grid, np.array(doc[k], dtype=float)) for k in ("mean", "lower", "upper")]
        return SignatureEstimate(*curves, float(doc["level"]), int(doc["replicates"]), str(doc["band_kind"]),
                                 int(doc.get("block_len", 0)), dict(doc.get("config", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"not an estimate document: {exc}") from None


def estimate_to_csv(est: SignatureEstimate) -> str:
    if est.grid.dim == 1:
        head = "t,mean,lower,upper"
        coords = [[_f(t)] for (t,) in est.grid.nodes()]
    else:
        head = "x,y,mean,lower,upper"
        coords = [[_f(x), _f(y)] for x, y in est.grid.nodes()]
    rows = [",".join(c + [_f(m), _f(lo), _f(hi)])
            for c, m, lo, hi in zip(coords, est.mean.values, est.lower.values, est.upper.values)]
    return "\n".join([head] + rows) + "\n"


def load_plottable(doc: dict):
    """Classify a JSON document as an estimate or a single curve."""
    if isinstance(doc, dict) and {"mean", "lower", "upper", "grid"} <= doc.keys():
        return "estimate", estimate_from_dict(doc)
    if isinstance(doc, dict) and {"grid", "values"} <= doc.keys():
        return "curve", curve_from_dict(doc)
    raise FormatError("expected a curve ('grid', 'values') or estimate ('grid', 'mean', 'lower', 'upper') document")
