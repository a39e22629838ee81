"""``topsig`` command line: simulate, diagram, signature, bootstrap, validate, plot.

Exit codes: 0 success, 1 a validation check failed, 2 usage error,
3 I/O or file-format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from topsig import io
from topsig.estimation import (
    BootstrapConfig,
    WindowConfig,
    empirical_signature,
    estimate_from_curves,
    window_curves,
    worker_count,
)
from topsig.functionals import (
    EvaluationGrid,
    PersistenceImage,
    ProjectionWindow,
    Silhouette,
    TruncationSpec,
    default_grid,
    kernel_to_dict,
)
from topsig.persistence import sublevel_diagram
from topsig.simulator import (
    Custom,
    EmbeddingError,
    IidUniform,
    MarkovTruncGauss,
    NoiseModel,
    PaperPhi,
    SimulationConfig,
    Sine,
    simulate,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4

log = logging.getLogger("topsig")


class UsageError(Exception):
    pass


class NumericError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parameter document of one invocation; echoed into every artifact it writes."""

    command: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command": self.command, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        return cls(d.pop("command"), d)

    def to_json(self) -> str:
        return io.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


# -- shared option groups ------------------------------------------------------


def _add_signature_flags(p: argparse.ArgumentParser):
    p.add_argument("input", help="signal CSV with header t,value")
    p.add_argument("--window", type=int, default=150, help="window length M in samples (default 150)")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.2, help="truncation epsilon (default 0.2)")
    p.add_argument("--p", type=float, default=1.0, help="persistence power (default 1)")
    p.add_argument("--proj-lower", type=float, default=-9.0)
    p.add_argument("--proj-upper", type=float, default=9.0)
    p.add_argument("--kernel", choices=["silhouette", "image"], default="silhouette")
    p.add_argument("--image-sigma", type=float, default=1.0, help="persistence-image bandwidth")
    p.add_argument("--image-r", type=float, default=1.1, help="persistence-image taper exponent (> 1)")
    p.add_argument("--grid-count", type=int, default=None,
                   help="nodes per axis (default 512 for silhouette, 64 for image)")
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    p.add_argument("-o", "--out", required=True, help="output JSON path")
    p.add_argument("--csv", default=None, help="also write a CSV export here")


def _kernel(args):
    window = ProjectionWindow(args.proj_lower, args.proj_upper)
    if args.kernel == "silhouette":
        return Silhouette(window)
    return PersistenceImage(window, args.image_sigma, args.image_r)


def _grid(args, kernel) -> EvaluationGrid:
    grid = default_grid(kernel, args.grid_count)
    if args.grid_min is None and args.grid_max is None:
        return grid
    start, stop, count = grid.axes[0]
    start = args.grid_min if args.grid_min is not None else start
    stop = args.grid_max if args.grid_max is not None else stop
    return EvaluationGrid(tuple((start, stop, count) for _ in range(grid.dim)))


def _upstream_config(path: str) -> Optional[dict]:
    """Config echoed by the command that produced ``path`` (sidecar ``.json``), if any."""
    meta = Path(path).with_suffix(".json")
    if meta.exists() and meta != Path(path):
        try:
            return io.read_json(meta).get("config")
        except (io.FormatError, AttributeError):
            return None
    return None


def _signature_setup(args):
    series = io.read_series_csv(args.input)
    wcfg = WindowConfig(args.window, args.stride)
    if wcfg.window_len > len(series):
        raise UsageError(f"window length {wcfg.window_len} exceeds series length {len(series)}")
    spec = TruncationSpec(args.epsilon, args.p)
    kernel = _kernel(args)
    grid = _grid(args, kernel)
    params = {
        "input": args.input,
        "window": {"window_len": wcfg.window_len, "stride": wcfg.stride},
        "truncation": {"epsilon": spec.epsilon, "p": spec.p},
        "kernel": kernel_to_dict(kernel),
        "grid": grid.to_dict(),
        "source": _upstream_config(args.input),
    }
    return series, wcfg, spec, kernel, grid, params


# -- subcommands -------------------------------------------------------------


TEMPLATES = {"paper-phi", "sine", "custom"}


def _simulation_config(args) -> SimulationConfig:
    if args.config:
        doc = io.read_json(args.config)
        doc = doc.get("config", doc)  # accept a previous run's metadata file
        doc = doc.get("simulation", doc)
        try:
            cfg = SimulationConfig.from_dict(doc)
        except (KeyError, TypeError) as exc:
            raise io.FormatError(f"{args.config}: not a simulation config: {exc}") from None
        if args.seed is not None:
            cfg = SimulationConfig(cfg.template, cfg.velocity, cfg.gamma0, cfg.noise, cfg.duration, cfg.rate,
                                   args.seed)
        return cfg
    if args.template == "paper-phi":
        template = PaperPhi(args.theta)
    elif args.template == "sine":
        template = Sine(args.frequency)
    else:
        if not args.samples:
            raise UsageError("--template custom needs --samples")
        template = Custom(tuple(float(x) for x in args.samples.split(",")))
    if args.reparam == "iid":
        velocity = IidUniform(args.v_min, args.v_max)
    else:
        velocity = MarkovTruncGauss(args.v_min, args.v_max, args.eta)
    return SimulationConfig(template, velocity, args.gamma0, NoiseModel(args.sigma, args.tau),
                            args.duration, args.rate, 0 if args.seed is None else args.seed)


def cmd_simulate(args) -> int:
    cfg = _simulation_config(args)
    series = simulate(cfg)
    run = RunConfig("simulate", {"simulation": cfg.to_dict(), "n_samples": len(series)})
    out = Path(args.out)
    io.write_series_csv(out, series)
    meta = Path(args.meta) if args.meta else out.with_suffix(".json")
    io.write_json(meta, {"config": run.to_dict()})
    return EXIT_OK


def cmd_diagram(args) -> int:
    series = io.read_series_csv(args.input)
    run = RunConfig("diagram", {"input": args.input, "source": _upstream_config(args.input)})
    io.write_json(args.out, io.diagram_to_dict(sublevel_diagram(series), run.to_dict()))
    return EXIT_OK


def cmd_signature(args) -> int:
    series, wcfg, spec, kernel, grid, params = _signature_setup(args)
    curve = empirical_signature(series, wcfg, spec, kernel, grid, workers=worker_count())
    run = RunConfig("signature", params)
    io.write_json(args.out, io.curve_to_dict(curve, run.to_dict()))
    if args.csv:
        Path(args.csv).write_text(io.curve_to_csv(curve))
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    series, wcfg, spec, kernel, grid, params = _signature_setup(args)
    try:
        bcfg = BootstrapConfig(args.replicates, args.block_len, args.alpha, args.seed, args.band)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    curves = window_curves(series, wcfg, spec, kernel, grid, workers=worker_count())
    if bcfg.block_len is not None and bcfg.block_len > len(curves):
        raise UsageError(f"block length {bcfg.block_len} exceeds the number of windows {len(curves)}")
    params = {**params, "bootstrap": {
        "replicates": bcfg.replicates, "block_len": args.block_len, "level": bcfg.level,
        "seed": bcfg.seed, "band_kind": bcfg.band_kind,
    }}
    est = estimate_from_curves(curves, grid, bcfg, RunConfig("bootstrap", params).to_dict())
    io.write_json(args.out, io.estimate_to_dict(est))
    if args.csv:
        Path(args.csv).write_text(io.estimate_to_csv(est))
    return EXIT_OK


def cmd_validate(args) -> int:
    from topsig.validation import CHECKS, run_suite

    names = [n for part in args.suite for n in part.split(",") if n]
    unknown = [n for n in names if n != "all" and n not in CHECKS]
    if unknown:
        raise UsageError(f"unknown suite name(s): {', '.join(unknown)}; choose from all, {', '.join(CHECKS)}")
    reports = run_suite(names, seed=args.seed)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check_id}: {r.trials} trials, {r.violations} violations, worst margin {r.worst_margin:.3g}")
    if args.out:
        Path(args.out).write_text(io.dumps([r.to_dict() for r in reports]))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    kind, obj = io.load_plottable(io.read_json(args.input))
    matplotlib.rcParams["svg.hashsalt"] = "topsig"
    fig, ax = plt.subplots(figsize=(7, 4))
    if kind == "estimate":
        grid, mean, lower, upper = obj.grid, obj.mean.values, obj.lower.values, obj.upper.values
    else:
        grid, mean, lower, upper = obj.grid, obj.values, None, None
    if grid.dim == 1:
        t = grid.coords(0)
        if lower is not None:
            ax.fill_between(t, lower, upper, color="tab:blue", alpha=0.25, linewidth=0, label="band")
            ax.plot(t, lower, color="tab:blue", linewidth=0.8)
            ax.plot(t, upper, color="tab:blue", linewidth=0.8)
        ax.plot(t, mean, color="black", linewidth=1.2, label="mean" if lower is not None else "signature")
        ax.set_xlabel("t")
        ax.set_ylabel("signature")
        ax.legend(loc="upper right")
    else:
        (x0, x1, _), (y0, y1, _) = grid.axes
        im = ax.imshow(np.asarray(mean).reshape(grid.shape).T, origin="lower", extent=(x0, x1, y0, y1),
                       aspect="auto", cmap="viridis")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("birth")
        ax.set_ylabel("death")
    if args.title:
        ax.set_title(args.title)
    fig.tight_layout()
    fig.savefig(args.out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topsig", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample S_n = phi(gamma_n) + W_n to CSV")
    p.add_argument("--config", help="simulation config JSON (overrides the model flags)")
    p.add_argument("--template", choices=sorted(TEMPLATES), default="paper-phi")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--frequency", type=int, default=1, help="periods of the sine per unit")
    p.add_argument("--samples", help="comma-separated values of one period (custom template)")
    p.add_argument("--reparam", choices=["iid", "markov"], default="markov")
    p.add_argument("--v-min", type=float, default=0.5)
    p.add_argument("--v-max", type=float, default=1.5)
    p.add_argument("--eta", type=float, default=0.2)
    p.add_argument("--gamma0", type=float, default=None, help="fixed start (default: uniform on [0, 1))")
    p.add_argument("--sigma", type=float, default=0.1, help="noise standard deviation")
    p.add_argument("--tau", type=float, default=0.1, help="noise correlation time in seconds")
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--rate", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", required=True, help="signal CSV path")
    p.add_argument("--meta", help="metadata JSON path (default: OUT with .json suffix)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagram", help="sublevel-set persistence diagram of a signal")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("signature", help="mean normalized functional over sliding windows")
    _add_signature_flags(p)
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("bootstrap", help="signature with moving-block-bootstrap bands")
    _add_signature_flags(p)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--block-len", type=int, default=None,
                   help="block length L in windows (default: floor(n_windows ** 0.4))")
    p.add_argument("--alpha", type=float, default=0.01, help="band level alpha (default 0.01)")
    p.add_argument("--band", choices=["pointwise", "uniform"], default="pointwise")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("validate", help="run the randomized inequality checks")
    p.add_argument("--suite", action="append", default=None,
                   help="check name, comma list, or 'all' (repeatable; default all)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="report JSON path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="render a curve or estimate JSON as SVG")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--title", default=None)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "suite", None) is None and args.command == "validate":
        args.suite = ["all"]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"topsig: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, io.FormatError) as exc:
        print(f"topsig: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EmbeddingError, NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"topsig: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"topsig: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
