"""Command-line front end: ``lmar simulate | theory | experiment``.

Exit codes: 0 success, 2 usage or config error, 3 domain or regime error,
4 runtime failure (sampler).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, plots
from .ar1 import Ar1Model, generate_x_path, generate_y_path
from .asymptotics import RateCurve, dtv_bound_curve
from .covariance import duality_constant, parse_model
from .errors import ConfigError, DomainError, LmarError, SamplerError
from .experiments import ExperimentConfig, ExperimentKind, run_experiment
from .gaussian_sim import PathKind, plan_embedding, sample_stationary, standard_normals, SamplePath
from .moments import MomentContext
from .report import (
    RunManifest,
    write_asclt_csv,
    write_json,
    write_path_csv,
    write_records_csv,
)

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_RUNTIME = 4

log = logging.getLogger("lmar")


def _model_arg(text):
    try:
        return parse_model(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _theta_arg(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError("theta must lie in (0, 1)")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed_arg(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not (0 <= value < 2 ** 64):
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return value


def _grid_arg(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n grid {text!r}") from None
    if not values or min(values) < 1 or any(b <= a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError("n grid must be strictly increasing integers >= 1")
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lmar",
        description="AR(1) with long-memory Gaussian noise: simulation, theory and experiments.",
    )
    parser.add_argument("--version", action="version", version=f"lmar {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write one simulated path as CSV")
    sim.add_argument("--model", type=_model_arg, required=True, help="fgn:H, arfima:d or white")
    sim.add_argument("--theta", type=_theta_arg, default=0.5)
    sim.add_argument("--n", type=_positive_int, required=True)
    sim.add_argument("--seed", type=_seed_arg, default=0)
    sim.add_argument("--kind", choices=["noise", "x", "y"], default="x")
    sim.add_argument("--out", type=Path, required=True)

    th = sub.add_parser("theory", help="exact asymptotic quantities as JSON")
    th.add_argument("--model", type=_model_arg, required=True)
    th.add_argument("--theta", type=_theta_arg, required=True)
    th.add_argument("--n-grid", type=_grid_arg, default=[2 ** k for k in range(6, 17)])
    th.add_argument("--epsilon", type=float, default=0.01)
    th.add_argument("--out", type=Path, help="JSON path (default: stdout)")
    th.add_argument("--plot", type=Path, help="optional SVG of the bound and rate curves")

    ex = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    ex.add_argument("config", type=Path)
    ex.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def cmd_simulate(args):
    start = time.perf_counter()
    model = Ar1Model(args.theta, args.model)
    if args.kind == "x":
        path = generate_x_path(model, args.n, args.seed)
    elif args.kind == "y":
        if args.n < 2:
            raise DomainError("stationary paths need n >= 2")
        path = generate_y_path(model, args.n, args.seed)
    elif args.n == 1:
        path = SamplePath(standard_normals(args.seed, 1), args.seed, args.model.name, PathKind.NOISE)
    else:
        path = sample_stationary(plan_embedding(args.model, args.n), args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_path_csv(args.out, path)
    manifest = RunManifest(
        "simulate",
        {
            "model": args.model.name,
            "theta": args.theta,
            "n": args.n,
            "seed": args.seed,
            "kind": args.kind,
        },
        outputs=[args.out],
        runtime_seconds=time.perf_counter() - start,
    )
    manifest.write(args.out.with_suffix(".json"))
    return 0


def theory_report(model, theta, n_grid, epsilon):
    ctx = MomentContext(Ar1Model(theta, model))
    sigma = ctx.sigma_h2()
    report = {
        "model": model.name,
        "theta": theta,
        "f": ctx.f_value,
        "f_prime": ctx.f_prime_value,
        "sigma_H2": sigma,
        "c_H": duality_constant(model.hurst) if model.hurst is not None else None,
        "n": list(n_grid),
        "v_n2": [ctx.v_n2(n) for n in n_grid],
        "dtv_bound": [float(b) for b in dtv_bound_curve(ctx, n_grid)],
        "be_rate": None,
        "epsilon": epsilon,
    }
    if model.hurst is not None:
        curve = RateCurve(model.hurst, epsilon)
        report["be_rate"] = [float(curve(n)) if n >= 2 else None for n in n_grid]
    return report


def cmd_theory(args):
    report = theory_report(args.model, args.theta, args.n_grid, args.epsilon)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_json(args.out, report)
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
    if args.plot:
        plots.theory_plot(report["n"], report["dtv_bound"], report["be_rate"], args.plot)
    return 0


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"<file>: {exc}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<json>: {exc}"]) from None
    return ExperimentConfig.from_dict(data)


def write_experiment_outputs(result, out):
    """Persist records, aggregates and figures; returns the written paths."""
    out.mkdir(parents=True, exist_ok=True)
    agg = result.aggregates
    paths = [out / "replicates.csv", out / "aggregate.json"]
    write_records_csv(paths[0], result.records)
    write_json(paths[1], result.to_dict())
    kind = result.config.experiment

    g = [r.normalized_error for r in result.records
         if r.n == result.config.n_values[-1] and r.normalized_error is not None]
    if kind in (ExperimentKind.CLT, ExperimentKind.BERRY_ESSEEN, ExperimentKind.CONSISTENCY) and g:
        paths.append(plots.ecdf_vs_normal(g, out / "ecdf.svg", f"G_n at n={result.config.n_values[-1]}"))
    if kind is ExperimentKind.CONSISTENCY:
        rows = [r for r in agg["per_n"] if r["rmse"] is not None]
        if rows:
            paths.append(plots.error_plot(
                [r["n"] for r in rows], [r["rmse"] for r in rows],
                [r["mean_abs_error"] for r in rows], out / "errors.svg",
            ))
    if kind is ExperimentKind.BERRY_ESSEEN:
        rows = agg["berry_esseen"]
        paths.append(plots.rate_plot(
            [r["n"] for r in rows], [r["d_n"] for r in rows], [r["noise_floor"] for r in rows],
            out / "rate.svg", phi=result.theory["be_rate"], dtv=result.theory["dtv_bound"],
        ))
    if kind is ExperimentKind.ASCLT:
        table = agg["asclt"]
        csv_path = out / "asclt.csv"
        write_asclt_csv(csv_path, table)
        paths.append(csv_path)
        averages = np.array([row["averages"] for row in table]).T
        paths.append(plots.asclt_plot([row["z"] for row in table], averages, out / "asclt.svg"))
    return paths


def cmd_experiment(args):
    start = time.perf_counter()
    config = _load_config(args.config)
    result = run_experiment(config)
    paths = write_experiment_outputs(result, args.out)
    manifest = RunManifest(
        "experiment",
        config.to_dict(),
        outputs=paths,
        censoring=result.censoring_summary(),
        runtime_seconds=time.perf_counter() - start,
    )
    manifest.write(args.out / "manifest.json")
    return 0


_COMMANDS = {"simulate": cmd_simulate, "theory": cmd_theory, "experiment": cmd_experiment}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        for item in exc.fields:
            print(f"  {item}", file=sys.stderr)
        return EXIT_USAGE
    except SamplerError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except LmarError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
