"""Command line interface: ``sparse-discovery {simulate,fit,compare,report}``.

Exit codes: 0 success, 2 configuration error, 3 pipeline error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dynamics
from .adaptive_growth import NoModelFoundError
from .dual_lasso import PipelineError
from .experiments import METHODS, ConfigError, ExperimentConfig, load_trajectory, run_experiment
from .sparse_solvers import DegeneratePenaltyError, RankDeficiencyError
from .symbolic import render_model

log = logging.getLogger("sparse_discovery")

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE = 0, 2, 3


def _x0(text):
    if text == "random":
        return text
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("x0 must be comma separated numbers or 'random'") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config; flags override its values")
    p.add_argument("--system", help="lorenz63, lorenz_quadratic, or a trajectory CSV")
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--x0", type=_x0, help="comma separated, or 'random'")
    p.add_argument("--seed", type=int)
    p.add_argument("--derivatives", choices=("exact", "fd"))
    p.add_argument("--out", help="output directory")


def _add_fit(p: argparse.ArgumentParser) -> None:
    p.add_argument("--degree", type=int)
    p.add_argument("--lambda", dest="lam", type=float, help="fixed penalty (implies --lambda-mode fixed)")
    p.add_argument("--lambda-mode", choices=("path", "fixed", "theory"))
    p.add_argument("--lambda2", type=float)
    p.add_argument("--tau-final", type=float)
    p.add_argument("--scale-kind", choices=("max", "rms"))
    p.add_argument("--allow-large-degree", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-discovery", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a system and write trajectory.csv")
    _add_common(p)

    p = sub.add_parser("fit", help="fit one method")
    _add_common(p)
    _add_fit(p)
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("compare", help="fit several methods and degrees")
    _add_common(p)
    _add_fit(p)
    p.add_argument("--methods", default="lasso,dual_lasso", help="comma separated")
    p.add_argument("--degrees", default="3", help="comma separated")

    p = sub.add_parser("report", help="print report.json from an output directory")
    p.add_argument("directory", type=Path)
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if getattr(args, "config", None) else ExperimentConfig()
    overrides = {}
    for name in ("system", "dt", "steps", "x0", "seed", "derivatives", "out", "degree", "lam",
                 "lambda_mode", "lambda2", "tau_final", "scale_kind", "allow_large_degree", "method"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if "lam" in overrides and "lambda_mode" not in overrides:
        overrides["lambda_mode"] = "fixed"
    return replace(cfg, **overrides)


def _split(text, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


def _print_report(report) -> None:
    for r in report.results:
        print(f"== {r.method} (p={r.degree}) residual={r.residual_fro:.4g} nonzero={r.nonzero_counts}")
        print(render_model(r.final))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            path = args.directory / "report.json"
            if not path.is_file():
                raise ConfigError(f"no report.json in {args.directory}")
            print(json.dumps(json.loads(path.read_text()), indent=2))
            return EXIT_OK
        cfg = config_from_args(args).validate()
        if args.command == "simulate":
            traj, _ = load_trajectory(cfg)
            out = Path(cfg.out or ".")
            out.mkdir(parents=True, exist_ok=True)
            dynamics.write_trajectory_csv(traj, out / "trajectory.csv")
            print(out / "trajectory.csv")
            return EXIT_OK
        if args.command == "fit":
            report = run_experiment(cfg)
        else:
            report = run_experiment(cfg, _split(args.methods, str), _split(args.degrees, int))
        _print_report(report)
        return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (PipelineError, NoModelFoundError, RankDeficiencyError, DegeneratePenaltyError,
            dynamics.IntegrationBlowupError, dynamics.UnsupportedGridError, np.linalg.LinAlgError) as err:
        print(f"pipeline error: {err}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
