"""
Command-line interface for corrlab experiments.

Usage examples:

    corrlab eval --source square --point 0.5+0.5j
    corrlab compose --first square --second sqrt --out composed.txt
    corrlab pair --source square --nmax 8 --out runs/square
    corrlab periodic --source square --period 3
    corrlab contraction --source nwm22-seeded --config contraction.json

Exit codes: 0 ok, 2 invalid input, 3 budget exceeded, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from typing import Any, Dict, Optional

from .correspondence import adjoint, compose, evaluate_backward, evaluate_forward, iterate
from .errors import (
    BudgetExceededError,
    ConfigValidationError,
    GridRefinementError,
    RootSolverError,
)
from .experiment import ExperimentConfig, config_from_dict, load_config, run
from .persistence import load_correspondence, write_correspondence
from .projective import format_point, parse_point

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_NUMERIC = 4


# ---------------------------------------------------------------------------
# Direct operations
# ---------------------------------------------------------------------------


def _add_eval_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("eval", help="Images (or preimages) of a point.")
    parser.add_argument("--source", type=str, default="square", help="Builtin name or spec file.")
    parser.add_argument("--point", type=str, required=True, help='Point, e.g. "1+2j" or "inf".')
    parser.add_argument(
        "--backward", action="store_true", help="Preimages instead of images."
    )
    parser.set_defaults(func=_cmd_eval)


def _cmd_eval(args: argparse.Namespace) -> int:
    f = load_correspondence(args.source)
    x = parse_point(args.point)
    values = evaluate_backward(f, x) if args.backward else evaluate_forward(f, x)
    label = "preimages" if args.backward else "images"
    print(f"{f.name} {label} of {format_point(x)}:", flush=True)
    for v in values:
        print(f"  {format_point(complex(v))}", flush=True)
    return EXIT_OK


def _add_compose_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("compose", help="Graph of 'first, then second'.")
    parser.add_argument("--first", type=str, required=True, help="Builtin name or spec file.")
    parser.add_argument("--second", type=str, required=True, help="Builtin name or spec file.")
    parser.add_argument("--out", type=str, default=None, help="Write the result spec file here.")
    parser.set_defaults(func=_cmd_compose)


def _cmd_compose(args: argparse.Namespace) -> int:
    f = load_correspondence(args.first)
    g = load_correspondence(args.second)
    h = compose(f, g)
    print(f"{h.name}: (d1, d2) = ({h.d1}, {h.d2})", flush=True)
    for note in h.notes:
        print(f"  warning: {note}", flush=True)
    if args.out:
        print(f"Wrote {write_correspondence(h, args.out)}", flush=True)
    return EXIT_OK


def _add_iterate_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("iterate", help="Graph of the n-th iterate.")
    parser.add_argument("--source", type=str, default="square", help="Builtin name or spec file.")
    parser.add_argument("--n", type=int, default=2, help="Iterate order.")
    parser.add_argument("--adjoint", action="store_true", help="Iterate the adjoint instead.")
    parser.add_argument("--out", type=str, default=None, help="Write the result spec file here.")
    parser.set_defaults(func=_cmd_iterate)


def _cmd_iterate(args: argparse.Namespace) -> int:
    f = load_correspondence(args.source)
    if args.adjoint:
        f = adjoint(f)
    fn = iterate(f, args.n)
    print(f"{fn.name}: (d1, d2) = ({fn.d1}, {fn.d2})", flush=True)
    if args.out:
        print(f"Wrote {write_correspondence(fn, args.out)}", flush=True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Configured experiments
# ---------------------------------------------------------------------------


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="JSON experiment config.")
    parser.add_argument("--source", type=str, default=None, help="Builtin name or spec file.")
    parser.add_argument("--seed", type=int, default=None, help="Random seed.")
    parser.add_argument("--out", type=str, default=None, help="Output directory.")
    parser.add_argument(
        "--strategy", type=str, default=None, help='Pairing strategy: "tree" or "symbolic".'
    )
    parser.add_argument("--grid", type=int, default=None, help="Quadrature nodes per axis.")
    parser.add_argument("--nmax", type=int, default=None, help="Largest iterate n.")
    parser.add_argument("--svg", action="store_true", help="Also write SVG figures.")


def _add_experiment_parser(
    subparsers: argparse._SubParsersAction, kind: str, help_text: str
) -> argparse.ArgumentParser:
    parser = subparsers.add_parser(kind, help=help_text)
    _add_common_flags(parser)
    parser.set_defaults(func=_cmd_experiment, kind=kind)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    values = {
        "kind": args.kind,
        "source": args.source,
        "seed": args.seed,
        "out_dir": args.out,
        "strategy": args.strategy,
        "grid": args.grid,
        "n_max": args.nmax,
        "svg": True if args.svg else None,
    }
    for name in ("period", "depth", "direction", "fourier_n", "tree_samples"):
        values[name] = getattr(args, name, None)
    if args.grid is not None and getattr(args, "coarse_grid", None) is None:
        values["coarse_grid"] = max(2, args.grid // 2)
    else:
        values["coarse_grid"] = getattr(args, "coarse_grid", None)
    return {k: v for k, v in values.items() if v is not None}


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = _overrides(args)
    if args.config:
        return load_config(args.config, overrides)
    defaults = {f.name: getattr(ExperimentConfig(), f.name) for f in fields(ExperimentConfig)}
    defaults.update(overrides)
    return config_from_dict(defaults)


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = build_config(args)
    result = run(config, progress=lambda line: print(line, flush=True))
    for path in result.files:
        print(f"Wrote {path}", flush=True)
    if config.kind == "pair":
        for form_id, fit in result.summary.items():
            rate = fit["fitted_rate"]
            shown = "indeterminate" if rate is None else f"{rate:.4f} (R²={fit['fit_quality']:.4f})"
            print(f"{form_id}: fitted rate {shown}", flush=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrlab", description="Numerical experiments with holomorphic correspondences."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_eval_parser(subparsers)
    _add_compose_parser(subparsers)
    _add_iterate_parser(subparsers)

    eq = _add_experiment_parser(subparsers, "equilibrium", "Equilibrium measure point cloud.")
    eq.add_argument("--depth", type=int, default=None, help="Pullback depth.")
    eq.add_argument("--direction", type=str, default=None, help='"backward" or "forward".')
    pair = _add_experiment_parser(
        subparsers, "pair", "Convergence of graph currents to the limit current."
    )
    pair.add_argument("--tree-samples", type=int, default=None, help="Sampled paths per node.")
    pair.add_argument("--coarse-grid", type=int, default=None, help="Second grid for noise.")
    periodic = _add_experiment_parser(subparsers, "periodic", "Periodic points and multipliers.")
    periodic.add_argument("--period", type=int, default=None, help="Period n.")
    _add_experiment_parser(subparsers, "contraction", "Norm of the normalized pushforward.")
    fourier = _add_experiment_parser(subparsers, "fourier", "Fourier coefficient bounds.")
    fourier.add_argument("--fourier-n", type=int, default=None, help="Largest index norm.")
    _add_experiment_parser(subparsers, "bench", "Timing table for every experiment kind.")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigValidationError as exc:
        for problem in exc.errors:
            print(f"error: {problem}", file=sys.stderr, flush=True)
        return EXIT_INVALID
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr, flush=True)
        return EXIT_BUDGET
    except (RootSolverError, GridRefinementError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr, flush=True)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr, flush=True)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
