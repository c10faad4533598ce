"""
molga command line: baseline | evolve | constrained | pareto | rediscovery | similarity | report | serve
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from app.config import get_settings
from app.errors import ConfigError, MolgaError, RunAborted
from app.logger import configure_logging

logger = logging.getLogger("app.cli")

EXPERIMENTS = ("baseline", "evolve", "constrained", "pareto", "rediscovery", "similarity")

# flag dest -> key path in ExperimentSpec
SPEC_FLAGS = {
    "dataset": ("dataset",),
    "dataset_limit": ("dataset_limit",),
    "out": ("out",),
    "repeats": ("repeats",),
    "workers": ("workers",),
    "descriptors": ("descriptors",),
    "fragments": ("fragments",),
    "renormalize": ("renormalize",),
    "samples": ("samples",),
    "length": ("length",),
    "targets": ("targets",),
    "delta": ("delta",),
    "target": ("target",),
    "overwrite": ("overwrite",),
    "alphabet": ("ga", "alphabet"),
    "max_length": ("ga", "max_length"),
    "generations": ("ga", "generations"),
    "pop_size": ("ga", "population_size"),
    "elitism": ("ga", "elitism"),
    "seed": ("ga", "seed"),
    "seed_from_dataset": ("ga", "seed_from_dataset"),
    "second_objective": ("ga", "second_objective"),
    "labels": ("ga", "discriminator", "labels"),
    "disc": ("ga", "discriminator", "architecture"),
    "hidden": ("ga", "discriminator", "hidden"),
    "disc_epochs": ("ga", "discriminator", "epochs"),
    "reinitialize": ("ga", "discriminator", "reinitialize"),
}

SCHEDULE_FLAGS = {
    "const": {"beta": "beta"},
    "time": {"patience": "patience", "penalty": "penalty", "start_generation": "start_generation",
             "hold_until_change": "hold_until_change"},
    "sim": {"sim_threshold": "threshold", "sim_window": "window", "start_generation": "start_generation",
            "penalty": "penalty"},
}


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    flag = parser.add_argument
    flag("--config", help="JSON config file (a previous config.resolved reproduces that run)")
    flag("--dataset", help="reference SMILES file")
    flag("--dataset-limit", type=int, help="read at most this many dataset lines")
    flag("--alphabet", help="default, extended or a path to an alphabet JSON file")
    flag("--max-length", type=int, help="maximum SELFIES length")
    flag("--out", help="output directory for run folders")
    flag("--overwrite", action="store_true", default=None, help="reuse <out>/<kind>-s<seed>")
    flag("--seed", type=int, help="first seed")
    flag("--repeats", type=int, help="number of independent seeds")
    flag("--workers", type=int, help="worker processes for seeds, targets and sampling")
    flag("--generations", type=int)
    flag("--pop-size", type=int)
    flag("--elitism", type=int)
    flag("--seed-from-dataset", action="store_true", default=None,
         help="seed the first population with the best-scoring dataset molecules")
    flag("--schedule", choices=["const", "time", "sim"], help="beta schedule")
    flag("--beta", type=float, help="constant beta")
    flag("--patience", type=int, help="stagnation patience (time schedule)")
    flag("--penalty", type=float, help="beta applied when a trigger fires")
    flag("--start-generation", type=int, help="first generation a trigger may fire")
    flag("--hold-until-change", action="store_true", default=None,
         help="keep the stagnation penalty until max J changes")
    flag("--sim-threshold", type=float, help="similarity trigger threshold")
    flag("--sim-window", type=int, help="best molecules compared by the similarity trigger")
    flag("--labels", choices=["original", "flipped"], help="discriminator label convention")
    flag("--disc", choices=["mlp", "logistic", "none"], help="discriminator architecture")
    flag("--hidden", type=int, nargs="+", help="hidden layer widths of the mlp discriminator")
    flag("--disc-epochs", type=int, help="discriminator epochs per generation")
    flag("--reinitialize", action="store_true", default=None, help="fresh discriminator every generation")
    flag("--descriptors", help="builtin or table:PATH")
    flag("--fragments", help="fragment table JSON for the SA score")
    flag("--renormalize", action="store_true", default=None, help="recompute normalization from the dataset")
    flag("--samples", type=int, help="baseline: number of random SELFIES")
    flag("--length", type=int, help="baseline: SELFIES length")
    flag("--targets", type=int, help="constrained: number of lowest-J targets")
    flag("--delta", type=float, help="constrained: similarity threshold")
    flag("--target", help="target SMILES (constrained, rediscovery, similarity)")
    flag("--second-objective", choices=["neg_heavy_atoms", "neg_sa", "logp"], help="pareto: second objective")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="molga", description="SELFIES genetic algorithm with a discriminator penalty")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING (default from MOLGA_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _add_experiment_flags(commands.add_parser(name, help=f"run the {name} experiment"))
    report = commands.add_parser("report", help="write the plot-data bundle of a finished run")
    report.add_argument("run_dir")
    serve = commands.add_parser("serve", help="start the local run service")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    return parser


def _set(payload: Dict[str, Any], path, value) -> None:
    for key in path[:-1]:
        payload = payload.setdefault(key, {})
    payload[path[-1]] = value


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Only flags given on the command line; they win over the config file"""
    overrides: Dict[str, Any] = {}
    for dest, path in SPEC_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            _set(overrides, path, value)

    kind = args.schedule or ("const" if args.beta is not None else None)
    if kind is not None:
        schedule: Dict[str, Any] = {"kind": kind}
        for dest, field in SCHEDULE_FLAGS[kind].items():
            value = getattr(args, dest, None)
            if value is not None:
                schedule[field] = value
        _set(overrides, ("ga", "schedule"), schedule)
    return overrides


def _run_experiment(args: argparse.Namespace) -> int:
    from app.experiments.commands import run_experiment
    from app.experiments.spec import build_spec

    spec = build_spec(args.command, overrides_from_args(args), args.config)
    result = run_experiment(spec)
    print(result.run_dir)
    return 0 if result.completed else 1


def _report(args: argparse.Namespace) -> int:
    from app.experiments.report import cmd_report

    manifest = cmd_report(args.run_dir)
    print(f"{args.run_dir}/report ({', '.join(manifest['files'])})")
    return 0


def _serve(args: argparse.Namespace) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run("app.main:app", host=args.host or settings.host, port=args.port or settings.port)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.command == "report":
            return _report(args)
        if args.command == "serve":
            return _serve(args)
        return _run_experiment(args)
    except ConfigError as exc:
        logger.error(f"❌ Invalid configuration: {exc}")
        return 2
    except FileNotFoundError as exc:
        logger.error(f"❌ File not found: {exc.filename}")
        return 2
    except RunAborted as exc:
        logger.error(f"❌ Run aborted: {exc}")
        return 1
    except MolgaError as exc:
        logger.error(f"❌ {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
