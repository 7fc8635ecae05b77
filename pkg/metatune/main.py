import argparse
import logging
import sys
from logging import Logger
from pathlib import Path
from typing import Optional, Sequence

from metatune.benchmarks import BenchmarkKind
from metatune.config import OPTIMIZER_NAMES, OUTPUT_DIR, BenchmarkSettings, ExperimentConfig
from metatune.report import report_compare
from metatune.runner import run_trend, run_tune
from metatune.synthetic import SynthSpec, generate

log: Logger = logging.getLogger("metatune")


def _overrides(args: argparse.Namespace) -> dict:
    update: dict = {}
    if getattr(args, "seed", None) is not None:
        update["master_seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        update["workers"] = args.workers
    if getattr(args, "out", None) is not None:
        update["output_dir"] = Path(args.out)
    if getattr(args, "optimizer", None) is not None:
        update["optimizer"] = args.optimizer
    return update


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config: ExperimentConfig = ExperimentConfig.load(Path(args.config))
    # Revalidate so overridden fields go through the same checks as the file
    return ExperimentConfig.model_validate({**config.model_dump(), **_overrides(args)})


def tune(args: argparse.Namespace):
    summary = run_tune(_load(args))
    print(f"Best objective {summary.best_value:.6g} after {summary.n_trials} trials")
    print(f"Best configuration: {summary.best_configuration}")


def generate_csv(args: argparse.Namespace):
    spec: SynthSpec = SynthSpec(
        n_subjects=args.subjects,
        windows_per_subject=args.windows,
        n_features=args.features,
        n_informative=args.informative,
        class_sep=args.class_sep,
        subject_effect_sd=args.subject_sd,
        positive_fraction=args.positive_fraction,
        seed=args.seed if args.seed is not None else 0,
        shift=args.shift,
    )
    out: Path = Path(args.out)
    generate(spec).to_csv(out)
    print(f"Wrote {spec.n_subjects * spec.windows_per_subject} rows to {out}")


def report(args: argparse.Namespace):
    table = report_compare(Path(args.run_a), Path(args.run_b), Path(args.out) if args.out else None)
    print(table.to_markdown())


def bench(args: argparse.Namespace):
    config: ExperimentConfig = ExperimentConfig(
        name=f"{args.function}-{args.dims}d",
        benchmark=BenchmarkSettings(kind=BenchmarkKind(args.function), dims=args.dims),
        optimizer=args.optimizer or "hybrid",
        master_seed=args.seed if args.seed is not None else 0,
        workers=args.workers or 1,
        output_dir=Path(args.out) if args.out else OUTPUT_DIR / f"bench-{args.function}",
        cache=False,
    )
    summary = run_tune(config)
    print(f"{args.function} ({args.dims}d) with {config.optimizer}: best {summary.best_value:.6g}")


def trend(args: argparse.Namespace):
    config: ExperimentConfig = _load(args)
    first: int = config.master_seed
    result = run_trend(config, list(range(first, first + args.seeds)))
    print(f"Ordering hybrid >= max(pso, ga) >= baseline {'holds' if result.ordering_holds else 'does not hold'}")


def _run_options(parser: argparse.ArgumentParser, optimizer: bool = True):
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        metavar="<N>",
        help="Override the master seed"
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        metavar="<N>",
        help="Parallel evaluation workers (results do not depend on it)"
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        metavar="<DIR>",
        help="Override the output directory"
    )
    if optimizer:
        parser.add_argument(
            "--optimizer",
            type=str,
            choices=OPTIMIZER_NAMES,
            default=None,
            help="Override the optimizer of the config"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metatune",
        description=(
            "Metaheuristic hyperparameter search and feature selection with subject-wise evaluation.\n\n"
            "tune      runs an experiment config (search, repeats, report).\n"
            "generate  writes a synthetic windowed dataset to CSV.\n"
            "report    compares the repeated results of two run directories.\n"
            "bench     runs an optimizer on a benchmark function.\n"
            "trend     runs baseline, PSO, GA and hybrid over several seeds and compares medians."
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log at DEBUG level"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("tune", help="Run an experiment config")
    p.add_argument("--config", type=str, required=True, metavar="<FILE>", help="The experiment JSON file")
    _run_options(p)
    p.set_defaults(handler=tune)

    p = commands.add_parser("generate", help="Write a synthetic dataset CSV")
    p.add_argument("--subjects", type=int, default=40, metavar="<N>", help="Number of subjects")
    p.add_argument("--windows", type=int, default=20, metavar="<N>", help="Windows per subject")
    p.add_argument("--features", type=int, default=30, metavar="<N>", help="Number of features")
    p.add_argument("--informative", type=int, default=6, metavar="<N>", help="Informative features")
    p.add_argument("--class-sep", type=float, default=1.0, metavar="<X>", help="Class separation")
    p.add_argument("--subject-sd", type=float, default=0.5, metavar="<X>", help="Subject offset standard deviation")
    p.add_argument("--positive-fraction", type=float, default=0.5, metavar="<X>", help="Fraction of positive subjects")
    p.add_argument("--shift", type=float, default=0.0, metavar="<X>", help="Offset added to every feature")
    p.add_argument("--seed", type=int, default=None, metavar="<N>", help="Generator seed")
    p.add_argument("--out", type=str, required=True, metavar="<FILE>", help="Output CSV file")
    p.set_defaults(handler=generate_csv)

    p = commands.add_parser("report", help="Compare two run directories")
    p.add_argument("run_a", type=str, help="First run directory")
    p.add_argument("run_b", type=str, help="Second run directory")
    p.add_argument("--out", type=str, default=None, metavar="<DIR>", help="Write comparison.md / .json here")
    p.set_defaults(handler=report)

    p = commands.add_parser("bench", help="Run an optimizer on a benchmark function")
    p.add_argument(
        "--function",
        type=str,
        choices=[kind.value for kind in BenchmarkKind],
        default=BenchmarkKind.SPHERE.value,
        help="Benchmark function"
    )
    p.add_argument("--dims", type=int, default=2, metavar="<N>", help="Dimensions")
    _run_options(p)
    p.set_defaults(handler=bench)

    p = commands.add_parser("trend", help="Compare optimizers over several seeds")
    p.add_argument("--config", type=str, required=True, metavar="<FILE>", help="The experiment JSON file")
    p.add_argument("--seeds", type=int, default=5, metavar="<N>", help="Number of master seeds")
    _run_options(p, optimizer=False)
    p.set_defaults(handler=trend)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        args.handler(args)
    except Exception as e:
        log.error(f"{args.command} aborted: {type(e).__name__}: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
