"""
Submax CLI

python main.py [--seed S] [--out-dir DIR] [--quiet] <command>

1. run <config.json>        - trace CSV + summary JSON + regret SVG
2. bench <config.json>      - benchmark summary only
3. demo-impossibility       - two-element rounding counterexample report
4. list-families            - shipped constraint / objective / adversary / oracle families
5. schema                   - JSON schema of the experiment config
"""
import argparse
import sys
from pathlib import Path
from typing import Any, List, Optional

import structlog

from config import get_settings
from exceptions import ConfigError, SubmaxError
from logger_config import configure_logger
from schemas import ErrorReport, ExperimentConfig, load_config
from services import reporting
from services.adversary import FEEDBACK_MODES, adversary_families, objective_kinds
from services.geometry import constraint_families
from services.harness import run_benchmark_only, run_experiment
from services.oracles import ORACLE_TYPES
from services.rounding import impossibility_demo

logger = structlog.get_logger("main")

SCHEMA_PATH = Path("configs") / "experiment.schema.json"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="submax", description="Online DR-submodular maximization experiments")
    parser.add_argument("--seed", type=int, default=None, help="override the config's root seed")
    parser.add_argument("--out-dir", default=None, help="output directory (default: config, then $SUBMAX_OUT)")
    parser.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")

    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")

    bench = sub.add_parser("bench", help="compute the benchmark of a config without running it")
    bench.add_argument("config")

    demo = sub.add_parser("demo-impossibility", help="two-element matroid rounding counterexample")
    demo.add_argument("--points", type=int, default=100)

    sub.add_parser("list-families", help="print the shipped families")

    schema = sub.add_parser("schema", help="write the config JSON schema")
    schema.add_argument("--output", default=str(SCHEMA_PATH))
    return parser


def _emit(data: Any) -> None:
    sys.stdout.write(reporting.dumps(data).decode() + "\n")
    sys.stdout.flush()


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        config = config.model_copy(update={"seed": args.seed})
    return config


def _out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out_dir) if args.out_dir else Path(get_settings().SUBMAX_OUT)


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        config = _load(args)
        result = run_experiment(config, args.out_dir)
        _emit(result.summary.model_dump())
        return 0

    if args.command == "bench":
        config = _load(args)
        _emit(run_benchmark_only(config, args.out_dir).model_dump())
        return 0

    if args.command == "demo-impossibility":
        report = impossibility_demo(seed=args.seed or 0, n_points=args.points)
        reporting.write_json(_out_dir(args) / "impossibility.json", report.to_dict())
        _emit(report.to_dict())
        return 0

    if args.command == "list-families":
        _emit({
            "constraint": constraint_families(),
            "objective": objective_kinds(),
            "adversary": adversary_families(),
            "oracle": list(ORACLE_TYPES),
            "algorithm": list(FEEDBACK_MODES),
        })
        return 0

    if args.command == "schema":
        target = reporting.write_json(args.output, ExperimentConfig.model_json_schema())
        _emit({"schema": str(target)})
        return 0

    raise SubmaxError(f"Unknown command '{args.command}'")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logger(quiet=args.quiet)

    try:
        return dispatch(args)
    except SubmaxError as e:
        report = ErrorReport(error=str(e), kind=e.kind, exit_code=e.exit_code)
        logger.error("Command failed", command=args.command, kind=e.kind, error=str(e))
        try:
            reporting.write_json(_out_dir(args) / "error.json", report.model_dump())
        except OSError as io_err:
            logger.warning("Could not write error report", error=str(io_err))
        _emit(report.model_dump())
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
