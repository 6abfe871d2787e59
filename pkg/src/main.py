from dotenv import load_dotenv
load_dotenv()

import argparse
import sys
from pathlib import Path
from typing import NoReturn, Optional, Sequence

from pydantic import ValidationError

from src.cli.commands import audit_command, bench_command, compare_command, plot_command, resolve_grouping, run_command
from src.cli.config import RUN_SETTINGS, RunConfig
from src.log_config import attach_run_log, setup_logger

logger = setup_logger("src", RUN_SETTINGS.log_level)


class CisArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 is reserved for an empty final set."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_model_flags(parser: argparse.ArgumentParser, bench: bool = False) -> None:
    parser.add_argument("--model", required=True, help="Registry name or path to a JSON model definition")
    parser.add_argument(
        "--divisions",
        default=str(RUN_SETTINGS.divisions),
        help="Resolutions to benchmark, e.g. 16,32,64" if bench else "Cells per dimension: one value or one per dimension",
    )
    parser.add_argument("--grouping", default=None, help="Blocks per subsystem, 1-based, e.g. 1,2:2,3, or a named grouping")
    parser.add_argument("--inputs-split", type=int, default=None, help="Sub-boxes per input dimension")
    parser.add_argument("--out", default=RUN_SETTINGS.out, help="Output directory")
    parser.add_argument("--workers", type=int, default=RUN_SETTINGS.workers)
    parser.add_argument("--seed", type=int, default=RUN_SETTINGS.seed, help="Seed for sampled audits")
    parser.add_argument("--validation-mode", choices=["synchronous", "sequential"], default="synchronous")
    parser.add_argument("--no-seed", action="store_true", help="Run the distributed pass without the decentralized cells")
    parser.add_argument("--graphs", action="store_true", help="Also export symbolic-image graphs")
    parser.add_argument("--cstr-variant", choices=["verbatim", "consumption"], default="verbatim")
    parser.add_argument("--step", type=float, default=1.0, help="Discretization step for continuous-time models")
    parser.add_argument("--scheme", choices=["euler", "heun"], default="euler")


def build_parser() -> argparse.ArgumentParser:
    parser = CisArgumentParser(prog="cis", description="Control invariant sets from symbolic images")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run the centralized, decentralized, distributed or full pipeline")
    _add_model_flags(run)
    run.add_argument(
        "--mode", choices=["centralized", "decentralized", "distributed", "full"], default=RUN_SETTINGS.mode
    )

    bench = commands.add_parser("bench", help="Time centralized against distributed computation")
    _add_model_flags(bench, bench=True)

    audit = commands.add_parser("audit", help="Sample a stored cover for pointwise invariance")
    _add_model_flags(audit)
    audit.add_argument("--cover", required=True, help="Cell-set file to audit")
    audit.add_argument("--samples", type=int, default=None)
    audit.add_argument("--input-grid", type=int, default=None, help="Points per input dimension")

    compare = commands.add_parser("compare", help="Compare two cell-set files on one grid")
    compare.add_argument("set_a")
    compare.add_argument("set_b")
    compare.add_argument("--report", default=None, help="Also write the report as JSON")

    plot = commands.add_parser("plot", help="Plot cell-set files as SVG")
    plot.add_argument("sets", nargs="+")
    plot.add_argument("--dims", default="1,2", help="1-based state dimensions, two or three")
    plot.add_argument("--labels", default=None, help="Comma-separated legend labels")
    plot.add_argument("--output", default="cells.svg")
    return parser


def _run_config(args: argparse.Namespace, mode: str) -> RunConfig:
    options = {"cstr_variant": args.cstr_variant, "step": args.step, "scheme": args.scheme}
    grouping = None
    if mode != "centralized" or args.grouping:
        grouping = resolve_grouping(args.model, args.grouping, options)
    return RunConfig(
        model=args.model,
        divisions=args.divisions,
        mode=mode,
        grouping=grouping,
        inputs_split=args.inputs_split,
        out=args.out,
        workers=args.workers,
        seed=args.seed,
        seeded=not args.no_seed,
        validation_mode=args.validation_mode,
        export_graphs=args.graphs,
        **options,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logger.info(f"Command {args.command}")

    if args.command == "compare":
        return compare_command(args.set_a, args.set_b, args.report)
    if args.command == "plot":
        labels = args.labels.split(",") if args.labels else None
        try:
            dims = [int(d) for d in args.dims.split(",")]
        except ValueError as e:
            logger.error(f"Invalid --dims '{args.dims}': {str(e)}")
            return 1
        return plot_command(args.sets, dims, args.output, labels)

    try:
        if args.command == "run":
            config = _run_config(args, args.mode)
        else:
            config = _run_config(args, "full" if args.command == "bench" else "centralized")
    except (ValidationError, ValueError) as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return 1

    attach_run_log(logger, RUN_SETTINGS.log_dir or Path(config.out) / "logs")

    if args.command == "run":
        return run_command(config)
    if args.command == "bench":
        return bench_command(config)
    return audit_command(config, args.cover, args.samples, args.input_grid)


if __name__ == "__main__":
    sys.exit(main())
