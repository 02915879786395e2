"""Argument parsing and dispatch for the archipelago command line."""
import argparse
import logging
import shlex

from analysis.attribute import AttributionMethod
from cli.commands import COMMANDS
from errors import EXIT_USAGE, ArchipelagoError


def _add_source(parser):
    source = parser.add_argument_group("function source")
    kind = source.add_mutually_exclusive_group()
    kind.add_argument("--function", help="F1..F4, sum or gam:SEED:P:K")
    kind.add_argument("--expr", help="arithmetic expression over x1..xp, e.g. 'relu(x1 + x3 + 1) + relu(x2) + 1'")
    kind.add_argument("--bridge", help="command starting a model host that speaks the bridge protocol")
    source.add_argument("--bridge-mode", choices=("vector", "mask"), default="vector")
    source.add_argument("--target", help="target vector: comma-separated values or a file")
    source.add_argument("--baseline", help="baseline vector: comma-separated values or a file")


def _add_common(parser, contexts="archdetect"):
    parser.add_argument("--contexts", default=contexts,
                        help="archdetect, target-only, baseline-only, random:N or full")
    parser.add_argument("--h", choices=("unit", "eq4"), default="unit",
                        help="finite-difference step: 1 per feature or |target - baseline|")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, help="pair-loop threads (default from settings)")
    parser.add_argument("--batch-size", type=int, help="evaluations per request (default from settings)")
    parser.add_argument("--record-timing", action="store_true", help="add wall_time_s to the manifest")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="archipelago",
        description="Detect feature interactions in a black-box function and attribute them",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="rank every feature pair by interaction strength")
    _add_source(detect)
    _add_common(detect)
    detect.add_argument("--out", required=True, help="ranking CSV path")

    explain = sub.add_parser("explain", help="merge the top pairs into islands and attribute them")
    _add_source(explain)
    _add_common(explain)
    explain.add_argument("--top-k", type=int, required=True, help="number of top pairs to merge")
    explain.add_argument("--method", choices=[m.value for m in AttributionMethod],
                         default=AttributionMethod.ARCHATTRIBUTE.value)
    explain.add_argument("--out", required=True, help="explanation JSON path")

    bench = sub.add_parser("bench", help="ranking AUC of context regimes on F1..F4")
    _add_common(bench, contexts="target-only,baseline-only,archdetect")
    bench.add_argument("--functions", default="F1,F2,F3,F4")
    bench.add_argument("--p", type=int, default=40)
    bench.add_argument("--out", required=True, help="bench CSV path")

    redundancy = sub.add_parser("redundancy", help="top-k overlap as contexts are added")
    _add_source(redundancy)
    _add_common(redundancy)
    redundancy.add_argument("--N", type=int, default=10, help="largest number of contexts")
    redundancy.add_argument("--k", type=int, default=10, help="size of the compared top-k sets")
    redundancy.add_argument("--out", required=True, help="redundancy CSV path")

    axioms = sub.add_parser("axioms", help="check the attribution axioms on random instances")
    axioms.add_argument("--seed", type=int, default=0)
    axioms.add_argument("--trials", type=int, default=200)
    axioms.add_argument("--bridge-trials", type=int, default=0,
                        help="extra implementation-invariance trials against a spawned host")
    axioms.add_argument("--out", help="report JSON path (stdout if omitted)")
    return parser


def run(argv, settings):
    """Parse argv, run the subcommand and map errors to exit codes"""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    args.command_line = shlex.join(["archipelago", *argv])
    logging.info(f"Running {args.command_line}")
    try:
        code = COMMANDS[args.command](args, settings)
    except ArchipelagoError as e:
        logging.error(f"{args.command} failed: {str(e)}", exc_info=logging.getLogger().isEnabledFor(logging.DEBUG))
        return e.exit_code
    logging.info(f"{args.command} finished")
    return code
