"""Subcommand implementations. Each returns an exit code."""
import logging
import os
import re
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass

from analysis.attribute import AttributionMethod, explain
from analysis.detect import DetectorConfig, detect_pairs, redundancy_curve
from analysis.metrics import ranking_auc
from axioms.suite import run_axiom_suite
from core.blackbox import BlackBox
from core.space import PerturbationSpace
from custom_bridge_client import bridge_open
from errors import EXIT_OK, DimensionError, UsageError
from reports import generate_report as report
from synth.expression import parse_expression
from synth.functions import SYNTHETIC_IDS, ground_truth_pairs, make_function
from synth.registry import resolve_function


@dataclass
class Source:
    bb: BlackBox
    description: dict


def parse_vector(text, name):
    """A comma/whitespace separated vector, given inline or as a file path"""
    if text is None:
        return None
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as handle:
            text = handle.read()
    fields = [field for field in re.split(r"[,\s]+", text.strip()) if field]
    if not fields:
        raise UsageError(f"--{name} is empty")
    try:
        return [float(field) for field in fields]
    except ValueError as e:
        raise UsageError(f"--{name} must hold numbers: {str(e)}")


def _space(target, baseline, h):
    return PerturbationSpace.create(target, baseline, h)


def open_source(args, settings) -> Source:
    """Black box for --function, --expr or --bridge"""
    target = parse_vector(args.target, "target")
    baseline = parse_vector(args.baseline, "baseline")
    batch_size = args.batch_size or settings.batch_size

    if args.function:
        named = resolve_function(args.function, target=target, baseline=baseline)
        space = _space(named.target, named.baseline, args.h)
        description = {"kind": "function", "name": args.function}
        if hasattr(named.source, "describe"):
            description["instance"] = named.source.describe()
        bb = BlackBox.from_function(space, named.fn, batch_size=batch_size, description=args.function)
        return Source(bb, description)

    if args.expr:
        expression = parse_expression(args.expr)
        p = len(target) if target is not None else expression.p
        target = target if target is not None else [1.0] * p
        baseline = baseline if baseline is not None else [0.0] * p
        if len(target) < expression.p:
            raise DimensionError(f"Expression uses x{expression.p} but the target has {len(target)} features")
        space = _space(target, baseline, args.h)
        bb = BlackBox.from_function(space, expression, batch_size=batch_size, description=args.expr)
        return Source(bb, {"kind": "expression", "text": args.expr})

    if args.bridge:
        if target is None or baseline is None:
            raise UsageError("--bridge needs --target and --baseline")
        space = _space(target, baseline, args.h)
        bb = bridge_open(args.bridge, space, mode=args.bridge_mode, timeout=settings.bridge_timeout,
                         batch_size=batch_size)
        return Source(bb, {"kind": "bridge", "command": args.bridge, "mode": args.bridge_mode})

    raise UsageError("One of --function, --expr or --bridge is required")


def _detector(args, settings, top_k=None):
    return DetectorConfig.parse(
        args.contexts,
        seed=args.seed,
        top_k=top_k,
        full_expectation_cap=settings.full_expectation_cap,
        workers=args.workers or settings.workers,
    )


@contextmanager
def _timer(args, manifest):
    start = time.perf_counter()
    yield
    if args.record_timing:
        manifest.wall_time_s = round(time.perf_counter() - start, 6)


def _manifest(args, source=None, **config):
    return report.RunManifest(
        command=args.command_line,
        space=source.bb.space.describe() if source else None,
        source=source.description if source else {},
        config={"h": args.h, "seed": args.seed, **config},
    )


def cmd_detect(args, settings):
    cfg = _detector(args, settings)
    source = open_source(args, settings)
    manifest = _manifest(args, source, **cfg.describe())
    with source.bb, _timer(args, manifest):
        ranking = detect_pairs(source.bb, cfg)
        manifest.call_count = source.bb.call_count
    report.write_ranking(args.out, ranking, manifest)
    return EXIT_OK


def cmd_explain(args, settings):
    cfg = _detector(args, settings)
    method = AttributionMethod(args.method)
    source = open_source(args, settings)
    manifest = _manifest(args, source, **cfg.describe())
    manifest.config.update(top_k=args.top_k, method=method.value)
    with source.bb, _timer(args, manifest):
        ranking = detect_pairs(source.bb, cfg)
        explanation = explain(source.bb, ranking, args.top_k, method, workers=cfg.workers)
        manifest.call_count = source.bb.call_count
    report.write_explanation(args.out, explanation, manifest)
    return EXIT_OK


def cmd_bench(args, settings):
    """AUC of every context regime on the synthetic functions"""
    functions = [name.strip() for name in args.functions.split(",") if name.strip()]
    unknown = [name for name in functions if name not in SYNTHETIC_IDS]
    if unknown:
        raise UsageError(f"bench only runs the synthetic functions {SYNTHETIC_IDS}, got {unknown}")
    regimes = [text.strip() for text in args.contexts.split(",") if text.strip()]
    manifest = _manifest(args, None, contexts=regimes, functions=functions, p=args.p)
    results = {}
    with _timer(args, manifest):
        for text in regimes:
            cfg = DetectorConfig.parse(text, seed=args.seed, full_expectation_cap=settings.full_expectation_cap,
                                       workers=args.workers or settings.workers)
            scores = {}
            for name in functions:
                fn = make_function(name, p=args.p)
                bb = BlackBox.from_function(fn.space(args.h), fn, batch_size=args.batch_size or settings.batch_size)
                scores[name] = ranking_auc(detect_pairs(bb, cfg), ground_truth_pairs(fn))
                manifest.call_count += bb.call_count
                logging.info(f"bench {cfg.label} {name}: AUC {scores[name]:.6f}")
            results[cfg.label] = scores
    report.write_bench(args.out, results, functions, manifest)
    return EXIT_OK


def cmd_redundancy(args, settings):
    source = open_source(args, settings)
    manifest = _manifest(args, source, N=args.N, k=args.k)
    with source.bb, _timer(args, manifest):
        curves = {sequence: redundancy_curve(source.bb, sequence, args.N, args.k, seed=args.seed)
                  for sequence in ("fixed", "random")}
        manifest.call_count = source.bb.call_count
    report.write_redundancy(args.out, curves, manifest)
    return EXIT_OK


def cmd_axioms(args, settings):
    reports = run_axiom_suite(seed=args.seed, trials=args.trials, bridge_trials=args.bridge_trials)
    failed = [r.axiom for r in reports if not r.passed]
    if failed:
        logging.warning(f"Axioms violated: {', '.join(failed)}")
    if args.out:
        report.write_axioms(args.out, reports)
    else:
        sys.stdout.write(report.dump_axioms(reports))
    return EXIT_OK


COMMANDS = {
    "detect": cmd_detect,
    "explain": cmd_explain,
    "bench": cmd_bench,
    "redundancy": cmd_redundancy,
    "axioms": cmd_axioms,
}
