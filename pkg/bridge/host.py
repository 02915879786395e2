"""Model host speaking the bridge protocol over stdin/stdout.

    python -m bridge.host --function F1
    python -m bridge.host --function gam:7:12:3
    python -m bridge.host --expr "relu(x1 + x3 + 1) + relu(x2) + 1"

Requests and replies are one JSON object per line:
    hello -> ready, eval -> result | error.
In mask mode the host realizes 0/1 masks with its own target and baseline.
"""
import argparse
import json
import logging
import sys

import numpy as np

from errors import ArchipelagoError
from synth.expression import parse_expression
from synth.registry import resolve_function


def respond(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


class ModelHost:
    def __init__(self, fn, target, baseline, declared_p=None):
        self.fn = fn
        self.target = np.asarray(target, dtype=float)
        self.baseline = np.asarray(baseline, dtype=float)
        self.p = self.target.size if declared_p is None else declared_p
        self.mode = None

    def handle(self, message):
        kind = message.get("type")
        if kind == "hello":
            self.mode = message.get("mode", "vector")
            return {"type": "ready", "p": self.p}
        request_id = message.get("id")
        if kind != "eval":
            return {"type": "error", "id": request_id, "message": f"Unknown request type {kind!r}"}
        if self.mode is None:
            return {"type": "error", "id": request_id, "message": "eval before hello"}
        try:
            outputs = [self.evaluate(row) for row in message.get("inputs", [])]
        except Exception as e:
            logging.error(f"Evaluation failed: {str(e)}", exc_info=True)
            return {"type": "error", "id": request_id, "message": str(e)}
        return {"type": "result", "id": request_id, "outputs": outputs}

    def evaluate(self, row):
        row = np.asarray(row, dtype=float)
        if self.mode == "mask":
            row = np.where(row != 0, self.target, self.baseline)
        return float(self.fn(row))

    def serve(self, stream):
        for line in stream:
            line = line.strip()
            if not line:
                continue
            try:
                message = json.loads(line)
            except json.JSONDecodeError as e:
                respond({"type": "error", "id": None, "message": f"Invalid JSON: {e}"})
                continue
            if not isinstance(message, dict):
                respond({"type": "error", "id": None, "message": "Request must be a JSON object"})
                continue
            respond(self.handle(message))


def _vector(text):
    return [float(x) for x in text.split(",")] if text else None


def build_host(args) -> ModelHost:
    target, baseline = _vector(args.target), _vector(args.baseline)
    if args.expr:
        expression = parse_expression(args.expr)
        p = len(target) if target else expression.p
        target = target or [1.0] * p
        baseline = baseline or [0.0] * p
        return ModelHost(expression, target, baseline, args.declare_p)
    named = resolve_function(args.function, target=target, baseline=baseline)
    return ModelHost(named.fn, named.target, named.baseline, args.declare_p)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(levelname)s - %(message)s')
    parser = argparse.ArgumentParser(description="Model host for the evaluation bridge")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--function", help="F1..F4, sum or gam:SEED:P:K")
    source.add_argument("--expr", help="arithmetic expression over x1..xp")
    parser.add_argument("--target", help="comma-separated target vector")
    parser.add_argument("--baseline", help="comma-separated baseline vector")
    parser.add_argument("--declare-p", type=int, help="feature count announced in the handshake")
    args = parser.parse_args(argv)
    try:
        host = build_host(args)
    except ArchipelagoError as e:
        logging.error(f"Cannot start model host: {str(e)}")
        return 2
    host.serve(sys.stdin)
    return 0


if __name__ == "__main__":
    sys.exit(main())
