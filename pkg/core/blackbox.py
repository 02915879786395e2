"""Evaluation contract for the function under explanation.

A BlackBox evaluates f' = f . xi . realize on contexts and memoizes the
results by mask. `call_count` counts only cache misses.
"""
import logging
import threading
from concurrent.futures import Future
from types import MappingProxyType
from typing import Callable, List, Optional, Sequence

import numpy as np

from core.space import Context, PerturbationSpace, realize_batch
from errors import DimensionError, EvaluationError, NondeterministicEvaluatorError

DEFAULT_BATCH_SIZE = 256
FEEDS = ("vector", "mask")


class GroupEncoder:
    """Maps a p-length selection onto a native input of length p'.

    Encoded feature k owns the native positions in ``groups[k]``. A feature
    that is on (nonzero) keeps the native target values of its group, a
    feature that is off takes the native baseline values. Native positions
    owned by no group always keep the target value.
    """

    def __init__(self, groups: Sequence[Sequence[int]], native_target, native_baseline):
        self.native_target = np.array(native_target, dtype=float).ravel()
        self.native_baseline = np.array(native_baseline, dtype=float).ravel()
        if self.native_target.shape != self.native_baseline.shape:
            raise DimensionError("Native target and baseline must have the same length")
        owner = np.full(self.native_target.size, -1, dtype=int)
        for k, group in enumerate(groups):
            for pos in group:
                if not 0 <= pos < owner.size:
                    raise DimensionError(f"Native position {pos} out of range")
                if owner[pos] != -1:
                    raise DimensionError(f"Native position {pos} belongs to two groups")
                owner[pos] = k
        self.owner = owner
        self.p = len(groups)

    def __call__(self, selection):
        selection = np.asarray(selection).ravel()
        if selection.size != self.p:
            raise DimensionError(f"Encoder expects {self.p} features, got {selection.size}")
        off = np.zeros(self.owner.size, dtype=bool)
        owned = self.owner >= 0
        off[owned] = selection[self.owner[owned]] == 0
        return np.where(off, self.native_baseline, self.native_target)


class BlackBox:
    def __init__(self, space: PerturbationSpace, evaluator: Callable, feed="vector",
                 encoder: Optional[Callable] = None, batch_size=DEFAULT_BATCH_SIZE,
                 description=None, resource=None):
        if feed not in FEEDS:
            raise ValueError(f"feed must be one of {FEEDS}, got {feed!r}")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        self.space = space
        self.feed = feed
        self.encoder = encoder
        self.batch_size = int(batch_size)
        self.description = description
        self.call_count = 0
        self._evaluator = evaluator
        self._scalar = None
        self._cache = {}
        self._pending = {}  # mask -> Future while some caller evaluates it
        self._lock = threading.RLock()
        self._resource = resource  # closed together with the black box, e.g. a bridge process

    def close(self):
        if self._resource is not None:
            self._resource.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    @classmethod
    def from_function(cls, space, fn, encoder=None, batch_size=DEFAULT_BATCH_SIZE, description=None):
        """Wrap a scalar function of one (encoded) input vector."""
        bb = cls(space, None, encoder=encoder, batch_size=batch_size, description=description)
        bb._scalar = fn
        return bb

    @classmethod
    def from_batch_function(cls, space, fn, encoder=None, batch_size=DEFAULT_BATCH_SIZE,
                            description=None):
        """Wrap a function mapping an (n, p') array to n outputs."""
        return cls(space, fn, encoder=encoder, batch_size=batch_size, description=description)

    @property
    def p(self):
        return self.space.p

    def evaluate(self, ctx: Context) -> float:
        return self.eval_batch([ctx])[0]

    def eval_batch(self, ctxs: Sequence[Context]) -> List[float]:
        """Outputs for the contexts, evaluating each uncached mask once.

        Misses are reserved under the lock and evaluated outside it; a mask
        another caller is already evaluating is awaited, not re-evaluated.
        """
        if not ctxs:
            return []
        for ctx in ctxs:
            if ctx.p != self.space.p:
                raise DimensionError(f"Context has {ctx.p} features, space has {self.space.p}")
        known, waiting, owned = {}, {}, []
        with self._lock:
            for ctx in ctxs:
                mask = ctx.mask
                if mask in known or mask in waiting:
                    continue
                if mask in self._cache:
                    known[mask] = self._cache[mask]
                    continue
                pending = self._pending.get(mask)
                if pending is None:
                    pending = self._pending[mask] = Future()
                    owned.append(ctx)
                waiting[mask] = pending
        logging.debug(f"eval_batch: {len(ctxs)} contexts, {len(owned)} cache misses")
        try:
            for start in range(0, len(owned), self.batch_size):
                chunk = owned[start:start + self.batch_size]
                outputs = self._run(chunk)
                with self._lock:
                    for ctx, value in zip(chunk, outputs):
                        self._cache[ctx.mask] = value
                        self._pending.pop(ctx.mask).set_result(value)
                    self.call_count += len(chunk)
        except BaseException as e:
            # release the unfinished reservations so a later call can retry them
            with self._lock:
                for ctx in owned:
                    pending = self._pending.pop(ctx.mask, None)
                    if pending is not None:
                        pending.set_exception(e)
            raise
        known.update((mask, pending.result()) for mask, pending in waiting.items())
        return [known[ctx.mask] for ctx in ctxs]

    def self_check(self, ctx: Optional[Context] = None, tolerance=1e-9):
        """Re-evaluate one probe mask bypassing the cache and compare."""
        ctx = ctx or Context.full(self.space.p)
        first = self.evaluate(ctx)
        second = self._run([ctx])[0]
        if abs(first - second) > tolerance * max(1.0, abs(first)):
            logging.warning(f"Evaluator returned {first!r} then {second!r} for mask {ctx.mask:#x}")
            raise NondeterministicEvaluatorError(
                f"Evaluator is not deterministic: {first!r} != {second!r}", masks=[ctx.mask])
        return first

    def cached_outputs(self):
        return MappingProxyType(dict(self._cache))

    def _inputs(self, ctxs):
        if self.feed == "mask":
            return np.stack([ctx.bits() for ctx in ctxs]).astype(int)
        vectors = realize_batch(self.space, ctxs)
        if self.encoder is None:
            return vectors
        return np.stack([np.asarray(self.encoder(v), dtype=float) for v in vectors])

    def _run(self, ctxs):
        inputs = self._inputs(ctxs)
        if self._scalar is not None:
            outputs = []
            for ctx, row in zip(ctxs, inputs):
                try:
                    outputs.append(float(self._scalar(row)))
                except Exception as e:
                    logging.error(f"Evaluation failed for mask {ctx.mask:#x}: {str(e)}", exc_info=True)
                    raise EvaluationError(f"Evaluation failed: {str(e)}", masks=[ctx.mask]) from e
        else:
            masks = [ctx.mask for ctx in ctxs]
            try:
                outputs = self._evaluator(inputs)
            except EvaluationError as e:
                if e.masks:
                    raise
                raise type(e)(str(e), masks=masks) from e
            except Exception as e:
                logging.error(f"Batch evaluation of {len(ctxs)} contexts failed: {str(e)}", exc_info=True)
                raise EvaluationError(f"Evaluation failed: {str(e)}", masks=masks) from e
            outputs = [float(y) for y in np.asarray(outputs, dtype=float).ravel()]
            if len(outputs) != len(ctxs):
                raise EvaluationError(
                    f"Evaluator returned {len(outputs)} outputs for {len(ctxs)} inputs", masks=masks)
        for ctx, y in zip(ctxs, outputs):
            if not np.isfinite(y):
                raise EvaluationError(f"Evaluator returned non-finite output {y!r}", masks=[ctx.mask])
        return outputs
