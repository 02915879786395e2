"""ArchDetect: pairwise interaction strength from discrete mixed differences.

For a pair (i, j) and a context, the four corners override the context at
{i, j} with (target, target), (baseline, target), (target, baseline) and
(baseline, baseline). The strength is the squared, step-scaled second
difference of f over those corners.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis.metrics import overlap_ratio, top_k_pairs
from core.blackbox import BlackBox
from core.space import Context
from errors import CapacityError, DimensionError, InertFeatureError, ParameterError

STRENGTH_FLOOR = 1e-12
DEFAULT_FULL_EXPECTATION_CAP = 16


class ContextRegime(str, Enum):
    ARCHDETECT = "archdetect"
    TARGET_ONLY = "target_only"
    BASELINE_ONLY = "baseline_only"
    RANDOM = "random"
    FULL_EXPECTATION = "full_expectation"


_REGIME_NAMES = {
    "archdetect": ContextRegime.ARCHDETECT,
    "target-only": ContextRegime.TARGET_ONLY,
    "target_only": ContextRegime.TARGET_ONLY,
    "baseline-only": ContextRegime.BASELINE_ONLY,
    "baseline_only": ContextRegime.BASELINE_ONLY,
    "full": ContextRegime.FULL_EXPECTATION,
    "full_expectation": ContextRegime.FULL_EXPECTATION,
}


@dataclass(frozen=True)
class DetectorConfig:
    contexts: ContextRegime = ContextRegime.ARCHDETECT
    n_random: int = 1
    seed: Optional[int] = 0
    top_k: Optional[int] = None
    threshold: float = 0.0
    full_expectation_cap: int = DEFAULT_FULL_EXPECTATION_CAP
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "contexts", ContextRegime(self.contexts))
        if self.contexts is ContextRegime.RANDOM and self.n_random < 1:
            raise ParameterError("random contexts need n >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise ParameterError("top_k must be a positive integer")
        if self.threshold < 0:
            raise ParameterError("threshold must be >= 0")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    @classmethod
    def parse(cls, text, **kwargs):
        """Build a config from 'archdetect', 'target-only', 'baseline-only', 'random:N' or 'full'."""
        text = text.strip().lower()
        if text.startswith("random"):
            _, _, count = text.partition(":")
            try:
                n = int(count) if count else 1
            except ValueError:
                raise ParameterError(f"Bad random context count in {text!r}")
            return cls(contexts=ContextRegime.RANDOM, n_random=n, **kwargs)
        if text not in _REGIME_NAMES:
            raise ParameterError(f"Unknown context regime {text!r}")
        return cls(contexts=_REGIME_NAMES[text], **kwargs)

    @property
    def label(self):
        if self.contexts is ContextRegime.RANDOM:
            return f"random:{self.n_random}"
        return self.contexts.value

    def describe(self):
        return {
            "contexts": self.label,
            "seed": self.seed,
            "top_k": self.top_k,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class PairStrength:
    i: int
    j: int
    strength: float
    per_context: Tuple[Tuple[str, float], ...] = ()

    def omega(self, label) -> Optional[float]:
        for name, value in self.per_context:
            if name == label:
                return value
        return None


@dataclass(frozen=True)
class InteractionRanking:
    p: int
    pairs: Tuple[PairStrength, ...]
    config: DetectorConfig = field(default_factory=DetectorConfig)
    context_labels: Tuple[str, ...] = ()

    def select(self, top_k=None, threshold=None) -> List[PairStrength]:
        """Pairs above the strength floor, limited to the top k and/or a threshold."""
        top_k = self.config.top_k if top_k is None else top_k
        threshold = self.config.threshold if threshold is None else threshold
        floor = max(threshold, STRENGTH_FLOOR)
        chosen = [ps for ps in self.pairs if ps.strength > floor]
        if top_k is not None:
            chosen = chosen[:top_k]
        return chosen

    @cached_property
    def _by_pair(self):
        return {(ps.i, ps.j): ps.strength for ps in self.pairs}

    def strength(self, i, j) -> float:
        return self._by_pair[tuple(sorted((i, j)))]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "i": [ps.i for ps in self.pairs],
                "j": [ps.j for ps in self.pairs],
                "strength": [ps.strength for ps in self.pairs],
                "omega_target": [ps.omega("target") for ps in self.pairs],
                "omega_baseline": [ps.omega("baseline") for ps in self.pairs],
            }
        )


def _corner_contexts(ctx: Context, i, j):
    bi, bj = 1 << i, 1 << j
    base = ctx.mask & ~(bi | bj)
    p = ctx.p
    return (Context(p, base | bi | bj), Context(p, base | bj), Context(p, base | bi), Context(p, base))


def _omega(fa, fb, fc, fd, hh):
    return ((fa - fb - fc + fd) / hh) ** 2


def _check_pair(bb: BlackBox, i, j):
    if i == j:
        raise ParameterError("Interaction strength needs two distinct features")
    for k in (i, j):
        if not 0 <= k < bb.p:
            raise DimensionError(f"Feature index {k} out of range for p={bb.p}")
        if bb.space.is_inert(k):
            raise InertFeatureError(k)


def omega_pair(bb: BlackBox, i, j, ctx: Context) -> float:
    """Squared scaled second difference of f over the four corners at (i, j)."""
    _check_pair(bb, i, j)
    i, j = sorted((i, j))
    fa, fb, fc, fd = bb.eval_batch(_corner_contexts(ctx, i, j))
    step = bb.space.step
    return _omega(fa, fb, fc, fd, step[i] * step[j])


def random_contexts(p, n, seed) -> List[Context]:
    rng = np.random.default_rng(seed)
    return [Context.from_bits(row) for row in rng.integers(0, 2, size=(n, p))]


def _contexts_for(cfg: DetectorConfig, p) -> List[Tuple[str, Context]]:
    if cfg.contexts is ContextRegime.ARCHDETECT:
        return [("target", Context.full(p)), ("baseline", Context.empty(p))]
    if cfg.contexts is ContextRegime.TARGET_ONLY:
        return [("target", Context.full(p))]
    if cfg.contexts is ContextRegime.BASELINE_ONLY:
        return [("baseline", Context.empty(p))]
    return [(f"random[{n}]", ctx) for n, ctx in enumerate(random_contexts(p, cfg.n_random, cfg.seed))]


def _active_pairs(bb: BlackBox):
    inert = set(bb.space.inert)
    if inert:
        logging.warning(f"Skipping pairs with inert features {sorted(inert)}; their strength is 0")
    return [(i, j) for i, j in itertools.combinations(range(bb.p), 2)
            if i not in inert and j not in inert]


def _omegas(bb: BlackBox, pairs, ctx: Context, workers=1) -> List[float]:
    """omega for every pair under one context; work split across workers."""
    def chunk_omegas(chunk):
        corners = [c for i, j in chunk for c in _corner_contexts(ctx, i, j)]
        values = bb.eval_batch(corners)
        step = bb.space.step
        return [
            _omega(*values[4 * n:4 * n + 4], step[i] * step[j])
            for n, (i, j) in enumerate(chunk)
        ]

    if workers <= 1 or len(pairs) < 2:
        return chunk_omegas(pairs)
    size = -(-len(pairs) // workers)
    chunks = [pairs[start:start + size] for start in range(0, len(pairs), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(chunk_omegas, chunks))
    return [value for part in results for value in part]


def _full_table(bb: BlackBox, cap) -> np.ndarray:
    """f at every mask of the space, indexed by mask."""
    if bb.p > cap:
        raise CapacityError(f"Full expectation enumerates 2^{bb.p} contexts; cap is p <= {cap}")
    p = bb.p
    return np.array(bb.eval_batch([Context(p, m) for m in range(1 << p)]))


def _expected_omega(bb: BlackBox, table: np.ndarray, i, j) -> float:
    bi, bj = 1 << i, 1 << j
    masks = np.arange(table.size)
    base = masks[(masks & (bi | bj)) == 0]
    step = bb.space.step
    omegas = _omega(table[base | bi | bj], table[base | bj], table[base | bi], table[base],
                    step[i] * step[j])
    return float(np.mean(omegas))


def detect_full_expectation(bb: BlackBox, i, j, cap=DEFAULT_FULL_EXPECTATION_CAP) -> float:
    """Exact mean of omega over every context of the other p - 2 features."""
    _check_pair(bb, i, j)
    i, j = sorted((i, j))
    return _expected_omega(bb, _full_table(bb, cap), i, j)


def _ranked(p, strengths, cfg, labels):
    ordered = sorted(strengths, key=lambda ps: (-ps.strength, ps.i, ps.j))
    return InteractionRanking(p=p, pairs=tuple(ordered), config=cfg, context_labels=tuple(labels))


def detect_pairs(bb: BlackBox, cfg: Optional[DetectorConfig] = None) -> InteractionRanking:
    """Strength of every pair under the configured contexts, strongest first."""
    cfg = cfg or DetectorConfig()
    p = bb.p
    if p < 2:
        raise ParameterError("Pairwise detection needs at least two features")
    pairs = _active_pairs(bb)
    active = set(pairs)
    inert_pairs = [pair for pair in itertools.combinations(range(p), 2) if pair not in active]

    if cfg.contexts is ContextRegime.FULL_EXPECTATION:
        table = _full_table(bb, cfg.full_expectation_cap)
        label = "full_expectation"
        strengths = []
        for i, j in pairs:
            value = _expected_omega(bb, table, i, j)
            strengths.append(PairStrength(i, j, value, ((label, value),)))
        labels = [label]
    else:
        contexts = _contexts_for(cfg, p)
        labels = [name for name, _ in contexts]
        columns = [_omegas(bb, pairs, ctx, cfg.workers) for _, ctx in contexts]
        strengths = []
        for n, (i, j) in enumerate(pairs):
            per_context = tuple((name, column[n]) for name, column in zip(labels, columns))
            strength = sum(value for _, value in per_context) / len(per_context)
            strengths.append(PairStrength(i, j, strength, per_context))
    strengths.extend(PairStrength(i, j, 0.0, tuple((name, 0.0) for name in labels))
                     for i, j in inert_pairs)
    logging.info(f"Detected {len(pairs)} pairs under {cfg.label} with {bb.call_count} evaluations")
    return _ranked(p, strengths, cfg, labels)


def redundancy_curve(bb: BlackBox, sequence, N, k, seed=0) -> pd.Series:
    """Overlap of top-k pairs between n and n-1 contexts, for n = 2..N.

    The 'fixed' sequence starts with the target and baseline contexts and
    continues with random ones; 'random' uses random contexts throughout.
    """
    if N < 2 or k < 1:
        raise ParameterError("Redundancy needs N >= 2 and k >= 1")
    p = bb.p
    if sequence == "fixed":
        contexts = [Context.full(p), Context.empty(p)] + random_contexts(p, N - 2, seed)
    elif sequence == "random":
        contexts = random_contexts(p, N, seed)
    else:
        raise ParameterError(f"Unknown context sequence {sequence!r}")

    pairs = list(itertools.combinations(range(p), 2))
    active = _active_pairs(bb)
    rows = np.zeros((N, len(pairs)))
    index_of = {pair: n for n, pair in enumerate(pairs)}
    positions = [index_of[pair] for pair in active]
    for n, ctx in enumerate(contexts):
        rows[n, positions] = _omegas(bb, active, ctx)

    totals = np.cumsum(rows, axis=0)
    previous = top_k_pairs(pairs, list(totals[0]), k)
    ratios = []
    for n in range(2, N + 1):
        current = top_k_pairs(pairs, list(totals[n - 1] / n), k)
        ratios.append(overlap_ratio(current, previous, k))
        previous = current
    return pd.Series(ratios, index=pd.RangeIndex(2, N + 1, name="n"), name="overlap_ratio")


def interaction_matrix(ranking: InteractionRanking) -> pd.DataFrame:
    """Symmetric p x p strength matrix with a zero diagonal."""
    matrix = np.zeros((ranking.p, ranking.p))
    for ps in ranking.pairs:
        matrix[ps.i, ps.j] = matrix[ps.j, ps.i] = ps.strength
    return pd.DataFrame(matrix)
