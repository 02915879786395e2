"""Attribution over disjoint feature sets.

ArchAttribute scores a set by switching only that set to its target values
against the baseline; Difference switches only that set back to baseline
against the target.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

from analysis.detect import InteractionRanking
from core.blackbox import BlackBox
from core.space import Context, FeatureSet, merge_overlapping
from errors import DimensionError, ParameterError


class AttributionMethod(str, Enum):
    ARCHATTRIBUTE = "archattribute"
    DIFFERENCE = "difference"


@dataclass(frozen=True)
class Explanation:
    sets: Tuple[FeatureSet, ...]
    phi: Tuple[float, ...]
    method: AttributionMethod
    f_target: float
    f_baseline: float
    completeness_residual: float
    pairs_requested: int = 0
    pairs_used: int = 0

    def ranked(self) -> List[Tuple[FeatureSet, float]]:
        return sorted(zip(self.sets, self.phi), key=lambda item: (-item[1], item[0].indices))

    def retain(self, fraction, which="top") -> List[Tuple[FeatureSet, float]]:
        """The most positive ('top') or most negative ('bottom') fraction of sets."""
        if not 0.0 <= fraction <= 1.0:
            raise ParameterError("fraction must lie in [0, 1]")
        ranked = self.ranked()
        count = math.ceil(fraction * len(ranked))
        if which == "top":
            return ranked[:count]
        if which == "bottom":
            return ranked[len(ranked) - count:][::-1]
        raise ParameterError(f"which must be 'top' or 'bottom', got {which!r}")

    def to_dict(self):
        return {
            "sets": [list(s.indices) for s in self.sets],
            "phi": list(self.phi),
            "method": self.method.value,
            "residual": self.completeness_residual,
            "f_target": self.f_target,
            "f_baseline": self.f_baseline,
            "pairs_requested": self.pairs_requested,
            "pairs_used": self.pairs_used,
        }


def arch_attribute(bb: BlackBox, fset: FeatureSet) -> float:
    """f(x*_I + x'_rest) - f(x')"""
    fset.validate(bb.p)
    selected, baseline = bb.eval_batch([Context(bb.p, fset.bitmask), Context.empty(bb.p)])
    return selected - baseline


def difference_attribute(bb: BlackBox, fset: FeatureSet) -> float:
    """f(x*) - f(x'_I + x*_rest)"""
    fset.validate(bb.p)
    full = Context.full(bb.p)
    target, removed = bb.eval_batch([full, Context(bb.p, full.mask & ~fset.bitmask)])
    return target - removed


def four_corner_attribution(bb: BlackBox, first: FeatureSet, second: FeatureSet) -> float:
    """Second difference of f over two sets with everything else at baseline.

    Only used as a comparator: unlike ArchAttribute it does not recover the
    value of an additive term.
    """
    first.validate(bb.p)
    second.validate(bb.p)
    if set(first) & set(second):
        raise ParameterError("Four-corner attribution needs disjoint sets")
    p = bb.p
    both, only_first, only_second, none = bb.eval_batch([
        Context(p, first.bitmask | second.bitmask),
        Context(p, first.bitmask),
        Context(p, second.bitmask),
        Context.empty(p),
    ])
    return both - only_first - only_second + none


_ATTRIBUTORS = {
    AttributionMethod.ARCHATTRIBUTE: arch_attribute,
    AttributionMethod.DIFFERENCE: difference_attribute,
}


def attribute(bb: BlackBox, fset: FeatureSet, method=AttributionMethod.ARCHATTRIBUTE) -> float:
    return _ATTRIBUTORS[AttributionMethod(method)](bb, fset)


def build_sets(p, pairs, inert=()) -> List[FeatureSet]:
    """Merged pairs plus a singleton for every other non-inert feature."""
    merged = merge_overlapping(FeatureSet.of(i, j) for i, j in pairs)
    covered = {i for fset in merged for i in fset}
    singles = [FeatureSet.of(k) for k in range(p) if k not in covered and k not in inert]
    return sorted(merged + singles, key=lambda s: s.indices[0])


def explain(bb: BlackBox, ranking: InteractionRanking, top_k: int,
            method=AttributionMethod.ARCHATTRIBUTE, workers=1) -> Explanation:
    """Islands from the top pairs of a ranking, each with its attribution."""
    if ranking.p != bb.p:
        raise DimensionError(f"Ranking covers {ranking.p} features, black box has {bb.p}")
    if top_k < 0:
        raise ParameterError("top_k must be >= 0")
    method = AttributionMethod(method)
    chosen = ranking.select(top_k=top_k, threshold=0.0) if top_k else []
    if len(chosen) < top_k:
        logging.warning(f"Requested {top_k} pairs but only {len(chosen)} have nonzero strength")
    sets = build_sets(bb.p, [(ps.i, ps.j) for ps in chosen], inert=set(bb.space.inert))

    if workers > 1 and len(sets) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            phi = list(pool.map(lambda fset: attribute(bb, fset, method), sets))
    else:
        phi = [attribute(bb, fset, method) for fset in sets]

    f_target, f_baseline = bb.eval_batch([Context.full(bb.p), Context.empty(bb.p)])
    residual = f_target - f_baseline - math.fsum(phi)
    logging.info(f"Explained {len(sets)} sets with {method.value}; completeness residual {residual:.3e}")
    return Explanation(
        sets=tuple(sets),
        phi=tuple(phi),
        method=method,
        f_target=f_target,
        f_baseline=f_baseline,
        completeness_residual=residual,
        pairs_requested=top_k,
        pairs_used=len(chosen),
    )
