"""Synthetic functions with known interactions.

F1..F4 live on p=40 features with target all ones and baseline all minus
ones. Indices are 0-based here; feature k in the formulas is index k-1.
"""
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Set, Tuple

import numpy as np

from core.space import FeatureSet, HConvention, PerturbationSpace
from errors import UsageError

SYNTHETIC_IDS = ("F1", "F2", "F3", "F4")
DEFAULT_P = 40


@dataclass(frozen=True, eq=False)
class SyntheticFunction:
    id: str
    p: int
    ground_truth_sets: Tuple[FeatureSet, ...]
    definition: Callable[[np.ndarray], float]
    target: np.ndarray
    baseline: np.ndarray

    def __call__(self, v):
        return eval_synthetic(self, v)

    def space(self, h=HConvention.UNIT) -> PerturbationSpace:
        return PerturbationSpace.create(self.target, self.baseline, h)


def wedge(v, z: Mapping[int, float]) -> float:
    """1 if v matches z on every key, -1 otherwise."""
    for i, value in z.items():
        if v[i] != value:
            return -1.0
    return 1.0


def eval_synthetic(fn: SyntheticFunction, v) -> float:
    return float(fn.definition(np.asarray(v, dtype=float)))


def _block(start, stop, p):
    return [i for i in range(start, stop) if i < p]


def _keys(vector, indices):
    return {i: vector[i] for i in indices}


def _sets(p, *blocks):
    return tuple(FeatureSet(tuple(b)) for b in blocks if len(b) >= 2)


def _f1(p, target, baseline):
    first = _block(0, 10, p)
    left, right = _block(10, 20, p), _block(20, 30, p)

    def f(v):
        a = v[first]
        total = float(np.sum(np.outer(a, a)))  # i = j terms included
        total += float(np.sum(np.outer(v[left], v[right])))
        return total + float(np.sum(v))

    cross = [(i, j) for i in left for j in right]
    return f, _sets(p, first, *cross)


def _two_wedges(first_keys, second_keys):
    def f(v):
        return wedge(v, first_keys) + wedge(v, second_keys) + float(np.sum(v))
    return f


def _f2(p, target, baseline):
    a, b = _block(0, 20, p), _block(10, 30, p)
    return _two_wedges(_keys(target, a), _keys(target, b)), _sets(p, a, b)


def _f3(p, target, baseline):
    a, b = _block(0, 20, p), _block(10, 30, p)
    return _two_wedges(_keys(baseline, a), _keys(target, b)), _sets(p, a, b)


def _f4(p, target, baseline):
    head = {**_keys(target, _block(0, 2, p)), **_keys(baseline, _block(2, 3, p))}
    b = _block(10, 30, p)
    return _two_wedges(head, _keys(target, b)), _sets(p, _block(0, 3, p), b)


def _sum(p, target, baseline):
    return (lambda v: float(np.sum(v))), ()


_BUILDERS = {"F1": _f1, "F2": _f2, "F3": _f3, "F4": _f4, "sum": _sum}


def make_function(name, p=DEFAULT_P, target=None, baseline=None) -> SyntheticFunction:
    """Build a named synthetic function; p < 40 truncates every block to range(p)."""
    if name not in _BUILDERS:
        raise UsageError(f"Unknown synthetic function {name!r}; choose from {sorted(_BUILDERS)}")
    target = np.ones(p) if target is None else np.array(target, dtype=float).ravel()
    baseline = -np.ones(p) if baseline is None else np.array(baseline, dtype=float).ravel()
    if target.size != p or baseline.size != p:
        raise UsageError(f"{name} needs target and baseline of length {p}")
    definition, sets = _BUILDERS[name](p, target, baseline)
    return SyntheticFunction(name, p, sets, definition, target, baseline)


def ground_truth_pairs(fn: SyntheticFunction) -> Set[Tuple[int, int]]:
    """Every pair contained in a ground-truth set."""
    pairs = set()
    for fset in fn.ground_truth_sets:
        pairs.update(itertools.combinations(fset.indices, 2))
    return pairs


def relu(x):
    return max(float(x), 0.0)


def relu_terms(v) -> Dict[str, float]:
    return {"x1_x3": relu(v[0] + v[2] + 1.0), "x2": relu(v[1])}


def relu_counterexample(target=(1.0, 2.0, 1.0), baseline=(-1.0, -1.0, -1.0)) -> SyntheticFunction:
    """f(v) = ReLU(v1 + v3 + 1) + ReLU(v2) + 1, additive over {1,3} and {2}.

    The default baseline is a root of both ReLU terms.
    """
    def f(v):
        terms = relu_terms(v)
        return terms["x1_x3"] + terms["x2"] + 1.0

    return SyntheticFunction(
        id="relu",
        p=3,
        ground_truth_sets=(FeatureSet.of(0, 2), FeatureSet.of(1)),
        definition=f,
        target=np.array(target, dtype=float),
        baseline=np.array(baseline, dtype=float),
    )
