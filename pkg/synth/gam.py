"""Seeded generalized-additive instances f(x) = sum_i g_i(x_{I_i}) + b.

Each g_i is a multilinear polynomial over its own features plus an offset
that makes g_i vanish at the baseline slice, so the baseline is a root of
every subfunction and the expected attribution of I_i is g_i(target).
"""
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from core.space import FeatureSet, HConvention, PerturbationSpace
from errors import ParameterError


@dataclass(frozen=True)
class Subfunction:
    indices: Tuple[int, ...]
    # (coefficient, local positions into indices)
    monomials: Tuple[Tuple[float, Tuple[int, ...]], ...]
    offset: float = 0.0

    def polynomial(self, v) -> float:
        x = [v[i] for i in self.indices]
        total = 0.0
        for coef, positions in self.monomials:
            total += coef * math.prod(x[k] for k in positions)
        return total

    def value(self, v) -> float:
        return self.offset + self.polynomial(v)

    def rooted_at(self, baseline):
        return replace(self, offset=-self.polynomial(baseline))


@dataclass(frozen=True, eq=False)
class GeneralizedAdditiveInstance:
    seed: Optional[int]
    sets: Tuple[FeatureSet, ...]
    subfunctions: Tuple[Subfunction, ...]
    bias: float
    target: np.ndarray
    baseline: np.ndarray  # root of every subfunction

    @property
    def p(self):
        return int(self.target.size)

    def __call__(self, v):
        return self.evaluate(v)

    def evaluate(self, v) -> float:
        total = 0.0
        for g in self.subfunctions:
            total += g.value(v)
        return total + self.bias

    def space(self, h=HConvention.UNIT, target=None) -> PerturbationSpace:
        return PerturbationSpace.create(self.target if target is None else target, self.baseline, h)

    def expected_attributions(self):
        """g_i(target) for every set; equals phi(I_i) because g_i(baseline) = 0."""
        return [g.value(self.target) for g in self.subfunctions]

    def without(self, k):
        """Copy of the instance that no longer depends on set k."""
        dropped = Subfunction(self.subfunctions[k].indices, ())
        subfunctions = self.subfunctions[:k] + (dropped,) + self.subfunctions[k + 1:]
        return replace(self, subfunctions=subfunctions)

    def describe(self):
        return {
            "seed": self.seed,
            "sets": [list(s.indices) for s in self.sets],
            "bias": self.bias,
        }


class FlatPolynomial:
    """A generalized-additive instance rewritten as one global monomial table."""

    def __init__(self, instance: GeneralizedAdditiveInstance):
        self.constant = instance.bias + sum(g.offset for g in instance.subfunctions)
        self.monomials = [
            (coef, tuple(g.indices[k] for k in positions))
            for g in reversed(instance.subfunctions)
            for coef, positions in g.monomials
        ]

    def __call__(self, v):
        total = self.constant
        for coef, indices in self.monomials:
            total += coef * math.prod(v[i] for i in indices)
        return total


def flattened(instance: GeneralizedAdditiveInstance) -> FlatPolynomial:
    return FlatPolynomial(instance)


def _random_monomials(rng, m):
    monomials = [(float(rng.uniform(-1.0, 1.0)), (k,)) for k in range(m)]
    for k in range(m - 1):
        # chain of pairwise terms keeps the set connected under pairwise detection
        sign = 1.0 if rng.random() < 0.5 else -1.0
        monomials.append((sign * float(rng.uniform(0.5, 1.5)), (k, k + 1)))
    extra = int(rng.integers(0, m + 1)) if m >= 2 else 0
    for _ in range(extra):
        order = int(rng.integers(2, min(3, m) + 1))
        positions = tuple(sorted(int(k) for k in rng.choice(m, size=order, replace=False)))
        monomials.append((float(rng.uniform(-1.0, 1.0)), positions))
    return tuple(monomials)


def _random_vectors(rng, p):
    target = rng.uniform(-2.0, 2.0, size=p)
    direction = np.where(rng.random(p) < 0.5, -1.0, 1.0)
    baseline = target + direction * rng.uniform(0.5, 2.0, size=p)
    return target, baseline


def _random_partition(rng, p, num_sets):
    perm = rng.permutation(p)
    sizes = rng.multinomial(p - 2 * num_sets, np.ones(num_sets) / num_sets) + 2
    sets, start = [], 0
    for size in sizes:
        sets.append(FeatureSet(tuple(int(i) for i in perm[start:start + size])))
        start += size
    return sorted(sets, key=lambda s: s.indices[0])


def random_gam(seed, p, num_sets, sets: Optional[Sequence[FeatureSet]] = None,
               target=None, baseline=None, bias=None) -> GeneralizedAdditiveInstance:
    """Seeded instance over a random partition of range(p) into num_sets sets of size >= 2.

    `sets`, `target`, `baseline` and `bias` override the random draws, which
    lets two instances share the same S and vectors.
    """
    if num_sets < 1 or 2 * num_sets > p:
        raise ParameterError(f"Cannot split {p} features into {num_sets} sets of at least two")
    rng = np.random.default_rng(seed)
    if sets is None:
        sets = _random_partition(rng, p, num_sets)
    else:
        sets = list(sets)
        seen = set()
        for fset in sets:
            fset.validate(p)
            if seen.intersection(fset.indices):
                raise ParameterError("Sets of a generalized-additive instance must be disjoint")
            seen.update(fset.indices)
    drawn_target, drawn_baseline = _random_vectors(rng, p)
    target = drawn_target if target is None else np.array(target, dtype=float)
    baseline = drawn_baseline if baseline is None else np.array(baseline, dtype=float)
    subfunctions = tuple(
        Subfunction(fset.indices, _random_monomials(rng, len(fset))).rooted_at(baseline)
        for fset in sets
    )
    drawn_bias = float(rng.uniform(-1.0, 1.0))
    instance = GeneralizedAdditiveInstance(
        seed=seed,
        sets=tuple(sets),
        subfunctions=subfunctions,
        bias=drawn_bias if bias is None else float(bias),
        target=target,
        baseline=baseline,
    )
    for g in instance.subfunctions:
        if g.value(baseline) != 0.0:
            raise ParameterError(f"Subfunction over {g.indices} does not vanish at the baseline")
    return instance


def symmetric_gam(seed, p) -> GeneralizedAdditiveInstance:
    """Instance whose first two sets carry the same subfunction on mirrored values."""
    if p < 4:
        raise ParameterError("A symmetric instance needs at least four features")
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, p // 2 + 1))
    first, second = tuple(range(m)), tuple(range(m, 2 * m))
    target, baseline = _random_vectors(rng, p)
    target[m:2 * m] = target[:m]
    baseline[m:2 * m] = baseline[:m]

    monomials = _random_monomials(rng, m)
    g_first = Subfunction(first, monomials).rooted_at(baseline)
    g_second = Subfunction(second, monomials).rooted_at(baseline)
    sets = [FeatureSet(first), FeatureSet(second)]
    subfunctions = [g_first, g_second]
    rest = tuple(range(2 * m, p))
    if rest:
        sets.append(FeatureSet(rest))
        subfunctions.append(Subfunction(rest, _random_monomials(rng, len(rest))).rooted_at(baseline))
    return GeneralizedAdditiveInstance(
        seed=seed,
        sets=tuple(sets),
        subfunctions=tuple(subfunctions),
        bias=float(rng.uniform(-1.0, 1.0)),
        target=target,
        baseline=baseline,
    )
