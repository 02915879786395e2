"""Perturbation space over a target and a baseline vector.

Every point of the space takes, per feature, either the target value or the
baseline value. A `Context` is the bit mask that picks between the two.
"""
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from errors import DimensionError, ParameterError


class HConvention(str, Enum):
    UNIT = "unit"  # h_i = 1 for every feature
    EQ4 = "eq4"    # h_i = |target_i - baseline_i|


@dataclass(frozen=True, eq=False)
class PerturbationSpace:
    target: np.ndarray
    baseline: np.ndarray
    step: np.ndarray

    @classmethod
    def create(cls, target, baseline, h=HConvention.UNIT):
        target = np.array(target, dtype=float).ravel()
        baseline = np.array(baseline, dtype=float).ravel()
        if target.size == 0:
            raise DimensionError("Perturbation space needs at least one feature")
        if target.shape != baseline.shape:
            raise DimensionError(
                f"Target has {target.size} features but baseline has {baseline.size}")
        if not (np.all(np.isfinite(target)) and np.all(np.isfinite(baseline))):
            raise DimensionError("Target and baseline must be finite")

        h = HConvention(h)
        if h is HConvention.EQ4:
            step = np.abs(target - baseline)
        else:
            step = np.ones_like(target)
        for arr in (target, baseline, step):
            arr.setflags(write=False)
        return cls(target=target, baseline=baseline, step=step)

    @property
    def p(self) -> int:
        return int(self.target.size)

    @property
    def inert(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.target == self.baseline))

    def is_inert(self, i) -> bool:
        return bool(self.target[i] == self.baseline[i])

    def describe(self):
        return {
            "p": self.p,
            "target": self.target.tolist(),
            "baseline": self.baseline.tolist(),
            "step": self.step.tolist(),
            "inert": list(self.inert),
        }


@dataclass(frozen=True)
class Context:
    """Bit i set means feature i takes its target value."""
    p: int
    mask: int

    def __post_init__(self):
        if self.p < 1:
            raise DimensionError("Context needs at least one feature")
        if self.mask < 0 or self.mask >> self.p:
            raise DimensionError(f"Mask {self.mask:#x} has bits outside {self.p} features")

    @classmethod
    def full(cls, p):
        return cls(p, (1 << p) - 1)

    @classmethod
    def empty(cls, p):
        return cls(p, 0)

    @classmethod
    def of(cls, p, indices: Iterable[int]):
        mask = 0
        for i in indices:
            if not 0 <= i < p:
                raise DimensionError(f"Feature index {i} out of range for p={p}")
            mask |= 1 << i
        return cls(p, mask)

    @classmethod
    def from_bits(cls, bits: Sequence):
        mask = 0
        for i, bit in enumerate(bits):
            if bit:
                mask |= 1 << i
        return cls(len(bits), mask)

    def bits(self) -> np.ndarray:
        return np.fromiter(((self.mask >> i) & 1 for i in range(self.p)), dtype=bool, count=self.p)

    def selected(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.p) if (self.mask >> i) & 1)

    def __len__(self):
        return self.p


@dataclass(frozen=True)
class FeatureSet:
    indices: Tuple[int, ...]

    def __post_init__(self):
        normalized = tuple(sorted(set(int(i) for i in self.indices)))
        if not normalized:
            raise ParameterError("Feature set must not be empty")
        if normalized[0] < 0:
            raise ParameterError(f"Negative feature index in {normalized}")
        object.__setattr__(self, "indices", normalized)

    @classmethod
    def of(cls, *indices):
        return cls(tuple(indices))

    def validate(self, p):
        if self.indices[-1] >= p:
            raise DimensionError(f"Feature index {self.indices[-1]} out of range for p={p}")
        return self

    @property
    def bitmask(self) -> int:
        mask = 0
        for i in self.indices:
            mask |= 1 << i
        return mask

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return i in self.indices


def realize(space: PerturbationSpace, ctx: Context) -> np.ndarray:
    if ctx.p != space.p:
        raise DimensionError(f"Context has {ctx.p} features, space has {space.p}")
    return np.where(ctx.bits(), space.target, space.baseline)


def realize_batch(space: PerturbationSpace, ctxs: Sequence[Context]) -> np.ndarray:
    if not ctxs:
        return np.empty((0, space.p))
    for ctx in ctxs:
        if ctx.p != space.p:
            raise DimensionError(f"Context has {ctx.p} features, space has {space.p}")
    bits = np.stack([ctx.bits() for ctx in ctxs])
    return np.where(bits, space.target, space.baseline)


def override(ctx: Context, fset: FeatureSet, to_target: bool) -> Context:
    fset.validate(ctx.p)
    if to_target:
        return Context(ctx.p, ctx.mask | fset.bitmask)
    return Context(ctx.p, ctx.mask & ~fset.bitmask)


class UnionFind:
    """Disjoint sets with union by rank and path compression."""

    def __init__(self):
        self.parent = {}
        self.rank = Counter()

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        # path compression
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        px = self.find(x)
        py = self.find(y)
        if px == py:
            return
        if self.rank[px] == self.rank[py]:
            self.parent[py] = px
            self.rank[px] += 1
        elif self.rank[px] > self.rank[py]:
            self.parent[py] = px
        else:
            self.parent[px] = py

    def groups(self):
        members = {}
        for x in self.parent:
            members.setdefault(self.find(x), []).append(x)
        return list(members.values())


def merge_overlapping(sets: Iterable[FeatureSet]) -> List[FeatureSet]:
    """Union of overlapping sets, ordered by smallest index."""
    uf = UnionFind()
    for fset in sets:
        first = fset.indices[0]
        uf.find(first)
        for i in fset.indices[1:]:
            uf.union(first, i)
    merged = [FeatureSet(tuple(group)) for group in uf.groups()]
    return sorted(merged, key=lambda s: s.indices[0])
