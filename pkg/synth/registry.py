"""Resolve named function sources: F1..F4, sum, gam:SEED:P:K."""
from dataclasses import dataclass
from typing import Callable

import numpy as np

from errors import UsageError
from synth.functions import DEFAULT_P, make_function
from synth.gam import random_gam


@dataclass(frozen=True, eq=False)
class NamedFunction:
    name: str
    fn: Callable
    target: np.ndarray
    baseline: np.ndarray
    source: object  # SyntheticFunction or GeneralizedAdditiveInstance


def parse_gam_name(name):
    parts = name.split(":")
    if len(parts) != 4:
        raise UsageError(f"Expected gam:SEED:P:K, got {name!r}")
    try:
        seed, p, k = (int(part) for part in parts[1:])
    except ValueError:
        raise UsageError(f"Expected integers in {name!r}")
    return seed, p, k


def resolve_function(name, target=None, baseline=None, p=None) -> NamedFunction:
    if name.startswith("gam:"):
        seed, gam_p, k = parse_gam_name(name)
        instance = random_gam(seed, gam_p, k)
        if target is not None or baseline is not None:
            raise UsageError("gam instances carry their own target and baseline")
        return NamedFunction(name, instance, instance.target, instance.baseline, instance)
    if p is None:
        p = DEFAULT_P if target is None else len(target)
    synthetic = make_function(name, p=p, target=target, baseline=baseline)
    return NamedFunction(name, synthetic, synthetic.target, synthetic.baseline, synthetic)
