"""Ranking metrics for pairwise interaction detection."""
from typing import Iterable, Sequence, Set, Tuple

import numpy as np
from sklearn.metrics import roc_auc_score

from errors import ParameterError


def ranking_auc(ranking, positive_pairs: Set[Tuple[int, int]]) -> float:
    """ROC area of pair strengths against ground-truth pairs; ties count one half."""
    positive_pairs = {tuple(sorted(pair)) for pair in positive_pairs}
    labels = np.array([(ps.i, ps.j) in positive_pairs for ps in ranking.pairs], dtype=int)
    scores = np.array([ps.strength for ps in ranking.pairs], dtype=float)
    if labels.min() == labels.max():
        raise ParameterError("AUC needs both positive and negative pairs")
    return float(roc_auc_score(labels, scores))


def overlap_ratio(first: Iterable, second: Iterable, k: int) -> float:
    if k < 1:
        raise ParameterError("k must be positive")
    return len(set(first) & set(second)) / k


def top_k_pairs(pairs: Sequence[Tuple[int, int]], strengths: Sequence[float], k: int):
    """Top k pairs by strength, ties broken by lexicographic pair order."""
    order = sorted(range(len(pairs)), key=lambda n: (-strengths[n], pairs[n]))
    return [pairs[n] for n in order[:k]]
