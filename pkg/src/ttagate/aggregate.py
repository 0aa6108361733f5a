"""Turning per-variant predictions into one final prediction."""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ClassDistribution, Prediction, _as_distribution, argmax_class
from .errors import AllUnmappable, MixedLabelSpaces, Unmappable

_STRIP_CHARS = string.whitespace + string.punctuation


def mean_aggregate(dists: Sequence[ClassDistribution]) -> Prediction:
    """Average the distributions element-wise and take the argmax."""
    if not dists:
        raise ValueError("mean_aggregate needs at least one distribution")
    dists = [_as_distribution(d) for d in dists]
    k = dists[0].K
    if any(d.K != k for d in dists):
        raise MixedLabelSpaces(f"distributions disagree on class count: {[d.K for d in dists]}")
    mean = np.mean(np.stack([d.as_array() for d in dists]), axis=0)
    # identical inputs must come back unchanged, np.mean can drift by one ulp
    if all(d.probs == dists[0].probs for d in dists[1:]):
        mean_dist = dists[0]
    else:
        mean_dist = ClassDistribution(tuple(float(min(p, 1.0)) for p in mean))
    return Prediction(argmax_class(mean_dist), mean_dist)


def normalize_token(raw: str) -> str:
    return raw.strip(_STRIP_CHARS).lower()


@dataclass(frozen=True)
class VerbalizerTable:
    task_name: str
    tokens: Mapping[str, int]

    def __post_init__(self):
        normalized: dict[str, int] = {}
        for tok, cls in self.tokens.items():
            key = normalize_token(str(tok))
            if not key:
                raise ValueError(f"verbalizer token {tok!r} is empty after normalization")
            if key in normalized and normalized[key] != int(cls):
                raise ValueError(f"verbalizer token {tok!r} maps to two classes")
            normalized[key] = int(cls)
        object.__setattr__(self, "tokens", normalized)

    def lookup(self, raw: str) -> int:
        return verbalize(raw, self)


def verbalize(raw: str, table: VerbalizerTable) -> int:
    """Map a generated completion to a class index.

    The whole normalized string is tried first, then its first
    whitespace-separated token.

    Raises:
        Unmappable: if neither lookup hits the table.
    """
    norm = normalize_token(raw)
    if norm in table.tokens:
        return table.tokens[norm]
    parts = norm.split()
    if parts:
        first = normalize_token(parts[0])
        if first in table.tokens:
            return table.tokens[first]
    raise Unmappable(raw)


def vote_aggregate(votes: Sequence[int | Unmappable | None]) -> Prediction:
    """Majority vote over class indices.

    ``votes[0]`` must be the vote for the original input. Unmappable entries
    (an ``Unmappable`` instance or ``None``) are dropped. Ties go to the
    original input's class when it is among the leaders, otherwise to the
    lowest class index.
    """
    mapped = [v for v in votes if v is not None and not isinstance(v, Unmappable)]
    if not mapped:
        raise AllUnmappable(f"none of the {len(votes)} votes could be mapped to a class")
    counts = Counter(int(v) for v in mapped)
    top = max(counts.values())
    leaders = [c for c, n in counts.items() if n == top]
    first = votes[0]
    if first is not None and not isinstance(first, Unmappable) and int(first) in leaders:
        return Prediction(int(first))
    return Prediction(min(leaders))
