"""Seeded, class-balanced exemplar sampling for rewriting and few-shot prompts."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LabelSpace, TestInput
from .errors import InsufficientClassData

log = logging.getLogger(__name__)

FEW_SHOT_SEED = 42
DEFAULT_K = 16


@dataclass(frozen=True)
class Exemplar:
    text: str
    label: int


@dataclass(frozen=True)
class ExemplarSet:
    items: tuple[Exemplar, ...]
    seed: int
    source_dataset: str = ""

    @property
    def texts(self) -> list[str]:
        return [e.text for e in self.items]

    def class_counts(self, K: int) -> list[int]:
        counts = [0] * K
        for e in self.items:
            counts[e.label] += 1
        return counts

    def icr_block(self) -> str:
        """Unlabelled exemplar texts, one per line."""
        return "\n".join(self.texts)

    def few_shot_block(self) -> str:
        """Labelled exemplars in the ``"text" - Label=N`` format, blank-line separated."""
        return "\n\n".join(f'"{e.text}" - Label={e.label}' for e in self.items)


def sample_exemplars(
    dataset: Sequence[TestInput],
    k: int,
    seed: int,
    label_space: LabelSpace,
    source_dataset: str = "",
) -> ExemplarSet:
    """Draw ``k`` labelled examples with per-class counts as equal as possible.

    Each class gets ``k // K`` items; the ``k % K`` leftover slots go to
    classes picked by the seeded RNG. Items are drawn without replacement
    within each class and the union is shuffled with the same RNG.
    """
    K = label_space.K
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k < K:
        log.warning("sampling %d exemplars for %d classes; some classes get none", k, K)

    by_class: list[list[int]] = [[] for _ in range(K)]
    for i, item in enumerate(dataset):
        if item.gold_label is None:
            raise ValueError(f"exemplar source item {item.id!r} has no label")
        by_class[item.gold_label].append(i)

    base = k // K
    for c in range(K):
        if len(by_class[c]) < base:
            raise InsufficientClassData(
                f"class {label_space.classes[c]!r} has {len(by_class[c])} examples, needs {base}"
            )
    # leftover slots may only land on classes that can cover one more item
    spare = [c for c in range(K) if len(by_class[c]) > base]
    if len(spare) < k % K:
        raise InsufficientClassData(f"only {len(spare)} classes can take one of {k % K} leftover slots")

    rng = np.random.default_rng(seed)
    quota = [base] * K
    for c in rng.choice(spare, size=k % K, replace=False) if k % K else []:
        quota[int(c)] += 1

    picked: list[int] = []
    for c in range(K):
        if quota[c]:
            picked.extend(int(i) for i in rng.choice(by_class[c], size=quota[c], replace=False))
    order = rng.permutation(len(picked))
    items = tuple(
        Exemplar(dataset[picked[j]].text, int(dataset[picked[j]].gold_label)) for j in order
    )
    return ExemplarSet(items, seed, source_dataset)
