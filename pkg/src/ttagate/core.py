"""Label spaces, class distributions and predictions.

Every other module speaks in these types. They are immutable values, so they
can be handed to worker threads without copying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateScores, EmptyInput, InvalidDistribution

SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LabelSpace:
    task_name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(str(c) for c in self.classes))
        if len(self.classes) < 2:
            raise ValueError(f"label space {self.task_name!r} needs at least 2 classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError(f"duplicate class identifiers in {self.classes}")

    @property
    def K(self) -> int:
        return len(self.classes)

    def index(self, name: str) -> int:
        return self.classes.index(name)


@dataclass(frozen=True)
class ClassDistribution:
    """A probability vector over the classes of one label space."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) < 2:
            raise InvalidDistribution(f"need at least 2 entries, got {len(probs)}")
        for p in probs:
            if math.isnan(p) or p < 0.0 or p > 1.0:
                raise InvalidDistribution(f"entry {p!r} outside [0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidDistribution(f"entries sum to {total!r}, not 1")

    @property
    def K(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=np.float64)

    def __len__(self):
        return len(self.probs)


@dataclass(frozen=True)
class Prediction:
    class_index: int
    distribution: ClassDistribution | None = None
    raw_token: str | None = None

    def __post_init__(self):
        if self.distribution is not None and self.class_index != argmax_class(self.distribution):
            raise InvalidDistribution(
                f"class_index {self.class_index} is not the argmax of {self.distribution.probs}"
            )

    @classmethod
    def from_distribution(cls, dist: ClassDistribution, raw_token: str | None = None) -> Prediction:
        return cls(argmax_class(dist), dist, raw_token)


@dataclass(frozen=True)
class TestInput:
    id: str
    text: str
    gold_label: int | None = None

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyInput(f"input {self.id!r} has empty text")


def _as_distribution(d) -> ClassDistribution:
    if isinstance(d, ClassDistribution):
        return d
    return ClassDistribution(tuple(d))


def argmax_class(d: ClassDistribution | Sequence[float]) -> int:
    """Index of the largest probability; ties go to the lowest index."""
    d = _as_distribution(d)
    # np.argmax returns the first occurrence of the maximum
    return int(np.argmax(d.as_array()))


def normalize(raw: Sequence[float]) -> ClassDistribution:
    """Rescale non-negative scores so they sum to one.

    Raises:
        DegenerateScores: if any score is negative or NaN, or all are zero.
    """
    values = np.asarray(raw, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DegenerateScores(f"expected a flat score vector, got shape {values.shape}")
    if np.any(np.isnan(values)) or np.any(values < 0) or np.any(np.isinf(values)):
        raise DegenerateScores(f"scores must be finite and non-negative: {list(values)}")
    total = values.sum()
    if total <= 0:
        raise DegenerateScores("all scores are zero")
    probs = values / total
    # guard against a ulp of drift pushing an entry above 1
    return ClassDistribution(tuple(float(min(p, 1.0)) for p in probs))
