"""Entropy-based selective augmentation.

Augmentation is only run for inputs whose baseline prediction entropy reaches
a threshold. The threshold is picked on labelled in-distribution data by
maximizing an F-beta style score that treats accuracy as precision and the
fraction of inputs left un-augmented as recall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import ClassDistribution, _as_distribution
from .errors import EmptyCalibrationSet

DEFAULT_BETA = 1 / 500


def entropy(d: ClassDistribution) -> float:
    """Shannon entropy in nats, with 0 * log 0 taken as 0."""
    p = _as_distribution(d).as_array()
    nz = p[p > 0]
    h = -float(np.sum(nz * np.log(nz)))
    # -0.0 for one-hot inputs
    return h if h > 0 else 0.0


@dataclass(frozen=True)
class EntropyGate:
    threshold_e: float
    enabled: bool = True

    def __post_init__(self):
        if math.isnan(self.threshold_e) or self.threshold_e < 0:
            raise ValueError(f"threshold must be >= 0 or +inf, got {self.threshold_e}")

    @classmethod
    def never(cls) -> EntropyGate:
        return cls(math.inf)

    @classmethod
    def always(cls) -> EntropyGate:
        return cls(0.0)


def gate(h: float, g: EntropyGate) -> bool:
    """True when the input should be augmented (``h >= e``, inclusive).

    A disabled gate always augments.
    """
    if not g.enabled:
        return True
    return h >= g.threshold_e


def fbeta_score(accuracy: float, aug_rate: float, beta: float = DEFAULT_BETA) -> float:
    if not (0.0 <= accuracy <= 1.0 and 0.0 <= aug_rate <= 1.0):
        raise ValueError(f"accuracy and aug_rate must lie in [0, 1]: {accuracy}, {aug_rate}")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    precision = accuracy
    recall = 1.0 - aug_rate
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + b2) * precision * recall / denom


@dataclass(frozen=True)
class CalibrationRecord:
    entropy: float
    baseline_correct: bool
    tta_correct: bool


@dataclass(frozen=True)
class CandidateScore:
    threshold: float
    accuracy: float
    aug_rate: float
    score: float


@dataclass(frozen=True)
class EntropyGateCalibration:
    beta: float
    candidates: tuple[CandidateScore, ...]
    chosen: float
    n_records: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def thresholds(self) -> list[float]:
        return [c.threshold for c in self.candidates]

    @property
    def chosen_score(self) -> CandidateScore:
        for c in self.candidates:
            if c.threshold == self.chosen:
                return c
        raise KeyError(self.chosen)

    def to_gate(self) -> EntropyGate:
        return EntropyGate(self.chosen)

    def to_dict(self) -> dict:
        def enc(x: float):
            return "inf" if math.isinf(x) else x

        return {
            "beta": self.beta,
            "chosen": enc(self.chosen),
            "n_records": self.n_records,
            "candidates": [
                {"threshold": enc(c.threshold), "accuracy": c.accuracy,
                 "aug_rate": c.aug_rate, "score": c.score}
                for c in self.candidates
            ],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> EntropyGateCalibration:
        def dec(x) -> float:
            return math.inf if x == "inf" else float(x)

        cands = tuple(
            CandidateScore(dec(c["threshold"]), float(c["accuracy"]), float(c["aug_rate"]), float(c["score"]))
            for c in doc["candidates"]
        )
        return cls(float(doc["beta"]), cands, dec(doc["chosen"]), int(doc.get("n_records", 0)),
                   dict(doc.get("meta", {})))


def _coerce(rec) -> CalibrationRecord:
    if isinstance(rec, CalibrationRecord):
        return rec
    if isinstance(rec, Mapping):
        return CalibrationRecord(float(rec["entropy"]), bool(rec["baseline_correct"]), bool(rec["tta_correct"]))
    return CalibrationRecord(*rec)


def calibrate_threshold(id_records: Iterable, beta: float = DEFAULT_BETA) -> EntropyGateCalibration:
    """Pick the entropy threshold that maximizes the F-beta score on ID data.

    Every record needs the baseline entropy plus whether the prediction was
    correct without and with augmentation. The score only changes at observed
    entropies, so scanning those (plus 0 and +inf) is an exact search. Ties go
    to the larger threshold, i.e. the lower augmentation rate.
    """
    records = [_coerce(r) for r in id_records]
    if not records:
        raise EmptyCalibrationSet("calibration needs at least one ID record")

    h = np.array([r.entropy for r in records], dtype=np.float64)
    base = np.array([r.baseline_correct for r in records], dtype=bool)
    tta = np.array([r.tta_correct for r in records], dtype=bool)

    thresholds = sorted({0.0, math.inf, *(float(x) for x in np.unique(h))})
    scored = []
    for e in thresholds:
        augmented = h >= e
        accuracy = float(np.mean(np.where(augmented, tta, base)))
        aug_rate = float(np.mean(augmented))
        scored.append(CandidateScore(e, accuracy, aug_rate, fbeta_score(accuracy, aug_rate, beta)))

    best = scored[0]
    for c in scored[1:]:
        if c.score >= best.score:
            best = c
    return EntropyGateCalibration(beta, tuple(scored), best.threshold, len(records))
