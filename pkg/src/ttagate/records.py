"""Per-input evaluation traces and per-run summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import ClassDistribution, Prediction


def prediction_to_dict(p: Prediction | None) -> dict | None:
    if p is None:
        return None
    return {
        "class_index": p.class_index,
        "probs": list(p.distribution.probs) if p.distribution is not None else None,
        "raw_token": p.raw_token,
    }


def prediction_from_dict(d: dict | None) -> Prediction | None:
    if d is None:
        return None
    dist = ClassDistribution(tuple(d["probs"])) if d.get("probs") is not None else None
    return Prediction(int(d["class_index"]), dist, d.get("raw_token"))


@dataclass(frozen=True)
class EvalRecord:
    """Trace of one input through the gateway.

    ``None`` predictions stand for generative outputs that no verbalizer
    entry matched; they never count as correct.
    """

    input_id: str
    baseline_prediction: Prediction | None
    baseline_entropy: float | None
    gated: bool
    final_prediction: Prediction | None
    gold: int | None
    variant_predictions: tuple[Prediction | None, ...] = ()
    augmentation_set_ref: str | None = None
    fallbacks: tuple[bool, ...] = ()
    prompt_hash: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant_predictions", tuple(self.variant_predictions))
        object.__setattr__(self, "fallbacks", tuple(self.fallbacks))
        if not self.gated and self.final_prediction != self.baseline_prediction:
            raise ValueError(f"{self.input_id}: ungated record must keep the baseline prediction")

    @property
    def correct(self) -> bool:
        return self.final_prediction is not None and self.final_prediction.class_index == self.gold

    @property
    def baseline_correct(self) -> bool:
        return self.baseline_prediction is not None and self.baseline_prediction.class_index == self.gold

    def to_dict(self) -> dict:
        return {
            "input_id": self.input_id,
            "gold": self.gold,
            "baseline_prediction": prediction_to_dict(self.baseline_prediction),
            "baseline_entropy": self.baseline_entropy,
            "gated": self.gated,
            "augmentation_set_ref": self.augmentation_set_ref,
            "prompt_hash": self.prompt_hash,
            "variant_predictions": [prediction_to_dict(p) for p in self.variant_predictions],
            "fallbacks": list(self.fallbacks),
            "final_prediction": prediction_to_dict(self.final_prediction),
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalRecord:
        return cls(
            input_id=d["input_id"],
            baseline_prediction=prediction_from_dict(d["baseline_prediction"]),
            baseline_entropy=d["baseline_entropy"],
            gated=bool(d["gated"]),
            final_prediction=prediction_from_dict(d["final_prediction"]),
            gold=d["gold"],
            variant_predictions=tuple(prediction_from_dict(p) for p in d.get("variant_predictions", [])),
            augmentation_set_ref=d.get("augmentation_set_ref"),
            fallbacks=tuple(bool(x) for x in d.get("fallbacks", [])),
            prompt_hash=d.get("prompt_hash"),
        )


@dataclass(frozen=True)
class RunSummary:
    dataset: str
    policy: str
    seed: int
    accuracy: float
    aug_rate: float
    n_records: int
    baseline_accuracy: float = float("nan")
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("accuracy", "aug_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @classmethod
    def from_records(cls, records, dataset: str, policy: str, seed: int) -> RunSummary:
        records = list(records)
        n = len(records)
        if n == 0:
            return cls(dataset, policy, seed, 0.0, 0.0, 0)
        return cls(
            dataset, policy, seed,
            accuracy=sum(r.correct for r in records) / n,
            aug_rate=sum(r.gated for r in records) / n,
            n_records=n,
            baseline_accuracy=sum(r.baseline_correct for r in records) / n,
        )

    def to_row(self) -> dict:
        return {
            "dataset": self.dataset, "policy": self.policy, "seed": self.seed,
            "accuracy": self.accuracy, "baseline_accuracy": self.baseline_accuracy,
            "aug_rate": self.aug_rate, "n_records": self.n_records,
        }
