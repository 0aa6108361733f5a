"""Running a TTA policy over a dataset and analysing the results."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from ..aggregate import mean_aggregate, vote_aggregate
from ..augment.generate import AugmentationSet, AugmenterSpec, Backends, generate_augmentations
from ..clients.endpoints import DecodeParams
from ..core import Prediction, TestInput
from ..errors import AlignmentError, AllUnmappable, ConfigError, MixedConditions
from ..esa import CalibrationRecord, EntropyGate, calibrate_threshold, entropy, gate
from ..records import EvalRecord, RunSummary
from ..storage.runlog import RunLogWriter

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (3, 16, 46, 58)


@dataclass(frozen=True)
class TTAPolicy:
    name: str
    augmenter: AugmenterSpec
    m: int = 4
    aggregation: str = "mean_prob"
    gate: EntropyGate | None = None
    decode: DecodeParams | None = None

    def __post_init__(self):
        if self.aggregation not in ("mean_prob", "vote"):
            raise ConfigError(f"aggregation must be mean_prob or vote, got {self.aggregation!r}")
        if self.m < 0:
            raise ConfigError(f"m must be >= 0, got {self.m}")

    def augmenter_spec(self) -> AugmenterSpec:
        if self.decode is None:
            return self.augmenter
        return AugmenterSpec(self.augmenter.kind, {**self.augmenter.params, "decode": self.decode.to_dict()})

    def with_gate(self, g: EntropyGate | None) -> TTAPolicy:
        return replace(self, gate=g)

    def check(self, classifier) -> None:
        mode = getattr(classifier, "mode", None)
        if self.aggregation == "mean_prob" and mode != "probabilistic":
            raise ConfigError(f"policy {self.name!r}: mean_prob aggregation needs a probabilistic classifier")
        if self.gate is not None and mode != "probabilistic":
            raise ConfigError(f"policy {self.name!r}: an entropy gate needs class probabilities")

    def describe(self) -> dict:
        return {
            "name": self.name,
            "augmenter": self.augmenter_spec().canonical(),
            "m": self.m,
            "aggregation": self.aggregation,
            "gate": None if self.gate is None else
            {"threshold": "inf" if math.isinf(self.gate.threshold_e) else self.gate.threshold_e,
             "enabled": self.gate.enabled},
        }


@dataclass
class _Trace:
    """Everything computed for one input before aggregation."""

    item: TestInput
    baseline: Prediction | None
    entropy: float | None
    gated: bool
    augmentations: AugmentationSet | None = None
    predictions: list = field(default_factory=list)


def _trace(item, classifier, policy, spec, m, seed, backends, cache, exemplars) -> _Trace:
    base = classifier.predict(item.text)
    h = entropy(base.distribution) if base is not None and base.distribution is not None else None
    wants = policy.gate is None or gate(h, policy.gate)
    if not wants or m == 0:
        return _Trace(item, base, h, wants and m > 0, None, [base])
    aug = generate_augmentations(item, spec, m, seed, backends, cache, exemplars)
    # same text, same answer: skip the call for the identity and fallback copies
    preds = [base] + [base if t == item.text else classifier.predict(t) for t in aug.texts[1:]]
    return _Trace(item, base, h, True, aug, preds)


def _finalize(tr: _Trace, m: int, aggregation: str) -> EvalRecord:
    common = dict(input_id=tr.item.id, baseline_prediction=tr.baseline, baseline_entropy=tr.entropy,
                  gold=tr.item.gold_label)
    if not tr.gated or m == 0:
        return EvalRecord(gated=False, final_prediction=tr.baseline, **common)
    preds = tr.predictions[: m + 1]
    aug = tr.augmentations.head(m)
    if aggregation == "mean_prob":
        final = mean_aggregate([p.distribution for p in preds])
    else:
        try:
            final = vote_aggregate([p.class_index if p is not None else None for p in preds])
        except AllUnmappable:
            final = None
    return EvalRecord(
        gated=True, final_prediction=final, variant_predictions=tuple(preds),
        augmentation_set_ref=aug.ref, fallbacks=tuple(v.fallback for v in aug.variants),
        prompt_hash=aug.prompt_hash, **common,
    )


def predict_one(item: TestInput, classifier, policy: TTAPolicy, seed: int, backends: Backends | None = None,
                cache=None, exemplars: Sequence[str] | None = None) -> EvalRecord:
    """Run one input through ``policy`` without logging or summarising."""
    policy.check(classifier)
    tr = _trace(item, classifier, policy, policy.augmenter_spec(), policy.m, seed,
                backends or Backends(), cache, exemplars)
    return _finalize(tr, policy.m, policy.aggregation)


def _map(fn, items: Sequence, workers: int) -> Iterable:
    if workers <= 1:
        return map(fn, items)
    pool = ThreadPoolExecutor(max_workers=workers)

    def gen():
        try:
            # Executor.map yields in input order regardless of completion order
            yield from pool.map(fn, items)
        finally:
            pool.shutdown(wait=True, cancel_futures=True)

    return gen()


def _client_notes(backends: Backends | None) -> list[str]:
    notes: list[str] = []
    if backends is not None:
        for client in (backends.llm, backends.mt):
            if client is not None:
                notes.extend(n for n in client.notes if n not in notes)
    return notes


def run_condition(
    dataset: Sequence[TestInput],
    classifier,
    policy: TTAPolicy,
    seed: int,
    backends: Backends | None = None,
    cache=None,
    exemplars: Sequence[str] | None = None,
    *,
    workers: int = 1,
    log_path=None,
    dataset_name: str = "",
    header: dict | None = None,
) -> tuple[RunSummary, list[EvalRecord]]:
    """Evaluate one (dataset, policy, seed) condition.

    Per input: baseline prediction and entropy, the gate decision (always
    augment without a gate), and when gated the augmentation set, the
    per-variant predictions and their aggregate. If ``log_path`` is given,
    records are streamed to a JSONL run log; a failure part-way flushes the
    records finished so far before re-raising.
    """
    policy.check(classifier)
    spec = policy.augmenter_spec()
    backends = backends or Backends()

    def one(item):
        return _finalize(_trace(item, classifier, policy, spec, policy.m, seed, backends, cache, exemplars),
                         policy.m, policy.aggregation)

    writer = None
    if log_path is not None:
        writer = RunLogWriter(log_path, header if header is not None else {
            "dataset": dataset_name, "seed": seed, "policy": policy.describe(),
        })
    records: list[EvalRecord] = []
    try:
        for rec in _map(one, list(dataset), workers):
            records.append(rec)
            if writer is not None:
                writer.write(rec)
    except BaseException:
        if writer is not None:
            writer.close({"status": "aborted", "completed": len(records), "notes": _client_notes(backends)})
        raise
    if writer is not None:
        writer.close({"status": "complete", "completed": len(records), "notes": _client_notes(backends)})
    return RunSummary.from_records(records, dataset_name, policy.name, seed), records


def augmentation_count_sweep(
    dataset: Sequence[TestInput],
    classifier,
    policy: TTAPolicy,
    counts: Sequence[int],
    seed: int,
    backends: Backends | None = None,
    cache=None,
    exemplars: Sequence[str] | None = None,
    *,
    workers: int = 1,
) -> list[tuple[int, float]]:
    """Accuracy for each augmentation count in ``counts``.

    One superset of ``max(counts)`` augmentations is generated per input and
    each count uses its prefix, so only the count varies between rows.
    """
    if not counts or min(counts) < 0:
        raise ValueError(f"counts must be non-empty and non-negative: {counts}")
    policy.check(classifier)
    spec = policy.augmenter_spec()
    backends = backends or Backends()
    top = max(counts)
    traces = list(_map(
        lambda item: _trace(item, classifier, policy, spec, top, seed, backends, cache, exemplars),
        list(dataset), workers,
    ))
    out = []
    for m in counts:
        records = [_finalize(tr, m, policy.aggregation) for tr in traces]
        out.append((m, sum(r.correct for r in records) / len(records) if records else 0.0))
    return out


class MeanStd(NamedTuple):
    mean: float
    std: float
    n: int


def aggregate_runs(summaries: Sequence[RunSummary], metric: str = "accuracy") -> MeanStd:
    """Mean and sample (n-1) standard deviation over seeds; std is 0 for one run."""
    if not summaries:
        raise ValueError("aggregate_runs needs at least one summary")
    conditions = {(s.dataset, s.policy) for s in summaries}
    if len(conditions) > 1:
        raise MixedConditions(f"summaries span several conditions: {sorted(conditions)}")
    values = [float(getattr(s, metric)) for s in summaries]
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return MeanStd(mean, 0.0, 1)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return MeanStd(mean, math.sqrt(var), n)


class ClassChange(NamedTuple):
    new_corrections: int
    new_mistakes: int


def changed_prediction_breakdown(baseline: Sequence[EvalRecord], tta: Sequence[EvalRecord],
                                 num_classes: int | None = None) -> dict[int, ClassChange]:
    """Per gold class: inputs TTA fixed, and inputs TTA broke, relative to baseline."""
    base_by_id = {r.input_id: r for r in baseline}
    tta_by_id = {r.input_id: r for r in tta}
    if len(base_by_id) != len(baseline) or len(tta_by_id) != len(tta):
        raise AlignmentError("duplicate input ids in records")
    if base_by_id.keys() != tta_by_id.keys():
        missing = sorted(base_by_id.keys() ^ tta_by_id.keys())[:5]
        raise AlignmentError(f"record sets differ, e.g. {missing}")

    fixed: dict[int, int] = {}
    broke: dict[int, int] = {}
    classes = set(range(num_classes)) if num_classes else set()
    for iid, b in base_by_id.items():
        t = tta_by_id[iid]
        if b.gold != t.gold:
            raise AlignmentError(f"{iid}: gold labels disagree")
        g = b.gold
        classes.add(g)
        if not b.correct and t.correct:
            fixed[g] = fixed.get(g, 0) + 1
        elif b.correct and not t.correct:
            broke[g] = broke.get(g, 0) + 1
    return {c: ClassChange(fixed.get(c, 0), broke.get(c, 0)) for c in sorted(classes)}


def calibration_records(records: Iterable[EvalRecord]) -> list[CalibrationRecord]:
    """Calibration inputs from an always-augment run, which holds both the
    baseline and the TTA outcome of every input."""
    out = []
    for r in records:
        if r.baseline_entropy is None:
            raise ConfigError(f"{r.input_id}: calibration needs baseline entropies")
        if not r.gated:
            raise ConfigError(f"{r.input_id}: calibration needs an always-augment run")
        out.append(CalibrationRecord(r.baseline_entropy, r.baseline_correct, r.correct))
    return out


def calibrate_from_run(records: Iterable[EvalRecord], beta: float):
    return calibrate_threshold(calibration_records(records), beta)
