"""Run configuration: one YAML (or JSON) file describing tasks, endpoints,
datasets and policies. Everything is cross-checked on load, before any
client is created or any request is sent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .aggregate import VerbalizerTable
from .augment.generate import AugmenterKind, AugmenterSpec
from .clients.endpoints import ClassifierEndpoint, DecodeParams, LlmEndpoint
from .core import LabelSpace
from .errors import ConfigError
from .esa import EntropyGate
from .harness.engine import DEFAULT_SEEDS, TTAPolicy
from .storage.datasets import DatasetFile
from .storage.runlog import load_calibration
from .tasks import builtin_task

_ENDPOINT_TUNING = ("timeout_ms", "max_retries", "backoff_ms", "rate_limit", "max_connections", "api_key_env")


@dataclass
class TaskConfig:
    label_space: LabelSpace
    verbalizer: VerbalizerTable | None
    prompt_template: str | None
    label_map: dict[str, int] = field(default_factory=dict)


@dataclass
class ClassifierConfig:
    endpoint: ClassifierEndpoint
    llm: str | None = None
    few_shot_from: str | None = None
    few_shot_k: int = 16
    few_shot_seed: int = 42


@dataclass
class MtConfig:
    forward: LlmEndpoint
    reverse: LlmEndpoint


@dataclass
class DatasetConfig:
    name: str
    file: DatasetFile
    task: str
    role: str = "ood"


@dataclass
class PolicyConfig:
    policy: TTAPolicy
    task: str
    classifier: str
    llm: str | None = None
    mt: str | None = None
    exemplars_from: str | None = None


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    tasks: dict[str, TaskConfig]
    classifiers: dict[str, ClassifierConfig]
    llms: dict[str, LlmEndpoint]
    mts: dict[str, MtConfig]
    datasets: dict[str, DatasetConfig]
    policies: dict[str, PolicyConfig]
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    cache_dir: Path = Path("cache")
    log_dir: Path = Path("logs")
    report_dir: Path = Path("reports")
    workers: int = 1
    replay: bool = False
    lexicon: Path | None = None


def _req(section: Mapping, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return section[key]


def _tuning(section: Mapping) -> dict:
    return {k: section[k] for k in _ENDPOINT_TUNING if k in section}


def _llm_endpoint(section: Mapping, where: str) -> LlmEndpoint:
    try:
        sp = section.get("supported_params")
        return LlmEndpoint(str(_req(section, "base_url", where)), str(_req(section, "model", where)),
                           supported_params=frozenset(sp) if sp is not None else None, **_tuning(section))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _task(name: str, section: Mapping, base: Path) -> TaskConfig:
    where = f"tasks.{name}"
    preset = None
    if "builtin" in section:
        try:
            preset = builtin_task(section["builtin"])
        except KeyError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    classes = section.get("classes") or (preset.label_space.classes if preset else None)
    if not classes:
        raise ConfigError(f"{where}: needs 'classes' or a 'builtin' preset")
    try:
        ls = LabelSpace(name, tuple(classes))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    verbalizer = None
    if "verbalizer" in section:
        for tok, c in section["verbalizer"].items():
            if not (isinstance(c, int) and 0 <= c < ls.K):
                raise ConfigError(f"{where}.verbalizer: token {tok!r} maps to invalid class {c!r}")
        verbalizer = VerbalizerTable(name, section["verbalizer"])
    elif preset is not None:
        verbalizer = VerbalizerTable(name, preset.verbalizer.tokens)
    template = None
    if "prompt_template" in section:
        path = base / section["prompt_template"]
        if not path.is_file():
            raise ConfigError(f"{where}.prompt_template: {path} does not exist")
        template = path.read_text(encoding="utf-8")
    elif preset is not None:
        template = preset.prompt_template
    label_map = {str(k): int(v) for k, v in (section.get("label_map") or {}).items()}
    for k, v in label_map.items():
        if not 0 <= v < ls.K:
            raise ConfigError(f"{where}.label_map: {k!r} maps to invalid class {v}")
    return TaskConfig(ls, verbalizer, template, label_map)


def _gate(section, base: Path, where: str) -> EntropyGate | None:
    if section is None:
        return None
    if not isinstance(section, Mapping):
        raise ConfigError(f"{where}: gate must be a mapping with 'threshold' or 'calibration'")
    if "threshold" in section:
        t = section["threshold"]
        value = math.inf if str(t).lower() in ("inf", "+inf", "infinity") else float(t)
        try:
            return EntropyGate(value, bool(section.get("enabled", True)))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if "calibration" in section:
        path = base / section["calibration"]
        if not path.is_file():
            raise ConfigError(f"{where}.calibration: {path} does not exist")
        return load_calibration(path).to_gate()
    raise ConfigError(f"{where}: gate needs 'threshold' or 'calibration'")


def parse_config(raw: Mapping[str, Any], base_dir: str | Path = ".") -> RunConfig:
    base = Path(base_dir)
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a mapping")

    tasks = {name: _task(name, sec or {}, base) for name, sec in (raw.get("tasks") or {}).items()}

    classifiers: dict[str, ClassifierConfig] = {}
    llms: dict[str, LlmEndpoint] = {}
    mts: dict[str, MtConfig] = {}
    for name, sec in (raw.get("endpoints") or {}).items():
        where = f"endpoints.{name}"
        kind = _req(sec, "type", where)
        if kind == "llm":
            llms[name] = _llm_endpoint(sec, where)
        elif kind == "mt":
            mts[name] = MtConfig(_llm_endpoint(_req(sec, "forward", where), f"{where}.forward"),
                                 _llm_endpoint(_req(sec, "reverse", where), f"{where}.reverse"))
        elif kind == "classifier":
            task = _req(sec, "task", where)
            if task not in tasks:
                raise ConfigError(f"{where}: unknown task {task!r}")
            mode = sec.get("mode", "probabilistic")
            try:
                ep = ClassifierEndpoint(
                    str(sec.get("base_url", "")), tasks[task].label_space, mode,
                    verbalizer_ref=task if mode == "generative" else None, **_tuning(sec),
                )
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where}: {exc}") from None
            if mode == "probabilistic" and not sec.get("base_url"):
                raise ConfigError(f"{where}: a probabilistic classifier needs base_url")
            classifiers[name] = ClassifierConfig(ep, sec.get("llm"), sec.get("few_shot_from"),
                                                 int(sec.get("few_shot_k", 16)), int(sec.get("few_shot_seed", 42)))
        else:
            raise ConfigError(f"{where}: unknown endpoint type {kind!r} (classifier, llm or mt)")

    datasets: dict[str, DatasetConfig] = {}
    for name, sec in (raw.get("datasets") or {}).items():
        where = f"datasets.{name}"
        task = _req(sec, "task", where)
        if task not in tasks:
            raise ConfigError(f"{where}: unknown task {task!r}")
        path = base / _req(sec, "path", where)
        if not path.is_file():
            raise ConfigError(f"{where}: {path} does not exist")
        role = sec.get("role", "ood")
        if role not in ("id", "ood"):
            raise ConfigError(f"{where}: role must be 'id' or 'ood'")
        try:
            f = DatasetFile(path, sec.get("format"), tasks[task].label_map)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        datasets[name] = DatasetConfig(name, f, task, role)

    for name, c in classifiers.items():
        where = f"endpoints.{name}"
        task = c.endpoint.label_space.task_name
        if c.endpoint.mode == "generative":
            if c.llm not in llms:
                raise ConfigError(f"{where}: generative classifier needs 'llm' naming an llm endpoint")
            if tasks[task].verbalizer is None or tasks[task].prompt_template is None:
                raise ConfigError(f"{where}: task {task!r} needs a verbalizer and prompt_template")
            if c.few_shot_from not in datasets:
                raise ConfigError(f"{where}: few_shot_from must name a dataset")
            if datasets[c.few_shot_from].task != task:
                raise ConfigError(f"{where}: few_shot_from dataset belongs to another task")

    policies: dict[str, PolicyConfig] = {}
    for name, sec in (raw.get("policies") or {}).items():
        where = f"policies.{name}"
        task = _req(sec, "task", where)
        if task not in tasks:
            raise ConfigError(f"{where}: unknown task {task!r}")
        clf = _req(sec, "classifier", where)
        if clf not in classifiers:
            raise ConfigError(f"{where}: unknown classifier endpoint {clf!r}")
        if classifiers[clf].endpoint.label_space.task_name != task:
            raise ConfigError(f"{where}: classifier {clf!r} serves another task")
        aug = dict(_req(sec, "augmenter", where))
        try:
            kind = AugmenterKind(_req(aug, "kind", f"{where}.augmenter"))
            params = {k: v for k, v in aug.items() if k != "kind"}
            spec = AugmenterSpec(kind, params)
        except ValueError as exc:
            raise ConfigError(f"{where}.augmenter: {exc}") from None
        llm = sec.get("llm")
        mt = sec.get("mt")
        if kind.is_llm and llm not in llms:
            raise ConfigError(f"{where}: {kind.value} needs 'llm' naming an llm endpoint")
        if kind is AugmenterKind.BACK_TRANSLATE and mt not in mts:
            raise ConfigError(f"{where}: back_translate needs 'mt' naming an mt endpoint")
        ex = sec.get("exemplars_from")
        if kind is AugmenterKind.LLM_ICR:
            if ex not in datasets:
                raise ConfigError(f"{where}: llm_icr needs 'exemplars_from' naming a dataset")
            if datasets[ex].task != task:
                raise ConfigError(f"{where}: exemplar dataset {ex!r} belongs to another task")
        try:
            decode = DecodeParams.from_dict(sec["decode"]) if "decode" in sec else None
            policy = TTAPolicy(name, spec, int(sec.get("m", 4)), sec.get("aggregation", "mean_prob"),
                               _gate(sec.get("gate"), base, f"{where}.gate"), decode)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
        mode = classifiers[clf].endpoint.mode
        if policy.aggregation == "mean_prob" and mode != "probabilistic":
            raise ConfigError(f"{where}: mean_prob aggregation needs a probabilistic classifier")
        if policy.aggregation == "vote" and mode == "generative" and tasks[task].verbalizer is None:
            raise ConfigError(f"{where}: vote aggregation needs a verbalizer for task {task!r}")
        if policy.gate is not None and mode != "probabilistic":
            raise ConfigError(f"{where}: an entropy gate needs a probabilistic classifier")
        policies[name] = PolicyConfig(policy, task, clf, llm, mt, ex)

    seeds = tuple(int(s) for s in raw.get("seeds", DEFAULT_SEEDS))
    if not seeds:
        raise ConfigError("seeds must not be empty")
    lexicon = raw.get("lexicon")
    if lexicon is not None and not (base / lexicon).is_file():
        raise ConfigError(f"lexicon: {base / lexicon} does not exist")
    return RunConfig(
        raw=dict(raw), base_dir=base, tasks=tasks, classifiers=classifiers, llms=llms, mts=mts,
        datasets=datasets, policies=policies, seeds=seeds,
        cache_dir=base / raw.get("cache_dir", "cache"),
        log_dir=base / raw.get("log_dir", "logs"),
        report_dir=base / raw.get("report_dir", "reports"),
        workers=int(raw.get("workers", 1)),
        replay=bool(raw.get("replay", False)),
        lexicon=base / lexicon if lexicon else None,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_config(raw or {}, path.parent)
