"""Command-line entry point.

Every subcommand except ``simulate`` reads one config file (see README);
flags given on the command line win over config values. Exit status is 0 on
success, 1 on a usage or validation error and 2 on a runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .augment.generate import AugmenterKind, Backends, generate_augmentations
from .augment.word import default_lexicon, load_lexicon
from .clients.http import BackTranslator, ClassifierClient, LlmClient
from .config import PolicyConfig, RunConfig, load_config
from .core import TestInput
from .errors import (
    AlignmentError,
    CacheConflict,
    CacheMiss,
    ClientUnavailable,
    ConfigError,
    DegenerateScores,
    DuplicateId,
    EmptyCalibrationSet,
    EmptyGeneration,
    EmptyInput,
    InsufficientClassData,
    MixedConditions,
    NoExemplars,
    ParseError,
    SchemaError,
    SchemaVersionMismatch,
    TTAError,
    UnknownLabel,
)
from .esa import DEFAULT_BETA
from .exemplars import sample_exemplars
from .harness.classifiers import GenerativeClassifier, ProbabilisticClassifier
from .harness.engine import augmentation_count_sweep, calibrate_from_run, predict_one, run_condition
from .harness.report import write_report
from .harness.simulate import majority_accuracy, simulate_noisy_tta
from .records import RunSummary
from .storage.cache import AugmentationCache
from .storage.datasets import load_dataset
from .storage.runlog import load_run_log, save_calibration

log = logging.getLogger("ttagate")

DEFAULT_CONFIG = "ttagate.yaml"

_RUNTIME = (ClientUnavailable, SchemaError, CacheMiss, CacheConflict, EmptyGeneration, DegenerateScores, OSError)
_VALIDATION = (ConfigError, ParseError, UnknownLabel, DuplicateId, EmptyInput, InsufficientClassData, NoExemplars,
               SchemaVersionMismatch, EmptyCalibrationSet, MixedConditions, AlignmentError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _int_list(s: str) -> tuple[int, ...]:
    try:
        out = tuple(int(x) for x in s.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return out


def _name_list(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help=f"run config (YAML or JSON); default ./{DEFAULT_CONFIG}")
    common.add_argument("--replay", action="store_true", help="never call a backend; cache misses are errors")
    common.add_argument("--workers", type=int, help="parallel inputs per run")
    common.add_argument("--cache-dir", type=Path)
    common.add_argument("--log-dir", type=Path)
    common.add_argument("--report-dir", type=Path)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="ttagate", description="Test-time augmentation with entropy gating for black-box classifiers.",
                parents=[common])
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    a = sub.add_parser("augment", parents=[common], help="populate the augmentation cache")
    a.add_argument("--policy", required=True)
    a.add_argument("--dataset", required=True)
    a.add_argument("--seeds", type=_int_list)

    c = sub.add_parser("classify", parents=[common], help="run one text through a policy")
    c.add_argument("--policy", required=True)
    c.add_argument("--text", required=True)
    c.add_argument("--seed", type=int)

    e = sub.add_parser("evaluate", parents=[common], help="run policies over datasets and seeds, write a report")
    e.add_argument("--policy", type=_name_list, help="comma-separated policy names; default all")
    e.add_argument("--dataset", type=_name_list, help="comma-separated dataset names; default all")
    e.add_argument("--seeds", type=_int_list, help="default: config seeds for OOD data, the first seed for ID data")
    e.add_argument("--report-name", default="report")

    k = sub.add_parser("calibrate", parents=[common], help="fit the entropy threshold on an ID dataset")
    k.add_argument("--dataset", required=True)
    k.add_argument("--policy", help="default: first policy in the config")
    k.add_argument("--beta", type=float, default=DEFAULT_BETA)
    k.add_argument("--seed", type=int)
    k.add_argument("--out", type=Path, help="calibration JSON path")

    w = sub.add_parser("sweep", parents=[common], help="accuracy against the number of augmentations")
    w.add_argument("--policy", required=True)
    w.add_argument("--dataset", required=True)
    w.add_argument("--counts", type=_int_list, default=(0, 1, 2, 3, 4))
    w.add_argument("--seed", type=int)

    s = sub.add_parser("simulate", parents=[common], help="majority vote over independent noisy views")
    s.add_argument("--p", type=float, default=0.7, help="per-view accuracy")
    s.add_argument("--m", type=int, default=5, help="number of views (odd)")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("report", parents=[common], help="re-render the report from run logs")
    r.add_argument("--logs", type=Path, nargs="*", help="log files; default every evaluate log in the log dir")
    r.add_argument("--report-name", default="report")
    return p


class Session:
    """Clients, datasets and caches built lazily from a validated config."""

    def __init__(self, cfg: RunConfig, args, transport=None, out=sys.stdout):
        self.cfg = cfg
        self.transport = transport
        self.out = out
        self.replay = bool(getattr(args, "replay", False) or cfg.replay)
        self.workers = getattr(args, "workers", cfg.workers)
        self.cache_dir = getattr(args, "cache_dir", cfg.cache_dir)
        self.log_dir = getattr(args, "log_dir", cfg.log_dir)
        self.report_dir = getattr(args, "report_dir", cfg.report_dir)
        self.cache = AugmentationCache(self.cache_dir)
        self._datasets: dict = {}
        self._clients: list = []
        self._llms: dict = {}
        self._classifiers: dict = {}
        self._lexicon = None

    def close(self):
        for c in self._clients:
            c.close()

    def _track(self, c):
        self._clients.append(c)
        return c

    def llm(self, name: str) -> LlmClient:
        if name not in self._llms:
            self._llms[name] = self._track(LlmClient(self.cfg.llms[name], self.transport))
        return self._llms[name]

    def dataset(self, name: str) -> list[TestInput]:
        if name not in self.cfg.datasets:
            raise ConfigError(f"unknown dataset {name!r}; defined: {sorted(self.cfg.datasets)}")
        if name not in self._datasets:
            d = self.cfg.datasets[name]
            self._datasets[name] = load_dataset(d.file, self.cfg.tasks[d.task].label_space)
        return self._datasets[name]

    def policy(self, name: str) -> PolicyConfig:
        if name not in self.cfg.policies:
            raise ConfigError(f"unknown policy {name!r}; defined: {sorted(self.cfg.policies)}")
        return self.cfg.policies[name]

    def check_pair(self, pc: PolicyConfig, dataset: str) -> None:
        self.dataset_cfg(dataset)
        if self.cfg.datasets[dataset].task != pc.task:
            raise ConfigError(f"policy {pc.policy.name!r} is for task {pc.task!r}, "
                              f"dataset {dataset!r} is {self.cfg.datasets[dataset].task!r}")

    def dataset_cfg(self, name: str):
        if name not in self.cfg.datasets:
            raise ConfigError(f"unknown dataset {name!r}; defined: {sorted(self.cfg.datasets)}")
        return self.cfg.datasets[name]

    def classifier(self, name: str):
        if name in self._classifiers:
            return self._classifiers[name]
        cc = self.cfg.classifiers[name]
        client = self._track(ClassifierClient(cc.endpoint, self.transport))
        if cc.endpoint.mode == "probabilistic":
            clf = ProbabilisticClassifier(client)
        else:
            task = self.cfg.tasks[cc.endpoint.label_space.task_name]
            shots = sample_exemplars(self.dataset(cc.few_shot_from), cc.few_shot_k, cc.few_shot_seed,
                                     task.label_space, cc.few_shot_from)
            clf = GenerativeClassifier.from_clients(client, self.llm(cc.llm), task.prompt_template,
                                                    shots.few_shot_block(), task.verbalizer)
        self._classifiers[name] = clf
        return clf

    def lexicon(self):
        if self._lexicon is None:
            self._lexicon = load_lexicon(self.cfg.lexicon) if self.cfg.lexicon else default_lexicon()
        return self._lexicon

    def backends(self, pc: PolicyConfig) -> Backends:
        kind = pc.policy.augmenter.kind
        llm = self.llm(pc.llm) if kind.is_llm else None
        mt = None
        if kind is AugmenterKind.BACK_TRANSLATE:
            m = self.cfg.mts[pc.mt]
            mt = BackTranslator(self._track(LlmClient(m.forward, self.transport)),
                                self._track(LlmClient(m.reverse, self.transport)))
        return Backends(llm=llm, mt=mt, lexicon=self.lexicon() if kind.is_word else None, replay=self.replay)

    def exemplars(self, pc: PolicyConfig, seed: int) -> list[str] | None:
        """ICR exemplars: one draw per (policy, seed), shared by every input of the run."""
        if pc.policy.augmenter.kind is not AugmenterKind.LLM_ICR:
            return None
        src = pc.exemplars_from
        ls = self.cfg.tasks[pc.task].label_space
        return sample_exemplars(self.dataset(src), pc.policy.augmenter.k, seed, ls, src).texts

    def header(self, command: str, dataset: str, pc: PolicyConfig, seed: int) -> dict:
        return {"command": command, "dataset": dataset, "policy": pc.policy.describe(),
                "seed": seed, "exemplars": self.exemplars(pc, seed), "config": self.cfg.raw}

    def print(self, *parts, **kw):
        print(*parts, file=self.out, **kw)


def _first_seed(sess: Session, args) -> int:
    seed = getattr(args, "seed", None)
    return sess.cfg.seeds[0] if seed is None else seed


def cmd_augment(sess: Session, args) -> int:
    pc = sess.policy(args.policy)
    sess.check_pair(pc, args.dataset)
    data = sess.dataset(args.dataset)
    if pc.policy.m < 1:
        raise ConfigError(f"policy {pc.policy.name!r} has m=0; nothing to augment")
    spec = pc.policy.augmenter_spec()
    backends = sess.backends(pc)
    seeds = args.seeds or sess.cfg.seeds
    fallbacks = 0
    for seed in seeds:
        ex = sess.exemplars(pc, seed)
        for item in data:
            aug = generate_augmentations(item, spec, pc.policy.m, seed, backends, sess.cache, ex)
            fallbacks += sum(v.fallback for v in aug.variants)
    sess.print(f"augmented {len(data)} inputs x {pc.policy.m} for seeds {','.join(map(str, seeds))}; "
               f"{fallbacks} fallbacks; cache holds {len(sess.cache)} entries")
    return 0


def cmd_classify(sess: Session, args) -> int:
    pc = sess.policy(args.policy)
    seed = _first_seed(sess, args)
    clf = sess.classifier(pc.classifier)
    names = sess.cfg.tasks[pc.task].label_space.classes
    rec = predict_one(TestInput("cli", args.text), clf, pc.policy, seed, sess.backends(pc), sess.cache,
                      sess.exemplars(pc, seed))

    def label(p):
        return None if p is None else names[p.class_index]

    out = {
        "baseline": label(rec.baseline_prediction),
        "entropy": rec.baseline_entropy,
        "augmented": rec.gated,
        "prediction": label(rec.final_prediction),
    }
    if rec.final_prediction is not None and rec.final_prediction.distribution is not None:
        out["probs"] = dict(zip(names, rec.final_prediction.distribution.probs))
    sess.print(json.dumps(out, ensure_ascii=False))
    return 0


def _log_path(sess: Session, command: str, policy: str, dataset: str, seed: int) -> Path:
    return Path(sess.log_dir) / f"{command}__{policy}__{dataset}__seed{seed}.jsonl"


def cmd_evaluate(sess: Session, args) -> int:
    policies = args.policy or tuple(sess.cfg.policies)
    datasets = args.dataset or tuple(sess.cfg.datasets)
    pairs = []
    for p in policies:
        pc = sess.policy(p)
        for d in datasets:
            dc = sess.dataset_cfg(d)
            if args.dataset is None and dc.task != pc.task:
                continue
            sess.check_pair(pc, d)
            pairs.append((pc, d))
    if not pairs:
        raise ConfigError("no (policy, dataset) pair shares a task")

    summaries: list[RunSummary] = []
    for pc, d in pairs:
        data = sess.dataset(d)
        clf = sess.classifier(pc.classifier)
        backends = sess.backends(pc)
        if args.seeds:
            seeds = args.seeds
        else:
            seeds = sess.cfg.seeds if sess.cfg.datasets[d].role == "ood" else sess.cfg.seeds[:1]
        for seed in seeds:
            summary, _ = run_condition(
                data, clf, pc.policy, seed, backends, sess.cache, sess.exemplars(pc, seed),
                workers=sess.workers, log_path=_log_path(sess, "evaluate", pc.policy.name, d, seed),
                dataset_name=d, header=sess.header("evaluate", d, pc, seed),
            )
            summaries.append(summary)
            log.info("%s on %s seed %d: accuracy %.4f aug_rate %.4f", pc.policy.name, d, seed,
                     summary.accuracy, summary.aug_rate)
    csv_path, md_path = write_report(summaries, sess.report_dir, args.report_name)
    sess.print(md_path.read_text(encoding="utf-8"), end="")
    sess.print(f"wrote {csv_path} and {md_path}")
    return 0


def cmd_calibrate(sess: Session, args) -> int:
    name = args.policy or next(iter(sess.cfg.policies), None)
    if name is None:
        raise ConfigError("config defines no policies")
    pc = sess.policy(name)
    sess.check_pair(pc, args.dataset)
    if sess.cfg.datasets[args.dataset].role != "id":
        log.warning("calibrating on %r, which is not marked role: id", args.dataset)
    seed = _first_seed(sess, args)
    always = pc.policy.with_gate(None)
    _, records = run_condition(
        sess.dataset(args.dataset), sess.classifier(pc.classifier), always, seed, sess.backends(pc),
        sess.cache, sess.exemplars(pc, seed), workers=sess.workers,
        log_path=_log_path(sess, "calibrate", name, args.dataset, seed),
        dataset_name=args.dataset, header=sess.header("calibrate", args.dataset, PolicyConfig(
            always, pc.task, pc.classifier, pc.llm, pc.mt, pc.exemplars_from), seed),
    )
    cal = calibrate_from_run(records, args.beta)
    cal.meta.update({"policy": name, "dataset": args.dataset, "seed": seed})
    out = args.out or Path(sess.report_dir) / f"calibration__{name}__{args.dataset}.json"
    save_calibration(out, cal)
    best = cal.chosen_score
    sess.print(f"threshold: {cal.chosen}")
    sess.print(f"accuracy {best.accuracy:.4f} at augmentation rate {best.aug_rate:.4f} (score {best.score:.6f})")
    sess.print(f"wrote {out}")
    return 0


def cmd_sweep(sess: Session, args) -> int:
    pc = sess.policy(args.policy)
    sess.check_pair(pc, args.dataset)
    seed = _first_seed(sess, args)
    rows = augmentation_count_sweep(
        sess.dataset(args.dataset), sess.classifier(pc.classifier), pc.policy, args.counts, seed,
        sess.backends(pc), sess.cache, sess.exemplars(pc, seed), workers=sess.workers,
    )
    lines = ["m,accuracy"] + [f"{m},{acc:.6f}" for m, acc in rows]
    out = Path(sess.report_dir) / f"sweep__{pc.policy.name}__{args.dataset}__seed{seed}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sess.print("| m | accuracy |\n|---|---|")
    for m, acc in rows:
        sess.print(f"| {m} | {100 * acc:.2f}% |")
    sess.print(f"wrote {out}")
    return 0


def cmd_simulate(args, out) -> int:
    acc = simulate_noisy_tta(args.p, args.m, args.trials, args.seed)
    print(f"simulated accuracy: {acc:.5f} ({args.trials} trials)", file=out)
    print(f"analytic majority:  {majority_accuracy(args.p, args.m):.5f}", file=out)
    print(f"single view:        {args.p:.5f}", file=out)
    return 0


def cmd_report(args, cfg: RunConfig | None, out) -> int:
    log_dir = getattr(args, "log_dir", cfg.log_dir if cfg else None)
    report_dir = getattr(args, "report_dir", cfg.report_dir if cfg else None)
    paths = args.logs if getattr(args, "logs", None) else None
    if paths is None:
        if log_dir is None:
            raise ConfigError("report needs --logs, --log-dir or a config")
        paths = sorted(Path(log_dir).glob("evaluate__*.jsonl"))
    if not paths:
        raise ConfigError("no run logs found")
    summaries = []
    for path in paths:
        run = load_run_log(path)
        h = run.header or {}
        if "dataset" not in h or "policy" not in h or "seed" not in h:
            raise ParseError(f"{path}: header lacks dataset/policy/seed")
        if run.truncated or (run.footer or {}).get("status") != "complete":
            log.warning("%s: run did not complete; reporting %d records", path, len(run.records))
        summaries.append(RunSummary.from_records(run.records, h["dataset"], h["policy"]["name"], int(h["seed"])))
    summaries.sort(key=lambda s: (s.policy, s.dataset, s.seed))
    csv_path, md_path = write_report(summaries, report_dir or Path("reports"), args.report_name)
    print(md_path.read_text(encoding="utf-8"), end="", file=out)
    print(f"wrote {csv_path} and {md_path}", file=out)
    return 0


_COMMANDS = {
    "augment": cmd_augment,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
}


def _run(args, transport, out) -> int:
    if args.command == "simulate":
        return cmd_simulate(args, out)
    cfg_path = getattr(args, "config", None)
    if args.command == "report" and cfg_path is None and not Path(DEFAULT_CONFIG).exists():
        return cmd_report(args, None, out)
    cfg = load_config(cfg_path or DEFAULT_CONFIG)
    if args.command == "report":
        return cmd_report(args, cfg, out)
    sess = Session(cfg, args, transport, out)
    try:
        return _COMMANDS[args.command](sess, args)
    finally:
        sess.close()


def execute(argv: Sequence[str] | None = None, transport=None, out=None, err=None) -> int:
    """Run one command and return its exit status.

    ``transport`` is handed to every HTTP client, which lets tests route all
    traffic to an in-process mock.
    """
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        print(exc, file=err)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args, transport, out)
    except _RUNTIME as exc:
        print(f"error: {exc}", file=err)
        return 2
    except _VALIDATION as exc:
        print(f"invalid input: {exc}", file=err)
        return 1
    except TTAError as exc:
        print(f"error: {exc}", file=err)
        return 2


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
