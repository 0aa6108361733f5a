"""CSV and markdown reports over run summaries."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

from ..records import RunSummary
from .engine import aggregate_runs

CSV_FIELDS = ("dataset", "policy", "seed", "accuracy", "baseline_accuracy", "aug_rate", "n_records")


def summaries_to_csv(summaries: Sequence[RunSummary]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for s in summaries:
        row = s.to_row()
        for k in ("accuracy", "baseline_accuracy", "aug_rate"):
            row[k] = f"{row[k]:.6f}"
        w.writerow(row)
    return buf.getvalue()


def _ordered(values):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def render_markdown(summaries: Sequence[RunSummary], show_aug_rate: bool | None = None) -> str:
    """Policies as rows, datasets as columns, cells ``mean% ± std``.

    Multi-seed cells carry the sample std in percentage points. An augmentation
    rate column per dataset is added when any run skipped augmentation, or
    when ``show_aug_rate`` asks for it.
    """
    datasets = _ordered(s.dataset for s in summaries)
    policies = _ordered(s.policy for s in summaries)
    if show_aug_rate is None:
        show_aug_rate = any(s.aug_rate < 1.0 for s in summaries)

    head = ["Policy"]
    for d in datasets:
        head.append(d)
        if show_aug_rate:
            head.append(f"{d} aug. rate")
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join("---" for _ in head) + "|"]
    for p in policies:
        cells = [p]
        for d in datasets:
            group = [s for s in summaries if s.policy == p and s.dataset == d]
            if not group:
                cells += ["-"] + (["-"] if show_aug_rate else [])
                continue
            acc = aggregate_runs(group)
            cell = f"{100 * acc.mean:.2f}%"
            if acc.n > 1:
                cell += f" ± {100 * acc.std:.2f}"
            cells.append(cell)
            if show_aug_rate:
                cells.append(f"{100 * aggregate_runs(group, 'aug_rate').mean:.2f}%")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def write_report(summaries: Sequence[RunSummary], out_dir: str | Path, stem: str = "report") -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    md_path = out_dir / f"{stem}.md"
    csv_path.write_text(summaries_to_csv(summaries), encoding="utf-8")
    md_path.write_text(render_markdown(summaries), encoding="utf-8")
    return csv_path, md_path


def read_summaries_csv(path: str | Path) -> list[RunSummary]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        return [
            RunSummary(r["dataset"], r["policy"], int(r["seed"]), float(r["accuracy"]),
                       float(r["aug_rate"]), int(r["n_records"]), float(r["baseline_accuracy"]))
            for r in csv.DictReader(f)
        ]
