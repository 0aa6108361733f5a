"""Loading labelled evaluation datasets from CSV or JSONL."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

from ..core import LabelSpace, TestInput
from ..errors import DuplicateId, EmptyInput, ParseError, UnknownLabel


@dataclass(frozen=True)
class DatasetFile:
    path: Path
    format: str | None = None
    label_map: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        fmt = self.format or self.path.suffix.lstrip(".").lower()
        if fmt == "json":
            fmt = "jsonl"
        if fmt not in ("csv", "jsonl"):
            raise ParseError(f"cannot infer dataset format for {self.path} (use csv or jsonl)")
        object.__setattr__(self, "format", fmt)


def default_label_map(label_space: LabelSpace) -> dict[str, int]:
    """Class identifiers and their string indices both map to the index."""
    out = {str(i): i for i in range(label_space.K)}
    out.update({c: i for i, c in enumerate(label_space.classes)})
    out.update({c.lower(): i for i, c in enumerate(label_space.classes)})
    return out


def _rows(file: DatasetFile) -> Iterator[tuple[int, dict]]:
    if file.format == "csv":
        with file.path.open(newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or "text" not in reader.fieldnames or "label" not in reader.fieldnames:
                raise ParseError(f"{file.path}: CSV needs 'text' and 'label' columns, got {reader.fieldnames}")
            for rowno, row in enumerate(reader, 1):
                if None in row:
                    raise ParseError(f"{file.path}: row {rowno} has extra fields")
                yield rowno, row
    else:
        with file.path.open(encoding="utf-8") as f:
            rowno = 0
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                rowno += 1
                try:
                    obj = json.loads(line)
                except ValueError as exc:
                    raise ParseError(f"{file.path}: line {lineno} is not valid JSON: {exc}") from None
                if not isinstance(obj, dict) or "text" not in obj or "label" not in obj:
                    raise ParseError(f"{file.path}: line {lineno} needs 'text' and 'label' keys")
                yield rowno, obj


def load_dataset(file: DatasetFile | str | Path, label_space: LabelSpace,
                 label_map: Mapping[str, int] | None = None) -> list[TestInput]:
    """Read and validate a labelled dataset, preserving file order.

    Rows are numbered from 1 in error messages. A missing ``id`` becomes the
    0-based row position.

    Raises:
        ParseError: malformed file or missing columns.
        UnknownLabel: a label not covered by the label map.
        DuplicateId: the same id on two rows.
        EmptyInput: rows whose text is empty or whitespace (all are listed).
    """
    if not isinstance(file, DatasetFile):
        file = DatasetFile(Path(file))
    mapping = default_label_map(label_space)
    mapping.update({str(k): int(v) for k, v in (label_map or file.label_map or {}).items()})

    items: list[TestInput] = []
    seen: dict[str, int] = {}
    empty_rows: list[int] = []
    for rowno, row in _rows(file):
        text = row["text"]
        if not isinstance(text, str):
            raise ParseError(f"{file.path}: row {rowno} text is not a string")
        raw_id = row.get("id")
        item_id = str(raw_id) if raw_id not in (None, "") else str(rowno - 1)
        if item_id in seen:
            raise DuplicateId(f"{file.path}: id {item_id!r} on rows {seen[item_id]} and {rowno}")
        seen[item_id] = rowno
        label_key = str(row["label"]).strip()
        if label_key not in mapping:
            raise UnknownLabel(f"{file.path}: row {rowno} has unknown label {row['label']!r}")
        label = mapping[label_key]
        if not 0 <= label < label_space.K:
            raise UnknownLabel(f"{file.path}: row {rowno} label {label} is outside 0..{label_space.K - 1}")
        if not text.strip():
            empty_rows.append(rowno)
            continue
        items.append(TestInput(item_id, text, label))
    if empty_rows:
        raise EmptyInput(f"{file.path}: empty text on rows {empty_rows}")
    return items
