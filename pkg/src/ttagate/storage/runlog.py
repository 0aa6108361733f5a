"""JSONL run logs and calibration files.

Each log line is a JSON object with ``schema_version`` and ``type``. A log
is an optional ``header`` line (run configuration), one ``record`` line per
:class:`~ttagate.records.EvalRecord`, and an optional ``footer`` line
(status and client notes).
"""

from __future__ import annotations

import json
import logging
import threading
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..errors import ParseError, SchemaVersionMismatch
from ..esa import EntropyGateCalibration
from ..records import EvalRecord

SCHEMA_VERSION = 1

log = logging.getLogger(__name__)


class TruncatedLogWarning(UserWarning):
    pass


def _line(kind: str, payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "type": kind, **payload},
                      sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


class RunLogWriter:
    """Serialized sink for run-log lines; safe to share between threads."""

    def __init__(self, path: str | Path, header: dict | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._f = self.path.open("w", encoding="utf-8", newline="\n")
        self._lock = threading.Lock()
        if header is not None:
            self._write(_line("header", {"header": header}))

    def _write(self, s: str) -> None:
        with self._lock:
            self._f.write(s)

    def write(self, record: EvalRecord) -> None:
        self._write(_line("record", {"record": record.to_dict()}))

    def close(self, footer: dict | None = None) -> None:
        if self._f.closed:
            return
        if footer is not None:
            self._write(_line("footer", {"footer": footer}))
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close({"status": "aborted" if exc_type else "complete"})


def write_run_log(path: str | Path, records: Iterable[EvalRecord], header: dict | None = None,
                  footer: dict | None = None) -> None:
    w = RunLogWriter(path, header)
    for r in records:
        w.write(r)
    w.close(footer)


@dataclass
class RunLog:
    records: list[EvalRecord]
    header: dict | None = None
    footer: dict | None = None
    truncated: bool = False
    extra: dict = field(default_factory=dict)


def load_run_log(path: str | Path) -> RunLog:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    out = RunLog([])
    for i, line in enumerate(lines):
        try:
            obj = json.loads(line)
        except ValueError:
            if i == len(lines) - 1:
                out.truncated = True
                break
            raise ParseError(f"{path}: line {i + 1} is not valid JSON") from None
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionMismatch(f"{path}: line {i + 1} has schema_version {version!r}, "
                                        f"expected {SCHEMA_VERSION}")
        kind = obj.get("type")
        if kind == "record":
            out.records.append(EvalRecord.from_dict(obj["record"]))
        elif kind == "header":
            out.header = obj["header"]
        elif kind == "footer":
            out.footer = obj["footer"]
        else:
            raise ParseError(f"{path}: line {i + 1} has unknown type {kind!r}")
    return out


def read_run_log(path: str | Path) -> list[EvalRecord]:
    """Records of a run log. A truncated last line is skipped with a
    :class:`TruncatedLogWarning`."""
    rl = load_run_log(path)
    if rl.truncated:
        msg = f"{path}: final line is truncated; returning {len(rl.records)} complete records"
        log.warning(msg)
        warnings.warn(msg, TruncatedLogWarning, stacklevel=2)
    return rl.records


def save_calibration(path: str | Path, cal: EntropyGateCalibration) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": SCHEMA_VERSION, **cal.to_dict()}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_calibration(path: str | Path) -> EntropyGateCalibration:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{path}: unsupported calibration schema {doc.get('schema_version')!r}")
    return EntropyGateCalibration.from_dict(doc)
