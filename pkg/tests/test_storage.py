import json
import math
import threading

import numpy as np
import pytest

from ttagate.core import ClassDistribution, LabelSpace, Prediction
from ttagate.errors import (
    CacheConflict,
    DuplicateId,
    EmptyInput,
    ParseError,
    SchemaVersionMismatch,
    UnknownLabel,
)
from ttagate.esa import CalibrationRecord, calibrate_threshold
from ttagate.records import EvalRecord
from ttagate.storage import (
    AugmentationCache,
    CacheKey,
    DatasetFile,
    TruncatedLogWarning,
    load_calibration,
    load_dataset,
    load_run_log,
    read_run_log,
    save_calibration,
    stable_hash,
    write_run_log,
)
from worldkit import SENTIMENT, make_texts, write_csv, write_jsonl


def test_stable_hash_is_order_sensitive_and_key_order_insensitive():
    assert stable_hash({"a": 1, "b": 2}) == stable_hash({"b": 2, "a": 1})
    assert stable_hash("a", "b") != stable_hash("b", "a")
    assert len(stable_hash("x")) == 16


def test_cache_layout_and_round_trip(tmp_path):
    cache = AugmentationCache(tmp_path)
    key = CacheKey.for_variant("text", {"kind": "llm_icr"}, 3, 1)
    assert cache.get(key) is None
    cache.put(key, "rewritten ü")
    h = key.content_hash
    assert (tmp_path / h[:2] / h[2:4] / f"{h}.txt").read_text(encoding="utf-8") == "rewritten ü"
    assert AugmentationCache(tmp_path).get(key) == "rewritten ü"
    cache.put(key, "rewritten ü")  # identical re-put is fine
    with pytest.raises(CacheConflict):
        cache.put(key, "something else")
    assert len(cache) == 1


def test_cache_concurrent_writers(tmp_path):
    cache = AugmentationCache(tmp_path)
    keys = [CacheKey.for_variant("t", {}, 0, i) for i in range(50)]
    threads = [threading.Thread(target=lambda: [cache.put(k, f"v{k.content_hash}") for k in keys]) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) == 50
    assert not list(tmp_path.rglob("*.tmp"))


@pytest.mark.parametrize("writer", [write_csv, write_jsonl])
def test_dataset_round_trip(tmp_path, writer):
    items = make_texts(25, seed=4)
    path = writer(tmp_path / ("d.csv" if writer is write_csv else "d.jsonl"), items)
    assert load_dataset(path, SENTIMENT) == items


def test_dataset_label_names_and_custom_map(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("text,label\nhello,positive\nbye,NEG\n", encoding="utf-8")
    items = load_dataset(DatasetFile(p, label_map={"NEG": 0}), SENTIMENT)
    assert [i.gold_label for i in items] == [1, 0]
    assert [i.id for i in items] == ["0", "1"]


def test_dataset_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("text,label\nok,1\n ,0\nfine,2\n\t,1\n", encoding="utf-8")
    with pytest.raises(EmptyInput, match=r"\[2, 4\]"):
        load_dataset(p, SENTIMENT)
    p.write_text("id,text,label\na,x,1\na,y,0\n", encoding="utf-8")
    with pytest.raises(DuplicateId):
        load_dataset(p, SENTIMENT)
    p.write_text("text,label\nx,7\n", encoding="utf-8")
    with pytest.raises(UnknownLabel):
        load_dataset(p, SENTIMENT)
    p.write_text("words,label\nx,1\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_dataset(p, SENTIMENT)
    j = tmp_path / "d.jsonl"
    j.write_text('{"text": "x", "label": 1}\nnot json\n', encoding="utf-8")
    with pytest.raises(ParseError):
        load_dataset(j, SENTIMENT)


def _random_records(n, seed=42):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        probs = rng.dirichlet(np.ones(3))
        probs = tuple(float(x) for x in probs / probs.sum())
        base = Prediction.from_distribution(ClassDistribution(probs))
        gated = bool(rng.random() < 0.5)
        if gated:
            variants = (base, Prediction(int(rng.integers(3))), None)
            final = Prediction(int(rng.integers(3)))
            out.append(EvalRecord(f"i{i}", base, -math.fsum(p * math.log(p) for p in probs), True, final,
                                  int(rng.integers(3)), variants, "abc", (False, True, False), "ph"))
        else:
            out.append(EvalRecord(f"i{i}", base, 0.1, False, base, int(rng.integers(3))))
    return out


def test_run_log_round_trip(tmp_path):
    recs = _random_records(100)
    path = tmp_path / "run.jsonl"
    write_run_log(path, recs, header={"dataset": "d", "seed": 3}, footer={"status": "complete"})
    log = load_run_log(path)
    assert log.records == recs
    assert log.header == {"dataset": "d", "seed": 3}
    assert log.footer["status"] == "complete" and not log.truncated


def test_run_log_truncated_tail(tmp_path):
    path = tmp_path / "run.jsonl"
    write_run_log(path, _random_records(5))
    text = path.read_text(encoding="utf-8")
    path.write_text(text[:-40], encoding="utf-8")
    with pytest.warns(TruncatedLogWarning):
        recs = read_run_log(path)
    assert len(recs) == 4


def test_run_log_corrupt_middle_and_version(tmp_path):
    path = tmp_path / "run.jsonl"
    write_run_log(path, _random_records(3))
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text("\n".join([lines[0], "{broken", *lines[1:]]) + "\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_run_log(path)
    obj = json.loads(lines[0])
    obj["schema_version"] = 99
    path.write_text(json.dumps(obj) + "\n", encoding="utf-8")
    with pytest.raises(SchemaVersionMismatch):
        load_run_log(path)


def test_calibration_file_round_trip(tmp_path):
    cal = calibrate_threshold([CalibrationRecord(0.2, True, True), CalibrationRecord(0.4, False, False)], 0.002)
    path = tmp_path / "cal.json"
    save_calibration(path, cal)
    raw = json.loads(path.read_text(encoding="utf-8"))
    assert raw["chosen"] == "inf"
    back = load_calibration(path)
    assert math.isinf(back.chosen) and back.beta == 0.002


def test_eval_record_invariant():
    base = Prediction(0)
    with pytest.raises(ValueError):
        EvalRecord("x", base, 0.1, False, Prediction(1), 0)


def test_label_space_fixture_is_sentiment():
    assert SENTIMENT == LabelSpace("sentiment", ("negative", "positive", "neutral"))
