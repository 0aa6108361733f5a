"""
The command line over a local mock deployment
=============================================

Serves the mock classifier and rewrite LLM on a local port, writes a
config and data into a scratch directory, then drives the ``ttagate``
commands: prime the cache, evaluate across seeds, replay, calibrate.
"""

import csv
import json
import tempfile
from pathlib import Path

import numpy as np

from ttagate.cli import execute
from ttagate.clients.mock import FakeRewriter, KeywordModel, MockServer, completion_route, scores_route

keywords = {"bad": 0, "awful": 0, "good": 1, "great": 1, "fine": 2, "okay": 2}
server = MockServer({
    "/classify": scores_route(KeywordModel(3, keywords, jitter=0.5)),
    "/v1/completions": completion_route(FakeRewriter()),
})

rng = np.random.default_rng(1)
polar = {0: ["bad", "awful"], 1: ["good", "great"], 2: ["fine", "okay"]}


def write_rows(path, n):
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["text", "label"])
        for _ in range(n):
            y = int(rng.integers(3))
            toks = ["the", "movie", "was", str(rng.choice(polar[y])), str(rng.choice(polar[int(rng.integers(3))]))]
            rng.shuffle(toks)
            w.writerow([" ".join(toks), y])


with tempfile.TemporaryDirectory() as tmp, server.serve() as base_url:
    root = Path(tmp)
    write_rows(root / "id.csv", 60)
    write_rows(root / "ood.csv", 40)
    config = {
        "seeds": [3, 16, 46, 58],
        "tasks": {"sentiment": {"builtin": "sentiment"}},
        "endpoints": {
            "task_model": {"type": "classifier", "task": "sentiment", "base_url": base_url + "/classify"},
            "rewriter": {"type": "llm", "base_url": base_url + "/v1", "model": "rewriter", "rate_limit": 200},
        },
        "datasets": {
            "id_eval": {"path": "id.csv", "task": "sentiment", "role": "id"},
            "ood_sst": {"path": "ood.csv", "task": "sentiment"},
        },
        "policies": {
            "icr": {"task": "sentiment", "classifier": "task_model", "llm": "rewriter",
                    "exemplars_from": "id_eval", "augmenter": {"kind": "llm_icr"}},
        },
    }
    cfg = root / "ttagate.yaml"
    cfg.write_text(json.dumps(config, indent=2))  # JSON is valid YAML

    def ttagate(*args):
        print("$ ttagate", " ".join(args))
        code = execute([*args, "--config", str(cfg)])
        print(f"(exit {code})\n")

    ttagate("classify", "--policy", "icr", "--text", "the movie was good but okay")
    ttagate("augment", "--policy", "icr", "--dataset", "ood_sst")
    ttagate("evaluate", "--policy", "icr", "--dataset", "ood_sst", "--seeds", "3,16,46,58", "--replay")
    ttagate("calibrate", "--dataset", "id_eval", "--beta", "0.002")
    ttagate("report")
    ttagate("frobnicate")
