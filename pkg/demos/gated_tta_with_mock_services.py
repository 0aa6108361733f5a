"""
Entropy-gated TTA against mock services
=======================================

A deterministic stand-in for the task model and a fake rewrite LLM let us
run the whole pipeline locally: baseline, always-augment TTA, calibrating
the entropy threshold on in-distribution data, and the gated run.
"""

import numpy as np

from ttagate import EntropyGate
from ttagate.augment import AugmenterSpec, Backends
from ttagate.clients.endpoints import LlmEndpoint
from ttagate.clients.http import LlmClient
from ttagate.clients.mock import FakeRewriter, KeywordModel, MockServer, completion_route
from ttagate.core import LabelSpace, TestInput
from ttagate.harness import (
    ProbabilisticClassifier,
    TTAPolicy,
    augmentation_count_sweep,
    calibrate_from_run,
    changed_prediction_breakdown,
    run_condition,
)
from ttagate.storage import MemoryCache

space = LabelSpace("sentiment", ("negative", "positive", "neutral"))
keywords = {"bad": 0, "awful": 0, "terrible": 0, "good": 1, "great": 1, "excellent": 1, "fine": 2, "okay": 2}
model = KeywordModel(3, keywords, jitter=0.5)

# the task model is called in-process; only the rewrite LLM goes over (mock) HTTP
server = MockServer({"/v1/completions": completion_route(FakeRewriter())})
classifier = ProbabilisticClassifier(model, space)
llm = LlmClient(LlmEndpoint("http://mock/v1", "rewriter"), server.transport())
backends = Backends(llm=llm)
cache = MemoryCache()

rng = np.random.default_rng(0)
words = ["the", "movie", "was", "really", "quite", "story", "price", "it"]
polar = {0: ["bad", "awful", "terrible"], 1: ["good", "great", "excellent"], 2: ["fine", "okay"]}


def reviews(n, start):
    out = []
    for i in range(n):
        y = int(rng.integers(3))
        toks = list(rng.choice(words, 5)) + [str(rng.choice(polar[y]))]
        if rng.random() < 0.5:
            toks.append(str(rng.choice(polar[(y + 1) % 3])))
        rng.shuffle(toks)
        out.append(TestInput(f"r{start + i}", " ".join(toks), y))
    return out


id_data, ood_data = reviews(80, 0), reviews(80, 1000)
policy = TTAPolicy("paraphrase", AugmenterSpec.paraphrase())

base, base_recs = run_condition(ood_data, classifier, policy.with_gate(EntropyGate.never()), 3)
tta, tta_recs = run_condition(ood_data, classifier, policy, 3, backends, cache)
print(f"baseline {base.accuracy:.3f}   always-augment TTA {tta.accuracy:.3f}")
print("LLM requests so far:", len(server.requests_to("/v1/completions")))

# fit the threshold on an always-augment ID run, then gate the OOD run; this toy
# rewriter drops the keywords the model relies on, so the calibration may well
# decide to switch augmentation off entirely (threshold inf)
_, id_recs = run_condition(id_data, classifier, policy, 3, backends, cache)
cal = calibrate_from_run(id_recs, beta=1 / 500)
print(f"calibrated threshold {cal.chosen:.4f} (ID accuracy {cal.chosen_score.accuracy:.3f},"
      f" rate {cal.chosen_score.aug_rate:.2f})")
gated, _ = run_condition(ood_data, classifier, policy.with_gate(cal.to_gate()), 3, backends, cache)
print(f"gated TTA {gated.accuracy:.3f} augmenting {gated.aug_rate:.0%} of inputs")

for cls, change in changed_prediction_breakdown(base_recs, tta_recs, 3).items():
    print(f"  {space.classes[cls]:>8}: +{change.new_corrections} fixed, -{change.new_mistakes} broken")

# sweep the number of augmentations; the cache already holds the first four
for m, acc in augmentation_count_sweep(ood_data, classifier, policy, [0, 1, 2, 4, 8], 3, backends, cache):
    print(f"  m={m}: {acc:.3f}")
