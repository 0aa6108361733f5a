"""Adapters giving every task model the same ``predict(text)`` interface."""

from __future__ import annotations

from typing import Callable, Sequence

from ..aggregate import VerbalizerTable, verbalize
from ..clients.http import ClassifierClient, LlmClient
from ..core import LabelSpace, Prediction, normalize
from ..errors import EmptyGeneration, SchemaError, Unmappable


class ProbabilisticClassifier:
    """Wraps a remote classifier, or any ``text -> scores`` callable."""

    mode = "probabilistic"

    def __init__(self, scorer: ClassifierClient | Callable[[str], Sequence[float]],
                 label_space: LabelSpace | None = None):
        if isinstance(scorer, ClassifierClient):
            self._score = scorer.classify_probs
            label_space = label_space or scorer.endpoint.label_space
        else:
            self._score = lambda text: normalize(scorer(text))
        if label_space is None:
            raise ValueError("a label space is required for a local scorer")
        self.label_space = label_space

    def predict(self, text: str) -> Prediction:
        dist = self._score(text)
        if dist.K != self.label_space.K:
            raise SchemaError(f"scorer returned {dist.K} classes, expected {self.label_space.K}")
        return Prediction.from_distribution(dist)


class GenerativeClassifier:
    """Task model that answers in tokens; a verbalizer maps them to classes.

    ``predict`` returns ``None`` when the answer is empty or unmappable.
    """

    mode = "generative"

    def __init__(self, generate: Callable[[str], str], verbalizer: VerbalizerTable,
                 label_space: LabelSpace):
        self._generate = generate
        self.verbalizer = verbalizer
        self.label_space = label_space

    @classmethod
    def from_clients(cls, client: ClassifierClient, llm: LlmClient, task_prompt_template: str,
                     exemplar_block: str, verbalizer: VerbalizerTable) -> GenerativeClassifier:
        def generate(text: str) -> str:
            return client.classify_generative(llm, task_prompt_template, exemplar_block, text)

        return cls(generate, verbalizer, client.endpoint.label_space)

    def predict(self, text: str) -> Prediction | None:
        try:
            raw = self._generate(text)
            return Prediction(verbalize(raw, self.verbalizer), raw_token=raw)
        except (EmptyGeneration, Unmappable):
            return None
