"""Built-in task definitions: label spaces, verbalizers and classification prompts.

Class order follows the label ids used in the few-shot prompts, so the
sentiment task is ``negative=0, positive=1, neutral=2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .aggregate import VerbalizerTable
from .augment.prompts import read_resource
from .core import LabelSpace


@dataclass(frozen=True)
class TaskPreset:
    label_space: LabelSpace
    verbalizer: VerbalizerTable
    prompt_template: str

    @property
    def name(self) -> str:
        return self.label_space.task_name


_VERBALIZERS = {
    "sentiment": {
        "0": 0, "negative": 0, "neg": 0,
        "1": 1, "positive": 1, "pos": 1,
        "2": 2, "neutral": 2, "neu": 2,
    },
    "toxicity": {
        "0": 0, "benign": 0, "non-toxic": 0, "not toxic": 0, "no": 0,
        "1": 1, "toxic": 1, "yes": 1,
    },
    "news": {
        "0": 0, "world": 0,
        "1": 1, "sports": 1, "sport": 1,
        "2": 2, "business": 2,
        "3": 3, "sci/tech": 3, "sci": 3, "tech": 3, "science": 3,
    },
}

_CLASSES = {
    "sentiment": ("negative", "positive", "neutral"),
    "toxicity": ("benign", "toxic"),
    "news": ("world", "sports", "business", "sci/tech"),
}


@lru_cache(maxsize=None)
def builtin_task(name: str) -> TaskPreset:
    if name not in _CLASSES:
        raise KeyError(f"no built-in task {name!r}; choose from {sorted(_CLASSES)}")
    return TaskPreset(
        LabelSpace(name, _CLASSES[name]),
        VerbalizerTable(name, _VERBALIZERS[name]),
        read_resource("prompts", f"classify_{name}.txt"),
    )


BUILTIN_TASKS = tuple(_CLASSES)
