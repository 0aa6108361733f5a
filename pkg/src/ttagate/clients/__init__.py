from .endpoints import (
    ClassifierEndpoint,
    DecodeParams,
    LlmEndpoint,
    back_translation_decode,
    classifier_decode,
    id_beam_decode,
    ood_decode,
)
from .http import BackTranslator, ClassifierClient, JsonHttp, LlmClient, TokenBucket, fill_task_prompt

__all__ = [
    "BackTranslator",
    "ClassifierClient",
    "ClassifierEndpoint",
    "DecodeParams",
    "JsonHttp",
    "LlmClient",
    "LlmEndpoint",
    "TokenBucket",
    "back_translation_decode",
    "classifier_decode",
    "fill_task_prompt",
    "id_beam_decode",
    "ood_decode",
]
