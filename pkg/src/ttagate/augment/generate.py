"""Building the augmentation set of one test input."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..clients.endpoints import DecodeParams, back_translation_decode, ood_decode
from ..clients.http import BackTranslator, LlmClient
from ..core import TestInput
from ..errors import CacheMiss, ClientUnavailable, EmptyGeneration, NoExemplars, SchemaError
from ..storage.cache import CacheKey, stable_hash
from .prompts import build_icr_prompt, build_paraphrase_prompt, extract_rewrite
from .word import DEFAULT_MAX_WORDS, DEFAULT_P_WORD, SynonymLexicon, default_lexicon, word_augment

log = logging.getLogger(__name__)


class AugmenterKind(str, enum.Enum):
    IDENTITY = "identity"
    WORD_INSERT = "word_insert"
    WORD_SUBSTITUTE = "word_substitute"
    BACK_TRANSLATE = "back_translate"
    LLM_PARAPHRASE = "llm_paraphrase"
    LLM_ICR = "llm_icr"

    @property
    def is_llm(self) -> bool:
        return self in (AugmenterKind.LLM_PARAPHRASE, AugmenterKind.LLM_ICR)

    @property
    def is_word(self) -> bool:
        return self in (AugmenterKind.WORD_INSERT, AugmenterKind.WORD_SUBSTITUTE)


@dataclass(frozen=True)
class AugmenterSpec:
    """Which augmenter to run and with what parameters.

    ``params`` keys by kind: ``p_word``/``max_words`` for the word-level
    augmenters, ``k`` for in-context rewriting, and ``decode`` (a
    :class:`DecodeParams` field dict) for the generated ones. Missing decode
    settings fall back to sampling at temperature 0.3 for the LLM kinds and
    the round-trip translation defaults for ``back_translate``.
    """

    kind: AugmenterKind
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", AugmenterKind(self.kind))
        params = dict(self.params)
        if isinstance(params.get("decode"), DecodeParams):
            params["decode"] = params["decode"].to_dict()
        object.__setattr__(self, "params", params)
        if self.kind.is_word:
            p = self.p_word
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p_word must be in [0, 1], got {p}")
            if self.max_words < 1:
                raise ValueError(f"max_words must be >= 1, got {self.max_words}")
        if self.kind is AugmenterKind.LLM_ICR and self.k < 1:
            raise ValueError(f"k must be >= 1 for in-context rewriting, got {self.k}")
        if "decode" in params:
            # n is set per call from m; validate the remaining field names
            DecodeParams.from_dict({k: v for k, v in params["decode"].items() if k != "n"})

    @property
    def p_word(self) -> float:
        return float(self.params.get("p_word", DEFAULT_P_WORD))

    @property
    def max_words(self) -> int:
        return int(self.params.get("max_words", DEFAULT_MAX_WORDS))

    @property
    def k(self) -> int:
        return int(self.params.get("k", 16))

    def decode(self, m: int, seed: int) -> DecodeParams:
        if self.kind is AugmenterKind.BACK_TRANSLATE:
            base = back_translation_decode(m, seed)
        else:
            base = ood_decode(m, seed)
        override = dict(self.params.get("decode", {}))
        override.update(n=m, seed=seed)
        return base.replace(**override)

    def canonical(self) -> dict:
        """Key material for the cache: sorted params with per-call fields removed.

        ``n`` is dropped because it only mirrors the requested count and the
        variant index already identifies the sample.
        """
        params = {k: v for k, v in sorted(self.params.items())}
        if "decode" in params:
            params["decode"] = {k: v for k, v in sorted(params["decode"].items()) if k not in ("n", "seed")}
        return {"kind": self.kind.value, "params": params}

    @classmethod
    def identity(cls):
        return cls(AugmenterKind.IDENTITY)

    @classmethod
    def word_insert(cls, p_word=DEFAULT_P_WORD, max_words=DEFAULT_MAX_WORDS):
        return cls(AugmenterKind.WORD_INSERT, {"p_word": p_word, "max_words": max_words})

    @classmethod
    def word_substitute(cls, p_word=DEFAULT_P_WORD, max_words=DEFAULT_MAX_WORDS):
        return cls(AugmenterKind.WORD_SUBSTITUTE, {"p_word": p_word, "max_words": max_words})

    @classmethod
    def back_translate(cls, decode: DecodeParams | dict | None = None):
        return cls(AugmenterKind.BACK_TRANSLATE, {"decode": decode} if decode else {})

    @classmethod
    def paraphrase(cls, decode: DecodeParams | dict | None = None):
        return cls(AugmenterKind.LLM_PARAPHRASE, {"decode": decode} if decode else {})

    @classmethod
    def icr(cls, k: int = 16, decode: DecodeParams | dict | None = None):
        params = {"k": k}
        if decode:
            params["decode"] = decode
        return cls(AugmenterKind.LLM_ICR, params)


@dataclass(frozen=True)
class Variant:
    text: str
    backend: AugmenterKind
    seed: int
    index: int
    fallback: bool = False


@dataclass(frozen=True)
class AugmentationSet:
    input_id: str
    original_text: str
    variants: tuple[Variant, ...]
    ref: str = ""
    prompt_hash: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(self.variants))
        v0 = self.variants[0]
        if v0.text != self.original_text or v0.backend is not AugmenterKind.IDENTITY:
            raise ValueError("variant 0 must be the identity")
        if any(not v.text.strip() for v in self.variants):
            raise ValueError("augmentation texts must be non-empty")

    @property
    def m(self) -> int:
        return len(self.variants) - 1

    @property
    def texts(self) -> list[str]:
        return [v.text for v in self.variants]

    def head(self, m: int) -> AugmentationSet:
        """The identity plus the first ``m`` augmentations."""
        if m > self.m:
            raise ValueError(f"asked for {m} augmentations, set has {self.m}")
        return AugmentationSet(self.input_id, self.original_text, self.variants[: m + 1],
                               self.ref, self.prompt_hash)


@dataclass
class Backends:
    """Services available to the augmenters.

    With ``fallback`` on, a failed or empty generation becomes a copy of the
    original text flagged ``fallback=True``. With ``replay`` on, nothing is
    generated and any cache miss raises :class:`CacheMiss`.
    """

    llm: LlmClient | None = None
    mt: BackTranslator | None = None
    lexicon: SynonymLexicon | None = None
    fallback: bool = True
    replay: bool = False


def variant_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(index)]).generate_state(1)[0])


def generate_augmentations(
    input: TestInput,
    spec: AugmenterSpec,
    m: int,
    seed: int,
    backends: Backends | None = None,
    cache=None,
    exemplars: Sequence[str] | None = None,
) -> AugmentationSet:
    """Return the identity plus ``m`` augmentations of ``input``.

    The LLM augmenters send one request for ``n=m`` samples; back-translation
    sends ``m`` round trips. Each augmentation is cached under
    ``(text, spec, seed, index)``, so repeating a call with a warm cache makes
    no client calls. Fallback variants are never cached.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    backends = backends or Backends()
    text = input.text
    material = spec.canonical()
    prompt = None
    if spec.kind is AugmenterKind.LLM_ICR:
        if not exemplars:
            raise NoExemplars("in-context rewriting needs exemplars")
        exemplars = list(exemplars)
        material["exemplars"] = stable_hash(exemplars)
        prompt = build_icr_prompt(text, exemplars)
    elif spec.kind is AugmenterKind.LLM_PARAPHRASE:
        prompt = build_paraphrase_prompt(text)

    keys = [CacheKey.for_variant(text, material, seed, i) for i in range(1, m + 1)]
    texts: list[str | None] = [cache.get(k) if cache is not None else None for k in keys]
    missing = [i for i, t in enumerate(texts) if t is None]
    fallback = [False] * m

    if missing and backends.replay:
        raise CacheMiss(f"{input.id}: {len(missing)} of {m} augmentations not cached (replay mode)")
    if missing:
        fresh = _produce(text, spec, m, seed, backends, prompt, missing)
        for i in missing:
            out = fresh[i]
            if out is None:
                fallback[i] = True
                texts[i] = text
            else:
                texts[i] = out
                if cache is not None:
                    cache.put(keys[i], out)

    variants = [Variant(text, AugmenterKind.IDENTITY, seed, 0)]
    for i in range(m):
        # word-level variants each draw from their own RNG; generated ones share the request seed
        vseed = variant_seed(seed, i + 1) if spec.kind.is_word else seed
        variants.append(Variant(texts[i], spec.kind, vseed, i + 1, fallback[i]))
    return AugmentationSet(
        input.id, text, tuple(variants),
        ref=stable_hash(text, material, seed),
        prompt_hash=stable_hash(prompt) if prompt is not None else None,
    )


def _produce(text: str, spec: AugmenterSpec, m: int, seed: int, backends: Backends,
             prompt: str | None, missing: list[int]) -> dict[int, str | None]:
    """Generate the missing slots; ``None`` marks a slot that needs a fallback."""
    kind = spec.kind
    if kind is AugmenterKind.IDENTITY:
        return {i: text for i in missing}

    if kind.is_word:
        lexicon = backends.lexicon or default_lexicon()
        mode = "insert" if kind is AugmenterKind.WORD_INSERT else "substitute"
        return {i: word_augment(text, mode, lexicon, spec.p_word, spec.max_words, variant_seed(seed, i + 1))
                for i in missing}

    dp = spec.decode(m, seed)
    try:
        if kind is AugmenterKind.BACK_TRANSLATE:
            if backends.mt is None:
                raise ClientUnavailable("no back-translation client configured")
            raw = backends.mt.back_translate(text, dp)
        else:
            if backends.llm is None:
                raise ClientUnavailable("no LLM client configured")
            raw = backends.llm.complete(prompt, dp)
    except (ClientUnavailable, SchemaError) as exc:
        if not backends.fallback:
            raise
        log.warning("augmentation backend failed, using fallback for %d slots: %s", len(missing), exc)
        return {i: None for i in missing}

    out: dict[int, str | None] = {}
    for i in missing:
        try:
            out[i] = extract_rewrite(raw[i]) if kind.is_llm else _clean_translation(raw[i])
        except EmptyGeneration:
            out[i] = None
    return out


def _clean_translation(s: str) -> str:
    s = s.strip()
    if not s:
        raise EmptyGeneration("empty translation")
    return s
