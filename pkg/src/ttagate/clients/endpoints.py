"""Endpoint descriptions and decoding parameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..core import LabelSpace

DEFAULT_TIMEOUT_MS = 30_000
DEFAULT_MAX_RETRIES = 3
DEFAULT_BACKOFF_MS = 250


@dataclass(frozen=True)
class ClassifierEndpoint:
    base_url: str
    label_space: LabelSpace
    mode: str = "probabilistic"
    verbalizer_ref: str | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_retries: int = DEFAULT_MAX_RETRIES
    backoff_ms: int = DEFAULT_BACKOFF_MS
    rate_limit: float | None = None
    max_connections: int = 16
    api_key_env: str | None = None

    def __post_init__(self):
        if self.mode not in ("probabilistic", "generative"):
            raise ValueError(f"mode must be probabilistic or generative, got {self.mode!r}")
        if self.mode == "generative" and not self.verbalizer_ref:
            raise ValueError("a generative classifier needs a verbalizer_ref")
        _check_common(self)


@dataclass(frozen=True)
class LlmEndpoint:
    base_url: str
    model_name: str
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_retries: int = DEFAULT_MAX_RETRIES
    backoff_ms: int = DEFAULT_BACKOFF_MS
    rate_limit: float | None = None
    max_connections: int = 16
    api_key_env: str | None = None
    # wire names the server accepts; None means "everything"
    supported_params: frozenset[str] | None = None

    def __post_init__(self):
        _check_common(self)
        if self.supported_params is not None:
            object.__setattr__(self, "supported_params", frozenset(self.supported_params))

    @property
    def completions_url(self) -> str:
        return self.base_url.rstrip("/") + "/completions"


def _check_common(ep) -> None:
    if ep.timeout_ms <= 0:
        raise ValueError(f"timeout_ms must be > 0, got {ep.timeout_ms}")
    if ep.max_retries < 0:
        raise ValueError(f"max_retries must be >= 0, got {ep.max_retries}")
    if ep.backoff_ms < 0:
        raise ValueError(f"backoff_ms must be >= 0, got {ep.backoff_ms}")
    if ep.rate_limit is not None and ep.rate_limit <= 0:
        raise ValueError(f"rate_limit must be positive, got {ep.rate_limit}")


# DecodeParams field -> completion request key
WIRE_NAMES = {
    "temperature": "temperature",
    "n": "n",
    "max_new_tokens": "max_tokens",
    "top_p": "top_p",
    "top_k": "top_k",
    "repetition_penalty": "repetition_penalty",
    "diversity_penalty": "diversity_penalty",
    "num_beams": "num_beams",
    "num_beam_groups": "num_beam_groups",
    "no_repeat_ngram": "no_repeat_ngram_size",
    "seed": "seed",
}

BEAM_FIELDS = ("num_beams", "num_beam_groups", "diversity_penalty")


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    n: int = 1
    max_new_tokens: int = 256
    top_p: float | None = None
    top_k: int | None = None
    repetition_penalty: float | None = None
    diversity_penalty: float | None = None
    num_beams: int | None = None
    num_beam_groups: int | None = None
    no_repeat_ngram: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        # greedy decoding would return n identical strings; beam search is exempt
        if self.temperature == 0 and self.n > 1 and not self.uses_beams:
            raise ValueError("temperature=0 (greedy) with n > 1 returns duplicates; use n=1")

    @property
    def uses_beams(self) -> bool:
        return bool(self.num_beams and self.num_beams > 1)

    def replace(self, **changes) -> DecodeParams:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> DecodeParams:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown decode parameters: {sorted(unknown)}")
        return cls(**d)

    def wire(self) -> dict:
        return {WIRE_NAMES[k]: v for k, v in self.to_dict().items()}


OOD_TEMPERATURE = 0.3


def ood_decode(m: int = 4, seed: int | None = None) -> DecodeParams:
    """Sampling used for out-of-distribution rewrites: n=m at temperature 0.3."""
    return DecodeParams(temperature=OOD_TEMPERATURE, n=m, seed=seed)


def id_beam_decode(m: int = 4, seed: int | None = None) -> DecodeParams:
    """Diverse beam search used for in-distribution rewrites."""
    return DecodeParams(temperature=0.0, n=m, num_beams=4, num_beam_groups=4,
                        diversity_penalty=0.5, seed=seed)


def back_translation_decode(n: int = 4, seed: int | None = None) -> DecodeParams:
    return DecodeParams(
        temperature=0.7, n=n, num_beams=4, num_beam_groups=4, top_p=0.95, top_k=0,
        repetition_penalty=10.0, diversity_penalty=1.0, no_repeat_ngram=2, seed=seed,
    )


def classifier_decode() -> DecodeParams:
    """Greedy decoding, at most 10 new tokens."""
    return DecodeParams(temperature=0.0, n=1, max_new_tokens=10)
