"""JSON-over-HTTP clients for the classifier, augmentation LLM and MT services.

Wire formats:

* classifier: ``POST <base_url>`` with ``{"text": ...}`` returning
  ``{"scores": [K reals]}``
* LLM / MT: ``POST <base_url>/completions`` with ``{"model", "prompt",
  "temperature", "n", "max_tokens", "seed", ...}`` returning
  ``{"choices": [{"text": ...}, ...]}``

Every logical call carries an ``X-Request-Id`` header that stays the same
across retries, so a server can deduplicate a retried request.
"""

from __future__ import annotations

import logging
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import httpx

from ..core import ClassDistribution, normalize
from ..errors import ClientUnavailable, DegenerateScores, EmptyGeneration, SchemaError
from .endpoints import (
    BEAM_FIELDS,
    OOD_TEMPERATURE,
    WIRE_NAMES,
    ClassifierEndpoint,
    DecodeParams,
    LlmEndpoint,
    classifier_decode,
)

log = logging.getLogger(__name__)

REQUEST_ID_HEADER = "X-Request-Id"
RETRY_STATUS = frozenset({429, 500, 502, 503, 504})

TEST_INPUT = "<test_input>"
FEW_SHOT_EXEMPLARS = "<few_shot_exemplars>"


class TokenBucket:
    """Blocking token bucket: ``rate`` requests per second, bursts up to ``burst``."""

    def __init__(self, rate: float, burst: int | None = None, clock=time.monotonic, sleep=time.sleep):
        self.rate = float(rate)
        self.capacity = float(burst if burst is not None else max(1, int(rate)))
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                # tolerance: a refill that rounds to 0.999... must not spin on ever-smaller waits
                if self._tokens >= 1 - 1e-9:
                    self._tokens = max(0.0, self._tokens - 1)
                    return
                wait = (1 - self._tokens) / self.rate
            self._sleep(wait)


class JsonHttp:
    """POST JSON with retries on timeouts, connection errors, 429 and 5xx."""

    def __init__(
        self,
        name: str,
        timeout_ms: int,
        max_retries: int,
        backoff_ms: int,
        rate_limit: float | None = None,
        max_connections: int = 16,
        api_key_env: str | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.name = name
        self.max_retries = max_retries
        self.backoff_ms = backoff_ms
        self._sleep = sleep
        self._bucket = TokenBucket(rate_limit) if rate_limit else None
        headers = {}
        if api_key_env:
            key = os.environ.get(api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            else:
                log.warning("%s: environment variable %s is not set", name, api_key_env)
        self._client = httpx.Client(
            timeout=timeout_ms / 1000,
            headers=headers,
            transport=transport,
            limits=httpx.Limits(max_connections=max_connections),
        )

    def close(self) -> None:
        self._client.close()

    def post(self, url: str, body: dict) -> dict:
        request_id = uuid.uuid4().hex
        last_error = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_ms * 2 ** (attempt - 1) / 1000)
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                resp = self._client.post(url, json=body, headers={REQUEST_ID_HEADER: request_id})
            except httpx.TimeoutException as exc:
                last_error = f"timeout: {exc}"
                continue
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code in RETRY_STATUS:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise SchemaError(f"{self.name}: HTTP {resp.status_code} for {url}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError as exc:
                raise SchemaError(f"{self.name}: response is not JSON") from exc
        raise ClientUnavailable(f"{self.name}: gave up after {self.max_retries + 1} attempts ({last_error})")


class LlmClient:
    def __init__(self, endpoint: LlmEndpoint, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.endpoint = endpoint
        self.http = JsonHttp(
            f"llm:{endpoint.model_name}", endpoint.timeout_ms, endpoint.max_retries,
            endpoint.backoff_ms, endpoint.rate_limit, endpoint.max_connections,
            endpoint.api_key_env, transport, sleep,
        )
        self.notes: list[str] = []
        self._notes_lock = threading.Lock()

    def _note(self, msg: str) -> None:
        with self._notes_lock:
            if msg not in self.notes:
                self.notes.append(msg)
                log.info(msg)

    def request_body(self, prompt: str, dp: DecodeParams) -> dict:
        supported = self.endpoint.supported_params
        params = dp.to_dict()
        if supported is not None:
            dropped = sorted(k for k in params if WIRE_NAMES[k] not in supported)
            if dropped:
                self._note(f"{self.endpoint.model_name}: unsupported decode params dropped: {dropped}")
                for k in dropped:
                    del params[k]
                if dp.uses_beams and any(k in BEAM_FIELDS for k in dropped):
                    if params.get("temperature", 0.0) == 0.0:
                        params["temperature"] = OOD_TEMPERATURE
                    self._note(f"{self.endpoint.model_name}: beam search unavailable, "
                               f"sampling at temperature {params['temperature']}")
        body = {"model": self.endpoint.model_name, "prompt": prompt}
        body.update({WIRE_NAMES[k]: v for k, v in params.items()})
        return body

    def complete(self, prompt: str, dp: DecodeParams) -> list[str]:
        """Return exactly ``dp.n`` completions in server order."""
        resp = self.http.post(self.endpoint.completions_url, self.request_body(prompt, dp))
        try:
            texts = [c["text"] for c in resp["choices"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed completion response: {str(resp)[:200]}") from exc
        if len(texts) != dp.n or not all(isinstance(t, str) for t in texts):
            raise SchemaError(f"expected {dp.n} text choices, got {len(texts)}")
        return texts

    def close(self) -> None:
        self.http.close()


def fill_task_prompt(template: str, exemplar_block: str, text: str) -> str:
    from ..augment.prompts import fill_placeholders

    return fill_placeholders(template, {FEW_SHOT_EXEMPLARS: exemplar_block, TEST_INPUT: text})


class ClassifierClient:
    def __init__(self, endpoint: ClassifierEndpoint, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.endpoint = endpoint
        self.http = JsonHttp(
            f"classifier:{endpoint.label_space.task_name}", endpoint.timeout_ms,
            endpoint.max_retries, endpoint.backoff_ms, endpoint.rate_limit,
            endpoint.max_connections, endpoint.api_key_env, transport, sleep,
        )

    def classify_probs(self, text: str) -> ClassDistribution:
        if self.endpoint.mode != "probabilistic":
            raise ValueError("classify_probs needs a probabilistic endpoint")
        resp = self.http.post(self.endpoint.base_url, {"text": text})
        scores = resp.get("scores") if isinstance(resp, dict) else None
        if not isinstance(scores, list):
            raise SchemaError(f"classifier response has no 'scores' list: {str(resp)[:200]}")
        K = self.endpoint.label_space.K
        if len(scores) != K:
            raise SchemaError(f"classifier returned {len(scores)} scores for {K} classes")
        try:
            return normalize(scores)
        except DegenerateScores as exc:
            raise SchemaError(str(exc)) from exc

    def classify_generative(self, llm: LlmClient, task_prompt_template: str,
                            exemplar_block: str, text: str) -> str:
        """Prompt the LLM classifier greedily and return its raw completion."""
        if self.endpoint.mode != "generative":
            raise ValueError("classify_generative needs a generative endpoint")
        prompt = fill_task_prompt(task_prompt_template, exemplar_block, text)
        raw = llm.complete(prompt, classifier_decode())[0]
        if not raw.strip():
            raise EmptyGeneration("classifier LLM returned an empty completion")
        return raw

    def close(self) -> None:
        self.http.close()


class BackTranslator:
    """Round-trip translation through a pivot language, one pivot per sample."""

    def __init__(self, forward: LlmClient, reverse: LlmClient, workers: int = 4):
        self.forward = forward
        self.reverse = reverse
        self.workers = workers

    def back_translate(self, text: str, dp: DecodeParams) -> list[str]:
        pivots = self.forward.complete(text, dp)
        single = dp.replace(n=1)

        def back(p: str) -> str:
            return self.reverse.complete(p, single)[0]

        if self.workers <= 1 or len(pivots) == 1:
            return [back(p) for p in pivots]
        with ThreadPoolExecutor(max_workers=min(self.workers, len(pivots))) as pool:
            return list(pool.map(back, pivots))

    @property
    def notes(self) -> Sequence[str]:
        return [*self.forward.notes, *self.reverse.notes]
