"""Recording mock server and deterministic fake services.

:class:`MockServer` speaks the same JSON wire format as the real services.
It can be plugged straight into the clients as an ``httpx`` transport, or
served on a local port for code that only takes a base URL. Every request is
recorded, responses are deduplicated by request id (so a retried request
never applies its effect twice), and failures can be scripted per route.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from collections import Counter, defaultdict, deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterator, Mapping, Sequence

import httpx
import numpy as np

from ..augment.word import SynonymLexicon, default_lexicon, word_augment
from .http import REQUEST_ID_HEADER

Handler = Callable[[dict], "dict | tuple[int, dict]"]


@dataclass
class RecordedRequest:
    path: str
    body: dict
    request_id: str | None
    headers: dict = field(default_factory=dict)


class MockServer:
    def __init__(self, routes: Mapping[str, Handler] | None = None):
        self.routes: dict[str, Handler] = dict(routes or {})
        self.requests: list[RecordedRequest] = []
        self.effects: Counter = Counter()
        self._responses: dict[str, tuple[int, dict]] = {}
        self._failures: dict[str, deque] = defaultdict(deque)
        self._lock = threading.Lock()

    def route(self, path: str, handler: Handler) -> MockServer:
        self.routes[path] = handler
        return self

    def fail(self, path: str, *modes) -> MockServer:
        """Queue failures for the next requests to ``path``.

        A mode is an HTTP status code, ``"timeout"``, or ``"lost"`` (the
        request takes effect but the response never arrives).
        """
        self._failures[path].extend(modes)
        return self

    def fail_always(self, path: str, mode=503) -> MockServer:
        return self.route(path, lambda body: (mode, {"error": "unavailable"}))

    def requests_to(self, path: str) -> list[RecordedRequest]:
        return [r for r in self.requests if r.path == path]

    def assert_at_most_once(self) -> None:
        over = {rid: n for rid, n in self.effects.items() if n > 1}
        assert not over, f"requests applied more than once: {over}"

    def handle(self, path: str, body: dict, request_id: str | None,
               headers: dict | None = None) -> tuple[int, dict] | str:
        with self._lock:
            self.requests.append(RecordedRequest(path, body, request_id, dict(headers or {})))
            mode = self._failures[path].popleft() if self._failures[path] else None
            if mode is not None and mode != "lost":
                return mode if mode == "timeout" else (int(mode), {"error": f"scripted {mode}"})
            if request_id is not None and request_id in self._responses:
                if mode == "lost":
                    return 503, {"error": "response lost"}
                return self._responses[request_id]
        handler = self.routes.get(path)
        if handler is None:
            return 404, {"error": f"no route {path}"}
        try:
            out = handler(body)
        except Exception as exc:  # surfaced to the client as a server error
            return 500, {"error": repr(exc)}
        status, payload = out if isinstance(out, tuple) else (200, out)
        with self._lock:
            if status < 400:
                key = request_id if request_id is not None else f"anon-{len(self.requests)}"
                self.effects[key] += 1
                if request_id is not None:
                    self._responses[request_id] = (status, payload)
        if mode == "lost":
            return 503, {"error": "response lost"}
        return status, payload

    def __call__(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content or b"{}")
        result = self.handle(request.url.path, body, request.headers.get(REQUEST_ID_HEADER),
                             dict(request.headers))
        if result == "timeout":
            raise httpx.ReadTimeout("scripted timeout", request=request)
        status, payload = result
        return httpx.Response(status, json=payload)

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self)

    @contextmanager
    def serve(self, host: str = "127.0.0.1") -> Iterator[str]:
        """Serve on a free local port; yields the base URL."""
        server_ref = self

        class _Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length") or 0)
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except ValueError:
                    self._send(400, {"error": "bad json"})
                    return
                result = server_ref.handle(self.path, body, self.headers.get(REQUEST_ID_HEADER),
                                           dict(self.headers))
                if result == "timeout":
                    result = (504, {"error": "scripted timeout"})
                self._send(*result)

            def _send(self, status, payload):
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        httpd = ThreadingHTTPServer((host, 0), _Handler)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        try:
            yield f"http://{host}:{httpd.server_address[1]}"
        finally:
            httpd.shutdown()
            httpd.server_close()
            thread.join()


def stable_int(*parts) -> int:
    """Process-independent 64-bit integer hash of the given parts."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "big")


def scores_route(model: Callable[[str], Sequence[float]]) -> Handler:
    def handler(body: dict) -> dict:
        return {"scores": [float(s) for s in model(body["text"])]}

    return handler


Generator = Callable[[str, int, dict], str]


def completion_route(generate: Generator | Mapping[str, Generator]) -> Handler:
    """Completion endpoint; ``generate(prompt, index, body)`` makes each choice.

    Pass a mapping to dispatch on the request's ``model`` field.
    """

    def handler(body: dict) -> dict | tuple[int, dict]:
        fn = generate
        if isinstance(generate, Mapping):
            fn = generate.get(body.get("model"))
            if fn is None:
                return 404, {"error": f"unknown model {body.get('model')!r}"}
        n = int(body.get("n", 1))
        return {"choices": [{"index": i, "text": fn(body["prompt"], i, body)} for i in range(n)]}

    return handler


class KeywordModel:
    """Toy classifier: keyword votes plus a small hashed per-token jitter.

    Deterministic in the text, so identical texts always get identical
    scores, while swapping a word for a synonym can move the prediction.
    """

    def __init__(self, K: int, keywords: Mapping[str, int], strength: float = 1.0,
                 jitter: float = 0.4, seed: int = 0):
        self.K = K
        self.keywords = {k.lower(): v for k, v in keywords.items()}
        self.strength = strength
        self.jitter = jitter
        self.seed = seed

    def __call__(self, text: str) -> list[float]:
        logits = np.zeros(self.K)
        for tok in text.lower().split():
            core = tok.strip(".,!?;:\"'()")
            if core in self.keywords:
                logits[self.keywords[core]] += self.strength
            rng = np.random.default_rng(stable_int(self.seed, core))
            logits += self.jitter * rng.standard_normal(self.K)
        p = np.exp(logits - logits.max())
        return list(p / p.sum())


_PARA_INPUT = re.compile(r'Now paraphrase \{\{\{"(.*)"\}\}\}\.', re.DOTALL)
_ICR_INPUT = re.compile(r'Now paraphrase ```"(.*)"``` as\nif it was', re.DOTALL)


def style_input_of(prompt: str) -> tuple[str, str]:
    """Recover ``(kind, input text)`` from a rewrite prompt."""
    m = _ICR_INPUT.search(prompt)
    if m:
        return "icr", m.group(1)
    m = _PARA_INPUT.search(prompt)
    if m:
        return "paraphrase", m.group(1)
    return "raw", prompt


class FakeRewriter:
    """Stand-in rewrite LLM: seeded synonym substitution, answered in the
    delimiter style the prompt asks for."""

    def __init__(self, lexicon: SynonymLexicon | None = None, p_word: float = 0.5):
        self.lexicon = lexicon or default_lexicon()
        self.p_word = p_word

    def __call__(self, prompt: str, index: int, body: dict) -> str:
        kind, text = style_input_of(prompt)
        seed = stable_int(text, index, body.get("seed"), body.get("temperature"))
        out = word_augment(text, "substitute", self.lexicon, self.p_word, 10, seed)
        if kind == "icr":
            return f"```{out}```"
        return f"{out}}}}}}}"  # the paraphrase prompt already opened the braces


def fake_mt_forward(prompt: str, index: int, body: dict) -> str:
    return f"[de:{index}] {prompt}"


def fake_mt_reverse(lexicon: SynonymLexicon | None = None) -> Generator:
    lex = lexicon or default_lexicon()

    def reverse(prompt: str, index: int, body: dict) -> str:
        m = re.match(r"\[de:(\d+)\] (.*)", prompt, re.DOTALL)
        if not m:
            return prompt
        i, text = int(m.group(1)), m.group(2)
        return word_augment(text, "substitute", lex, 0.5, 10, stable_int("bt", text, i, body.get("seed")))

    return reverse
