"""Rewrite prompts for the LLM augmenters and parsing of their responses."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

from ..errors import EmptyGeneration, NoExemplars

STYLE_INPUT = "<style_input>"
STYLE_EXEMPLARS = "<style_transfer_exemplars>"

_QUOTES = "\"'“”‘’"


@dataclass(frozen=True)
class PromptTemplate:
    kind: str
    body: str

    def __post_init__(self):
        if self.kind not in ("paraphrase", "icr"):
            raise ValueError(f"unknown prompt kind {self.kind!r}")
        wanted = [STYLE_INPUT] + ([STYLE_EXEMPLARS] if self.kind == "icr" else [])
        for placeholder in wanted:
            if self.body.count(placeholder) != 1:
                raise ValueError(f"{self.kind} template must contain {placeholder} exactly once")


def read_resource(*parts: str) -> str:
    ref = resources.files("ttagate").joinpath("resources")
    for p in parts:
        ref = ref.joinpath(p)
    return ref.read_bytes().decode("utf-8")


@lru_cache(maxsize=None)
def load_template(kind: str) -> PromptTemplate:
    return PromptTemplate(kind, read_resource("prompts", f"{kind}.txt"))


def fill_placeholders(template: str, values: Mapping[str, str]) -> str:
    """Substitute every placeholder in a single pass.

    Doing it in one pass means placeholder-looking text inside a substituted
    value is never expanded again.
    """
    pattern = re.compile("|".join(re.escape(k) for k in values))
    return pattern.sub(lambda m: values[m.group(0)], template)


def build_paraphrase_prompt(text: str) -> str:
    if not text:
        raise ValueError("cannot build a prompt for empty text")
    return fill_placeholders(load_template("paraphrase").body, {STYLE_INPUT: text})


def build_icr_prompt(text: str, exemplars: Sequence[str]) -> str:
    if not exemplars:
        raise NoExemplars("in-context rewriting needs at least one exemplar")
    if not text:
        raise ValueError("cannot build a prompt for empty text")
    block = "\n".join(exemplars)
    return fill_placeholders(load_template("icr").body, {STYLE_EXEMPLARS: block, STYLE_INPUT: text})


# the closing delimiter is the last of a run, so content ending in "}" survives
_BRACES = re.compile(r"\{\{\{(.*?)\}\}\}(?!\})", re.DOTALL)
_FENCE = re.compile(r"```(.*?)```(?!`)", re.DOTALL)
_BRACE_CLOSE = re.compile(r"\}\}\}(?!\})")
_FENCE_CLOSE = re.compile(r"```(?!`)")
_LABEL = re.compile(r"^\s*Paraphrased\s+(?:Input\s+)?Text\s*:", re.IGNORECASE)


def _clean(s: str) -> str:
    prev = None
    while prev != s:
        prev = s
        s = s.strip().strip(_QUOTES)
    return s


def extract_rewrite(llm_response: str) -> str:
    """Pull the rewritten text out of a raw LLM completion.

    Tries, in order: the first ``{{{...}}}`` block, the first triple-backtick
    block, then the whole response minus a leading "Paraphrased Text:" label.
    When a model only closed (or only opened) the block, the text inside the
    one surviving delimiter is kept and anything past a closer is dropped.

    Raises:
        EmptyGeneration: if nothing is left after cleanup.
    """
    m = _BRACES.search(llm_response)
    if m is None:
        m = _FENCE.search(llm_response)
    if m is not None:
        out = _clean(m.group(1))
    else:
        rest = _LABEL.sub("", llm_response, count=1).strip()
        # only one side of a block survived: keep what lies inside it
        for opener in ("{{{", "```"):
            if opener in rest:
                rest = rest.split(opener, 1)[1]
                break
        closer = _BRACE_CLOSE.search(rest) or _FENCE_CLOSE.search(rest)
        if closer is not None:
            rest = rest[: closer.start()]
        out = _clean(rest)
    if not out:
        raise EmptyGeneration(f"no rewrite found in {llm_response[:80]!r}")
    return out
