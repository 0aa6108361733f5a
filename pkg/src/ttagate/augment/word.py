"""Word insertion and substitution from a static synonym lexicon."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

DEFAULT_P_WORD = 0.3
DEFAULT_MAX_WORDS = 10

_AFFIX = re.compile(r"^(\W*)(.*?)(\W*)$", re.DOTALL)


@dataclass(frozen=True)
class SynonymLexicon:
    entries: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        clean = {}
        for key, syns in self.entries.items():
            key = key.lower()
            syns = tuple(s for s in syns if s)
            if not syns:
                raise ValueError(f"lexicon entry {key!r} has no replacements")
            if key in syns:
                raise ValueError(f"lexicon entry {key!r} lists itself as a replacement")
            if any(len(s.split()) != 1 for s in syns):
                # multi-word synonyms would change the token count under substitute
                raise ValueError(f"lexicon entry {key!r} has a multi-word replacement")
            clean[key] = syns
        object.__setattr__(self, "entries", MappingProxyType(clean))

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def __len__(self):
        return len(self.entries)

    def get(self, word: str) -> tuple[str, ...] | None:
        return self.entries.get(word.lower())

    @classmethod
    def parse(cls, text: str) -> SynonymLexicon:
        """Parse ``word<TAB>syn1,syn2,...`` lines; blank lines and ``#`` comments are skipped."""
        entries: dict[str, tuple[str, ...]] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, syns = line.split("\t")
            except ValueError:
                raise ValueError(f"lexicon line {lineno}: expected 'word<TAB>syn,...'") from None
            entries[word.strip()] = tuple(s.strip() for s in syns.split(",") if s.strip())
        return cls(entries)


def load_lexicon(path: str | Path) -> SynonymLexicon:
    return SynonymLexicon.parse(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_lexicon() -> SynonymLexicon:
    from .prompts import read_resource

    return SynonymLexicon.parse(read_resource("lexicon.tsv"))


def _match_case(template: str, word: str) -> str:
    if template.isupper() and len(template) > 1:
        return word.upper()
    if template[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def word_augment(
    text: str,
    kind: str,
    lexicon: SynonymLexicon,
    p_word: float = DEFAULT_P_WORD,
    max_words: int = DEFAULT_MAX_WORDS,
    seed: int = 0,
) -> str:
    """Randomly substitute or insert synonyms for lexicon words.

    Tokens are whitespace-separated. Only tokens whose core (surrounding
    punctuation stripped, lowercased) is in the lexicon are candidates. Each
    candidate is picked with probability ``p_word`` until ``max_words`` have
    been picked. ``substitute`` swaps the core for a random synonym keeping
    the punctuation; ``insert`` adds a synonym as a new token right after.
    """
    if kind not in ("insert", "substitute"):
        raise ValueError(f"kind must be 'insert' or 'substitute', got {kind!r}")
    if not 0.0 <= p_word <= 1.0:
        raise ValueError(f"p_word must be in [0, 1], got {p_word}")
    if max_words < 1:
        raise ValueError(f"max_words must be >= 1, got {max_words}")

    rng = np.random.default_rng(seed)
    out: list[str] = []
    picked = 0
    for tok in text.split():
        if picked >= max_words:
            out.append(tok)
            continue
        lead, core, trail = _AFFIX.match(tok).groups()
        syns = lexicon.get(core) if core else None
        if syns is None or rng.random() >= p_word:
            out.append(tok)
            continue
        picked += 1
        choice = _match_case(core, syns[int(rng.integers(len(syns)))])
        if kind == "substitute":
            out.append(f"{lead}{choice}{trail}")
        else:
            out.extend([tok, choice])
    return " ".join(out)
