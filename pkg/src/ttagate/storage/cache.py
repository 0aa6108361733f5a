"""Content-addressed augmentation cache.

Layout: ``<root>/<aa>/<bb>/<hash>.txt`` where ``hash`` is the 16-hex-digit
(64-bit) BLAKE2b digest of the original text, the canonicalized augmenter
spec, the seed and the variant index.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from ..errors import CacheConflict


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_hash(*parts: Any) -> str:
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(canonical_json(p).encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


@dataclass(frozen=True)
class CacheKey:
    content_hash: str

    @classmethod
    def for_variant(cls, original_text: str, spec: Mapping, seed: int, index: int) -> CacheKey:
        return cls(stable_hash(original_text, dict(spec), int(seed), int(index)))

    def relpath(self) -> Path:
        h = self.content_hash
        return Path(h[:2], h[2:4], f"{h}.txt")

    def __str__(self):
        return self.content_hash


class AugmentationCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path(self, key: CacheKey) -> Path:
        return self.root / key.relpath()

    def get(self, key: CacheKey) -> str | None:
        try:
            return self.path(key).read_bytes().decode("utf-8")
        except FileNotFoundError:
            return None

    def __contains__(self, key: CacheKey) -> bool:
        return self.path(key).exists()

    def put(self, key: CacheKey, text: str) -> None:
        """Store atomically. Re-putting identical text is a no-op; different
        text under an existing key raises :class:`CacheConflict`."""
        target = self.path(key)
        data = text.encode("utf-8")
        existing = self.get(key)
        if existing is not None:
            if existing.encode("utf-8") != data:
                raise CacheConflict(f"cache key {key} already holds different content")
            return
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-", suffix=".txt")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(data)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def __len__(self):
        return sum(1 for _ in self.root.glob("*/*/*.txt"))


class MemoryCache:
    """Dict-backed cache with the same interface, for tests and dry runs."""

    def __init__(self):
        self.store: dict[str, str] = {}

    def get(self, key: CacheKey) -> str | None:
        return self.store.get(key.content_hash)

    def __contains__(self, key: CacheKey) -> bool:
        return key.content_hash in self.store

    def put(self, key: CacheKey, text: str) -> None:
        old = self.store.get(key.content_hash)
        if old is not None and old != text:
            raise CacheConflict(f"cache key {key} already holds different content")
        self.store[key.content_hash] = text

    def __len__(self):
        return len(self.store)
