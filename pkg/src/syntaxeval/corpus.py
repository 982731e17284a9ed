"""Snippet corpus: JSONL ingest, dedup, seeded subsampling, persistence.

A corpus is an ordered, immutable collection of snippets. The on-disk format
is JSON Lines, one object per snippet: {"id": str?, "source": str,
"origin": str?}. Snippets above the byte limit are skipped at ingest and
counted, since fill-mask models have bounded input windows.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import ConfounderVector

log = logging.getLogger(__name__)

DEFAULT_MAX_BYTES = 8192


class CorpusError(ValueError):
    """Malformed corpus input (bad JSON, missing fields, duplicate ids)."""


@dataclass(frozen=True)
class Snippet:
    id: str
    source: str
    origin: str = ""
    features: ConfounderVector | None = None

    def __post_init__(self):
        if not self.source:
            raise CorpusError(f"snippet {self.id!r}: source must be non-empty")


@dataclass(frozen=True)
class Corpus:
    snippets: tuple[Snippet, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.snippets)

    def __iter__(self):
        return iter(self.snippets)

    def ids(self) -> list[str]:
        return [s.id for s in self.snippets]


def _normalize(source: str) -> str:
    """Dedup key: strip trailing whitespace per line."""
    return "\n".join(line.rstrip() for line in source.split("\n"))


def ingest_jsonl(path: str | Path, max_bytes: int = DEFAULT_MAX_BYTES) -> Corpus:
    """Read a snippet corpus from JSON Lines, preserving line order.

    Missing ids become zero-padded 0-based line indices. Oversized snippets
    are skipped with a counted warning. Malformed lines raise CorpusError
    naming the 1-based line number.
    """
    path = Path(path)
    snippets: list[Snippet] = []
    seen_ids: set[str] = set()
    skipped_oversize = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno + 1}: invalid JSON") from exc
            if not isinstance(obj, dict) or "source" not in obj:
                raise CorpusError(f"line {lineno + 1}: missing required 'source' field")
            source = obj["source"]
            if not isinstance(source, str) or not source:
                raise CorpusError(f"line {lineno + 1}: 'source' must be a non-empty string")
            if len(source.encode("utf-8")) > max_bytes:
                skipped_oversize += 1
                continue
            snippet_id = str(obj.get("id", "")) or f"{lineno:06d}"
            if snippet_id in seen_ids:
                raise CorpusError(f"line {lineno + 1}: duplicate snippet id {snippet_id!r}")
            seen_ids.add(snippet_id)
            snippets.append(Snippet(id=snippet_id, source=source, origin=str(obj.get("origin", ""))))
    if skipped_oversize:
        log.warning("ingest %s: skipped %d snippets over %d bytes", path, skipped_oversize, max_bytes)
    meta = {
        "created": datetime.now(timezone.utc).isoformat(),
        "source_description": str(path),
        "skipped_oversize": skipped_oversize,
    }
    return Corpus(snippets=tuple(snippets), metadata=meta)


def write_jsonl(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for s in corpus:
            fh.write(json.dumps({"id": s.id, "source": s.source, "origin": s.origin}, ensure_ascii=False))
            fh.write("\n")


def dedup(corpus: Corpus) -> Corpus:
    """Keep the first occurrence of each normalized source, order preserved."""
    seen: set[str] = set()
    kept: list[Snippet] = []
    for s in corpus:
        key = _normalize(s.source)
        if key in seen:
            continue
        seen.add(key)
        kept.append(s)
    return Corpus(snippets=tuple(kept), metadata=dict(corpus.metadata))


def sample_subset(corpus: Corpus, n: int, seed: int) -> Corpus:
    """min(n, len) snippets drawn uniformly without replacement, seeded."""
    if n < 0:
        raise ValueError("sample size must be >= 0")
    k = min(n, len(corpus))
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(corpus), size=k, replace=False)
    picked = tuple(corpus.snippets[i] for i in idx)
    return Corpus(snippets=picked, metadata=dict(corpus.metadata))


def stable_id_hash(snippet_id: str) -> int:
    """Platform-stable 64-bit hash for deriving per-snippet RNG streams."""
    return int.from_bytes(hashlib.sha256(snippet_id.encode("utf-8")).digest()[:8], "big")
