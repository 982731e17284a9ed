"""Treatment and control masking of snippets.

Treatment: every leaf token inside any node of the requested type is replaced
by one mask sentinel (nested matches are unioned, so no token is masked
twice). Control: the same number of leaf tokens chosen uniformly at random
over all token positions, 20 variants per treated sample by default, each
drawn from an RNG keyed by (seed, snippet id, variant index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import find_node_spans, leaf_token_spans
from .corpus import Snippet, stable_id_hash
from .tree import AstTree

TREATMENT = "treatment"
CONTROL = "control"

DEFAULT_SENTINEL = "<mask>"
DEFAULT_MAX_MASK_FRACTION = 0.5
DEFAULT_CONTROL_VARIANTS = 20


class MaskingError(ValueError):
    pass


@dataclass(frozen=True)
class MaskedSample:
    snippet_id: str
    arm: str  # TREATMENT or CONTROL
    node_type: str  # for controls: the node type they were matched to
    masked_text: str
    mask_count: int
    masked_spans: tuple[tuple[int, int], ...]  # byte ranges in the original source
    ground_truth_tokens: tuple[str, ...]
    mask_sentinel: str
    variant_index: int | None = None  # controls only, 0-based

    def __post_init__(self):
        occurrences = self.masked_text.count(self.mask_sentinel)
        if not (self.mask_count == len(self.masked_spans) == len(self.ground_truth_tokens) == occurrences):
            raise MaskingError(
                f"inconsistent mask counts for {self.snippet_id}: "
                f"count={self.mask_count} spans={len(self.masked_spans)} "
                f"truths={len(self.ground_truth_tokens)} sentinels={occurrences}"
            )
        prev_end = -1
        for s, e in self.masked_spans:
            if s < prev_end or s >= e:
                raise MaskingError(f"masked spans not disjoint/ordered for {self.snippet_id}")
            prev_end = e


@dataclass(frozen=True)
class Skip:
    """A snippet/node-type pair excluded from masking, with the reason."""

    snippet_id: str
    node_type: str
    reason: str  # "absent" or "mask_fraction"
    detail: str = ""


def _apply_mask(source_bytes: bytes, spans: list[tuple[int, int]], sentinel: str) -> tuple[str, tuple[str, ...]]:
    out: list[bytes] = []
    truths: list[str] = []
    cursor = 0
    sentinel_b = sentinel.encode("utf-8")
    for s, e in spans:
        out.append(source_bytes[cursor:s])
        out.append(sentinel_b)
        truths.append(source_bytes[s:e].decode("utf-8"))
        cursor = e
    out.append(source_bytes[cursor:])
    return b"".join(out).decode("utf-8"), tuple(truths)


def mask_treatment(
    snippet: Snippet,
    tree: AstTree,
    node_type: str,
    mask_sentinel: str = DEFAULT_SENTINEL,
    max_mask_fraction: float = DEFAULT_MAX_MASK_FRACTION,
) -> MaskedSample | Skip:
    if not 0 < max_mask_fraction <= 1:
        raise ValueError("max_mask_fraction must be in (0, 1]")
    if mask_sentinel in snippet.source:
        raise MaskingError(f"snippet {snippet.id}: sentinel {mask_sentinel!r} occurs verbatim in source")
    matches = find_node_spans(tree, node_type)
    if not matches:
        return Skip(snippet.id, node_type, "absent")
    spans = sorted({span for m in matches for span in m.leaf_token_spans})
    token_count = len(tree.leaf_tokens())
    if token_count and len(spans) / token_count > max_mask_fraction:
        return Skip(
            snippet.id,
            node_type,
            "mask_fraction",
            f"{len(spans)}/{token_count} tokens exceed fraction {max_mask_fraction}",
        )
    masked_text, truths = _apply_mask(tree.source_bytes, spans, mask_sentinel)
    return MaskedSample(
        snippet_id=snippet.id,
        arm=TREATMENT,
        node_type=node_type,
        masked_text=masked_text,
        mask_count=len(spans),
        masked_spans=tuple(spans),
        ground_truth_tokens=truths,
        mask_sentinel=mask_sentinel,
    )


def mask_control(
    snippet: Snippet,
    tree: AstTree,
    k: int,
    seed: int,
    variants: int = DEFAULT_CONTROL_VARIANTS,
    mask_sentinel: str = DEFAULT_SENTINEL,
    node_type: str = "",
) -> list[MaskedSample]:
    if k < 1:
        raise ValueError("k must be >= 1")
    if mask_sentinel in snippet.source:
        raise MaskingError(f"snippet {snippet.id}: sentinel {mask_sentinel!r} occurs verbatim in source")
    leaves = leaf_token_spans(tree)
    if k > len(leaves):
        raise MaskingError(f"snippet {snippet.id}: cannot mask {k} of {len(leaves)} leaf tokens")
    samples: list[MaskedSample] = []
    sid_hash = stable_id_hash(snippet.id)
    for v in range(variants):
        rng = np.random.default_rng([seed, sid_hash, v])
        idx = np.sort(rng.choice(len(leaves), size=k, replace=False))
        spans = [leaves[i] for i in idx]
        masked_text, truths = _apply_mask(tree.source_bytes, spans, mask_sentinel)
        samples.append(
            MaskedSample(
                snippet_id=snippet.id,
                arm=CONTROL,
                node_type=node_type,
                masked_text=masked_text,
                mask_count=k,
                masked_spans=tuple(spans),
                ground_truth_tokens=truths,
                mask_sentinel=mask_sentinel,
                variant_index=v,
            )
        )
    return samples


def sample_to_dict(sample: MaskedSample) -> dict:
    return {
        "snippet_id": sample.snippet_id,
        "arm": sample.arm,
        "node_type": sample.node_type,
        "masked_text": sample.masked_text,
        "mask_count": sample.mask_count,
        "masked_spans": [list(s) for s in sample.masked_spans],
        "ground_truth_tokens": list(sample.ground_truth_tokens),
        "mask_sentinel": sample.mask_sentinel,
        "variant_index": sample.variant_index,
    }


def sample_from_dict(obj: dict) -> MaskedSample:
    return MaskedSample(
        snippet_id=obj["snippet_id"],
        arm=obj["arm"],
        node_type=obj["node_type"],
        masked_text=obj["masked_text"],
        mask_count=int(obj["mask_count"]),
        masked_spans=tuple((int(s), int(e)) for s, e in obj["masked_spans"]),
        ground_truth_tokens=tuple(obj["ground_truth_tokens"]),
        mask_sentinel=obj["mask_sentinel"],
        variant_index=obj["variant_index"],
    )


def unmask(sample: MaskedSample, tokens: list[str] | tuple[str, ...]) -> str:
    """Replace the sample's sentinels, in order, with the given tokens."""
    if len(tokens) != sample.mask_count:
        raise MaskingError(
            f"snippet {sample.snippet_id}: {len(tokens)} replacement tokens for {sample.mask_count} masks"
        )
    parts = sample.masked_text.split(sample.mask_sentinel)
    out: list[str] = []
    for i, part in enumerate(parts):
        out.append(part)
        if i < len(tokens):
            out.append(tokens[i])
    return "".join(out)
