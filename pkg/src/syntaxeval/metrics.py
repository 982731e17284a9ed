"""Normalized similarity between ground-truth and predicted code structure.

Jaccard and Sorensen-Dice compare the SET of traversal labels; Levenshtein
compares the label SEQUENCE with unit-cost edits. All three are similarities
in [0, 1] with 1.0 meaning identical structure; two empty inputs count as
identical by convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import levenshtein_distance
from .analysis import traversal_labels
from .parser import parse


@dataclass(frozen=True)
class SimilarityScores:
    jaccard: float
    levenshtein: float
    sorensen_dice: float

    def __post_init__(self):
        for name in ("jaccard", "levenshtein", "sorensen_dice"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} similarity {v} outside [0, 1]")

    def as_dict(self) -> dict[str, float]:
        return {"jaccard": self.jaccard, "levenshtein": self.levenshtein, "sorensen_dice": self.sorensen_dice}

    def get(self, metric: str) -> float:
        return getattr(self, metric)


def jaccard(a: Sequence[str], b: Sequence[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def sorensen_dice(a: Sequence[str], b: Sequence[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return 2 * len(sa & sb) / (len(sa) + len(sb))


def _encode(a: Sequence[str], b: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    codes: dict[str, int] = {}
    for label in a:
        codes.setdefault(label, len(codes))
    for label in b:
        codes.setdefault(label, len(codes))
    ca = np.fromiter((codes[x] for x in a), dtype=np.int64, count=len(a))
    cb = np.fromiter((codes[x] for x in b), dtype=np.int64, count=len(b))
    return ca, cb


def levenshtein_norm(a: Sequence[str], b: Sequence[str]) -> float:
    if not a and not b:
        return 1.0
    ca, cb = _encode(a, b)
    dist = levenshtein_distance(ca, cb)
    return 1.0 - dist / max(len(a), len(b))


def score_sample(ground_source: str, predicted_source: str) -> SimilarityScores:
    """Parse both sources and compare their traversal label sequences.

    The predicted source may be syntactically broken; the parser is
    error-tolerant, so breakage shows up as ERROR labels that depress the
    similarity rather than as a failure.
    """
    ground = traversal_labels(parse(ground_source))
    predicted = traversal_labels(parse(predicted_source))
    return compare_labels(ground, predicted)


def compare_labels(ground: Sequence[str], predicted: Sequence[str]) -> SimilarityScores:
    return SimilarityScores(
        jaccard=jaccard(ground, predicted),
        levenshtein=levenshtein_norm(ground, predicted),
        sorensen_dice=sorensen_dice(ground, predicted),
    )


OUTCOME_METRICS = ("jaccard", "levenshtein", "sorensen_dice")
