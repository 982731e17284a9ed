"""AST queries and code-feature extraction.

Operates on trees from :mod:`syntaxeval.parser`: locating nodes by type label,
emitting the deterministic traversal label sequence the similarity metrics
compare, and extracting the seven code features used as confounders in the
causal analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .grammar import DECISION_NODE_TYPES, DEFAULT_NODE_TYPES, NODE_TYPES
from .tree import AstTree, Node


@dataclass(frozen=True)
class NodeSpan:
    """One matched node: its label, byte span, and its leaf tokens' spans."""

    node_type: str
    start_byte: int
    end_byte: int
    leaf_token_spans: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ConfounderVector:
    """The seven per-snippet code features adjusted for in the causal stage."""

    parse_errors: int
    ast_height: int
    ast_nodes: int
    whitespaces: int
    loc: int
    cyclo: int
    token_count: int

    FEATURE_NAMES = ("parse_errors", "ast_height", "ast_nodes", "whitespaces", "loc", "cyclo", "token_count")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.FEATURE_NAMES], dtype=np.float64)

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class NodeTypeSet:
    """The node-type labels under study; every label must be in the grammar."""

    labels: tuple[str, ...] = DEFAULT_NODE_TYPES

    def __post_init__(self):
        if not self.labels:
            raise ValueError("node-type set must not be empty")
        unknown = [lab for lab in self.labels if lab not in NODE_TYPES]
        if unknown:
            raise ValueError(f"unknown node types (not in grammar inventory): {unknown}")


def find_node_spans(tree: AstTree, node_type: str) -> list[NodeSpan]:
    """Every node labeled ``node_type``, in document order, with its leaves.

    Zero-width nodes (empty module, missing placeholders) are skipped: they
    carry no tokens to mask or measure.
    """
    if not node_type:
        raise ValueError("node_type must be non-empty")
    spans: list[NodeSpan] = []
    for node in tree.walk():
        if node.type != node_type or node.start_byte >= node.end_byte:
            continue
        leaves = tuple(
            (leaf.start_byte, leaf.end_byte)
            for leaf in node.walk()
            if not leaf.children and leaf.start_byte < leaf.end_byte
        )
        spans.append(NodeSpan(node_type, node.start_byte, node.end_byte, leaves))
    return spans


def traversal_labels(tree: AstTree) -> list[str]:
    """Type labels of named nodes in a left-to-right depth-first walk."""
    return [n.type for n in tree.walk() if n.is_named]


def _count_decision_nodes(tree: AstTree) -> int:
    return sum(1 for n in tree.walk() if n.type in DECISION_NODE_TYPES and n.is_named)


def extract_confounders(source: str, tree: AstTree) -> ConfounderVector:
    """The seven code features for one snippet.

    parse_errors: error- plus missing-flagged nodes. ast_height: max
    root-to-leaf node count (lone root = 1). ast_nodes: every node, named and
    anonymous. whitespaces: space/tab/CR/LF characters. loc: lines with at
    least one non-whitespace character. cyclo: 1 + decision nodes (see
    grammar.DECISION_NODE_TYPES). token_count: leaf tokens.
    """
    whitespaces = sum(source.count(c) for c in (" ", "\t", "\r", "\n"))
    loc = sum(1 for line in source.split("\n") if line.strip())
    return ConfounderVector(
        parse_errors=tree.error_count(),
        ast_height=tree.height(),
        ast_nodes=tree.node_count(),
        whitespaces=whitespaces,
        loc=loc,
        cyclo=1 + _count_decision_nodes(tree),
        token_count=len(tree.leaf_tokens()),
    )


def leaf_token_spans(tree: AstTree) -> list[tuple[int, int]]:
    """Byte spans of every concrete token in the tree, in document order."""
    return [(n.start_byte, n.end_byte) for n in tree.leaf_tokens()]
