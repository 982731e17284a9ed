"""Syntax tree data model.

Nodes mirror the conventional grammar-tool surface: a type label, a byte span,
ordered children, a named/anonymous flag, and error/missing flags. Trees are
immutable after parsing and safe to share across threads.
"""

from __future__ import annotations

from typing import Iterator


class Node:
    __slots__ = ("type", "start_byte", "end_byte", "children", "is_named", "is_error", "is_missing")

    def __init__(
        self,
        type: str,
        start_byte: int,
        end_byte: int,
        children: list["Node"] | None = None,
        is_named: bool = False,
        is_error: bool = False,
        is_missing: bool = False,
    ):
        self.type = type
        self.start_byte = start_byte
        self.end_byte = end_byte
        self.children = children if children is not None else []
        self.is_named = is_named
        self.is_error = is_error
        self.is_missing = is_missing

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["Node"]:
        """Left-to-right depth-first walk, each node at first visit."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        flags = "E" * self.is_error + "M" * self.is_missing
        return f"Node({self.type!r}, [{self.start_byte},{self.end_byte}){flags and ' ' + flags})"


class AstTree:
    """A parsed snippet: the root node plus the source it was parsed from."""

    __slots__ = ("root", "source", "source_bytes")

    def __init__(self, root: Node, source: str, source_bytes: bytes):
        self.root = root
        self.source = source
        self.source_bytes = source_bytes

    def walk(self) -> Iterator[Node]:
        return self.root.walk()

    def text(self, node: Node) -> str:
        return self.source_bytes[node.start_byte : node.end_byte].decode("utf-8")

    def leaf_tokens(self) -> list[Node]:
        """Concrete tokens: childless nodes with a non-empty span, in order."""
        return [n for n in self.walk() if not n.children and n.start_byte < n.end_byte]

    def node_count(self) -> int:
        return sum(1 for _ in self.walk())

    def height(self) -> int:
        """Max root-to-leaf node count; a lone root has height 1."""
        best = 0
        stack = [(self.root, 1)]
        while stack:
            node, depth = stack.pop()
            if depth > best:
                best = depth
            for child in node.children:
                stack.append((child, depth + 1))
        return best

    def error_count(self) -> int:
        """Nodes flagged as parse errors or as missing-token placeholders."""
        return sum(1 for n in self.walk() if n.is_error or n.is_missing)

    def sexp(self) -> str:  # pragma: no cover - debugging aid
        def fmt(node: Node) -> str:
            if not node.children:
                return node.type if node.is_named else repr(node.type)
            inner = " ".join(fmt(c) for c in node.children)
            return f"({node.type} {inner})"

        return fmt(self.root)
