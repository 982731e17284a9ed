"""Node queries, traversal labels, and confounder extraction.

Expected values for the fixtures are hand-derived: identifier/span counts by
reading the snippet, whitespace counts by counting characters, cyclo by
applying the documented decision-node list.
"""

import pytest

from syntaxeval.analysis import (
    ConfounderVector,
    NodeTypeSet,
    extract_confounders,
    find_node_spans,
    traversal_labels,
)
from syntaxeval.parser import parse


def spans_text(tree, spans):
    return [tree.source_bytes[s.start_byte : s.end_byte].decode() for s in spans]


# ---------------------------------------------------------- find_node_spans --


def test_if_statement_span_covers_whole_statement():
    src = "if a:\n    b()"
    tree = parse(src)
    spans = find_node_spans(tree, "if_statement")
    assert len(spans) == 1
    assert spans_text(tree, spans) == [src]


def test_absent_node_type_gives_empty_list():
    tree = parse("x = 1")
    assert find_node_spans(tree, "while_statement") == []


def test_identifiers_in_document_order():
    src = "x = y + z"
    tree = parse(src)
    spans = find_node_spans(tree, "identifier")
    assert spans_text(tree, spans) == ["x", "y", "z"]


def test_leaf_token_spans_disjoint_ordered_contained():
    src = "for i in range(10):\n    total += i * 2\n"
    tree = parse(src)
    for node_type in ("for_statement", "identifier", "call"):
        for span in find_node_spans(tree, node_type):
            assert span.start_byte < span.end_byte
            prev_end = span.start_byte
            for s, e in span.leaf_token_spans:
                assert span.start_byte <= s < e <= span.end_byte
                assert s >= prev_end
                prev_end = e


def test_terminal_span_leaves_match_traversal_count():
    src = "x = y + z\nif x:\n    y = z\n"
    tree = parse(src)
    spans = find_node_spans(tree, "identifier")
    total_leaves = sum(len(s.leaf_token_spans) for s in spans)
    assert total_leaves == traversal_labels(tree).count("identifier")


def test_empty_node_type_rejected():
    with pytest.raises(ValueError):
        find_node_spans(parse("x = 1"), "")


# --------------------------------------------------------- traversal_labels --


def test_traversal_of_empty_source_is_root_only():
    assert traversal_labels(parse("")) == ["module"]


def test_traversal_deterministic_across_parses():
    src = "def f(a):\n    return [i for i in a if i]\n"
    assert traversal_labels(parse(src)) == traversal_labels(parse(src))


def test_traversal_starts_at_root_identifier_before_integer():
    labels = traversal_labels(parse("x = 1"))
    assert labels[0] == "module"
    assert labels.index("identifier") < labels.index("integer")


def test_traversal_counts_named_nodes_only():
    src = "if a:\n    b()"
    tree = parse(src)
    labels = traversal_labels(tree)
    named = sum(1 for n in tree.walk() if n.is_named)
    assert len(labels) == named
    assert "if" not in labels  # anonymous keyword excluded
    assert "if_statement" in labels


# ------------------------------------------------------- extract_confounders --


def conf(src: str) -> ConfounderVector:
    return extract_confounders(src, parse(src))


def test_confounders_empty_source():
    v = conf("")
    assert v.parse_errors == 0
    assert v.ast_height == 1
    assert v.ast_nodes == 1
    assert v.whitespaces == 0
    assert v.loc == 0
    assert v.cyclo == 1
    assert v.token_count == 0  # zero-width root carries no concrete token


def test_confounders_def_return():
    # "def f(x):\n    return x": one space after def, newline, four-space
    # indent, one space after return = 7 whitespace chars; two non-blank lines
    v = conf("def f(x):\n    return x")
    assert v.whitespaces == 7
    assert v.loc == 2
    assert v.cyclo == 1


def test_confounders_if_else_cyclo():
    # else_clause is not a decision node; the if_statement is the only one
    v = conf("if a:\n    b()\nelse:\n    c()")
    assert v.cyclo == 2


TEN_SNIPPET_EXPECTATIONS = [
    # (source, whitespaces, loc, cyclo) all hand-counted
    ("x = 1", 2, 1, 1),
    ("def f(x):\n    return x", 7, 2, 1),
    ("if a:\n    b()\nelse:\n    c()", 12, 4, 2),
    ("for i in items:\n    use(i)\n", 9, 2, 2),
    ("while x < 3:\n    x += 1", 10, 2, 2),
    ("a = b and c or d", 6, 1, 3),
    ("try:\n    f()\nexcept ValueError:\n    pass", 12, 4, 2),
    ("assert x == 1", 3, 1, 2),
    ("y = [i for i in xs if i]\n", 9, 1, 1),
    ("z = 1 if flag else 2\n", 7, 1, 2),
]


@pytest.mark.parametrize("src,ws,loc,cyclo", TEN_SNIPPET_EXPECTATIONS)
def test_confounder_fixture_values(src, ws, loc, cyclo):
    v = conf(src)
    assert v.whitespaces == ws
    assert v.loc == loc
    assert v.cyclo == cyclo
    assert v.parse_errors == 0


def test_confounders_pure_and_repeatable():
    src = "def g(a, b):\n    return a * b\n"
    assert conf(src) == conf(src)


def test_whitespace_plus_nonwhitespace_is_length_for_ascii():
    for src in (s for s, *_ in TEN_SNIPPET_EXPECTATIONS):
        v = conf(src)
        non_ws = sum(1 for c in src if c not in " \t\r\n")
        assert v.whitespaces + non_ws == len(src)


def test_parse_errors_counted():
    v = conf("def f(:")
    assert v.parse_errors >= 1


def test_height_and_counts_are_sane():
    v = conf("x = 1")
    assert v.ast_height >= 3  # module > expression_statement > assignment > leaf
    assert v.token_count <= v.ast_nodes


# ---------------------------------------------------------------- NodeTypeSet --


def test_default_node_type_set_validates():
    s = NodeTypeSet()
    assert "if_statement" in s.labels
    assert len(s.labels) == 11


def test_unknown_label_rejected():
    with pytest.raises(ValueError):
        NodeTypeSet(("no_such_node",))


def test_empty_set_rejected():
    with pytest.raises(ValueError):
        NodeTypeSet(())
