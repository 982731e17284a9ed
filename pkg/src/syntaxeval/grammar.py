"""Python grammar tables: keywords, operators, and the node-type inventory.

The parser in this package emits nodes labeled with the conventional
tree-sitter-style names for Python constructs (``module``, ``identifier``,
``for_statement``, ...). This module is the single source of truth for which
labels exist, which are named (semantic) versus anonymous (keywords and
punctuation), and which node types count as decision points for cyclomatic
complexity.
"""

from __future__ import annotations

KEYWORDS = frozenset(
    """
    False None True and as assert async await break class continue def del
    elif else except finally for from global if import in is lambda nonlocal
    not or pass raise return try while with yield
    """.split()
)

# match/case are soft keywords: statements only when followed by an expression.
SOFT_KEYWORDS = frozenset({"match", "case"})

AUGMENTED_OPS = frozenset(
    {"+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**="}
)

OPERATORS_3 = ("**=", "//=", ">>=", "<<=", "...")
OPERATORS_2 = (
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->",
    "+=", "-=", "*=", "/=", "%=", "@=", "&=", "|=", "^=", ":=",
)
OPERATORS_1 = "+-*/%@&|^~<>()[]{},:.;="

OPEN_BRACKETS = "([{"
CLOSE_BRACKETS = ")]}"

COMPARISON_OPS = frozenset({"<", ">", "<=", ">=", "==", "!=", "in", "is"})

# Named node labels the parser can produce. Everything else in a tree is an
# anonymous token node whose label is its own text (e.g. "if", "(", "=").
NAMED_NODE_TYPES = frozenset(
    {
        "module",
        "ERROR",
        # leaves
        "identifier",
        "integer",
        "float",
        "string",
        "concatenated_string",
        "true",
        "false",
        "none",
        "ellipsis",
        # simple statements
        "expression_statement",
        "assignment",
        "augmented_assignment",
        "return_statement",
        "pass_statement",
        "break_statement",
        "continue_statement",
        "raise_statement",
        "assert_statement",
        "delete_statement",
        "global_statement",
        "nonlocal_statement",
        "import_statement",
        "import_from_statement",
        "aliased_import",
        "dotted_name",
        "relative_import",
        # compound statements
        "if_statement",
        "elif_clause",
        "else_clause",
        "for_statement",
        "while_statement",
        "try_statement",
        "except_clause",
        "finally_clause",
        "with_statement",
        "with_clause",
        "with_item",
        "match_statement",
        "case_clause",
        "function_definition",
        "parameters",
        "default_parameter",
        "typed_parameter",
        "typed_default_parameter",
        "list_splat_pattern",
        "dictionary_splat_pattern",
        "class_definition",
        "decorated_definition",
        "decorator",
        "block",
        "type",
        # expressions
        "boolean_operator",
        "not_operator",
        "comparison_operator",
        "binary_operator",
        "unary_operator",
        "conditional_expression",
        "named_expression",
        "lambda",
        "lambda_parameters",
        "call",
        "argument_list",
        "keyword_argument",
        "attribute",
        "subscript",
        "slice",
        "parenthesized_expression",
        "list",
        "tuple",
        "set",
        "dictionary",
        "pair",
        "list_comprehension",
        "set_comprehension",
        "dictionary_comprehension",
        "generator_expression",
        "for_in_clause",
        "if_clause",
        "await",
        "yield",
        "list_splat",
        "dictionary_splat",
    }
)

ANONYMOUS_NODE_TYPES = frozenset(KEYWORDS | SOFT_KEYWORDS | set(OPERATORS_3) | set(OPERATORS_2) | set(OPERATORS_1))

NODE_TYPES = NAMED_NODE_TYPES | ANONYMOUS_NODE_TYPES

# Node types under study by default: basic control, iteration, operator and
# functional constructs plus the terminal types they are usually compared to.
DEFAULT_NODE_TYPES = (
    "boolean_operator",
    "comparison_operator",
    "for_in_clause",
    "for_statement",
    "identifier",
    "if_clause",
    "if_statement",
    "parameters",
    "return_statement",
    "string",
    "while_statement",
)

# Decision points for cyclomatic complexity: complexity = 1 + count of these.
DECISION_NODE_TYPES = frozenset(
    {
        "if_statement",
        "elif_clause",
        "conditional_expression",
        "for_statement",
        "while_statement",
        "except_clause",
        "case_clause",
        "boolean_operator",
        "assert_statement",
    }
)

STRING_PREFIXES = frozenset(
    {"r", "b", "u", "f", "rb", "br", "fr", "rf", "bf", "fb", "ur"}
)


def is_known_node_type(label: str) -> bool:
    return label in NODE_TYPES
