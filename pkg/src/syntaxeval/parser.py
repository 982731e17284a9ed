"""Error-tolerant recursive-descent parser for Python source.

The parser never fails: malformed regions become ERROR nodes holding their
raw tokens, and parsing resumes at the next statement boundary. Node labels
follow the conventional tree-sitter-style naming for Python so that node-type
queries like "if_statement" or "identifier" behave as users of grammar
tooling expect (see grammar.NODE_TYPES for the inventory).

Statement-level recovery: when a statement fails to parse, the token cursor
rewinds to the statement start and everything up to the next logical line
break is folded into one ERROR node. An unexpected indented block becomes an
ERROR node wrapping a normally parsed block.
"""

from __future__ import annotations

from . import tokenizer as tk
from .grammar import AUGMENTED_OPS, KEYWORDS
from .tokenizer import Token, number_is_float, tokenize
from .tree import AstTree, Node

_EXPR_START_OPS = frozenset({"(", "[", "{", "+", "-", "~", "*", "**", "..."})
_EXPR_START_NAMES = frozenset({"True", "False", "None", "not", "lambda", "await", "yield"})
_COMP_SIMPLE_OPS = frozenset({"<", ">", "<=", ">=", "==", "!="})


class _ParseFail(Exception):
    """Internal signal: current statement cannot be parsed; recover."""


class _Parser:
    def __init__(self, tokens: list[Token], byte_of):
        self.toks = tokens
        self.pos = 0
        # byte_of maps char offsets to byte offsets; None means ASCII identity.
        self.byte_of = byte_of

    # ------------------------------------------------------------- cursor --

    def cur(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        j = min(self.pos + k, len(self.toks) - 1)
        return self.toks[j]

    def at(self, kind: str) -> bool:
        return self.toks[self.pos].kind == kind

    def at_op(self, text: str) -> bool:
        t = self.toks[self.pos]
        return t.kind == tk.OP and t.text == text

    def at_name(self, text: str) -> bool:
        t = self.toks[self.pos]
        return t.kind == tk.NAME and t.text == text

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != tk.EOF:
            self.pos += 1
        return t

    # -------------------------------------------------------------- nodes --

    def _b(self, char_off: int) -> int:
        return char_off if self.byte_of is None else self.byte_of[char_off]

    def leaf(self, tok: Token, label: str | None = None, named: bool = False) -> Node:
        return Node(label or tok.text, self._b(tok.start), self._b(tok.end), None, named)

    def node(self, label: str, children: list[Node], is_error: bool = False) -> Node:
        start = children[0].start_byte
        end = children[-1].end_byte
        return Node(label, start, end, children, True, is_error)

    def op_leaf(self) -> Node:
        return self.leaf(self.advance())

    def kw_leaf(self) -> Node:
        return self.leaf(self.advance())

    def expect_op(self, text: str) -> Node:
        if not self.at_op(text):
            raise _ParseFail
        return self.op_leaf()

    def expect_name(self, text: str) -> Node:
        if not self.at_name(text):
            raise _ParseFail
        return self.kw_leaf()

    def identifier(self) -> Node:
        t = self.cur()
        if t.kind != tk.NAME or t.text in KEYWORDS:
            raise _ParseFail
        return self.leaf(self.advance(), "identifier", named=True)

    def token_as_node(self, tok: Token) -> Node:
        """A raw token rendered as a tree leaf (used inside ERROR nodes)."""
        if tok.kind == tk.NAME:
            if tok.text in ("True", "False", "None"):
                return self.leaf(tok, tok.text.lower(), named=True)
            if tok.text in KEYWORDS:
                return self.leaf(tok)
            return self.leaf(tok, "identifier", named=True)
        if tok.kind == tk.NUMBER:
            return self.leaf(tok, "float" if number_is_float(tok.text) else "integer", named=True)
        if tok.kind == tk.STRING:
            return self.leaf(tok, "string", named=True)
        return self.leaf(tok)

    # ----------------------------------------------------------- recovery --

    def error_until_line_end(self) -> Node:
        kids: list[Node] = []
        while True:
            t = self.cur()
            if t.kind in (tk.EOF, tk.DEDENT, tk.INDENT):
                break
            if t.kind == tk.NEWLINE:
                self.advance()
                break
            kids.append(self.token_as_node(self.advance()))
        if not kids:  # zero-width error at a structural token
            t = self.cur()
            return Node("ERROR", self._b(t.start), self._b(t.start), None, True, True)
        return self.node("ERROR", kids, is_error=True)

    def error_indented_block(self) -> Node:
        self.advance()  # INDENT
        block = self.block_body()
        return Node("ERROR", block.start_byte, block.end_byte, [block], True, True)

    def statements_with_recovery(self) -> list[Node]:
        start = self.pos
        try:
            return self.parse_statement()
        except _ParseFail:
            self.pos = start
            return [self.error_until_line_end()]

    # ----------------------------------------------------------- toplevel --

    def parse_module(self, end_byte: int) -> Node:
        children: list[Node] = []
        while not self.at(tk.EOF):
            if self.at(tk.NEWLINE) or self.at(tk.DEDENT):
                self.advance()
                continue
            if self.at(tk.INDENT):
                children.append(self.error_indented_block())
                continue
            children.extend(self.statements_with_recovery())
        return Node("module", 0, end_byte, children, True)

    def block_body(self) -> Node:
        stmts: list[Node] = []
        while not self.at(tk.DEDENT) and not self.at(tk.EOF):
            if self.at(tk.NEWLINE):
                self.advance()
                continue
            if self.at(tk.INDENT):
                stmts.append(self.error_indented_block())
                continue
            stmts.extend(self.statements_with_recovery())
        if self.at(tk.DEDENT):
            self.advance()
        if not stmts:
            t = self.cur()
            return Node("block", self._b(t.start), self._b(t.start), None, True, False, True)
        return self.node("block", stmts)

    def suite(self) -> Node:
        if self.at(tk.NEWLINE):
            self.advance()
            if self.at(tk.INDENT):
                self.advance()
                return self.block_body()
            t = self.cur()  # missing indented body
            return Node("block", self._b(t.start), self._b(t.start), None, True, False, True)
        stmts = self.simple_statement_line()
        return self.node("block", stmts)

    # ---------------------------------------------------------- statements --

    def parse_statement(self) -> list[Node]:
        t = self.cur()
        if t.kind == tk.NAME:
            kw = t.text
            if kw == "if":
                return [self.if_statement()]
            if kw == "while":
                return [self.while_statement()]
            if kw == "for":
                return [self.for_statement()]
            if kw == "try":
                return [self.try_statement()]
            if kw == "with":
                return [self.with_statement()]
            if kw == "def":
                return [self.function_definition()]
            if kw == "class":
                return [self.class_definition()]
            if kw == "async":
                return [self.async_statement()]
            if kw == "match" and self.looks_like_match():
                return [self.match_statement()]
        if self.at_op("@"):
            return [self.decorated_definition()]
        return self.simple_statement_line()

    def simple_statement_line(self) -> list[Node]:
        stmts = [self.small_statement()]
        while self.at_op(";"):
            stmts.append(self.op_leaf())
            if self.at(tk.NEWLINE) or self.at(tk.EOF) or self.at(tk.DEDENT):
                break
            stmts.append(self.small_statement())
        self.expect_line_end()
        return stmts

    def expect_line_end(self) -> None:
        if self.at(tk.NEWLINE):
            self.advance()
            return
        if self.at(tk.EOF) or self.at(tk.DEDENT):
            return
        raise _ParseFail

    def small_statement(self) -> Node:
        t = self.cur()
        if t.kind == tk.NAME:
            kw = t.text
            if kw == "return":
                kids = [self.kw_leaf()]
                if self.starts_expression():
                    kids.append(self.testlist())
                return self.node("return_statement", kids)
            if kw == "pass":
                return self.node("pass_statement", [self.kw_leaf()])
            if kw == "break":
                return self.node("break_statement", [self.kw_leaf()])
            if kw == "continue":
                return self.node("continue_statement", [self.kw_leaf()])
            if kw == "raise":
                kids = [self.kw_leaf()]
                if self.starts_expression():
                    kids.append(self.expression())
                    if self.at_name("from"):
                        kids.append(self.kw_leaf())
                        kids.append(self.expression())
                return self.node("raise_statement", kids)
            if kw == "assert":
                kids = [self.kw_leaf(), self.expression()]
                if self.at_op(","):
                    kids.append(self.op_leaf())
                    kids.append(self.expression())
                return self.node("assert_statement", kids)
            if kw == "del":
                return self.node("delete_statement", [self.kw_leaf(), self.target_list()])
            if kw in ("global", "nonlocal"):
                kids = [self.kw_leaf(), self.identifier()]
                while self.at_op(","):
                    kids.append(self.op_leaf())
                    kids.append(self.identifier())
                return self.node(f"{kw}_statement", kids)
            if kw == "import":
                return self.import_statement()
            if kw == "from":
                return self.import_from_statement()
            if kw == "yield":
                return self.node("expression_statement", [self.yield_expression()])
        return self.expression_statement()

    def expression_statement(self) -> Node:
        first = self.testlist(allow_splat=True)
        if self.at_op("="):
            return self.node("expression_statement", [self.assignment_chain(first)])
        t = self.cur()
        if t.kind == tk.OP and t.text in AUGMENTED_OPS:
            op = self.op_leaf()
            rhs = self.yield_expression() if self.at_name("yield") else self.testlist()
            return self.node("expression_statement", [self.node("augmented_assignment", [first, op, rhs])])
        if self.at_op(":"):
            kids = [first, self.op_leaf(), self.type_annotation()]
            if self.at_op("="):
                kids.append(self.op_leaf())
                kids.append(self.yield_expression() if self.at_name("yield") else self.testlist())
            return self.node("expression_statement", [self.node("assignment", kids)])
        return self.node("expression_statement", [first])

    def assignment_chain(self, left: Node) -> Node:
        eq = self.op_leaf()
        rhs = self.yield_expression() if self.at_name("yield") else self.testlist(allow_splat=True)
        if self.at_op("="):
            rhs = self.assignment_chain(rhs)
        return self.node("assignment", [left, eq, rhs])

    def type_annotation(self) -> Node:
        return self.node("type", [self.expression()])

    # imports

    def dotted_name(self) -> Node:
        kids = [self.identifier()]
        while self.at_op(".") and self.peek().kind == tk.NAME:
            kids.append(self.op_leaf())
            kids.append(self.identifier())
        return self.node("dotted_name", kids)

    def _dotted_or_aliased(self) -> Node:
        name = self.dotted_name()
        if self.at_name("as"):
            return self.node("aliased_import", [name, self.kw_leaf(), self.identifier()])
        return name

    def import_statement(self) -> Node:
        kids = [self.kw_leaf(), self._dotted_or_aliased()]
        while self.at_op(","):
            kids.append(self.op_leaf())
            kids.append(self._dotted_or_aliased())
        return self.node("import_statement", kids)

    def import_from_statement(self) -> Node:
        kids = [self.kw_leaf()]
        if self.at_op(".") or self.at_op("..."):
            dots = []
            while self.at_op(".") or self.at_op("..."):
                dots.append(self.op_leaf())
            if self.cur().kind == tk.NAME and not self.at_name("import"):
                dots.append(self.dotted_name())
            kids.append(self.node("relative_import", dots))
        else:
            kids.append(self.dotted_name())
        kids.append(self.expect_name("import"))
        if self.at_op("*"):
            kids.append(self.op_leaf())
            return self.node("import_from_statement", kids)
        parens = self.at_op("(")
        if parens:
            kids.append(self.op_leaf())
        kids.append(self._dotted_or_aliased())
        while self.at_op(","):
            kids.append(self.op_leaf())
            if parens and self.at_op(")"):
                break
            kids.append(self._dotted_or_aliased())
        if parens:
            kids.append(self.expect_op(")"))
        return self.node("import_from_statement", kids)

    # compound statements

    def if_statement(self) -> Node:
        kids = [self.kw_leaf(), self.expression(), self.expect_op(":"), self.suite()]
        while self.at_name("elif"):
            kids.append(self.node("elif_clause", [self.kw_leaf(), self.expression(), self.expect_op(":"), self.suite()]))
        if self.at_name("else"):
            kids.append(self.else_clause())
        return self.node("if_statement", kids)

    def else_clause(self) -> Node:
        return self.node("else_clause", [self.kw_leaf(), self.expect_op(":"), self.suite()])

    def while_statement(self) -> Node:
        kids = [self.kw_leaf(), self.expression(), self.expect_op(":"), self.suite()]
        if self.at_name("else"):
            kids.append(self.else_clause())
        return self.node("while_statement", kids)

    def for_statement(self, async_kw: Node | None = None) -> Node:
        kids = [] if async_kw is None else [async_kw]
        kids += [self.kw_leaf(), self.target_list(), self.expect_name("in"), self.testlist()]
        kids += [self.expect_op(":"), self.suite()]
        if self.at_name("else"):
            kids.append(self.else_clause())
        return self.node("for_statement", kids)

    def try_statement(self) -> Node:
        kids = [self.kw_leaf(), self.expect_op(":"), self.suite()]
        while self.at_name("except"):
            ek = [self.kw_leaf()]
            if self.at_op("*"):
                ek.append(self.op_leaf())
            if self.starts_expression():
                ek.append(self.expression())
                if self.at_name("as"):
                    ek.append(self.kw_leaf())
                    ek.append(self.identifier())
            ek.append(self.expect_op(":"))
            ek.append(self.suite())
            kids.append(self.node("except_clause", ek))
        if self.at_name("else"):
            kids.append(self.else_clause())
        if self.at_name("finally"):
            kids.append(self.node("finally_clause", [self.kw_leaf(), self.expect_op(":"), self.suite()]))
        return self.node("try_statement", kids)

    def with_statement(self, async_kw: Node | None = None) -> Node:
        kids = [] if async_kw is None else [async_kw]
        kids.append(self.kw_leaf())
        items = [self.with_item()]
        while self.at_op(","):
            items.append(self.op_leaf())
            items.append(self.with_item())
        kids.append(self.node("with_clause", items))
        kids.append(self.expect_op(":"))
        kids.append(self.suite())
        return self.node("with_statement", kids)

    def with_item(self) -> Node:
        kids = [self.expression()]
        if self.at_name("as"):
            kids.append(self.kw_leaf())
            kids.append(self.target())
        return self.node("with_item", kids)

    def function_definition(self, async_kw: Node | None = None) -> Node:
        kids = [] if async_kw is None else [async_kw]
        kids += [self.kw_leaf(), self.identifier(), self.parameters()]
        if self.at_op("->"):
            kids.append(self.op_leaf())
            kids.append(self.type_annotation())
        kids.append(self.expect_op(":"))
        kids.append(self.suite())
        return self.node("function_definition", kids)

    def parameters(self) -> Node:
        kids = [self.expect_op("(")]
        while not self.at_op(")"):
            kids.append(self.parameter())
            if self.at_op(","):
                kids.append(self.op_leaf())
            elif not self.at_op(")"):
                raise _ParseFail
        kids.append(self.op_leaf())
        return self.node("parameters", kids)

    def parameter(self, allow_type: bool = True) -> Node:
        if self.at_op("/"):
            return self.op_leaf()
        if self.at_op("*"):
            star = self.op_leaf()
            if self.at_op(",") or self.at_op(")") or self.at_op(":"):
                return star  # bare keyword-only separator
            base = self.node("list_splat_pattern", [star, self.identifier()])
            return self._maybe_typed(base, allow_type)
        if self.at_op("**"):
            base = self.node("dictionary_splat_pattern", [self.op_leaf(), self.identifier()])
            return self._maybe_typed(base, allow_type)
        name = self.identifier()
        if allow_type and self.at_op(":"):
            colon = self.op_leaf()
            ann = self.type_annotation()
            if self.at_op("="):
                return self.node("typed_default_parameter", [name, colon, ann, self.op_leaf(), self.expression()])
            return self.node("typed_parameter", [name, colon, ann])
        if self.at_op("="):
            return self.node("default_parameter", [name, self.op_leaf(), self.expression()])
        return name

    def _maybe_typed(self, base: Node, allow_type: bool) -> Node:
        if allow_type and self.at_op(":"):
            return self.node("typed_parameter", [base, self.op_leaf(), self.type_annotation()])
        return base

    def class_definition(self) -> Node:
        kids = [self.kw_leaf(), self.identifier()]
        if self.at_op("("):
            kids.append(self.argument_list())
        kids.append(self.expect_op(":"))
        kids.append(self.suite())
        return self.node("class_definition", kids)

    def decorated_definition(self) -> Node:
        decorators = []
        while self.at_op("@"):
            at = self.op_leaf()
            expr = self.expression()
            self.expect_line_end()
            decorators.append(self.node("decorator", [at, expr]))
        if self.at_name("def"):
            defn = self.function_definition()
        elif self.at_name("class"):
            defn = self.class_definition()
        elif self.at_name("async"):
            defn = self.async_statement()
        else:
            raise _ParseFail
        return self.node("decorated_definition", decorators + [defn])

    def async_statement(self) -> Node:
        async_kw = self.kw_leaf()
        if self.at_name("def"):
            return self.function_definition(async_kw)
        if self.at_name("for"):
            return self.for_statement(async_kw)
        if self.at_name("with"):
            return self.with_statement(async_kw)
        raise _ParseFail

    def looks_like_match(self) -> bool:
        nxt = self.peek()
        if nxt.kind == tk.NAME:
            if nxt.text in KEYWORDS and nxt.text not in _EXPR_START_NAMES:
                return False
        elif nxt.kind in (tk.NUMBER, tk.STRING):
            pass
        elif nxt.kind == tk.OP and nxt.text in _EXPR_START_OPS:
            pass
        else:
            return False
        # Require a ':' before the line break 'match subject:' would need.
        depth = 0
        j = self.pos + 1
        while j < len(self.toks):
            t = self.toks[j]
            if t.kind in (tk.NEWLINE, tk.EOF, tk.INDENT, tk.DEDENT):
                return False
            if t.kind == tk.OP:
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    depth -= 1
                elif t.text == ":" and depth == 0:
                    return True
            j += 1
        return False

    def match_statement(self) -> Node:
        kids = [self.kw_leaf(), self.testlist(), self.expect_op(":")]
        if not self.at(tk.NEWLINE):
            raise _ParseFail
        self.advance()
        if not self.at(tk.INDENT):
            t = self.cur()
            kids.append(Node("block", self._b(t.start), self._b(t.start), None, True, False, True))
            return self.node("match_statement", kids)
        self.advance()
        clauses: list[Node] = []
        while not self.at(tk.DEDENT) and not self.at(tk.EOF):
            if self.at(tk.NEWLINE):
                self.advance()
                continue
            if self.at_name("case"):
                start = self.pos
                try:
                    clauses.append(self.case_clause())
                except _ParseFail:
                    self.pos = start
                    clauses.append(self.error_until_line_end())
            else:
                clauses.append(self.error_until_line_end())
        if self.at(tk.DEDENT):
            self.advance()
        if clauses:
            kids.append(self.node("block", clauses))
        return self.node("match_statement", kids)

    def case_clause(self) -> Node:
        kids = [self.kw_leaf(), self.testlist()]
        if self.at_name("if"):
            kids.append(self.kw_leaf())
            kids.append(self.expression())
        kids.append(self.expect_op(":"))
        kids.append(self.suite())
        return self.node("case_clause", kids)

    # -------------------------------------------------------- expressions --

    def starts_expression(self) -> bool:
        t = self.cur()
        if t.kind in (tk.NUMBER, tk.STRING):
            return True
        if t.kind == tk.NAME:
            return t.text not in KEYWORDS or t.text in _EXPR_START_NAMES
        if t.kind == tk.OP:
            return t.text in _EXPR_START_OPS
        return False

    def testlist(self, allow_splat: bool = False) -> Node:
        items = [self.star_or_expression() if allow_splat else self.expression()]
        saw_comma = False
        while self.at_op(","):
            items.append(self.op_leaf())
            saw_comma = True
            if not self.starts_expression():
                break
            items.append(self.star_or_expression() if allow_splat else self.expression())
        if saw_comma:
            return self.node("tuple", items)
        return items[0]

    def star_or_expression(self) -> Node:
        if self.at_op("*"):
            return self.node("list_splat", [self.op_leaf(), self.expression()])
        if self.at_op("**"):
            return self.node("dictionary_splat", [self.op_leaf(), self.expression()])
        return self.expression()

    def yield_expression(self) -> Node:
        kids = [self.expect_name("yield")]
        if self.at_name("from"):
            kids.append(self.kw_leaf())
            kids.append(self.expression())
        elif self.starts_expression():
            kids.append(self.testlist())
        return self.node("yield", kids)

    def expression(self) -> Node:
        if self.at_name("lambda"):
            return self.lambda_expression()
        value = self.disjunction()
        if self.at_op(":="):
            return self.node("named_expression", [value, self.op_leaf(), self.expression()])
        if self.at_name("if"):
            if_kw = self.kw_leaf()
            cond = self.disjunction()
            else_kw = self.expect_name("else")
            alt = self.expression()
            return self.node("conditional_expression", [value, if_kw, cond, else_kw, alt])
        return value

    def lambda_expression(self) -> Node:
        kids = [self.kw_leaf()]
        if not self.at_op(":"):
            params = [self.parameter(allow_type=False)]
            while self.at_op(","):
                params.append(self.op_leaf())
                params.append(self.parameter(allow_type=False))
            kids.append(self.node("lambda_parameters", params))
        kids.append(self.expect_op(":"))
        kids.append(self.expression())
        return self.node("lambda", kids)

    def disjunction(self) -> Node:
        left = self.conjunction()
        while self.at_name("or"):
            left = self.node("boolean_operator", [left, self.kw_leaf(), self.conjunction()])
        return left

    def conjunction(self) -> Node:
        left = self.inversion()
        while self.at_name("and"):
            left = self.node("boolean_operator", [left, self.kw_leaf(), self.inversion()])
        return left

    def inversion(self) -> Node:
        if self.at_name("not"):
            return self.node("not_operator", [self.kw_leaf(), self.inversion()])
        return self.comparison()

    def _at_comparison_op(self) -> bool:
        t = self.cur()
        if t.kind == tk.OP and t.text in _COMP_SIMPLE_OPS:
            return True
        if t.kind == tk.NAME:
            if t.text in ("in", "is"):
                return True
            if t.text == "not" and self.peek().kind == tk.NAME and self.peek().text == "in":
                return True
        return False

    def comparison(self) -> Node:
        left = self.bitwise_or()
        if not self._at_comparison_op():
            return left
        kids = [left]
        while self._at_comparison_op():
            t = self.cur()
            if t.kind == tk.NAME and t.text == "not":
                kids.append(self.kw_leaf())
                kids.append(self.expect_name("in"))
            elif t.kind == tk.NAME and t.text == "is":
                kids.append(self.kw_leaf())
                if self.at_name("not"):
                    kids.append(self.kw_leaf())
            else:
                kids.append(self.op_leaf() if t.kind == tk.OP else self.kw_leaf())
            kids.append(self.bitwise_or())
        return self.node("comparison_operator", kids)

    def _binary_level(self, ops: tuple[str, ...], next_level) -> Node:
        left = next_level()
        while self.cur().kind == tk.OP and self.cur().text in ops:
            left = self.node("binary_operator", [left, self.op_leaf(), next_level()])
        return left

    def bitwise_or(self) -> Node:
        return self._binary_level(("|",), self.bitwise_xor)

    def bitwise_xor(self) -> Node:
        return self._binary_level(("^",), self.bitwise_and)

    def bitwise_and(self) -> Node:
        return self._binary_level(("&",), self.shift)

    def shift(self) -> Node:
        return self._binary_level(("<<", ">>"), self.arith)

    def arith(self) -> Node:
        return self._binary_level(("+", "-"), self.term)

    def term(self) -> Node:
        return self._binary_level(("*", "/", "//", "%", "@"), self.factor)

    def factor(self) -> Node:
        t = self.cur()
        if t.kind == tk.OP and t.text in ("+", "-", "~"):
            return self.node("unary_operator", [self.op_leaf(), self.factor()])
        return self.power()

    def power(self) -> Node:
        base = self.awaited()
        if self.at_op("**"):
            return self.node("binary_operator", [base, self.op_leaf(), self.factor()])
        return base

    def awaited(self) -> Node:
        if self.at_name("await"):
            return self.node("await", [self.kw_leaf(), self.postfix()])
        return self.postfix()

    def postfix(self) -> Node:
        node = self.atom()
        while True:
            if self.at_op("("):
                node = self.node("call", [node, self.argument_list()])
            elif self.at_op("."):
                dot = self.op_leaf()
                node = self.node("attribute", [node, dot, self.identifier()])
            elif self.at_op("["):
                node = self.subscript(node)
            else:
                return node

    def argument_list(self) -> Node:
        kids = [self.expect_op("(")]
        while not self.at_op(")"):
            t = self.cur()
            if t.kind == tk.OP and t.text == "*":
                kids.append(self.node("list_splat", [self.op_leaf(), self.expression()]))
            elif t.kind == tk.OP and t.text == "**":
                kids.append(self.node("dictionary_splat", [self.op_leaf(), self.expression()]))
            elif (
                t.kind == tk.NAME
                and t.text not in KEYWORDS
                and self.peek().kind == tk.OP
                and self.peek().text == "="
            ):
                name = self.identifier()
                kids.append(self.node("keyword_argument", [name, self.op_leaf(), self.expression()]))
            else:
                expr = self.expression()
                if self._at_comprehension_for():
                    # parenless generator argument: f(x for x in xs)
                    expr = self.node("generator_expression", [expr] + self.comprehension_clauses())
                kids.append(expr)
            if self.at_op(","):
                kids.append(self.op_leaf())
            elif not self.at_op(")"):
                raise _ParseFail
        kids.append(self.op_leaf())
        return self.node("argument_list", kids)

    def subscript(self, base: Node) -> Node:
        kids = [base, self.expect_op("[")]
        while not self.at_op("]"):
            kids.append(self.subscript_item())
            if self.at_op(","):
                kids.append(self.op_leaf())
            elif not self.at_op("]"):
                raise _ParseFail
        kids.append(self.op_leaf())
        return self.node("subscript", kids)

    def subscript_item(self) -> Node:
        parts: list[Node] = []
        if not self.at_op(":"):
            first = self.expression()
            if not self.at_op(":"):
                return first
            parts.append(first)
        parts.append(self.op_leaf())
        if self.starts_expression():
            parts.append(self.expression())
        if self.at_op(":"):
            parts.append(self.op_leaf())
            if self.starts_expression():
                parts.append(self.expression())
        return self.node("slice", parts)

    # targets (assignment/for/del): primary-level, below comparison so that
    # the 'in' of a for header is never swallowed.

    def target(self) -> Node:
        if self.at_op("*"):
            return self.node("list_splat_pattern", [self.op_leaf(), self.target()])
        return self.postfix()

    def target_list(self) -> Node:
        items = [self.target()]
        saw_comma = False
        while self.at_op(","):
            items.append(self.op_leaf())
            saw_comma = True
            if not self.starts_expression():
                break
            items.append(self.target())
        if saw_comma:
            return self.node("tuple", items)
        return items[0]

    # atoms

    def atom(self) -> Node:
        t = self.cur()
        if t.kind == tk.NAME:
            if t.text == "True":
                return self.leaf(self.advance(), "true", named=True)
            if t.text == "False":
                return self.leaf(self.advance(), "false", named=True)
            if t.text == "None":
                return self.leaf(self.advance(), "none", named=True)
            if t.text == "lambda":
                return self.lambda_expression()
            if t.text == "yield":
                return self.yield_expression()
            if t.text in KEYWORDS:
                raise _ParseFail
            return self.identifier()
        if t.kind == tk.NUMBER:
            label = "float" if number_is_float(t.text) else "integer"
            return self.leaf(self.advance(), label, named=True)
        if t.kind == tk.STRING:
            first = self.leaf(self.advance(), "string", named=True)
            if self.at(tk.STRING):
                parts = [first]
                while self.at(tk.STRING):
                    parts.append(self.leaf(self.advance(), "string", named=True))
                return self.node("concatenated_string", parts)
            return first
        if t.kind == tk.OP:
            if t.text == "...":
                return self.leaf(self.advance(), "ellipsis", named=True)
            if t.text == "(":
                return self.paren_atom()
            if t.text == "[":
                return self.bracket_atom()
            if t.text == "{":
                return self.brace_atom()
        raise _ParseFail

    def _at_comprehension_for(self) -> bool:
        return self.at_name("for") or (self.at_name("async") and self.peek().text == "for")

    def comprehension_clauses(self) -> list[Node]:
        clauses: list[Node] = []
        while True:
            if self._at_comprehension_for():
                kids = []
                if self.at_name("async"):
                    kids.append(self.kw_leaf())
                kids += [self.kw_leaf(), self.target_list(), self.expect_name("in"), self.disjunction()]
                clauses.append(self.node("for_in_clause", kids))
            elif self.at_name("if"):
                clauses.append(self.node("if_clause", [self.kw_leaf(), self.disjunction()]))
            else:
                return clauses

    def paren_atom(self) -> Node:
        open_p = self.op_leaf()
        if self.at_op(")"):
            return self.node("tuple", [open_p, self.op_leaf()])
        if self.at_name("yield"):
            inner = self.yield_expression()
            return self.node("parenthesized_expression", [open_p, inner, self.expect_op(")")])
        first = self.star_or_expression()
        if self._at_comprehension_for():
            kids = [open_p, first] + self.comprehension_clauses() + [self.expect_op(")")]
            return self.node("generator_expression", kids)
        if self.at_op(","):
            kids = [open_p, first]
            while self.at_op(","):
                kids.append(self.op_leaf())
                if self.at_op(")"):
                    break
                kids.append(self.star_or_expression())
            kids.append(self.expect_op(")"))
            return self.node("tuple", kids)
        return self.node("parenthesized_expression", [open_p, first, self.expect_op(")")])

    def bracket_atom(self) -> Node:
        open_b = self.op_leaf()
        if self.at_op("]"):
            return self.node("list", [open_b, self.op_leaf()])
        first = self.star_or_expression()
        if self._at_comprehension_for():
            kids = [open_b, first] + self.comprehension_clauses() + [self.expect_op("]")]
            return self.node("list_comprehension", kids)
        kids = [open_b, first]
        while self.at_op(","):
            kids.append(self.op_leaf())
            if self.at_op("]"):
                break
            kids.append(self.star_or_expression())
        kids.append(self.expect_op("]"))
        return self.node("list", kids)

    def brace_atom(self) -> Node:
        open_b = self.op_leaf()
        if self.at_op("}"):
            return self.node("dictionary", [open_b, self.op_leaf()])
        if self.at_op("**"):
            first: Node = self.node("dictionary_splat", [self.op_leaf(), self.expression()])
            is_pair = True
        else:
            key = self.expression()
            if self.at_op(":"):
                first = self.node("pair", [key, self.op_leaf(), self.expression()])
                is_pair = True
            else:
                first = key
                is_pair = False
        if self._at_comprehension_for():
            label = "dictionary_comprehension" if is_pair else "set_comprehension"
            kids = [open_b, first] + self.comprehension_clauses() + [self.expect_op("}")]
            return self.node(label, kids)
        kids = [open_b, first]
        while self.at_op(","):
            kids.append(self.op_leaf())
            if self.at_op("}"):
                break
            if is_pair:
                if self.at_op("**"):
                    kids.append(self.node("dictionary_splat", [self.op_leaf(), self.expression()]))
                else:
                    key = self.expression()
                    colon = self.expect_op(":")
                    kids.append(self.node("pair", [key, colon, self.expression()]))
            else:
                kids.append(self.star_or_expression())
        kids.append(self.expect_op("}"))
        return self.node("dictionary" if is_pair else "set", kids)


def parse(source: str) -> AstTree:
    """Parse UTF-8 source into a tree; never raises on malformed code."""
    source_bytes = source.encode("utf-8")
    if source.isascii():
        byte_of = None
    else:
        byte_of = [0] * (len(source) + 1)
        acc = 0
        for idx, ch in enumerate(source):
            byte_of[idx] = acc
            acc += len(ch.encode("utf-8"))
        byte_of[len(source)] = acc
    parser = _Parser(tokenize(source), byte_of)
    root = parser.parse_module(len(source_bytes))
    return AstTree(root, source, source_bytes)
