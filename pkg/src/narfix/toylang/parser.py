"""Recursive-descent parser producing a flat, preorder-numbered AST.

Grammar (terminals in quotes)::

    program     := item*
    item        := func_def | stmt
    func_def    := type IDENT param_list block
    param_list  := "(" [param ("," param)*] ")"
    param       := type IDENT
    block       := "{" stmt* "}"
    stmt        := if_stmt | return_stmt | decl_stmt | assign_stmt | expr_stmt | block
    if_stmt     := "if" "(" expr ")" stmt ["else" stmt]
    return_stmt := "return" [expr] ";"
    decl_stmt   := type IDENT "=" expr ";"
    assign_stmt := IDENT "=" expr ";"
    expr_stmt   := call ";"
    expr        := binary expression over || && == != < <= > >= + - * /
    primary     := IDENT | LITERAL | call | "(" expr ")"
    call        := IDENT arg_list
    arg_list    := "(" [expr ("," expr)*] ")"

Tokens are leaves; e.g. in ``return a + b ;`` the leaves ``a``, ``+``, ``b``
hang directly off one ``binary_expr`` node.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from narfix.toylang.lexer import classify

TYPES = frozenset({"int", "bool", "void"})

# lowest to highest
PRECEDENCE = (
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/"),
)


class ParseError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"syntax error at token {position}: {message}")
        self.position = position


@dataclass
class Node:
    label: str
    parent: int | None
    children: list[int] = field(default_factory=list)
    token_index: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.token_index is not None


@dataclass
class Ast:
    nodes: list[Node]
    leaves: list[int]

    @property
    def root(self) -> int:
        return 0

    def internal_nodes(self) -> list[int]:
        """Internal node indices in preorder (node ids are already preorder)."""
        return [i for i, n in enumerate(self.nodes) if not n.is_leaf]

    def path_to_root(self, node: int) -> list[int]:
        path = [node]
        while self.nodes[path[-1]].parent is not None:
            path.append(self.nodes[path[-1]].parent)
        return path

    def depth(self, node: int) -> int:
        return len(self.path_to_root(node)) - 1

    def validate(self) -> None:
        roots = [i for i, n in enumerate(self.nodes) if n.parent is None]
        if roots != [0]:
            raise ValueError(f"expected a single root at index 0, got {roots}")
        for i, n in enumerate(self.nodes):
            for c in n.children:
                if self.nodes[c].parent != i:
                    raise ValueError(f"child {c} of {i} points to {self.nodes[c].parent}")
                if c <= i:
                    raise ValueError("node ids are not in preorder")
        order = [self.nodes[i].token_index for i in self.leaves]
        if order != list(range(len(self.leaves))):
            raise ValueError("leaves are not in token order")


class _Tree:
    __slots__ = ("label", "children", "token_index")

    def __init__(self, label, children=None, token_index=None):
        self.label = label
        self.children = children or []
        self.token_index = token_index


class _Parser:
    def __init__(self, tokens):
        self.toks = list(tokens)
        self.pos = 0

    def peek(self, offset=0):
        i = self.pos + offset
        return self.toks[i] if i < len(self.toks) else None

    def error(self, message):
        raise ParseError(self.pos, message)

    def leaf(self):
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        node = _Tree(tok, token_index=self.pos)
        self.pos += 1
        return node

    def expect(self, text):
        if self.peek() != text:
            self.error(f"expected {text!r}, found {self.peek()!r}")
        return self.leaf()

    def ident(self):
        tok = self.peek()
        if tok is None or classify(tok) != "identifier":
            self.error(f"expected identifier, found {tok!r}")
        return self.leaf()

    def program(self):
        items = []
        while self.peek() is not None:
            if self.peek() in TYPES and self.peek(2) == "(":
                items.append(self.func_def())
            else:
                items.append(self.stmt())
        return _Tree("program", items)

    def func_def(self):
        type_ = self.leaf()
        name = self.ident()
        return _Tree("func_def", [type_, name, self.param_list(), self.block()])

    def param_list(self):
        kids = [self.expect("(")]
        if self.peek() != ")":
            kids.append(self.param())
            while self.peek() == ",":
                kids.append(self.leaf())
                kids.append(self.param())
        kids.append(self.expect(")"))
        return _Tree("param_list", kids)

    def param(self):
        if self.peek() not in TYPES:
            self.error(f"expected type, found {self.peek()!r}")
        return _Tree("param", [self.leaf(), self.ident()])

    def block(self):
        kids = [self.expect("{")]
        while self.peek() != "}":
            if self.peek() is None:
                self.error("unterminated block")
            kids.append(self.stmt())
        kids.append(self.expect("}"))
        return _Tree("block", kids)

    def stmt(self):
        tok = self.peek()
        if tok == "if":
            return self.if_stmt()
        if tok == "return":
            kids = [self.leaf()]
            if self.peek() != ";":
                kids.append(self.expr())
            kids.append(self.expect(";"))
            return _Tree("return_stmt", kids)
        if tok == "{":
            return self.block()
        if tok in TYPES:
            kids = [self.leaf(), self.ident(), self.expect("="), self.expr(), self.expect(";")]
            return _Tree("decl_stmt", kids)
        if tok is not None and classify(tok) == "identifier":
            if self.peek(1) == "=":
                kids = [self.leaf(), self.leaf(), self.expr(), self.expect(";")]
                return _Tree("assign_stmt", kids)
            if self.peek(1) == "(":
                return _Tree("expr_stmt", [self.call(), self.expect(";")])
        self.error(f"expected statement, found {tok!r}")

    def if_stmt(self):
        kids = [self.leaf(), self.expect("("), self.expr(), self.expect(")"), self.stmt()]
        if self.peek() == "else":
            kids.append(self.leaf())
            kids.append(self.stmt())
        return _Tree("if_stmt", kids)

    def expr(self, level=0):
        if level == len(PRECEDENCE):
            return self.primary()
        left = self.expr(level + 1)
        while self.peek() in PRECEDENCE[level]:
            op = self.leaf()
            right = self.expr(level + 1)
            left = _Tree("binary_expr", [left, op, right])
        return left

    def primary(self):
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input")
        if tok == "(":
            return _Tree("paren_expr", [self.leaf(), self.expr(), self.expect(")")])
        kind = classify(tok)
        if kind == "identifier":
            if self.peek(1) == "(":
                return self.call()
            return self.leaf()
        if kind == "literal":
            return self.leaf()
        self.error(f"expected expression, found {tok!r}")

    def call(self):
        name = self.ident()
        kids = [self.expect("(")]
        if self.peek() != ")":
            kids.append(self.expr())
            while self.peek() == ",":
                kids.append(self.leaf())
                kids.append(self.expr())
        kids.append(self.expect(")"))
        return _Tree("call", [name, _Tree("arg_list", kids)])


def _flatten(tree: _Tree) -> Ast:
    nodes: list[Node] = []
    leaves: list[int] = []
    stack = [(tree, None)]
    while stack:
        t, parent = stack.pop()
        idx = len(nodes)
        nodes.append(Node(t.label, parent, [], t.token_index))
        if parent is not None:
            nodes[parent].children.append(idx)
        if t.token_index is not None:
            leaves.append(idx)
        for child in reversed(t.children):
            stack.append((child, idx))
    return Ast(nodes, leaves)


def parse(tokens) -> Ast:
    """Parse a lexeme sequence; raises :class:`ParseError` on ungrammatical input."""
    p = _Parser(tokens)
    return _flatten(p.program())
