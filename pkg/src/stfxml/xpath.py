"""A small XPath dialect: child/attribute/parent/self steps, unions,
``=``/``and``/``or`` and the functions ``count``, ``local-name``, ``last``
and ``position``.

Values are plain Python objects: a node-set is a ``list`` of nodes in
document order, numbers are ``int`` (or ``float`` for decimal literals),
booleans are ``bool`` and strings ``str``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

from .xmlcore import Attribute, Node, QName, XmlDocument, XmlElement

__all__ = [
    "XPathSyntaxError",
    "UnboundPrefix",
    "XPathTypeError",
    "InvalidPattern",
    "Step",
    "Path",
    "Union_",
    "FunctionCall",
    "Literal",
    "BinaryOp",
    "EvalContext",
    "compile_expr",
    "evaluate",
    "match_pattern",
    "pattern_branches",
    "string_value",
    "to_string",
    "to_boolean",
    "to_number",
]


class XPathSyntaxError(SyntaxError):
    def __init__(self, position: int, message: str, source: str = ""):
        super().__init__(f"{message} at position {position}" + (f" in {source!r}" if source else ""))
        self.position = position
        self.message = message


class UnboundPrefix(XPathSyntaxError):
    def __init__(self, prefix: str, position: int = 0, source: str = ""):
        super().__init__(position, f"unbound namespace prefix {prefix!r}", source)
        self.prefix = prefix


class XPathTypeError(TypeError):
    pass


class InvalidPattern(ValueError):
    pass


# -- AST ----------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    """One location step.

    ``axis`` is ``"child"``, ``"attribute"``, ``"parent"`` or ``"self"``.
    ``name`` is ``None`` for the ``*`` wildcard (and for ``..``/``.``).
    """

    axis: str
    name: QName | None = None

    def __str__(self):
        if self.axis == "parent":
            return ".."
        if self.axis == "self":
            return "."
        test = "*" if self.name is None else _name_text(self.name)
        return "@" + test if self.axis == "attribute" else test


@dataclass(frozen=True)
class Path:
    steps: tuple[Step, ...]
    absolute: bool = False

    def __str__(self):
        body = "/".join(str(s) for s in self.steps)
        return "/" + body if self.absolute else body


@dataclass(frozen=True)
class Union_:
    branches: tuple["Expr", ...]

    def __str__(self):
        return "|".join(str(b) for b in self.branches)


@dataclass(frozen=True)
class FunctionCall:
    name: str
    args: tuple["Expr", ...] = ()

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Literal:
    value: Union[str, int, float]

    def __str__(self):
        if isinstance(self.value, str):
            return f"'{self.value}'" if '"' in self.value else f'"{self.value}"'
        return repr(self.value)


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


Expr = Union[Path, Union_, FunctionCall, Literal, BinaryOp]


def _name_text(q: QName) -> str:
    return q.text if q.prefix else q.local_name


# -- lexer --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d*)?|\.\d+)
  | (?P<string>"[^"]*"|'[^']*')
  | (?P<dotdot>\.\.)
  | (?P<op>[/|=()@*.,])
  | (?P<name>[A-Za-z_][\w.\-]*(?::[A-Za-z_][\w.\-]*)?)
    """,
    re.VERBOSE,
)

_FUNCTIONS = {"count": (1, 1), "local-name": (0, 1), "last": (0, 0), "position": (0, 0)}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(source: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise XPathSyntaxError(pos, f"unexpected character {source[pos]!r}", source)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "name":
                # 'and'/'or' are operators unless they start the expression or
                # follow something that needs an operand.
                prev = toks[-1] if toks else None
                operand_done = prev is not None and (
                    prev.kind in ("number", "string", "name", "dotdot")
                    or prev.text in (")", "*", ".")
                )
                if text in ("and", "or") and operand_done and not (prev.text == "@"):
                    kind = "keyword"
            toks.append(_Tok(kind, text, m.start()))
        pos = m.end()
    toks.append(_Tok("end", "", len(source)))
    return toks


# -- parser -------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str, ns: dict[str, str]):
        self.source = source
        self.ns = ns
        self.toks = _tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        if self.tok.text != text:
            self.fail(f"expected {text!r}")
        return self.take()

    def fail(self, message: str):
        t = self.tok
        found = "end of expression" if t.kind == "end" else repr(t.text)
        raise XPathSyntaxError(t.pos, f"{message}, found {found}", self.source)

    def parse(self) -> Expr:
        expr = self.or_expr()
        if self.tok.kind != "end":
            self.fail("unexpected token")
        return expr

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while self.tok.kind == "keyword" and self.tok.text == "or":
            self.take()
            left = BinaryOp("or", left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.eq_expr()
        while self.tok.kind == "keyword" and self.tok.text == "and":
            self.take()
            left = BinaryOp("and", left, self.eq_expr())
        return left

    def eq_expr(self) -> Expr:
        left = self.union_expr()
        while self.tok.text == "=" and self.tok.kind == "op":
            self.take()
            left = BinaryOp("=", left, self.union_expr())
        return left

    def union_expr(self) -> Expr:
        first = self.primary()
        if not (self.tok.kind == "op" and self.tok.text == "|"):
            return first
        branches = [first]
        while self.tok.kind == "op" and self.tok.text == "|":
            self.take()
            branches.append(self.primary())
        for b in branches:
            if not isinstance(b, (Path, Union_)):
                raise XPathSyntaxError(0, "union operands must be location paths", self.source)
        flat: list[Expr] = []
        for b in branches:
            flat.extend(b.branches if isinstance(b, Union_) else [b])
        return Union_(tuple(flat))

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.take()
            return Literal(float(t.text) if "." in t.text else int(t.text))
        if t.kind == "string":
            self.take()
            return Literal(t.text[1:-1])
        if t.kind == "op" and t.text == "(":
            self.take()
            inner = self.or_expr()
            self.expect(")")
            return inner
        if t.kind == "name" and self.toks[self.i + 1].text == "(":
            return self.function_call()
        return self.path()

    def function_call(self) -> FunctionCall:
        t = self.take()
        if t.text not in _FUNCTIONS:
            raise XPathSyntaxError(t.pos, f"unsupported function {t.text}()", self.source)
        self.expect("(")
        args: list[Expr] = []
        if self.tok.text != ")":
            args.append(self.or_expr())
            while self.tok.text == ",":
                self.take()
                args.append(self.or_expr())
        self.expect(")")
        lo, hi = _FUNCTIONS[t.text]
        if not lo <= len(args) <= hi:
            raise XPathSyntaxError(t.pos, f"{t.text}() takes {lo}..{hi} arguments, got {len(args)}", self.source)
        return FunctionCall(t.text, tuple(args))

    def path(self) -> Path:
        absolute = False
        if self.tok.kind == "op" and self.tok.text == "/":
            self.take()
            absolute = True
            if not self._starts_step():
                return Path((), True)
        steps = [self.step()]
        while self.tok.kind == "op" and self.tok.text == "/":
            self.take()
            if self.tok.kind == "op" and self.tok.text == "/":
                self.fail("'//' is not supported")
            steps.append(self.step())
        return Path(tuple(steps), absolute)

    def _starts_step(self) -> bool:
        t = self.tok
        return t.kind in ("name", "dotdot") or (t.kind == "op" and t.text in ("@", "*", "."))

    def step(self) -> Step:
        t = self.tok
        if t.kind == "dotdot":
            self.take()
            return Step("parent")
        if t.kind == "op" and t.text == ".":
            self.take()
            return Step("self")
        axis = "child"
        if t.kind == "op" and t.text == "@":
            self.take()
            axis = "attribute"
            t = self.tok
        if t.kind == "op" and t.text == "*":
            self.take()
            return Step(axis, None)
        if t.kind in ("name", "keyword"):
            self.take()
            return Step(axis, self.qname(t))
        self.fail("expected a location step")

    def qname(self, t: _Tok) -> QName:
        prefix, sep, local = t.text.partition(":")
        if not sep:
            # unprefixed name tests never pick up a default namespace
            return QName("", t.text)
        if prefix not in self.ns:
            raise UnboundPrefix(prefix, t.pos, self.source)
        return QName(self.ns[prefix], local, prefix)


def compile_expr(source: str, ns: dict[str, str] | None = None) -> Expr:
    """Parse ``source`` into an expression tree.

    ``ns`` maps prefixes used in name tests to namespace URIs.
    """
    return _Parser(source, dict(ns or {})).parse()


# -- evaluation ---------------------------------------------------------------


@dataclass
class EvalContext:
    node: Node
    position: int = 1
    size: int = 1
    namespaces: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.position <= self.size:
            raise ValueError("context position must lie in 1..size")


def string_value(node: Node) -> str:
    return node.string_value()


def _doc_order(nodes) -> list[Node]:
    seen: dict[int, Node] = {}
    for n in nodes:
        seen.setdefault(id(n), n)
    return sorted(seen.values(), key=lambda n: n.order)


def _name_matches(test: QName | None, name: QName) -> bool:
    return test is None or test == name


def _apply_step(nodes: list[Node], step: Step) -> list[Node]:
    out: list[Node] = []
    for node in nodes:
        if step.axis == "child":
            if isinstance(node, (XmlElement, XmlDocument)):
                out.extend(
                    c for c in node.children if isinstance(c, XmlElement) and _name_matches(step.name, c.name)
                )
        elif step.axis == "attribute":
            if isinstance(node, XmlElement):
                out.extend(
                    a for a in node.attributes if not a.is_namespace_decl and _name_matches(step.name, a.name)
                )
        elif step.axis == "parent":
            if node.parent is not None:
                out.append(node.parent)
        else:
            out.append(node)
    return _doc_order(out)


def _eval_path(path: Path, node: Node) -> list[Node]:
    if path.absolute:
        doc = node.document
        if doc is None:
            raise XPathTypeError("absolute path evaluated outside a document")
        nodes: list[Node] = [doc]
    else:
        nodes = [node]
    for step in path.steps:
        nodes = _apply_step(nodes, step)
    return nodes


def to_string(value) -> str:
    if isinstance(value, list):
        return value[0].string_value() if value else ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "NaN"
        if value.is_integer():
            return str(int(value))
        return repr(value)
    return str(value)


def to_number(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float)):
        return value
    text = to_string(value).strip()
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    if re.fullmatch(r"-?(\d+\.\d*|\.\d+)", text):
        return float(text)
    return math.nan


def to_boolean(value) -> bool:
    if isinstance(value, list):
        return bool(value)
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return value != 0 and not (isinstance(value, float) and math.isnan(value))
    return bool(value)


def _equals(a, b) -> bool:
    a_set, b_set = isinstance(a, list), isinstance(b, list)
    if a_set and b_set:
        left = {n.string_value() for n in a}
        return any(n.string_value() in left for n in b)
    if a_set or b_set:
        nodes, other = (a, b) if a_set else (b, a)
        if isinstance(other, bool):
            return to_boolean(nodes) == other
        if isinstance(other, (int, float)):
            return any(to_number(n.string_value()) == other for n in nodes)
        return any(n.string_value() == other for n in nodes)
    if isinstance(a, bool) or isinstance(b, bool):
        return to_boolean(a) == to_boolean(b)
    if isinstance(a, (int, float)) or isinstance(b, (int, float)):
        return to_number(a) == to_number(b)
    return a == b


def evaluate(expr: Expr, ctx: EvalContext):
    """Evaluate a compiled expression against ``ctx``."""
    if isinstance(expr, Path):
        return _eval_path(expr, ctx.node)
    if isinstance(expr, Union_):
        nodes: list[Node] = []
        for branch in expr.branches:
            value = evaluate(branch, ctx)
            if not isinstance(value, list):
                raise XPathTypeError("union operand is not a node-set")
            nodes.extend(value)
        return _doc_order(nodes)
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, BinaryOp):
        if expr.op == "or":
            return to_boolean(evaluate(expr.left, ctx)) or to_boolean(evaluate(expr.right, ctx))
        if expr.op == "and":
            return to_boolean(evaluate(expr.left, ctx)) and to_boolean(evaluate(expr.right, ctx))
        return _equals(evaluate(expr.left, ctx), evaluate(expr.right, ctx))
    if isinstance(expr, FunctionCall):
        if expr.name == "last":
            return ctx.size
        if expr.name == "position":
            return ctx.position
        if expr.name == "count":
            arg = evaluate(expr.args[0], ctx)
            if not isinstance(arg, list):
                raise XPathTypeError(f"count() needs a node-set, got {type(arg).__name__}")
            return len(arg)
        if expr.args:
            arg = evaluate(expr.args[0], ctx)
            if not isinstance(arg, list):
                raise XPathTypeError(f"local-name() needs a node-set, got {type(arg).__name__}")
            target = arg[0] if arg else None
        else:
            target = ctx.node
        if isinstance(target, (XmlElement, Attribute)):
            return target.name.local_name
        return ""
    raise XPathTypeError(f"cannot evaluate {expr!r}")


# -- patterns -----------------------------------------------------------------


def pattern_branches(pattern: Expr) -> tuple[Path, ...]:
    """Split a match pattern into its union branches, checking its form."""
    branches = pattern.branches if isinstance(pattern, Union_) else (pattern,)
    for b in branches:
        if not isinstance(b, Path):
            raise InvalidPattern(f"{b} is not a location path")
        for i, step in enumerate(b.steps):
            if step.axis in ("parent", "self"):
                raise InvalidPattern(f"step {step} is not allowed in a pattern")
            if step.axis == "attribute" and i != len(b.steps) - 1:
                raise InvalidPattern("attribute steps may only end a pattern")
    return branches


def _match_branch(path: Path, node: Node) -> bool:
    if not path.steps:
        return path.absolute and isinstance(node, XmlDocument)
    current: Node | None = node
    for step in reversed(path.steps):
        if step.axis == "attribute":
            if not isinstance(current, Attribute) or current.is_namespace_decl:
                return False
        elif not isinstance(current, XmlElement):
            return False
        if not _name_matches(step.name, current.name):
            return False
        current = current.parent
    return isinstance(current, XmlDocument) if path.absolute else True


def match_pattern(pattern: Expr, node: Node, ns: dict[str, str] | None = None) -> bool:
    """True when ``node`` matches one branch of ``pattern``.

    ``ns`` is accepted for symmetry with :func:`compile_expr`; prefixes are
    resolved when the pattern is compiled.
    """
    return any(_match_branch(b, node) for b in pattern_branches(pattern))
