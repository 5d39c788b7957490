"""A template-rule transform engine for a small XSLT 1.0 subset.

Supported instructions: ``xsl:template`` (match, mode), ``xsl:apply-templates``
(select, mode), ``xsl:copy-of``, ``xsl:text``, ``xsl:variable`` (global and
template-local, ``select`` or content), ``xsl:choose``/``when``/``otherwise``
and literal result elements.  ``xsl:output`` selects the ``text`` or ``xml``
method.  Anything else in the XSLT namespace raises
:class:`UnsupportedInstruction`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

from . import xpath
from .xmlcore import (
    Attribute,
    Node,
    QName,
    Text,
    XmlDocument,
    XmlElement,
    escape_text,
    serialize_node,
)

XSL_NS = "http://www.w3.org/1999/XSL/Transform"

__all__ = [
    "XSL_NS",
    "UnsupportedInstruction",
    "StylesheetError",
    "AmbiguityWarning",
    "LiteralText",
    "TextInstr",
    "ApplyTemplates",
    "CopyOf",
    "Choose",
    "Variable",
    "LiteralElement",
    "TemplateRule",
    "Stylesheet",
    "load_stylesheet",
    "transform",
]


class StylesheetError(Exception):
    pass


class UnsupportedInstruction(StylesheetError):
    def __init__(self, name: str, line: int):
        super().__init__(f"line {line}: unsupported instruction {name!r}")
        self.name = name
        self.line = line


class AmbiguityWarning(UserWarning):
    """Several rules of equal specificity matched; the last one declared wins."""


# -- instructions -------------------------------------------------------------


@dataclass(frozen=True)
class LiteralText:
    text: str


@dataclass(frozen=True)
class TextInstr:
    text: str


@dataclass(frozen=True)
class ApplyTemplates:
    select: xpath.Expr | str | None = None  # str means a $variable reference
    mode: str | None = None


@dataclass(frozen=True)
class CopyOf:
    select: xpath.Expr | str


@dataclass(frozen=True)
class Choose:
    whens: tuple[tuple[xpath.Expr, tuple], ...]
    otherwise: tuple = ()


@dataclass(frozen=True)
class Variable:
    name: str
    select: xpath.Expr | str | None = None
    body: tuple = ()


@dataclass(frozen=True)
class LiteralElement:
    name: QName
    attributes: tuple[tuple[QName, str], ...]
    body: tuple
    nsmap: dict = field(default_factory=dict, compare=False, hash=False)


Instruction = Union[LiteralText, TextInstr, ApplyTemplates, CopyOf, Choose, Variable, LiteralElement]


@dataclass
class TemplateRule:
    match: xpath.Expr
    mode: str | None
    body: tuple
    source: str = ""
    line: int = 0
    index: int = 0
    branches: tuple = ()

    def specificity(self, node: Node) -> tuple[int, int] | None:
        """Best (steps, name tests) key among matching branches, or None."""
        best = None
        for b in self.branches:
            if xpath.match_pattern(b, node):
                key = (len(b.steps), sum(1 for s in b.steps if s.name is not None))
                if best is None or key > best:
                    best = key
        return best


@dataclass
class Stylesheet:
    templates: list[TemplateRule]
    variables: dict[str, Variable]
    output_method: str = "xml"
    output_indent: bool = False

    @property
    def modes(self) -> set[str | None]:
        return {t.mode for t in self.templates}


# -- loading ------------------------------------------------------------------


class _Compiler:
    def __init__(self, root: XmlElement):
        self.root = root

    def ns(self, el: XmlElement) -> dict[str, str]:
        return {p: u for p, u in el.nsmap.items() if p}

    def expr(self, el: XmlElement, attr: str, *, required: bool = True, allow_var: bool = False):
        raw = el.get(attr)
        if raw is None:
            if required:
                raise StylesheetError(f"line {el.source_line}: xsl:{el.name.local_name} needs a {attr!r} attribute")
            return None
        stripped = raw.strip()
        if allow_var and stripped.startswith("$"):
            name = stripped[1:]
            if not name or not all(ch.isalnum() or ch in "_-." for ch in name):
                raise StylesheetError(f"line {el.source_line}: bad variable reference {raw!r}")
            return name
        try:
            return xpath.compile_expr(raw, self.ns(el))
        except SyntaxError as exc:
            raise StylesheetError(f"line {el.source_line}: {exc}") from None

    def body(self, el: XmlElement) -> tuple:
        out: list = []
        for c in el.children:
            if isinstance(c, Text):
                if c.value.strip():
                    out.append(LiteralText(c.value))
                continue
            out.append(self.instruction(c))
        return tuple(out)

    def instruction(self, el: XmlElement):
        if el.name.namespace_uri != XSL_NS:
            attrs = tuple((a.name, a.value) for a in el.attributes if not a.is_namespace_decl)
            return LiteralElement(el.name, attrs, self.body(el), el.nsmap)
        kind = el.name.local_name
        if kind == "text":
            if el.elements:
                raise StylesheetError(f"line {el.source_line}: xsl:text may only contain text")
            return TextInstr(el.text)
        if kind == "apply-templates":
            if el.elements:
                raise UnsupportedInstruction(el.elements[0].name.text, el.elements[0].source_line)
            return ApplyTemplates(self.expr(el, "select", required=False, allow_var=True), el.get("mode"))
        if kind == "copy-of":
            return CopyOf(self.expr(el, "select", allow_var=True))
        if kind == "variable":
            return self.variable(el)
        if kind == "choose":
            whens = []
            otherwise: tuple | None = None
            for c in el.children:
                if isinstance(c, Text):
                    if c.value.strip():
                        raise StylesheetError(f"line {el.source_line}: text inside xsl:choose")
                    continue
                if c.name == QName(XSL_NS, "when") and otherwise is None:
                    whens.append((self.expr(c, "test"), self.body(c)))
                elif c.name == QName(XSL_NS, "otherwise") and otherwise is None:
                    otherwise = self.body(c)
                else:
                    raise UnsupportedInstruction(c.name.text, c.source_line)
            if not whens:
                raise StylesheetError(f"line {el.source_line}: xsl:choose needs at least one xsl:when")
            return Choose(tuple(whens), otherwise or ())
        raise UnsupportedInstruction(el.name.text, el.source_line)

    def variable(self, el: XmlElement) -> Variable:
        name = el.get("name")
        if not name:
            raise StylesheetError(f"line {el.source_line}: xsl:variable needs a name")
        select = self.expr(el, "select", required=False, allow_var=True)
        body = self.body(el)
        if select is not None and body:
            raise StylesheetError(f"line {el.source_line}: xsl:variable {name!r} has both select and content")
        return Variable(name, select, body)

    def load(self) -> Stylesheet:
        root = self.root
        if root.name not in (QName(XSL_NS, "stylesheet"), QName(XSL_NS, "transform")):
            raise StylesheetError(f"line {root.source_line}: root must be xsl:stylesheet")
        templates: list[TemplateRule] = []
        variables: dict[str, Variable] = {}
        method, indent = "xml", False
        for c in root.children:
            if isinstance(c, Text):
                if c.value.strip():
                    raise StylesheetError(f"line {c.source_line}: text at stylesheet top level")
                continue
            if c.name.namespace_uri != XSL_NS:
                continue  # user-defined top-level elements are ignored
            kind = c.name.local_name
            if kind == "output":
                method = c.get("method", "xml")
                if method not in ("xml", "text"):
                    raise StylesheetError(f"line {c.source_line}: output method {method!r} is not supported")
                indent = c.get("indent", "no") == "yes"
            elif kind == "variable":
                var = self.variable(c)
                if var.name in variables:
                    raise StylesheetError(f"line {c.source_line}: variable {var.name!r} declared twice")
                variables[var.name] = var
            elif kind == "template":
                match = self.expr(c, "match")
                try:
                    branches = xpath.pattern_branches(match)
                except xpath.InvalidPattern as exc:
                    raise StylesheetError(f"line {c.source_line}: {exc}") from None
                templates.append(
                    TemplateRule(match, c.get("mode"), self.body(c), c.get("match"), c.source_line, len(templates), branches)
                )
            else:
                raise UnsupportedInstruction(c.name.text, c.source_line)
        return Stylesheet(templates, variables, method, indent)


def load_stylesheet(doc: XmlDocument) -> Stylesheet:
    """Compile a stylesheet document."""
    return _Compiler(doc.root).load()


# -- execution ----------------------------------------------------------------


@dataclass
class _Fragment:
    """Result tree fragment held by a content-defined variable."""

    items: list


_BUILTIN = "<built-in>"


class _Run:
    def __init__(self, sheet: Stylesheet, doc: XmlDocument, trace):
        self.sheet = sheet
        self.doc = doc
        self.trace = trace
        self.globals: dict[str, object] = {}
        self._evaluating: set[str] = set()

    def global_var(self, name: str):
        if name in self.globals:
            return self.globals[name]
        var = self.sheet.variables.get(name)
        if var is None:
            raise StylesheetError(f"undeclared variable ${name}")
        if name in self._evaluating:
            raise StylesheetError(f"variable ${name} depends on itself")
        self._evaluating.add(name)
        value = self.var_value(var, xpath.EvalContext(self.doc), {})
        self._evaluating.discard(name)
        self.globals[name] = value
        return value

    def lookup(self, name: str, local: dict):
        if name in local:
            return local[name]
        return self.global_var(name)

    def var_value(self, var: Variable, ctx: xpath.EvalContext, local: dict):
        if isinstance(var.select, str):
            return self.lookup(var.select, local)
        if var.select is not None:
            return xpath.evaluate(var.select, ctx)
        out: list = []
        self.body(var.body, ctx, local, None, out)
        return _Fragment(out)

    def select(self, sel, ctx: xpath.EvalContext, local: dict):
        if isinstance(sel, str):
            return self.lookup(sel, local)
        return xpath.evaluate(sel, ctx)

    def choose_rule(self, node: Node, mode: str | None) -> TemplateRule | None:
        best, best_key = None, None
        tied = False
        for rule in self.sheet.templates:
            if rule.mode != mode:
                continue
            key = rule.specificity(node)
            if key is None:
                continue
            if best_key is None or key >= best_key:
                tied = best_key is not None and key == best_key
                best, best_key = rule, key
        if tied:
            warnings.warn(
                f"several rules in mode {mode!r} match {node!r} with equal specificity; using {best.source!r} (line {best.line})",
                AmbiguityWarning,
                stacklevel=2,
            )
        return best

    def apply(self, nodes: list[Node], mode: str | None, out: list):
        size = len(nodes)
        for pos, node in enumerate(nodes, 1):
            ctx = xpath.EvalContext(node, pos, size)
            rule = self.choose_rule(node, mode)
            if self.trace is not None:
                self.trace(rule, node, mode)
            if rule is not None:
                self.body(rule.body, ctx, {}, mode, out)
            elif isinstance(node, (XmlElement, XmlDocument)):
                self.apply(list(node.children), mode, out)
            elif isinstance(node, (Text, Attribute)):
                out.append(node.value)

    def body(self, body: tuple, ctx: xpath.EvalContext, local: dict, mode, out: list):
        for ins in body:
            if isinstance(ins, (LiteralText, TextInstr)):
                out.append(ins.text)
            elif isinstance(ins, ApplyTemplates):
                if ins.select is None:
                    if not isinstance(ctx.node, (XmlElement, XmlDocument)):
                        continue
                    nodes = list(ctx.node.children)
                else:
                    nodes = self.select(ins.select, ctx, local)
                    if not isinstance(nodes, list):
                        raise xpath.XPathTypeError("apply-templates select must yield a node-set")
                self.apply(nodes, ins.mode, out)
            elif isinstance(ins, CopyOf):
                self.copy(self.select(ins.select, ctx, local), out)
            elif isinstance(ins, Variable):
                local = {**local, ins.name: self.var_value(ins, ctx, local)}
            elif isinstance(ins, Choose):
                for test, branch in ins.whens:
                    if xpath.to_boolean(xpath.evaluate(test, ctx)):
                        self.body(branch, ctx, local, mode, out)
                        break
                else:
                    self.body(ins.otherwise, ctx, local, mode, out)
            elif isinstance(ins, LiteralElement):
                inner: list = []
                self.body(ins.body, ctx, local, mode, inner)
                out.append(_build_element(ins, inner))

    def copy(self, value, out: list):
        if isinstance(value, _Fragment):
            out.extend(value.items)
        elif isinstance(value, list):
            for node in value:
                if isinstance(node, XmlDocument):
                    out.append(_clone(node.root))
                elif isinstance(node, XmlElement):
                    out.append(_clone(node))
                else:
                    out.append(node.string_value())
        else:
            out.append(xpath.to_string(value))


def _clone(el: XmlElement) -> XmlElement:
    kids = [_clone(c) if isinstance(c, XmlElement) else c.value for c in el.children]
    return XmlElement(el.name, [(a.name, a.value) for a in el.attributes], kids, el.source_line, el.nsmap)


def _build_element(ins: LiteralElement, items: list) -> XmlElement:
    return XmlElement(ins.name, ins.attributes, items, 1, ins.nsmap)


def _render(items: list, method: str) -> str:
    if method == "text":
        return "".join(i if isinstance(i, str) else i.string_value() for i in items)
    body = "".join(escape_text(i) if isinstance(i, str) else serialize_node(i) for i in items)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body


def transform(
    sheet: Stylesheet,
    doc: XmlDocument,
    trace: Callable[[TemplateRule | None, Node, str | None], object] | None = None,
) -> bytes:
    """Run ``sheet`` over ``doc`` starting from the document node.

    ``trace`` is called as ``trace(rule, node, mode)`` for every node
    templates are applied to; ``rule`` is ``None`` when a built-in rule
    handles the node.
    """
    out: list = []
    _Run(sheet, doc, trace).apply([doc], None, out)
    return _render(out, sheet.output_method).encode("utf-8")
