"""Compile and enforce a small XML Schema subset.

Supported vocabulary: ``schema``, ``element``, ``complexType``, ``sequence``,
``simpleType``, ``restriction``, ``list``, ``extension``, ``simpleContent``,
``attribute``, ``unique``/``selector``/``field`` and the facets
``enumeration``, ``length``, ``maxExclusive``, ``maxInclusive`` and
``minInclusive``.  Any other schema element raises
:class:`UnsupportedConstruct`.

Global elements live in the target namespace; local element declarations
and all attributes are unqualified unless ``elementFormDefault="qualified"``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from . import xpath
from .xmlcore import Attribute, QName, Text, XmlDocument, XmlElement

XSD_NS = "http://www.w3.org/2001/XMLSchema"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"

__all__ = [
    "XSD_NS",
    "XSI_NS",
    "SchemaError",
    "UnsupportedConstruct",
    "UnresolvedType",
    "BuiltIn",
    "Restriction",
    "ListType",
    "ComplexType",
    "Facet",
    "AttrDecl",
    "ElementDecl",
    "IdentityConstraint",
    "Schema",
    "Violation",
    "ValidationReport",
    "BUILTINS",
    "load_schema",
    "validate",
    "apply_defaults",
    "parse_simple",
    "format_simple",
]


class SchemaError(Exception):
    pass


class UnsupportedConstruct(SchemaError):
    def __init__(self, name: str, line: int, detail: str = ""):
        super().__init__(f"line {line}: unsupported schema construct {name!r}" + (f" ({detail})" if detail else ""))
        self.name = name
        self.line = line


class UnresolvedType(SchemaError):
    def __init__(self, name: str, line: int = 0):
        super().__init__(f"line {line}: cannot resolve type {name!r}")
        self.name = name
        self.line = line


# -- simple types -------------------------------------------------------------

_INT_RE = re.compile(r"[+-]?\d+")
_UPPER = {
    "unsignedShort": 65535,
    "unsignedInt": 4294967295,
    "unsignedLong": 18446744073709551615,
    "nonNegativeInteger": None,
}


@dataclass(frozen=True)
class BuiltIn:
    kind: str

    @property
    def numeric(self) -> bool:
        return self.kind in _UPPER

    def parse(self, lexical: str):
        """Map a lexical form to its value; raise ``ValueError`` when outside the lexical/value space."""
        if self.kind == "string":
            return lexical
        text = lexical.strip(" \t\n\r")
        if self.kind == "boolean":
            if text in ("true", "1"):
                return True
            if text in ("false", "0"):
                return False
            raise ValueError(f"{lexical!r} is not a valid boolean")
        if not _INT_RE.fullmatch(text):
            raise ValueError(f"{lexical!r} is not a valid {self.kind}")
        value = int(text)
        upper = _UPPER[self.kind]
        if value < 0 or (upper is not None and value > upper):
            raise ValueError(f"{lexical!r} is outside the value space of {self.kind}")
        return value

    def __str__(self):
        return f"xs:{self.kind}"


BUILTINS = {k: BuiltIn(k) for k in ("string", "boolean", "unsignedShort", "unsignedInt", "unsignedLong", "nonNegativeInteger")}


@dataclass(frozen=True)
class Facet:
    kind: str  # length | maxExclusive | maxInclusive | minInclusive | enumeration
    value: Union[int, tuple]

    def __post_init__(self):
        if self.kind == "length" and self.value < 0:
            raise ValueError("length must be non-negative")
        if self.kind == "enumeration" and not self.value:
            raise ValueError("enumeration needs at least one value")


@dataclass(frozen=True)
class ListType:
    item: "SimpleType"
    name: str | None = None


@dataclass(frozen=True)
class Restriction:
    base: "SimpleType"
    facets: tuple[Facet, ...]
    name: str | None = None


SimpleType = Union[BuiltIn, ListType, Restriction]


def primitive(t: SimpleType) -> BuiltIn | ListType:
    while isinstance(t, Restriction):
        t = t.base
    return t


def _all_facets(t: SimpleType) -> list[Facet]:
    facets: list[Facet] = []
    while isinstance(t, Restriction):
        facets[:0] = t.facets
        t = t.base
    return facets


def parse_simple(t: SimpleType, lexical: str):
    """Value of ``lexical`` under ``t`` without facet checks (lists become lists)."""
    base = primitive(t)
    if isinstance(base, ListType):
        item = primitive(base.item)
        if isinstance(item, BuiltIn):
            return [item.parse(tok) for tok in lexical.split()]
        return [parse_simple(item, tok) for tok in lexical.split()]
    return base.parse(lexical)


def format_simple(t: SimpleType, value) -> str:
    """Canonical lexical form of ``value``."""
    base = primitive(t)
    if isinstance(base, ListType):
        return " ".join(format_simple(base.item, v) for v in value)
    if base.kind == "boolean":
        return "true" if value else "false"
    return str(value)


def check_simple(t: SimpleType, lexical: str) -> list[tuple[str, str]]:
    """Return ``(kind, message)`` problems for ``lexical`` against ``t``."""
    try:
        value = parse_simple(t, lexical)
    except ValueError as exc:
        return [("lexical", str(exc))]
    problems = []
    for f in _all_facets(t):
        if f.kind == "length":
            if len(value) != f.value:
                problems.append(("length", f"list has {len(value)} items, length facet requires {f.value}"))
        elif f.kind == "maxExclusive":
            if not value < f.value:
                problems.append(("maxExclusive", f"value {value} is not < {f.value}"))
        elif f.kind == "maxInclusive":
            if not value <= f.value:
                problems.append(("maxInclusive", f"value {value} is not <= {f.value}"))
        elif f.kind == "minInclusive":
            if not value >= f.value:
                problems.append(("minInclusive", f"value {value} is not >= {f.value}"))
        elif f.kind == "enumeration":
            if value not in f.value:
                allowed = ", ".join(format_simple(t, v) for v in f.value)
                problems.append(("enumeration", f"value {format_simple(t, value)!r} not in enumeration ({allowed})"))
    return problems


# -- complex types and declarations --------------------------------------------


@dataclass(frozen=True)
class AttrDecl:
    name: str
    type: SimpleType
    default: str | None = None
    required: bool = False


@dataclass
class ComplexType:
    """Element content: a sequence of element particles, or simple content."""

    particles: tuple["ElementDecl", ...] = ()
    attributes: tuple[AttrDecl, ...] = ()
    simple_content: SimpleType | None = None
    name: str | None = None

    def attribute(self, name: str) -> AttrDecl | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None


TypeDef = Union[SimpleType, ComplexType]


@dataclass(frozen=True)
class IdentityConstraint:
    name: str
    selector: xpath.Expr
    field: xpath.Expr
    selector_text: str = ""
    field_text: str = ""


@dataclass(eq=False)
class ElementDecl:
    name: QName
    type: TypeDef
    min_occurs: int = 1
    max_occurs: int | None = 1  # None means unbounded
    default: str | None = None
    uniques: tuple[IdentityConstraint, ...] = ()
    line: int = 0

    def __repr__(self):
        return f"ElementDecl({self.name.text})"


@dataclass
class Schema:
    target_namespace: str
    elements: dict[str, ElementDecl]
    types: dict[str, TypeDef]
    namespaces: dict[str, str] = field(default_factory=dict)

    def global_element(self, qname: QName) -> ElementDecl | None:
        decl = self.elements.get(qname.local_name)
        if decl is not None and decl.name == qname:
            return decl
        return None


# -- loading ------------------------------------------------------------------

_SUPPORTED = {
    "schema", "element", "complexType", "sequence", "simpleType", "restriction", "list",
    "extension", "simpleContent", "attribute", "unique", "selector", "field",
    "enumeration", "length", "maxExclusive", "maxInclusive", "minInclusive",
}
_FACETS = {"enumeration", "length", "maxExclusive", "maxInclusive", "minInclusive"}


def _xs_children(el: XmlElement) -> list[XmlElement]:
    out = []
    for c in el.children:
        if isinstance(c, Text):
            if c.value.strip():
                raise UnsupportedConstruct("text", c.source_line, "character data inside schema markup")
            continue
        if c.name.namespace_uri != XSD_NS or c.name.local_name not in _SUPPORTED:
            raise UnsupportedConstruct(c.name.text, c.source_line)
        out.append(c)
    return out


def _int_attr(el: XmlElement, name: str, default: int | None = None) -> int | None:
    raw = el.get(name)
    if raw is None:
        return default
    raw = raw.strip()
    if not _INT_RE.fullmatch(raw):
        raise UnsupportedConstruct(f"{el.name.local_name}/@{name}", el.source_line, f"{raw!r} is not an integer")
    return int(raw)


class _Loader:
    def __init__(self, root: XmlElement):
        self.root = root
        self.tns = root.get("targetNamespace", "")
        form = root.get("elementFormDefault", "unqualified")
        if form not in ("qualified", "unqualified"):
            raise UnsupportedConstruct("elementFormDefault", root.source_line, form)
        self.qualified = form == "qualified"
        self.named: dict[str, XmlElement] = {}
        self.types: dict[str, TypeDef] = {}
        self.resolving: set[str] = set()
        self.complex_pending: list[tuple[ComplexType, XmlElement]] = []

    def resolve_name(self, raw: str, el: XmlElement) -> TypeDef:
        prefix, sep, local = raw.partition(":")
        if not sep:
            prefix, local = "", raw
        uri = el.nsmap.get(prefix, "")
        if prefix and prefix not in el.nsmap:
            raise UnresolvedType(raw, el.source_line)
        if uri == XSD_NS:
            if local in BUILTINS:
                return BUILTINS[local]
            raise UnresolvedType(raw, el.source_line)
        if uri != self.tns or local not in self.named:
            raise UnresolvedType(raw, el.source_line)
        return self.named_type(local)

    def named_type(self, name: str) -> TypeDef:
        if name in self.types:
            return self.types[name]
        if name in self.resolving:
            raise UnsupportedConstruct("recursive type", self.named[name].source_line, name)
        self.resolving.add(name)
        el = self.named[name]
        if el.name.local_name == "simpleType":
            t = self.simple_type(el, name)
        else:
            t = self.complex_type(el, name)
        self.resolving.discard(name)
        self.types[name] = t
        return t

    def simple_type(self, el: XmlElement, name: str | None = None) -> SimpleType:
        kids = _xs_children(el)
        if len(kids) != 1 or kids[0].name.local_name not in ("restriction", "list"):
            raise UnsupportedConstruct(el.name.local_name, el.source_line, "expected one restriction or list")
        body = kids[0]
        if body.name.local_name == "list":
            inner = _xs_children(body)
            if body.get("itemType") is not None:
                if inner:
                    raise UnsupportedConstruct("list", body.source_line, "itemType and inline type together")
                item = self.resolve_name(body.get("itemType"), body)
            elif len(inner) == 1 and inner[0].name.local_name == "simpleType":
                item = self.simple_type(inner[0])
            else:
                raise UnsupportedConstruct("list", body.source_line, "missing item type")
            if not isinstance(item, (BuiltIn, Restriction)) or isinstance(primitive(item), ListType):
                raise UnsupportedConstruct("list", body.source_line, "item type must be atomic")
            return ListType(item, name)
        return self.restriction(body, name)

    def restriction(self, body: XmlElement, name: str | None) -> Restriction:
        kids = _xs_children(body)
        if body.get("base") is not None:
            base = self.resolve_name(body.get("base"), body)
        elif kids and kids[0].name.local_name == "simpleType":
            base = self.simple_type(kids[0])
            kids = kids[1:]
        else:
            raise UnsupportedConstruct("restriction", body.source_line, "missing base")
        if isinstance(base, ComplexType):
            raise UnsupportedConstruct("restriction", body.source_line, "complex base types are not supported")
        facets = []
        enums: list = []
        prim = primitive(base)
        for f in kids:
            kind = f.name.local_name
            if kind not in _FACETS:
                raise UnsupportedConstruct(kind, f.source_line, "not a facet")
            raw = f.get("value")
            if raw is None:
                raise UnsupportedConstruct(kind, f.source_line, "facet without value")
            if kind == "length":
                if not isinstance(prim, ListType):
                    raise UnsupportedConstruct("length", f.source_line, "length facet applies only to list types")
                n = _int_attr(f, "value")
                if n < 0:
                    raise UnsupportedConstruct("length", f.source_line, "negative length")
                facets.append(Facet("length", n))
            elif kind == "enumeration":
                if isinstance(prim, ListType):
                    raise UnsupportedConstruct("enumeration", f.source_line, "enumeration on list types")
                try:
                    enums.append(parse_simple(base, raw))
                except ValueError as exc:
                    raise UnsupportedConstruct("enumeration", f.source_line, str(exc)) from None
            else:
                if isinstance(prim, ListType) or not prim.numeric:
                    raise UnsupportedConstruct(kind, f.source_line, f"{kind} applies only to numeric types")
                facets.append(Facet(kind, _int_attr(f, "value")))
        if enums:
            facets.append(Facet("enumeration", tuple(enums)))
        return Restriction(base, tuple(facets), name)

    def complex_type(self, el: XmlElement, name: str | None = None) -> ComplexType:
        ct = ComplexType(name=name)
        # particles are filled after all named types are registered
        self.complex_pending.append((ct, el))
        kids = _xs_children(el)
        attrs = []
        for k in kids:
            local = k.name.local_name
            if local == "sequence":
                continue
            if local == "attribute":
                attrs.append(self.attribute(k))
            elif local == "simpleContent":
                sc = _xs_children(k)
                if len(sc) != 1 or sc[0].name.local_name != "extension":
                    raise UnsupportedConstruct("simpleContent", k.source_line, "only extension is supported")
                ext = sc[0]
                if ext.get("base") is None:
                    raise UnsupportedConstruct("extension", ext.source_line, "missing base")
                base = self.resolve_name(ext.get("base"), ext)
                if isinstance(base, ComplexType):
                    raise UnsupportedConstruct("extension", ext.source_line, "base must be a simple type")
                ct.simple_content = base
                for a in _xs_children(ext):
                    if a.name.local_name != "attribute":
                        raise UnsupportedConstruct(a.name.local_name, a.source_line, "inside extension")
                    attrs.append(self.attribute(a))
            else:
                raise UnsupportedConstruct(local, k.source_line, "inside complexType")
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            raise UnsupportedConstruct("attribute", el.source_line, "duplicate attribute declaration")
        ct.attributes = tuple(attrs)
        return ct

    def fill_particles(self, ct: ComplexType, el: XmlElement):
        kids = _xs_children(el)
        seqs = [k for k in kids if k.name.local_name == "sequence"]
        if len(seqs) > 1:
            raise UnsupportedConstruct("sequence", seqs[1].source_line, "more than one sequence")
        if seqs and ct.simple_content is not None:
            raise UnsupportedConstruct("sequence", seqs[0].source_line, "sequence together with simpleContent")
        particles = []
        if seqs:
            if seqs[0].get("minOccurs") is not None or seqs[0].get("maxOccurs") is not None:
                raise UnsupportedConstruct("sequence", seqs[0].source_line, "occurrence bounds on sequence")
            for p in _xs_children(seqs[0]):
                if p.name.local_name != "element":
                    raise UnsupportedConstruct(p.name.local_name, p.source_line, "inside sequence")
                particles.append(self.element(p, is_global=False))
        ct.particles = tuple(particles)

    def attribute(self, el: XmlElement) -> AttrDecl:
        name = el.get("name")
        if not name or el.get("ref") is not None:
            raise UnsupportedConstruct("attribute", el.source_line, "attributes need a name (ref is unsupported)")
        kids = _xs_children(el)
        if el.get("type") is not None:
            if kids:
                raise UnsupportedConstruct("attribute", el.source_line, "type and inline simpleType together")
            t = self.resolve_name(el.get("type"), el)
        elif kids and kids[0].name.local_name == "simpleType" and len(kids) == 1:
            t = self.simple_type(kids[0])
        elif not kids:
            t = BUILTINS["string"]
        else:
            raise UnsupportedConstruct("attribute", el.source_line)
        if isinstance(t, ComplexType):
            raise UnsupportedConstruct("attribute", el.source_line, "attribute of complex type")
        use = el.get("use", "optional")
        if use not in ("optional", "required"):
            raise UnsupportedConstruct("attribute/@use", el.source_line, use)
        default = el.get("default")
        if default is not None:
            problems = check_simple(t, default)
            if problems:
                raise SchemaError(f"line {el.source_line}: default {default!r} of attribute {name!r} is invalid: {problems[0][1]}")
        return AttrDecl(name, t, default, use == "required")

    def element(self, el: XmlElement, is_global: bool) -> ElementDecl:
        name = el.get("name")
        if not name or el.get("ref") is not None:
            raise UnsupportedConstruct("element", el.source_line, "elements need a name (ref is unsupported)")
        for attr in el.attributes:
            if attr.is_namespace_decl or attr.name.namespace_uri:
                continue
            if attr.name.local_name not in ("name", "type", "minOccurs", "maxOccurs", "default"):
                raise UnsupportedConstruct(f"element/@{attr.name.local_name}", el.source_line)
        if is_global and (el.get("minOccurs") is not None or el.get("maxOccurs") is not None):
            raise UnsupportedConstruct("element", el.source_line, "occurrence bounds on a global element")
        kids = _xs_children(el)
        type_kids = [k for k in kids if k.name.local_name in ("complexType", "simpleType")]
        unique_kids = [k for k in kids if k.name.local_name == "unique"]
        if len(type_kids) + len(unique_kids) != len(kids) or len(type_kids) > 1:
            raise UnsupportedConstruct("element", el.source_line, "unexpected content")
        if el.get("type") is not None:
            if type_kids:
                raise UnsupportedConstruct("element", el.source_line, "type attribute and inline type together")
            t = self.resolve_name(el.get("type"), el)
        elif type_kids:
            k = type_kids[0]
            t = self.complex_type(k) if k.name.local_name == "complexType" else self.simple_type(k)
        else:
            t = BUILTINS["string"]
        max_raw = el.get("maxOccurs", "1").strip()
        max_occurs = None if max_raw == "unbounded" else _int_attr(el, "maxOccurs", 1)
        min_occurs = _int_attr(el, "minOccurs", 1)
        if min_occurs < 0 or (max_occurs is not None and max_occurs < min_occurs):
            raise UnsupportedConstruct("element", el.source_line, "inconsistent minOccurs/maxOccurs")
        default = el.get("default")
        if default is not None:
            st = t.simple_content if isinstance(t, ComplexType) else t
            if st is None:
                raise SchemaError(f"line {el.source_line}: element {name!r} with element-only content cannot have a default")
            problems = check_simple(st, default)
            if problems:
                raise SchemaError(f"line {el.source_line}: default {default!r} of element {name!r} is invalid: {problems[0][1]}")
        uniques = tuple(self.unique(u) for u in unique_kids)
        ns = self.tns if (is_global or self.qualified) else ""
        prefix = next((p for p, u in self.root.nsmap.items() if u == ns and p), "") if ns else ""
        return ElementDecl(QName(ns, name, prefix), t, min_occurs, max_occurs, default, uniques, el.source_line)

    def unique(self, el: XmlElement) -> IdentityConstraint:
        name = el.get("name")
        kids = _xs_children(el)
        if not name or [k.name.local_name for k in kids] != ["selector", "field"]:
            raise UnsupportedConstruct("unique", el.source_line, "needs a name, one selector and one field")
        exprs = []
        for k in kids:
            src = k.get("xpath")
            if src is None:
                raise UnsupportedConstruct(k.name.local_name, k.source_line, "missing xpath")
            try:
                expr = xpath.compile_expr(src, {p: u for p, u in k.nsmap.items() if p})
                xpath.pattern_branches(expr) if k.name.local_name == "selector" else None
            except (SyntaxError, xpath.InvalidPattern) as exc:
                raise UnsupportedConstruct(k.name.local_name, k.source_line, str(exc)) from None
            if not isinstance(expr, (xpath.Path, xpath.Union_)):
                raise UnsupportedConstruct(k.name.local_name, k.source_line, "only path expressions are allowed")
            exprs.append((expr, src))
        return IdentityConstraint(name, exprs[0][0], exprs[1][0], exprs[0][1], exprs[1][1])

    def load(self) -> Schema:
        root = self.root
        if root.name != QName(XSD_NS, "schema"):
            raise UnsupportedConstruct(root.name.text, root.source_line, "root must be xs:schema")
        tops = _xs_children(root)
        for k in tops:
            if k.name.local_name in ("simpleType", "complexType"):
                name = k.get("name")
                if not name:
                    raise UnsupportedConstruct(k.name.local_name, k.source_line, "top-level types need a name")
                if name in self.named:
                    raise SchemaError(f"line {k.source_line}: type {name!r} defined twice")
                self.named[name] = k
            elif k.name.local_name != "element":
                raise UnsupportedConstruct(k.name.local_name, k.source_line, "at top level")
        for name in self.named:
            self.named_type(name)
        elements: dict[str, ElementDecl] = {}
        for k in tops:
            if k.name.local_name == "element":
                decl = self.element(k, is_global=True)
                if decl.name.local_name in elements:
                    raise SchemaError(f"line {k.source_line}: element {decl.name.local_name!r} declared twice")
                elements[decl.name.local_name] = decl
        while self.complex_pending:
            ct, el = self.complex_pending.pop(0)
            self.fill_particles(ct, el)
        return Schema(self.tns, elements, dict(self.types), dict(root.nsmap))


def load_schema(doc: XmlDocument) -> Schema:
    """Compile a schema document."""
    return _Loader(doc.root).load()


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    kind: str
    message: str
    line: int

    def __str__(self):
        return f"{self.line}:{self.path}: {self.kind}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self):
        # truthy when the document passed, so ``if validate(...):`` reads naturally
        return self.valid

    def __len__(self):
        return len(self.violations)

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __str__(self):
        return "\n".join(str(v) for v in self.violations)


def node_path(node) -> str:
    """``/a/b[2]/@c`` style location of an element or attribute."""
    if isinstance(node, Attribute):
        return f"{node_path(node.parent)}/@{node.name.text}"
    parts = []
    while isinstance(node, XmlElement):
        parent = node.parent
        if isinstance(parent, XmlElement):
            same = [c for c in parent.elements if c.name == node.name]
            parts.append(f"{node.name.text}[{next(i for i, c in enumerate(same, 1) if c is node)}]")
        else:
            parts.append(node.name.text)
        node = parent
    return "/" + "/".join(reversed(parts))


def _ignored_attr(a: Attribute) -> bool:
    return a.is_namespace_decl or a.name.namespace_uri == XSI_NS


class _Validator:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.found: list[tuple[int, int, Violation]] = []
        self.decls: dict[int, ElementDecl] = {}

    def report(self, node, kind: str, message: str):
        self.found.append((node.order, len(self.found), Violation(node_path(node), kind, message, node.source_line)))

    def run(self, doc: XmlDocument) -> ValidationReport:
        root = doc.root
        decl = self.schema.global_element(root.name)
        if decl is None:
            self.report(root, "root-mismatch", f"root element {root.name} is not declared by the schema")
        else:
            self.element(root, decl)
        self.found.sort(key=lambda t: (t[0], t[1]))
        return ValidationReport([v for _, _, v in self.found])

    def element(self, el: XmlElement, decl: ElementDecl):
        self.decls[id(el)] = decl
        t = decl.type
        if isinstance(t, ComplexType):
            self.attributes(el, t)
            if t.simple_content is not None:
                self.simple_content(el, t.simple_content, decl)
            else:
                self.element_content(el, t)
        else:
            for a in el.attributes:
                if not _ignored_attr(a):
                    self.report(a, "unexpected-attribute", f"attribute {a.name.text!r} is not declared")
            self.simple_content(el, t, decl)
        for u in decl.uniques:
            self.unique(el, u)

    def simple_content(self, el: XmlElement, t: SimpleType, decl: ElementDecl):
        kids = el.elements
        if kids:
            for k in kids:
                self.report(k, "unexpected-element", f"element {k.name.text!r} not allowed in simple content")
            return
        text = el.text
        if text == "" and decl.default is not None:
            text = decl.default
        for kind, message in check_simple(t, text):
            self.report(el, kind, message)

    def attributes(self, el: XmlElement, t: ComplexType):
        present = set()
        for a in el.attributes:
            if _ignored_attr(a):
                continue
            ad = t.attribute(a.name.local_name) if not a.name.namespace_uri else None
            if ad is None:
                self.report(a, "unexpected-attribute", f"attribute {a.name.text!r} is not declared")
                continue
            present.add(ad.name)
            for kind, message in check_simple(ad.type, a.value):
                self.report(a, kind, message)
        for ad in t.attributes:
            if ad.required and ad.name not in present:
                self.report(el, "missing-attribute", f"required attribute {ad.name!r} is missing")

    def element_content(self, el: XmlElement, t: ComplexType):
        for c in el.children:
            if isinstance(c, Text) and c.value.strip():
                self.report(el, "mixed-content", f"character data {c.value.strip()[:20]!r} not allowed in element-only content")
                break
        for child, decl in match_sequence(el, t.particles, self):
            if decl is not None:
                self.element(child, decl)

    def unique(self, scope: XmlElement, u: IdentityConstraint):
        seen: dict = {}
        for node in _select(u.selector, scope):
            value = self.field_value(node, u.field)
            if value is None:
                continue
            if value in seen:
                self.report(node, "unique", f"{u.name}: field {u.field_text} value {value[1]!r} duplicates an earlier node")
            else:
                seen[value] = node

    def field_value(self, node, field_expr):
        hits = _select(field_expr, node)
        if len(hits) > 1:
            return None
        if not hits:
            # absent attribute field: fall back to a declared default
            if isinstance(node, XmlElement) and isinstance(field_expr, xpath.Path) and len(field_expr.steps) == 1:
                step = field_expr.steps[0]
                decl = self.decls.get(id(node))
                if step.axis == "attribute" and step.name is not None and decl is not None and isinstance(decl.type, ComplexType):
                    ad = decl.type.attribute(step.name.local_name)
                    if ad is not None and ad.default is not None:
                        return _key(ad.type, ad.default)
            return None
        hit = hits[0]
        st = None
        if isinstance(hit, Attribute) and isinstance(hit.parent, XmlElement):
            decl = self.decls.get(id(hit.parent))
            if decl is not None and isinstance(decl.type, ComplexType):
                ad = decl.type.attribute(hit.name.local_name)
                st = ad.type if ad else None
        elif isinstance(hit, XmlElement):
            decl = self.decls.get(id(hit))
            if decl is not None:
                st = decl.type.simple_content if isinstance(decl.type, ComplexType) else decl.type
        return _key(st, hit.string_value())


def _key(t: SimpleType | None, lexical: str):
    """Comparison key for identity constraints: typed value when it parses."""
    if t is not None:
        try:
            value = parse_simple(t, lexical)
            return ("v", tuple(value) if isinstance(value, list) else value)
        except ValueError:
            pass
    return ("s", lexical)


def _select(expr, node) -> list:
    value = xpath.evaluate(expr, xpath.EvalContext(node))
    return value if isinstance(value, list) else []


def match_sequence(el: XmlElement, particles, validator: _Validator | None = None):
    """Assign child elements of ``el`` to sequence particles.

    Returns ``(child, decl)`` pairs in document order; ``decl`` is ``None``
    for children that fit no particle.  Occurrence problems are reported to
    ``validator`` when given.
    """
    kids = el.elements
    counts = [0] * len(particles)
    idx = 0
    out = []

    def report(node, kind, message):
        if validator is not None:
            validator.report(node, kind, message)

    def close_particles(upto: int):
        for j in range(idx, upto):
            p = particles[j]
            if counts[j] < p.min_occurs:
                report(el, "minOccurs", f"expected {p.min_occurs} {p.name.text!r} element(s), found {counts[j]}")

    for child in kids:
        target = None
        for j in range(idx, len(particles)):
            p = particles[j]
            if p.name == child.name and (p.max_occurs is None or counts[j] < p.max_occurs):
                target = j
                break
        if target is None:
            if any(p.name == child.name for p in particles[idx:idx + 1]):
                report(child, "maxOccurs", f"more than {particles[idx].max_occurs} {child.name.text!r} element(s)")
            elif any(p.name == child.name for p in particles):
                report(child, "unexpected-element", f"element {child.name.text!r} is out of sequence order")
            else:
                report(child, "unexpected-element", f"element {child.name.text!r} is not allowed here")
            out.append((child, None))
            continue
        close_particles(target)
        idx = target
        counts[target] += 1
        out.append((child, particles[target]))
    close_particles(len(particles))
    return out


def validate(schema: Schema, doc: XmlDocument) -> ValidationReport:
    """Check ``doc`` against ``schema`` and collect every violation."""
    return _Validator(schema).run(doc)


# -- defaults -----------------------------------------------------------------


def apply_defaults(schema: Schema, doc: XmlDocument) -> XmlDocument:
    """Copy of ``doc`` with declared defaults filled in.

    Absent attributes with a default gain it; empty simple-content elements
    with an element default gain the default text; absent optional elements
    with a default are inserted when the surrounding sequence otherwise
    matches.
    """
    decl = schema.global_element(doc.root.name)
    if decl is None:
        return XmlDocument(_copy(doc.root), doc.declared_encoding)
    return XmlDocument(_with_defaults(doc.root, decl), doc.declared_encoding)


def _copy(el: XmlElement) -> XmlElement:
    kids = [_copy(c) if isinstance(c, XmlElement) else Text(c.value, c.source_line) for c in el.children]
    return XmlElement(el.name, [(a.name, a.value) for a in el.attributes], kids, el.source_line, el.nsmap)


def _with_defaults(el: XmlElement, decl: ElementDecl) -> XmlElement:
    t = decl.type
    attrs = [(a.name, a.value) for a in el.attributes]
    if isinstance(t, ComplexType):
        have = {q.local_name for q, _ in attrs if not q.namespace_uri}
        for ad in t.attributes:
            if ad.default is not None and ad.name not in have:
                attrs.append((QName("", ad.name), ad.default))
    simple = t.simple_content if isinstance(t, ComplexType) else t
    if simple is not None:
        kids: list = [_copy(c) if isinstance(c, XmlElement) else Text(c.value, c.source_line) for c in el.children]
        if not el.children and decl.default is not None:
            kids = [Text(decl.default, el.source_line)]
        return XmlElement(el.name, attrs, kids, el.source_line, el.nsmap)

    pairs = match_sequence(el, t.particles)
    clean = all(d is not None for _, d in pairs)
    counts = {id(p): 0 for p in t.particles}
    for _, d in pairs:
        if d is not None:
            counts[id(d)] += 1
    decl_of = {id(c): d for c, d in pairs}
    kids = []
    for c in el.children:
        if isinstance(c, Text):
            kids.append(Text(c.value, c.source_line))
        elif decl_of.get(id(c)) is not None:
            kids.append(_with_defaults(c, decl_of[id(c)]))
        else:
            kids.append(_copy(c))
    if clean:
        # insert missing defaulted elements at their sequence position
        result = []
        elements = [k for k in kids if isinstance(k, XmlElement)]
        by_particle: dict[int, list] = {}
        for child, d in zip(elements, [d for _, d in pairs]):
            by_particle.setdefault(id(d), []).append(child)
        inserted = False
        for p in t.particles:
            if counts[id(p)] == 0 and p.default is not None and p.min_occurs == 0:
                by_particle[id(p)] = [XmlElement(p.name, (), [p.default], el.source_line, el.nsmap)]
                inserted = True
        if inserted:
            for p in t.particles:
                result.extend(by_particle.get(id(p), []))
            kids = result
    return XmlElement(el.name, attrs, kids, el.source_line, el.nsmap)
