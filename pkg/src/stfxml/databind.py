"""Schema-driven data binding.

:func:`derive_bindings` turns a compiled :class:`~stfxml.schema.Schema` into
record descriptors, one per element declaration with complex content (plus
one per simple-typed global element).  :func:`unmarshal` and :func:`marshal`
then move between documents and :class:`TypedValue` trees without any
generated source code.

Field naming follows the usual binding convention: child elements become
fields named after the element with a lower-case first letter (``Atwd`` ->
``atwd``), attributes keep their names, and simple content is ``value``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

from .schema import (
    ComplexType,
    ElementDecl,
    ListType,
    Schema,
    SimpleType,
    Violation,
    apply_defaults,
    format_simple,
    parse_simple,
    primitive,
    validate,
)
from .xmlcore import QName, XmlDocument, XmlElement

__all__ = [
    "SCALAR",
    "LIST",
    "RECORD",
    "RECORDS",
    "BindingError",
    "FieldDescriptor",
    "RecordDescriptor",
    "BindingModel",
    "TypedValue",
    "derive_bindings",
    "unmarshal",
    "marshal",
    "format_value",
    "resolve_path",
]

SCALAR = "scalar"
LIST = "list-of-scalar"
RECORD = "child-record"
RECORDS = "repeated-child-record"


class BindingError(Exception):
    def __init__(self, message: str, violations: list[Violation] | None = None):
        self.violations = list(violations or [])
        if self.violations:
            message += "\n" + "\n".join(str(v) for v in self.violations)
        super().__init__(message)


@dataclass(frozen=True)
class FieldDescriptor:
    name: str
    kind: str
    source: str  # "attribute", "element" or "content"
    xml_name: QName
    simple_type: SimpleType | None = None
    record: str | None = None
    default: Any = None
    optional: bool = False

    @property
    def builtin(self) -> str | None:
        """Built-in kind of the scalar (or list item) values."""
        if self.simple_type is None:
            return None
        base = primitive(self.simple_type)
        if isinstance(base, ListType):
            base = primitive(base.item)
        return base.kind


@dataclass(frozen=True)
class RecordDescriptor:
    name: str
    element: QName
    fields: tuple[FieldDescriptor, ...]

    def field(self, name: str) -> FieldDescriptor:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)


@dataclass
class BindingModel:
    records: dict[str, RecordDescriptor]
    roots: dict[QName, str]
    schema: Schema = field(repr=False)
    _decls: dict[str, ElementDecl] = field(default_factory=dict, repr=False)

    def root_record(self, qname: QName) -> RecordDescriptor:
        return self.records[self.roots[qname]]


@dataclass
class TypedValue:
    record: str
    fields: dict[str, Any]

    def __getitem__(self, name: str):
        return self.fields[name]


def _field_name(local: str) -> str:
    return local[:1].lower() + local[1:]


class _Deriver:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.records: dict[str, RecordDescriptor] = {}
        self.decls: dict[str, ElementDecl] = {}
        self.by_decl: dict[int, str] = {}

    def record_for(self, decl: ElementDecl, parent: str | None) -> str:
        if id(decl) in self.by_decl:
            return self.by_decl[id(decl)]
        name = decl.name.local_name
        if name in self.records or name in self.decls:
            name = f"{parent}.{name}" if parent else name
        self.by_decl[id(decl)] = name
        self.decls[name] = decl
        t = decl.type
        fields: list[FieldDescriptor] = []
        if isinstance(t, ComplexType):
            if t.simple_content is not None:
                fields.append(self.simple_field("value", "content", decl.name, t.simple_content, decl.default, False))
            for a in t.attributes:
                fields.append(self.simple_field(a.name, "attribute", QName("", a.name), a.type, a.default, not a.required))
            for p in t.particles:
                fields.append(self.element_field(p, name))
        else:
            fields.append(self.simple_field("value", "content", decl.name, t, decl.default, False))
        names = [f.name for f in fields]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise BindingError(f"record {name!r} has clashing field names: {sorted(dup)}")
        self.records[name] = RecordDescriptor(name, decl.name, tuple(fields))
        return name

    def simple_field(self, name, source, xml_name, t, default, optional) -> FieldDescriptor:
        kind = LIST if isinstance(primitive(t), ListType) else SCALAR
        value = parse_simple(t, default) if default is not None else None
        return FieldDescriptor(name, kind, source, xml_name, t, None, value, optional or default is not None)

    def element_field(self, p: ElementDecl, parent: str) -> FieldDescriptor:
        repeated = p.max_occurs is None or p.max_occurs > 1
        optional = p.min_occurs == 0
        if isinstance(p.type, ComplexType):
            rec = self.record_for(p, parent)
            return FieldDescriptor(_field_name(p.name.local_name), RECORDS if repeated else RECORD, "element", p.name,
                                   None, rec, None, optional)
        if repeated:
            raise BindingError(f"repeated simple-typed element {p.name.text!r} has no binding")
        f = self.simple_field(_field_name(p.name.local_name), "element", p.name, p.type, p.default, optional)
        return f


def derive_bindings(schema: Schema) -> BindingModel:
    """Build the record model for every global element of ``schema``."""
    d = _Deriver(schema)
    roots = {}
    for decl in schema.elements.values():
        roots[decl.name] = d.record_for(decl, None)
    return BindingModel(d.records, roots, schema, d.decls)


# -- unmarshal ----------------------------------------------------------------


def _read_simple(f: FieldDescriptor, lexical: str | None):
    if lexical is None:
        return f.default
    return parse_simple(f.simple_type, lexical)


def _build(model: BindingModel, rec: RecordDescriptor, el: XmlElement) -> TypedValue:
    values: dict[str, Any] = {}
    children = el.elements
    for f in rec.fields:
        if f.source == "attribute":
            values[f.name] = _read_simple(f, el.get(f.xml_name.local_name))
        elif f.source == "content":
            text = el.text
            values[f.name] = f.default if text == "" and f.default is not None else parse_simple(f.simple_type, text)
        else:
            matches = [c for c in children if c.name == f.xml_name]
            if f.kind == RECORDS:
                values[f.name] = [_build(model, model.records[f.record], c) for c in matches]
            elif f.kind == RECORD:
                values[f.name] = _build(model, model.records[f.record], matches[0]) if matches else None
            elif matches:
                text = matches[0].text
                values[f.name] = f.default if text == "" and f.default is not None else parse_simple(f.simple_type, text)
            else:
                values[f.name] = f.default
    return TypedValue(rec.name, values)


def unmarshal(model: BindingModel, doc: XmlDocument) -> TypedValue:
    """Typed tree for ``doc``; defaults are applied and scalars parsed."""
    report = validate(model.schema, doc)
    if report.violations:
        raise BindingError(f"document does not validate against the schema ({len(report)} violation(s))",
                           report.violations)
    doc = apply_defaults(model.schema, doc)
    return _build(model, model.root_record(doc.root.name), doc.root)


# -- marshal ------------------------------------------------------------------


def _check_scalar(f: FieldDescriptor, value, where: str):
    kind = f.builtin
    if kind == "string":
        ok = isinstance(value, str)
    elif kind == "boolean":
        ok = isinstance(value, bool)
    else:
        ok = isinstance(value, int) and not isinstance(value, bool)
    if not ok:
        raise BindingError(f"{where}: expected a {kind} value, got {value!r}")


def _emit(model: BindingModel, rec: RecordDescriptor, value: TypedValue, name: QName, nsmap, where: str) -> XmlElement:
    if not isinstance(value, TypedValue) or value.record != rec.name:
        raise BindingError(f"{where}: expected a {rec.name!r} record, got {value!r}")
    extra = set(value.fields) - {f.name for f in rec.fields}
    if extra:
        raise BindingError(f"{where}: unknown field(s) {sorted(extra)} for record {rec.name!r}")
    attrs = []
    text = None
    kids: list[XmlElement] = []
    for f in rec.fields:
        v = value.fields.get(f.name)
        here = f"{where}.{f.name}"
        if v is None:
            if not f.optional and f.kind != RECORDS:
                raise BindingError(f"{here}: required field is missing")
            continue
        if f.kind == SCALAR:
            _check_scalar(f, v, here)
        elif f.kind == LIST:
            if not isinstance(v, list):
                raise BindingError(f"{here}: expected a list, got {v!r}")
            for i, item in enumerate(v):
                _check_scalar(f, item, f"{here}[{i}]")
        if f.source == "attribute":
            attrs.append((f.xml_name, format_simple(f.simple_type, v)))
        elif f.source == "content":
            text = format_simple(f.simple_type, v)
        elif f.kind == RECORDS:
            if not isinstance(v, list):
                raise BindingError(f"{here}: expected a list of {f.record!r} records")
            sub = model.records[f.record]
            kids.extend(_emit(model, sub, item, f.xml_name, nsmap, f"{here}[{i}]") for i, item in enumerate(v))
        elif f.kind == RECORD:
            kids.append(_emit(model, model.records[f.record], v, f.xml_name, nsmap, here))
        else:
            kids.append(XmlElement(f.xml_name, (), [format_simple(f.simple_type, v)], 1, nsmap))
    children = [text] if text is not None else kids
    return XmlElement(name, attrs, children, 1, nsmap)


def marshal(model: BindingModel, value: TypedValue, prefix: str | None = None) -> XmlDocument:
    """Document for ``value``; raises :class:`BindingError` unless it validates."""
    root_name = next((q for q, r in model.roots.items() if r == getattr(value, "record", None)), None)
    if root_name is None:
        raise BindingError(f"{value!r} is not a record of a global element")
    tns = root_name.namespace_uri
    nsmap = {}
    attrs = []
    if tns:
        prefix = prefix or root_name.prefix or next(
            (p for p, u in model.schema.namespaces.items() if u == tns and p), "tns")
        nsmap = {prefix: tns}
        root_name = QName(tns, root_name.local_name, prefix)
        attrs = [(QName("http://www.w3.org/2000/xmlns/", prefix, "xmlns"), tns)]
    root = _emit(model, model.records[model.roots[root_name]], value, root_name, nsmap, value.record)
    root = XmlElement(root.name, attrs + [(a.name, a.value) for a in root.attributes],
                      root.children, 1, nsmap)
    doc = XmlDocument(root)
    report = validate(model.schema, doc)
    if report.violations:
        raise BindingError(f"value does not satisfy the schema ({len(report)} violation(s))", report.violations)
    return doc


# -- presentation -------------------------------------------------------------


def _fmt(f: FieldDescriptor, v) -> str:
    if v is None:
        return "(absent)"
    return format_simple(f.simple_type, v)


def format_value(model: BindingModel, value: TypedValue, indent: str = "  ") -> str:
    """Indented ``field = value`` lines for a typed tree."""
    lines = [value.record]

    def walk(v: TypedValue, depth: int):
        rec = model.records[v.record]
        pad = indent * depth
        for f in rec.fields:
            x = v.fields.get(f.name)
            if f.kind == RECORDS:
                for i, item in enumerate(x or []):
                    lines.append(f"{pad}{f.name}[{i}]")
                    walk(item, depth + 1)
            elif f.kind == RECORD:
                if x is None:
                    lines.append(f"{pad}{f.name} = (absent)")
                else:
                    lines.append(f"{pad}{f.name}")
                    walk(x, depth + 1)
            else:
                lines.append(f"{pad}{f.name} = {_fmt(f, x)}")

    walk(value, 1)
    return "\n".join(lines)


_SEG_RE = re.compile(r"([A-Za-z_][\w.-]*?)(?:\[(\d+)\])?$")


def resolve_path(value: TypedValue, path: str):
    """Follow a dotted path such as ``atwd[0].channel`` through a typed tree."""
    current: Any = value
    for seg in path.split("."):
        m = _SEG_RE.match(seg)
        if not m or not isinstance(current, TypedValue) or m.group(1) not in current.fields:
            raise KeyError(f"no field {seg!r} in path {path!r}")
        current = current.fields[m.group(1)]
        if m.group(2) is not None:
            try:
                current = current[int(m.group(2))]
            except (IndexError, TypeError):
                raise KeyError(f"index out of range at {seg!r} in path {path!r}") from None
    return current
