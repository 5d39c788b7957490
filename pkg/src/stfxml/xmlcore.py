"""Namespace-aware XML parsing, tree model and serialization.

Two parse modes share one tokenizer: :func:`iter_events` yields
:class:`StartElement` / :class:`EndElement` / :class:`Text` events as the
input is scanned, and :func:`parse_tree` folds those events into an
immutable :class:`XmlDocument`.  Only the syntax subset needed by the STF
corpus is accepted: elements, attributes, character data, comments, the XML
declaration, the five predefined entities and numeric character references.
CDATA sections, processing instructions and DOCTYPE declarations are
rejected.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Union

__all__ = [
    "XML_NS",
    "XMLNS_NS",
    "QName",
    "Attribute",
    "Text",
    "XmlElement",
    "XmlDocument",
    "StartElement",
    "EndElement",
    "TextEvent",
    "WellFormednessError",
    "StopParsing",
    "TreeBuilder",
    "iter_events",
    "parse_stream",
    "parse_tree",
    "serialize",
    "tree_equal",
]

XML_NS = "http://www.w3.org/XML/1998/namespace"
XMLNS_NS = "http://www.w3.org/2000/xmlns/"


class WellFormednessError(Exception):
    """Raised when input is not a well-formed document in the supported subset."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class StopParsing(Exception):
    """Raised by a stream handler to end parsing early without error."""


@dataclass(frozen=True)
class QName:
    namespace_uri: str
    local_name: str
    prefix: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.local_name or ":" in self.local_name:
            raise ValueError(f"invalid local name {self.local_name!r}")

    @property
    def text(self) -> str:
        """The name as written: ``prefix:local`` or just ``local``."""
        return f"{self.prefix}:{self.local_name}" if self.prefix else self.local_name

    def __str__(self):
        if self.namespace_uri:
            return f"{{{self.namespace_uri}}}{self.local_name}"
        return self.local_name


# -- tree nodes ---------------------------------------------------------------
#
# Nodes compare by identity; use tree_equal() for structural comparison.
# XmlDocument wires parent pointers and document-order indexes when built, so
# a node belongs to exactly one document.


class Node:
    parent: "Node | None" = None
    order: int = 0

    @property
    def document(self) -> "XmlDocument | None":
        node = self
        while node.parent is not None:
            node = node.parent
        return node if isinstance(node, XmlDocument) else None

    def string_value(self) -> str:
        raise NotImplementedError


class Text(Node):
    __slots__ = ("value", "parent", "order", "source_line")

    def __init__(self, value: str, source_line: int = 1):
        self.value = value
        self.source_line = source_line
        self.parent = None
        self.order = 0

    def string_value(self) -> str:
        return self.value

    def __repr__(self):
        return f"Text({self.value!r})"


class Attribute(Node):
    __slots__ = ("name", "value", "parent", "order")

    def __init__(self, name: QName, value: str):
        self.name = name
        self.value = value
        self.parent = None
        self.order = 0

    @property
    def source_line(self) -> int:
        return self.parent.source_line if self.parent is not None else 1

    @property
    def is_namespace_decl(self) -> bool:
        return self.name.namespace_uri == XMLNS_NS

    def string_value(self) -> str:
        return self.value

    def __iter__(self):
        # unpacks as (name, value)
        return iter((self.name, self.value))

    def __repr__(self):
        return f"Attribute({self.name.text}={self.value!r})"


class XmlElement(Node):
    """An element with ordered attributes and children.

    ``nsmap`` holds the in-scope prefix bindings (``""`` for the default
    namespace); schema and stylesheet loaders need it to resolve QName-valued
    attribute content such as ``type="xs:string"``.
    """

    __slots__ = ("name", "attributes", "children", "source_line", "nsmap", "parent", "order")

    def __init__(
        self,
        name: QName,
        attributes: Iterable[Attribute | tuple[QName, str]] = (),
        children: Iterable["XmlElement | Text | str"] = (),
        source_line: int = 1,
        nsmap: dict[str, str] | None = None,
    ):
        self.name = name
        attrs = []
        seen = set()
        for a in attributes:
            if not isinstance(a, Attribute):
                a = Attribute(*a)
            if a.name in seen:
                raise ValueError(f"duplicate attribute {a.name.text}")
            seen.add(a.name)
            attrs.append(a)
        self.attributes = tuple(attrs)
        merged: list[XmlElement | Text] = []
        for child in children:
            if isinstance(child, str):
                child = Text(child, source_line)
            if isinstance(child, Text):
                if not child.value:
                    continue
                if merged and isinstance(merged[-1], Text):
                    prev = merged[-1]
                    merged[-1] = Text(prev.value + child.value, prev.source_line)
                    continue
            merged.append(child)
        self.children = tuple(merged)
        self.source_line = source_line
        self.nsmap = dict(nsmap) if nsmap else {}
        self.parent = None
        self.order = 0

    @property
    def elements(self) -> list["XmlElement"]:
        return [c for c in self.children if isinstance(c, XmlElement)]

    @property
    def text(self) -> str:
        """Concatenation of the direct text children."""
        return "".join(c.value for c in self.children if isinstance(c, Text))

    def get(self, local_name: str, default=None, namespace_uri: str = ""):
        for a in self.attributes:
            if a.name.local_name == local_name and a.name.namespace_uri == namespace_uri:
                return a.value
        return default

    def attribute(self, local_name: str, namespace_uri: str = "") -> Attribute | None:
        for a in self.attributes:
            if a.name.local_name == local_name and a.name.namespace_uri == namespace_uri:
                return a
        return None

    def string_value(self) -> str:
        parts = []
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Text):
                parts.append(node.value)
            else:
                stack.extend(reversed(node.children))
        return "".join(parts)

    def iter(self) -> Iterator["XmlElement"]:
        """Elements of this subtree in document order, self first."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.elements))

    def __repr__(self):
        return f"<XmlElement {self.name.text} line={self.source_line}>"


class XmlDocument(Node):
    """The document node; owns exactly one root element."""

    def __init__(self, root: XmlElement, declared_encoding: str = "UTF-8"):
        if not isinstance(root, XmlElement):
            raise TypeError("document root must be an XmlElement")
        self.root = root
        self.declared_encoding = declared_encoding
        self.parent = None
        self.order = 0
        self._wire()

    @property
    def children(self) -> tuple[XmlElement]:
        return (self.root,)

    @property
    def source_line(self) -> int:
        return 1

    def _wire(self):
        counter = 1
        stack: list[tuple[Node, Node]] = [(self, self.root)]
        while stack:
            parent, node = stack.pop()
            if node.parent is not None and node.parent is not parent:
                raise ValueError(f"{node!r} already belongs to another tree")
            node.parent = parent
            node.order = counter
            counter += 1
            if isinstance(node, XmlElement):
                for a in node.attributes:
                    a.parent = node
                    a.order = counter
                    counter += 1
                stack.extend((node, c) for c in reversed(node.children))

    def string_value(self) -> str:
        return self.root.string_value()

    def __repr__(self):
        return f"<XmlDocument root={self.root.name.text}>"


# -- events -------------------------------------------------------------------


@dataclass(frozen=True)
class StartElement:
    name: QName
    attributes: tuple[tuple[QName, str], ...]
    namespaces: dict
    source_line: int


@dataclass(frozen=True)
class EndElement:
    name: QName
    source_line: int


@dataclass(frozen=True)
class TextEvent:
    value: str
    source_line: int


Event = Union[StartElement, EndElement, TextEvent]


# -- tokenizer ----------------------------------------------------------------

_NAME_START = "A-Z_a-zÀ-ÖØ-öø-˿Ͱ-ͽͿ-῿‌-‍⁰-↏Ⰰ-⿯、-퟿豈-﷏ﷰ-�"
_NAME_CHAR = _NAME_START + r"\-.0-9·̀-ͯ‿-⁀"
_NAME = f"[{_NAME_START}:][{_NAME_CHAR}:]*"
_NAME_RE = re.compile(_NAME)
_NCNAME_RE = re.compile(f"[{_NAME_START}][{_NAME_CHAR}]*")
_ATTR_RE = re.compile(rf"\s+({_NAME})\s*=\s*(\"[^\"]*\"|'[^']*')")
_XML_DECL_RE = re.compile(
    r"<\?xml\s+version\s*=\s*(\"1\.[0-9]\"|'1\.[0-9]')"
    r"(?:\s+encoding\s*=\s*(\"[A-Za-z][A-Za-z0-9._-]*\"|'[A-Za-z][A-Za-z0-9._-]*'))?"
    r"(?:\s+standalone\s*=\s*(\"(?:yes|no)\"|'(?:yes|no)'))?\s*\?>"
)
_REF_RE = re.compile(r"&(#x[0-9A-Fa-f]+|#[0-9]+|[A-Za-z_][\w.-]*);")
_PREDEFINED = {"lt": "<", "gt": ">", "amp": "&", "apos": "'", "quot": '"'}
_ILLEGAL_CHAR_RE = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f￾￿]")


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        text = data
    else:
        if data.startswith(b"\xef\xbb\xbf"):
            data = data[3:]
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = data[: exc.start].count(b"\n") + 1
            raise WellFormednessError(line, "input is not valid UTF-8") from None
    # line-end normalization
    return text.replace("\r\n", "\n").replace("\r", "\n")


def _expand_refs(raw: str, line: int) -> str:
    if "&" not in raw:
        return raw
    out = []
    pos = 0
    for m in _REF_RE.finditer(raw):
        stray = raw.find("&", pos, m.start())
        if stray != -1:
            raise WellFormednessError(line + raw.count("\n", 0, stray), "unescaped '&'")
        out.append(raw[pos : m.start()])
        ref = m.group(1)
        if ref.startswith("#"):
            code = int(ref[2:], 16) if ref[1] == "x" else int(ref[1:])
            try:
                ch = chr(code)
            except (ValueError, OverflowError):
                ch = ""
            if not ch or _ILLEGAL_CHAR_RE.match(ch) or 0xD800 <= code <= 0xDFFF:
                raise WellFormednessError(line, f"character reference &{ref}; is not a legal character")
            out.append(ch)
        elif ref in _PREDEFINED:
            out.append(_PREDEFINED[ref])
        else:
            raise WellFormednessError(line, f"undefined entity &{ref};")
        pos = m.end()
    stray = raw.find("&", pos)
    if stray != -1:
        raise WellFormednessError(line + raw.count("\n", 0, stray), "unescaped '&'")
    out.append(raw[pos:])
    return "".join(out)


def _split_name(raw: str, line: int) -> tuple[str, str]:
    prefix, sep, local = raw.partition(":")
    if not sep:
        return "", raw
    if not prefix or not local or ":" in local or not _NCNAME_RE.fullmatch(prefix):
        raise WellFormednessError(line, f"malformed qualified name {raw!r}")
    return prefix, local


def _resolve(raw: str, scope: dict, line: int, *, is_attr: bool) -> QName:
    prefix, local = _split_name(raw, line)
    if prefix == "xml":
        return QName(XML_NS, local, prefix)
    if not prefix:
        uri = "" if is_attr else scope.get("", "")
        return QName(uri, local)
    if prefix not in scope:
        raise WellFormednessError(line, f"undeclared namespace prefix {prefix!r}")
    return QName(scope[prefix], local, prefix)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1

    def advance_to(self, pos: int):
        self.line += self.text.count("\n", self.pos, pos)
        self.pos = pos

    def error(self, message: str, at: int | None = None):
        line = self.line if at is None else self.line + self.text.count("\n", self.pos, at)
        raise WellFormednessError(line, message)


def iter_events(data: bytes | str) -> Iterator[Event]:
    """Scan ``data`` and yield parse events in document order.

    Parser state is the open-element stack and its namespace scopes; nothing
    else is retained between events.
    """
    s = _Scanner(_decode(data))
    text = s.text
    n = len(text)
    declared_encoding = ""

    m = _XML_DECL_RE.match(text)
    if m:
        if m.group(2):
            declared_encoding = m.group(2)[1:-1]
            if declared_encoding.upper().replace("_", "-") not in ("UTF-8", "UTF8"):
                raise WellFormednessError(1, f"unsupported encoding {declared_encoding!r}; only UTF-8 is accepted")
        s.advance_to(m.end())
    elif re.match(r"<\?xml[\s?]", text):
        raise WellFormednessError(1, "malformed XML declaration")

    # open elements: (raw name, QName, namespace scope)
    stack: list[tuple[str, QName, dict]] = []
    scope: dict[str, str] = {}
    seen_root = False

    while s.pos < n:
        lt = text.find("<", s.pos)
        if lt == -1:
            lt = n
        if lt > s.pos:
            raw = text[s.pos : lt]
            start_line = s.line
            if "]]>" in raw:
                s.error("']]>' not allowed in character data", s.pos + raw.index("]]>"))
            bad = _ILLEGAL_CHAR_RE.search(raw)
            if bad:
                s.error("illegal character in content", s.pos + bad.start())
            if not stack:
                if raw.strip():
                    s.error("text outside the root element")
            else:
                yield TextEvent(_expand_refs(raw, start_line), start_line)
            s.advance_to(lt)
            if lt == n:
                break

        if text.startswith("<!--", lt):
            end = text.find("-->", lt + 4)
            if end == -1:
                s.error("unterminated comment")
            if "--" in text[lt + 4 : end] or text[end - 1] == "-":
                s.error("'--' not allowed inside a comment")
            s.advance_to(end + 3)
            continue
        if text.startswith("<![CDATA[", lt):
            s.error("CDATA sections are not supported")
        if text.startswith("<!DOCTYPE", lt):
            s.error("DOCTYPE declarations are not supported")
        if text.startswith("<?", lt):
            if text.startswith("<?xml", lt) and lt + 5 < n and text[lt + 5] in " \t\n?":
                s.error("XML declaration is only allowed at the start of the document")
            s.error("processing instructions are not supported")
        if text.startswith("<!", lt):
            s.error("malformed markup declaration")

        if text.startswith("</", lt):
            m = _NAME_RE.match(text, lt + 2)
            if not m:
                s.error("malformed end tag")
            raw_name = m.group(0)
            close = m.end()
            while close < n and text[close] in " \t\n":
                close += 1
            if close >= n or text[close] != ">":
                s.error(f"malformed end tag </{raw_name}")
            if not stack:
                s.error(f"end tag {raw_name!r} has no matching start tag")
            open_raw, qname, _ = stack[-1]
            if raw_name != open_raw:
                s.error(f'end tag "{raw_name}" does not match open element "{open_raw}"')
            line = s.line
            stack.pop()
            scope = stack[-1][2] if stack else {}
            s.advance_to(close + 1)
            yield EndElement(qname, line)
            continue

        # start tag
        m = _NAME_RE.match(text, lt + 1)
        if not m:
            s.error("malformed markup: '<' not followed by a name")
        if seen_root and not stack:
            s.error("document has more than one root element")
        raw_name = m.group(0)
        pos = m.end()
        raw_attrs: list[tuple[str, str, int]] = []
        while True:
            am = _ATTR_RE.match(text, pos)
            if am:
                at = am.group(2)[1:-1]
                if "<" in at:
                    s.error(f"'<' not allowed in attribute value of {am.group(1)!r}", am.start(2))
                raw_attrs.append((am.group(1), at, s.line + text.count("\n", s.pos, am.start(2))))
                pos = am.end()
                continue
            ws = pos
            while pos < n and text[pos] in " \t\n":
                pos += 1
            if text.startswith("/>", pos) or text.startswith(">", pos):
                break
            if pos < n and _NAME_RE.match(text, pos) and pos > ws:
                s.error(f"malformed attribute in start tag {raw_name!r}", pos)
            if pos < n and _NAME_RE.match(text, pos):
                s.error(f"attributes of {raw_name!r} must be separated by whitespace", pos)
            s.error(f"malformed start tag {raw_name!r}", min(pos, n))
        empty = text.startswith("/>", pos)
        end = pos + (2 if empty else 1)
        line = s.line

        new_scope = scope
        attrs: list[tuple[str, str, int]] = []
        seen_raw = set()
        for aname, aval, aline in raw_attrs:
            if aname in seen_raw:
                raise WellFormednessError(aline, f"duplicate attribute {aname!r}")
            seen_raw.add(aname)
            value = _expand_refs(_normalize_attr(aval), aline)
            if aname == "xmlns" or aname.startswith("xmlns:"):
                if new_scope is scope:
                    new_scope = dict(scope)
                key = "" if aname == "xmlns" else aname[6:]
                if aname != "xmlns" and not _NCNAME_RE.fullmatch(key):
                    raise WellFormednessError(aline, f"malformed namespace declaration {aname!r}")
                if key and not value:
                    raise WellFormednessError(aline, f"namespace prefix {key!r} bound to an empty URI")
                if key == "xmlns" or (key == "xml" and value != XML_NS):
                    raise WellFormednessError(aline, f"reserved prefix {key!r} cannot be rebound")
                if value:
                    new_scope[key] = value
                else:
                    new_scope.pop(key, None)
            attrs.append((aname, value, aline))

        qname = _resolve(raw_name, new_scope, line, is_attr=False)
        resolved: list[tuple[QName, str]] = []
        seen_q = set()
        for aname, value, aline in attrs:
            if aname == "xmlns":
                q = QName(XMLNS_NS, "xmlns", "")
            elif aname.startswith("xmlns:"):
                q = QName(XMLNS_NS, aname[6:], "xmlns")
            else:
                q = _resolve(aname, new_scope, aline, is_attr=True)
            if q in seen_q:
                raise WellFormednessError(aline, f"duplicate attribute {q} (via {aname!r})")
            seen_q.add(q)
            resolved.append((q, value))

        s.advance_to(end)
        seen_root = True
        yield StartElement(qname, tuple(resolved), new_scope, line)
        if empty:
            yield EndElement(qname, line)
        else:
            stack.append((raw_name, qname, new_scope))
            scope = new_scope

    if stack:
        raw_name = stack[-1][0]
        s.error(f'unclosed element "{raw_name}" at end of input')
    if not seen_root:
        s.error("document has no root element")


def _normalize_attr(value: str) -> str:
    return value.replace("\t", " ").replace("\n", " ")


def parse_stream(data: bytes | str, handler: Callable[[Event], object]) -> None:
    """Deliver events from ``data`` to ``handler`` one at a time.

    The handler may raise :class:`StopParsing` to end the parse cleanly.
    """
    try:
        for event in iter_events(data):
            handler(event)
    except StopParsing:
        pass


class TreeBuilder:
    """Event consumer that assembles an :class:`XmlDocument`."""

    def __init__(self):
        self._stack: list[tuple[StartElement, list]] = []
        self._root: XmlElement | None = None
        self.declared_encoding = "UTF-8"

    def __call__(self, event: Event):
        if isinstance(event, StartElement):
            self._stack.append((event, []))
        elif isinstance(event, TextEvent):
            self._stack[-1][1].append(Text(event.value, event.source_line))
        else:
            start, children = self._stack.pop()
            el = XmlElement(start.name, start.attributes, children, start.source_line, start.namespaces)
            if self._stack:
                self._stack[-1][1].append(el)
            else:
                self._root = el

    def close(self) -> XmlDocument:
        if self._root is None or self._stack:
            raise ValueError("event stream did not contain a complete document")
        return XmlDocument(self._root, self.declared_encoding)


def parse_tree(data: bytes | str) -> XmlDocument:
    """Parse a complete document into an element tree."""
    text = _decode(data)
    builder = TreeBuilder()
    m = _XML_DECL_RE.match(text)
    builder.declared_encoding = m.group(2)[1:-1] if m and m.group(2) else ""
    for event in iter_events(text):
        builder(event)
    return builder.close()


# -- serialization ------------------------------------------------------------


def escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def escape_attr(value: str) -> str:
    return (
        escape_text(value)
        .replace('"', "&quot;")
        .replace("\t", "&#9;")
        .replace("\n", "&#10;")
        .replace("\r", "&#13;")
    )


def _serialize_element(el: XmlElement, scope: dict, out: list[str]):
    local_scope = dict(scope)
    written = []
    for a in el.attributes:
        if a.is_namespace_decl:
            key = "" if a.name.local_name == "xmlns" and not a.name.prefix else a.name.local_name
            local_scope[key] = a.value
            written.append(a)
    extra: list[tuple[str, str]] = []

    def bind(q: QName, is_attr: bool) -> str:
        if q.namespace_uri == XML_NS:
            return f"xml:{q.local_name}"
        if not q.namespace_uri:
            if not is_attr and local_scope.get(""):
                local_scope[""] = ""
                extra.append(("xmlns", ""))
            return q.local_name
        prefix = q.prefix
        if is_attr and not prefix:
            prefix = "ns"
        if local_scope.get(prefix) == q.namespace_uri:
            return f"{prefix}:{q.local_name}" if prefix else q.local_name
        if prefix in local_scope or (not prefix and is_attr):
            base, i = prefix or "ns", 0
            while f"{base}{i}" in local_scope:
                i += 1
            prefix = f"{base}{i}"
        local_scope[prefix] = q.namespace_uri
        extra.append((f"xmlns:{prefix}" if prefix else "xmlns", q.namespace_uri))
        return f"{prefix}:{q.local_name}" if prefix else q.local_name

    tag = bind(el.name, False)
    parts = [f"<{tag}"]
    for a in el.attributes:
        if a.is_namespace_decl:
            raw = "xmlns" if a.name.local_name == "xmlns" and not a.name.prefix else f"xmlns:{a.name.local_name}"
            parts.append(f' {raw}="{escape_attr(a.value)}"')
    plain = [(bind(a.name, True), a.value) for a in el.attributes if not a.is_namespace_decl]
    for raw, value in extra:
        parts.append(f' {raw}="{escape_attr(value)}"')
    for raw, value in plain:
        parts.append(f' {raw}="{escape_attr(value)}"')
    out.append("".join(parts))
    if not el.children:
        out.append("/>")
        return
    out.append(">")
    for child in el.children:
        if isinstance(child, Text):
            out.append(escape_text(child.value).replace("\r", "&#13;"))
        else:
            _serialize_element(child, local_scope, out)
    out.append(f"</{tag}>")


def serialize_node(node: XmlElement | Text) -> str:
    """Markup for a single node, without an XML declaration."""
    if isinstance(node, Text):
        return escape_text(node.value)
    out: list[str] = []
    _serialize_element(node, {}, out)
    return "".join(out)


def serialize(doc: XmlDocument) -> bytes:
    out = ['<?xml version="1.0" encoding="UTF-8"?>\n']
    _serialize_element(doc.root, {}, out)
    out.append("\n")
    return "".join(out).encode("utf-8")


# -- structural equality ------------------------------------------------------


def tree_equal(a: XmlDocument | XmlElement | Text, b: XmlDocument | XmlElement | Text) -> bool:
    """Structural equality: QNames, attribute sets and merged text content."""
    if isinstance(a, XmlDocument) and isinstance(b, XmlDocument):
        return tree_equal(a.root, b.root)
    if isinstance(a, Text) and isinstance(b, Text):
        return a.value == b.value
    if not (isinstance(a, XmlElement) and isinstance(b, XmlElement)):
        return False
    if a.name != b.name:
        return False
    if {x.name: x.value for x in a.attributes} != {x.name: x.value for x in b.attributes}:
        return False
    if len(a.attributes) != len(b.attributes) or len(a.children) != len(b.children):
        return False
    return all(tree_equal(x, y) for x, y in zip(a.children, b.children))
