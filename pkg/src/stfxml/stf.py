"""Simple Test Framework (STF) toolchain.

A module definition (``stf:test``) declares a test's name, version and typed
input/output parameters.  From it this module generates the C signatures
(by running the bundled ``defn2Signature.xsl`` through :mod:`stfxml.xslt`)
and the schemas that setup and result documents must satisfy.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from . import databind, schema, xslt
from .schema import XSD_NS, ValidationReport, Violation
from .xmlcore import XMLNS_NS, QName, XmlDocument, XmlElement, parse_tree

STF_NS = "http://glacier.lbl.gov/icecube/daq/stf"
XSI_NS = schema.XSI_NS

KINDS = ("boolean", "string", "unsignedInt", "unsignedLong")
NUMERIC_KINDS = ("unsignedInt", "unsignedLong")
TRAILER = (("passed", "boolean"), ("testRunnable", "boolean"), ("boardID", "string"))

_C_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_C_KEYWORDS = frozenset(
    "auto break case char const continue default do double else enum extern float for goto if inline int "
    "long register restrict return short signed sizeof static struct switch typedef union unsigned void "
    "volatile while".split()
)

__all__ = [
    "STF_NS",
    "KINDS",
    "DefinitionError",
    "Parameter",
    "ModuleDefn",
    "load_defn",
    "defn_document",
    "gen_header",
    "gen_setup_schema",
    "gen_result_schema",
    "check_setup",
    "check_result",
    "setup_values",
    "signature_stylesheet",
]


class DefinitionError(ValueError):
    """A module definition is malformed or inconsistent."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        self.violations = list(violations or [])
        self.message = message
        super().__init__(message)

    def __str__(self):
        return "\n".join([self.message, *map(str, self.violations)])


@dataclass(frozen=True)
class Parameter:
    name: str
    kind: str
    default: bool | int | str | None = None
    min_value: int | None = None
    max_value: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DefinitionError(f"parameter {self.name!r}: unknown kind {self.kind!r}")
        if self.kind not in NUMERIC_KINDS and (self.min_value is not None or self.max_value is not None):
            raise DefinitionError(f"parameter {self.name!r}: bounds only apply to numeric kinds")
        if self.min_value is not None and self.max_value is not None and self.min_value > self.max_value:
            raise DefinitionError(
                f"parameter {self.name!r}: minValue {self.min_value} exceeds maxValue {self.max_value}")
        if self.default is not None:
            if self.min_value is not None and self.default < self.min_value:
                raise DefinitionError(
                    f"parameter {self.name!r}: default {self.default} is below minValue {self.min_value}")
            if self.max_value is not None and self.default > self.max_value:
                raise DefinitionError(
                    f"parameter {self.name!r}: default {self.default} is above maxValue {self.max_value}")

    @property
    def builtin(self) -> schema.BuiltIn:
        return schema.BUILTINS[self.kind]


@dataclass(frozen=True)
class ModuleDefn:
    name: str
    description: str = ""
    version: tuple[int, int] = (1, 0)
    input_params: tuple[Parameter, ...] = ()
    output_params: tuple[Parameter, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "input_params", tuple(self.input_params))
        object.__setattr__(self, "output_params", tuple(self.output_params))
        if not _C_IDENT.fullmatch(self.name) or self.name in _C_KEYWORDS:
            raise DefinitionError(f"module name {self.name!r} is not a valid C identifier")
        if any(v < 0 for v in self.version):
            raise DefinitionError("version numbers must be non-negative")
        names = [p.name for p in self.params]
        seen = set()
        for n in names:
            if n in seen:
                raise DefinitionError(f"parameter name {n!r} is used more than once")
            seen.add(n)
        for p in self.output_params:
            if p.default is not None:
                raise DefinitionError(f"output parameter {p.name!r} cannot have a default")

    @property
    def params(self) -> tuple[Parameter, ...]:
        return self.input_params + self.output_params


# -- loading ------------------------------------------------------------------


def _data(name: str) -> bytes:
    return resources.files("stfxml").joinpath("data").joinpath(name).read_bytes()


@lru_cache(maxsize=None)
def defn_schema() -> schema.Schema:
    return schema.load_schema(parse_tree(_data("stfDefn.xsd")))


@lru_cache(maxsize=None)
def _defn_model() -> databind.BindingModel:
    return databind.derive_bindings(defn_schema())


@lru_cache(maxsize=None)
def signature_stylesheet() -> xslt.Stylesheet:
    """The bundled stylesheet that renders module signatures."""
    return xslt.load_stylesheet(parse_tree(_data("defn2Signature.xsl")))


def _param(rec: databind.TypedValue, is_input: bool) -> Parameter:
    name = rec["name"]
    payloads = [k for k in KINDS if rec[k] is not None]
    if len(payloads) != 1:
        raise DefinitionError(f"parameter {name!r} must have exactly one of {', '.join(KINDS)}; found {len(payloads)}")
    kind = payloads[0]
    if not _C_IDENT.fullmatch(name) or name in _C_KEYWORDS:
        raise DefinitionError(f"parameter name {name!r} is not a valid C identifier")
    body = rec[kind]
    if not is_input:
        return Parameter(name, kind)
    return Parameter(name, kind, body.fields.get("default"), body.fields.get("minValue"), body.fields.get("maxValue"))


def load_defn(doc: XmlDocument) -> ModuleDefn:
    """Validate and bind a module definition document."""
    report = schema.validate(defn_schema(), doc)
    if report.violations:
        raise DefinitionError("module definition does not validate", report.violations)
    value = databind.unmarshal(_defn_model(), doc)
    inputs = tuple(_param(p, True) for p in value["inputParameter"])
    outputs = tuple(_param(p, False) for p in value["outputParameter"])
    if not inputs and not outputs:
        raise DefinitionError("a module definition needs at least one parameter")
    reserved = {n for n, _ in TRAILER} & {p.name for p in inputs + outputs}
    if reserved:
        raise DefinitionError(f"parameter name(s) {sorted(reserved)} clash with result trailer fields")
    version = value["version"]
    return ModuleDefn(
        value["name"],
        value["description"] or "",
        (version["major"], version["minor"]),
        inputs,
        outputs,
    )


# -- document builders --------------------------------------------------------


def _xmlns(prefix: str, uri: str):
    return (QName(XMLNS_NS, prefix, "xmlns"), uri)


def defn_document(defn: ModuleDefn) -> XmlDocument:
    """Definition document for ``defn`` in the bundled definition vocabulary."""
    ns = {"stf": STF_NS}

    def e(local, attrs=(), kids=()):
        return XmlElement(QName("", local), attrs, kids, 1, ns)

    def param(p: Parameter, tag: str):
        attrs = []
        if p.default is not None:
            attrs.append((QName("", "default"), schema.format_simple(p.builtin, p.default)))
        if p.max_value is not None:
            attrs.append((QName("", "maxValue"), str(p.max_value)))
        if p.min_value is not None:
            attrs.append((QName("", "minValue"), str(p.min_value)))
        return e(tag, kids=[e("name", kids=[p.name]), e(p.kind, attrs)])

    kids = [e("name", kids=[defn.name])]
    if defn.description:
        kids.append(e("description", kids=[defn.description]))
    kids.append(e("version", [(QName("", "major"), str(defn.version[0])), (QName("", "minor"), str(defn.version[1]))]))
    kids += [param(p, "inputParameter") for p in defn.input_params]
    kids += [param(p, "outputParameter") for p in defn.output_params]
    root = XmlElement(QName(STF_NS, "test", "stf"), [_xmlns("stf", STF_NS)], kids, 1, ns)
    return XmlDocument(root)


def gen_header(defn: ModuleDefn) -> str:
    """C declarations for the module's init and entry points."""
    return xslt.transform(signature_stylesheet(), defn_document(defn)).decode("utf-8")


_SCHEMA_NS = {"xs": XSD_NS, "stf": STF_NS}


def _xs(local: str, attrs: dict | None = None, kids=()) -> XmlElement:
    return XmlElement(
        QName(XSD_NS, local, "xs"), [(QName("", k), v) for k, v in (attrs or {}).items()], kids, 1, _SCHEMA_NS
    )


def _seq_element(name: str, particles: list[XmlElement]) -> XmlElement:
    return _xs("element", {"name": name}, [_xs("complexType", None, [_xs("sequence", None, particles)])])


def _param_decl(p: Parameter, *, with_default: bool) -> XmlElement:
    attrs = {"name": p.name}
    if with_default and p.default is not None:
        attrs["minOccurs"] = "0"
        attrs["default"] = schema.format_simple(p.builtin, p.default)
    facets = []
    if p.min_value is not None:
        facets.append(_xs("minInclusive", {"value": str(p.min_value)}))
    if p.max_value is not None:
        facets.append(_xs("maxInclusive", {"value": str(p.max_value)}))
    if not facets:
        attrs["type"] = f"xs:{p.kind}"
        return _xs("element", attrs)
    restriction = _xs("restriction", {"base": f"xs:{p.kind}"}, facets)
    return _xs("element", attrs, [_xs("simpleType", None, [restriction])])


def _schema_doc(root_decl: XmlElement) -> XmlDocument:
    root = _xs(
        "schema",
        {"targetNamespace": STF_NS},
        [root_decl],
    )
    root = XmlElement(
        root.name,
        [_xmlns("stf", STF_NS), _xmlns("xs", XSD_NS)] + [(a.name, a.value) for a in root.attributes],
        root.children,
        1,
        _SCHEMA_NS,
    )
    return XmlDocument(root)


def gen_setup_schema(defn: ModuleDefn) -> XmlDocument:
    """Schema for setup documents: ``stf:setup/<name>/parameters/<input>*``.

    Inputs with a default are optional and carry it as an element default.
    """
    params = [_param_decl(p, with_default=True) for p in defn.input_params]
    module = _seq_element(defn.name, [_seq_element("parameters", params)])
    return _schema_doc(_seq_element("setup", [module]))


def _version_decl(defn: ModuleDefn) -> XmlElement:
    attrs = []
    for name, value in zip(("major", "minor"), defn.version):
        restriction = _xs("restriction", {"base": "xs:nonNegativeInteger"}, [_xs("enumeration", {"value": str(value)})])
        attrs.append(_xs("attribute", {"name": name, "use": "required"}, [_xs("simpleType", None, [restriction])]))
    return _xs("element", {"name": "version"}, [_xs("complexType", None, attrs)])


def gen_result_schema(defn: ModuleDefn) -> XmlDocument:
    """Schema for result documents.

    ``stf:result/<name>`` holds ``description``, ``version`` (pinned to the
    definition's numbers) and ``parameters``: the echoed inputs, the outputs,
    then the ``passed``/``testRunnable``/``boardID`` trailer.
    """
    params = [_param_decl(p, with_default=False) for p in defn.params]
    params += [_xs("element", {"name": n, "type": f"xs:{k}"}) for n, k in TRAILER]
    module = _seq_element(
        defn.name,
        [
            _xs("element", {"name": "description", "type": "xs:string"}),
            _version_decl(defn),
            _seq_element("parameters", params),
        ],
    )
    return _schema_doc(_seq_element("result", [module]))


@lru_cache(maxsize=64)
def _compiled(defn: ModuleDefn, which: str) -> schema.Schema:
    gen = gen_setup_schema if which == "setup" else gen_result_schema
    return schema.load_schema(gen(defn))


def check_setup(defn: ModuleDefn, doc: XmlDocument) -> ValidationReport:
    """Validate a setup document after filling in parameter defaults."""
    s = _compiled(defn, "setup")
    return schema.validate(s, schema.apply_defaults(s, doc))


def check_result(defn: ModuleDefn, doc: XmlDocument) -> ValidationReport:
    return schema.validate(_compiled(defn, "result"), doc)


def setup_values(defn: ModuleDefn, doc: XmlDocument) -> dict:
    """Input parameter values of a setup document, defaults included."""
    s = _compiled(defn, "setup")
    value = databind.unmarshal(databind.derive_bindings(s), doc)
    params = value[defn.name[:1].lower() + defn.name[1:]]["parameters"]
    return {p.name: params[p.name[:1].lower() + p.name[1:]] for p in defn.input_params}
