"""XML toolchain for the Simple Test Framework: parsing, a small XML Schema
validator, a mini XPath/XSLT engine, schema-driven data binding and the STF
code/schema generators."""

from .databind import BindingError, TypedValue, derive_bindings, marshal, unmarshal
from .schema import ValidationReport, Violation, apply_defaults, load_schema, validate
from .stf import (
    DefinitionError,
    ModuleDefn,
    Parameter,
    check_result,
    check_setup,
    gen_header,
    gen_result_schema,
    gen_setup_schema,
    load_defn,
)
from .xmlcore import (
    QName,
    WellFormednessError,
    XmlDocument,
    XmlElement,
    parse_stream,
    parse_tree,
    serialize,
    tree_equal,
)
from .xpath import EvalContext, compile_expr, evaluate, match_pattern
from .xslt import load_stylesheet, transform

__version__ = "0.1.0"

__all__ = [
    "BindingError", "TypedValue", "derive_bindings", "marshal", "unmarshal",
    "ValidationReport", "Violation", "apply_defaults", "load_schema", "validate",
    "DefinitionError", "ModuleDefn", "Parameter", "check_result", "check_setup",
    "gen_header", "gen_result_schema", "gen_setup_schema", "load_defn",
    "QName", "WellFormednessError", "XmlDocument", "XmlElement",
    "parse_stream", "parse_tree", "serialize", "tree_equal",
    "EvalContext", "compile_expr", "evaluate", "match_pattern",
    "load_stylesheet", "transform",
]
