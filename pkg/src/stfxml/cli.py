"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 well-formedness error, 3 validation
failure, 4 definition/schema/stylesheet error.  Diagnostics go to stderr as
``FILE:LINE: message``.
"""
from __future__ import annotations

import argparse
import sys

from . import databind, schema, stf, xpath, xslt
from .xmlcore import Attribute, WellFormednessError, XmlDocument, XmlElement, parse_tree, serialize

OK, USAGE, WELLFORMED, INVALID, DEFINITION = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(USAGE, f"{self.prog}: error: {message}")


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(USAGE, f"{path}: cannot read: {exc.strerror}") from None


def _load(path: str) -> XmlDocument:
    try:
        return parse_tree(_read(path))
    except WellFormednessError as exc:
        raise CliError(WELLFORMED, f"{path}:{exc.line}: {exc.message}") from None


def _write(path: str | None, data: bytes | str):
    if isinstance(data, str):
        data = data.encode("utf-8")
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise CliError(USAGE, f"{path}: cannot write: {exc.strerror}") from None


def _report(path: str, report: schema.ValidationReport) -> int:
    if report.violations:
        for v in report.violations:
            print(f"{path}:{v}", file=sys.stdout)
        return INVALID
    return OK


def _load_schema(path: str) -> schema.Schema:
    doc = _load(path)
    try:
        return schema.load_schema(doc)
    except schema.SchemaError as exc:
        raise CliError(DEFINITION, f"{path}:{getattr(exc, 'line', 0) or 1}: {exc}") from None


def _load_defn(path: str) -> stf.ModuleDefn:
    doc = _load(path)
    try:
        return stf.load_defn(doc)
    except stf.DefinitionError as exc:
        if not exc.violations:
            raise CliError(DEFINITION, f"{path}:1: {exc}") from None
        lines = [f"{path}:{exc.violations[0].line}: {exc.message}"]
        lines += [f"{path}:{v}" for v in exc.violations]
        raise CliError(DEFINITION, "\n".join(lines)) from None


# -- subcommands --------------------------------------------------------------


def cmd_check(args) -> int:
    for path in args.files:
        _load(path)
        print(f"{path}: well-formed")
    return OK


def cmd_validate(args) -> int:
    s = _load_schema(args.schema)
    doc = _load(args.xml)
    return _report(args.xml, schema.validate(s, doc))


def _node_line(node) -> str:
    if isinstance(node, Attribute):
        return f"{schema.node_path(node)}={node.value}"
    if isinstance(node, XmlElement):
        return schema.node_path(node)
    if isinstance(node, XmlDocument):
        return "/"
    return repr(node.value)


def cmd_xpath(args) -> int:
    doc = _load(args.file)
    ns = {p: u for p, u in doc.root.nsmap.items() if p}
    for binding in args.ns or []:
        prefix, sep, uri = binding.partition("=")
        if not sep:
            raise CliError(USAGE, f"--ns expects PREFIX=URI, got {binding!r}")
        ns[prefix] = uri
    try:
        expr = xpath.compile_expr(args.expr, ns)
        value = xpath.evaluate(expr, xpath.EvalContext(doc, namespaces=ns))
    except SyntaxError as exc:
        raise CliError(USAGE, f"xpath: {exc}") from None
    except xpath.XPathTypeError as exc:
        raise CliError(USAGE, f"xpath: {exc}") from None
    if isinstance(value, list):
        for node in value:
            print(node.string_value() if args.values else _node_line(node))
    else:
        print(xpath.to_string(value))
    return OK


def cmd_transform(args) -> int:
    sheet_doc = _load(args.xsl)
    try:
        sheet = xslt.load_stylesheet(sheet_doc)
    except xslt.StylesheetError as exc:
        raise CliError(DEFINITION, f"{args.xsl}:{getattr(exc, 'line', 1)}: {exc}") from None
    doc = _load(args.xml)
    try:
        out = xslt.transform(sheet, doc)
    except (xslt.StylesheetError, xpath.XPathTypeError) as exc:
        raise CliError(DEFINITION, f"{args.xsl}:1: {exc}") from None
    _write(args.output, out)
    return OK


def cmd_bind(args) -> int:
    s = _load_schema(args.schema)
    doc = _load(args.xml)
    try:
        model = databind.derive_bindings(s)
        value = databind.unmarshal(model, doc)
    except databind.BindingError as exc:
        for v in exc.violations:
            print(f"{args.xml}:{v}")
        if not exc.violations:
            raise CliError(DEFINITION, f"{args.schema}:1: {exc}") from None
        return INVALID
    if args.count:
        try:
            target = databind.resolve_path(value, args.count)
        except KeyError as exc:
            raise CliError(USAGE, f"--count: {exc.args[0]}") from None
        if not isinstance(target, list):
            raise CliError(USAGE, f"--count: {args.count!r} is not a repeated field")
        print(len(target))
    else:
        print(databind.format_value(model, value))
    return OK


def cmd_stf(args) -> int:
    defn = _load_defn(args.defn)
    action = args.action
    if action == "gen-header":
        _write(args.output, stf.gen_header(defn))
    elif action == "gen-setup-schema":
        _write(args.output, serialize(stf.gen_setup_schema(defn)))
    elif action == "gen-result-schema":
        _write(args.output, serialize(stf.gen_result_schema(defn)))
    elif action == "check-setup":
        return _report(args.doc, stf.check_setup(defn, _load(args.doc)))
    else:
        return _report(args.doc, stf.check_result(defn, _load(args.doc)))
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stfxml", description="XML toolchain for STF module definitions and data files.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="check that files are well-formed")
    c.add_argument("files", nargs="+")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("validate", help="validate a document against a schema")
    v.add_argument("--schema", required=True)
    v.add_argument("xml")
    v.set_defaults(func=cmd_validate)

    x = sub.add_parser("xpath", help="evaluate an expression from the document node")
    x.add_argument("expr")
    x.add_argument("file")
    x.add_argument("--ns", action="append", metavar="PREFIX=URI", help="extra namespace binding")
    x.add_argument("--values", action="store_true", help="print string-values instead of node paths")
    x.set_defaults(func=cmd_xpath)

    t = sub.add_parser("transform", help="apply a stylesheet")
    t.add_argument("--xsl", required=True)
    t.add_argument("xml")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_transform)

    b = sub.add_parser("bind", help="unmarshal a document into a typed tree")
    b.add_argument("--schema", required=True)
    b.add_argument("xml")
    b.add_argument("--count", metavar="PATH", help="print the size of a repeated field, e.g. atwd[0].channel")
    b.set_defaults(func=cmd_bind)

    s = sub.add_parser("stf", help="STF module tooling")
    ssub = s.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("gen-header", "gen-setup-schema", "gen-result-schema"):
        g = ssub.add_parser(name)
        g.add_argument("defn")
        g.add_argument("-o", "--output")
        g.set_defaults(func=cmd_stf)
    for name in ("check-setup", "check-result"):
        g = ssub.add_parser(name)
        g.add_argument("defn")
        g.add_argument("doc")
        g.set_defaults(func=cmd_stf)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
