"""Acceptance criteria, one check per criterion.

Run under pytest for the pass/fail lines in the terminal summary, or directly
with ``python tests/test_acceptance.py`` to print them on stdout.
"""
from __future__ import annotations

import contextlib
import io
import itertools
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import _gen  # noqa: E402
from stfxml import cli, databind, schema, stf, xpath, xslt  # noqa: E402
from stfxml.xmlcore import (  # noqa: E402
    EndElement,
    StartElement,
    Text,
    TextEvent,
    WellFormednessError,
    XmlDocument,
    XmlElement,
    parse_stream,
    parse_tree,
    serialize,
    tree_equal,
)

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(stf.__file__).parent / "data"
PROPERTY_CASES = 1000
RESULTS: list[str] = []


def fixture(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


def doc(name: str) -> XmlDocument:
    return parse_tree(fixture(name))


def record(number: int, title: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    return line


def run_cli(*argv: str) -> tuple[int, bytes, str]:
    out, err = io.BytesIO(), io.StringIO()

    stdout = io.TextIOWrapper(out, encoding="utf-8", write_through=True)
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(err):
        code = cli.run(list(argv))
    stdout.flush()
    return code, out.getvalue(), err.getvalue()


# -- criterion 1 --------------------------------------------------------------


def test_golden_codegen():
    golden = fixture("exampleOne.h")
    code, out, _ = run_cli("stf", "gen-header", str(FIXTURES / "exampleOne.xml"))
    sheet = xslt.load_stylesheet(parse_tree((DATA / "defn2Signature.xsl").read_bytes()))
    direct = xslt.transform(sheet, doc("exampleOne.xml"))
    ok = code == 0 and out == golden and direct == golden
    print(record(1, "golden codegen", ok, f"gen-header exit {code}, {len(out)} bytes; transform {len(direct)} bytes"))
    assert code == 0
    assert out == golden
    assert direct == golden


# -- criterion 2 --------------------------------------------------------------


def test_validation_negative_pair():
    s = schema.load_schema(doc("atwdReadout.xsd"))
    report = schema.validate(s, doc("atwdExample.xml"))
    got = [(v.kind, v.path) for v in report]
    want = [("maxExclusive", "/daq:AtwdReadout/Atwd[1]/Channel[2]/@number")]
    print(record(2, "readout against its schema yields one maxExclusive violation", got == want, f"got {got}"))
    assert got == want


# -- criterion 3 --------------------------------------------------------------

CHANNEL0 = '<Channel number="0" bitsPerSample="8">'
CHANNEL1 = '<Channel number="1">'


def _mutations(text: str) -> dict[str, tuple[str, str]]:
    """name -> (mutated text, path prefix the report must name)."""
    atwd = "/daq:AtwdReadout/Atwd[1]"
    c1_start = text.index(CHANNEL1)
    c1_end = text.index("</Channel>", c1_start) + len("</Channel>")
    channel1 = text[c1_start:c1_end]
    return {
        "47 samples": (text.replace("84 188 0 0 0 0 0 0 0 0 0 0", "84 188 0 0 0 0 0 0 0 0 0"), f"{atwd}/Channel[1]"),
        "duplicate numbers": (text.replace(CHANNEL1, '<Channel number="0">'), f"{atwd}/Channel[2]"),
        "bitsPerSample=12": (text.replace('bitsPerSample="8"', 'bitsPerSample="12"'), f"{atwd}/Channel[1]/@bitsPerSample"),
        "three channels": (text[:c1_end] + channel1 + text[c1_end:], f"{atwd}/Channel[3]"),
        "one channel": (text[:c1_start] + text[c1_end:], atwd),
    }


def test_validation_positive_and_mutations():
    s = schema.load_schema(doc("atwdReadout.xsd"))
    text = fixture("atwdExample_corrected.xml").decode()
    clean = schema.validate(s, parse_tree(text))
    failures = [] if clean.valid else [f"corrected: {clean}"]
    for name, (mutated, location) in _mutations(text).items():
        report = schema.validate(s, parse_tree(mutated))
        if not any(v.path.startswith(location) for v in report):
            failures.append(f"{name}: {[str(v) for v in report]}")
    print(record(3, "corrected readout valid and every single-field mutation reported", not failures,
                 "; ".join(failures) or "5 mutations"))
    assert not failures


# -- criterion 4 --------------------------------------------------------------


def test_setup_result_round():
    defn = stf.load_defn(doc("exampleOne.xml"))
    failures = []
    if not stf.check_setup(defn, doc("exampleOneSetup.xml")).valid:
        failures.append("example setup rejected")
    setup_text = fixture("exampleOneSetup.xml").decode()
    for q in ("101", "-1"):
        report = stf.check_setup(defn, parse_tree(setup_text.replace("<quantity>54<", f"<quantity>{q}<")))
        if len(report) != 1:
            failures.append(f"quantity {q}: {len(report)} violations")
    if not stf.check_result(defn, doc("exampleOneResult_corrected.xml")).valid:
        failures.append("corrected result rejected")
    try:
        parse_tree(fixture("exampleOneResult.xml"))
        failures.append("verbatim result parsed")
    except WellFormednessError as exc:
        lines = fixture("exampleOneResult.xml").decode().splitlines()
        want = next(i for i, ln in enumerate(lines, 1) if "</broadID>" in ln)
        if exc.line != want or "broadID" not in exc.message or "boardID" not in exc.message:
            failures.append(f"verbatim result error at line {exc.line}: {exc.message}")
    print(record(4, "setup/result round", not failures, "; ".join(failures)))
    assert not failures


# -- criterion 5 --------------------------------------------------------------


def test_binding_demo():
    model = databind.derive_bindings(schema.load_schema(doc("atwdReadout.xsd")))
    value = databind.unmarshal(model, doc("atwdExample_corrected.xml"))
    channels = value["atwd"][0]["channel"]
    got = (len(channels), channels[0]["value"][37], channels[1]["bitsPerSample"])
    code, out, _ = run_cli("bind", "--schema", str(FIXTURES / "atwdReadout.xsd"),
                           str(FIXTURES / "atwdExample_corrected.xml"), "--count", "atwd[0].channel")
    ok = got == (2, 188, 16) and code == 0 and out == b"2\n"
    print(record(5, "binding demo", ok, f"size={got[0]} sample[37]={got[1]} bitsPerSample={got[2]}; cli {out!r}"))
    assert got == (2, 188, 16)
    assert (code, out) == (0, b"2\n")


# -- criterion 6 --------------------------------------------------------------


def _events_from_tree(d: XmlDocument) -> list:
    out = []

    def walk(el: XmlElement):
        out.append(("start", el.name, tuple((a.name, a.value) for a in el.attributes), el.source_line))
        for c in el.children:
            if isinstance(c, Text):
                out.append(("text", c.value))
            else:
                walk(c)
        out.append(("end", el.name))

    walk(d.root)
    return out


def _events_from_stream(data: str) -> list:
    out = []

    def handler(ev):
        if isinstance(ev, StartElement):
            out.append(("start", ev.name, tuple(ev.attributes), ev.source_line))
        elif isinstance(ev, TextEvent):
            if out and out[-1][0] == "text":
                out[-1] = ("text", out[-1][1] + ev.value)
            elif ev.value:
                out.append(("text", ev.value))
        elif isinstance(ev, EndElement):
            out.append(("end", ev.name))

    parse_stream(data, handler)
    return out


def _outcome(fn, data):
    try:
        return ("ok", fn(data))
    except WellFormednessError as exc:
        return ("error", exc.line, exc.message)


def prop_round_trip(rng: random.Random) -> str | None:
    text = _gen.random_xml(rng)
    d1 = parse_tree(text)
    s1 = serialize(d1)
    d2 = parse_tree(s1)
    if not tree_equal(d1, d2):
        return f"tree changed: {text!r}"
    if serialize(d2) != s1:
        return f"serialize not idempotent: {text!r}"
    return None


def prop_stream_tree(rng: random.Random) -> str | None:
    text = _gen.random_xml(rng)
    if rng.random() < 0.5:
        text = _gen.corrupt(rng, text)
    tree = _outcome(lambda t: _events_from_tree(parse_tree(t)), text)
    stream = _outcome(_events_from_stream, text)
    if tree != stream:
        return f"{text!r}: tree {tree} vs stream {stream}"
    return None


def _all_nodes(d: XmlDocument) -> list:
    nodes = [d]
    for el in d.root.iter():
        nodes.append(el)
        nodes.extend(a for a in el.attributes if not a.is_namespace_decl)
        nodes.extend(c for c in el.children if isinstance(c, Text))
    return nodes


def _ancestors_or_self(node) -> list:
    chain = []
    while node is not None:
        chain.append(node)
        node = node.parent
    return chain


def prop_pattern_vs_evaluate(rng: random.Random) -> str | None:
    d = parse_tree(_gen.random_tree_xml(rng))
    source = _gen.random_pattern(rng)
    pattern = xpath.compile_expr(source)
    nodes = _all_nodes(d)
    selected = {}
    for ctx in nodes:
        if isinstance(ctx, (XmlDocument, XmlElement)):
            value = xpath.evaluate(pattern, xpath.EvalContext(ctx))
            selected[id(ctx)] = {id(n) for n in value}
    for n in nodes:
        oracle = any(id(n) in selected.get(id(c), ()) for c in _ancestors_or_self(n))
        if xpath.match_pattern(pattern, n) != oracle:
            return f"pattern {source!r} on {serialize(d)!r}: node {n!r} match={not oracle}"
    return None


_READOUT_SCHEMA = None


def prop_unique(rng: random.Random) -> str | None:
    text, numbers = _gen.random_readout_xml(rng)
    report = schema.validate(_READOUT_SCHEMA, parse_tree(text))
    got = sorted(v.path for v in report if v.kind == "unique")
    dupes = set()
    for a, nums in enumerate(numbers, 1):
        for i, j in itertools.combinations(range(len(nums)), 2):
            if nums[i] == nums[j]:
                dupes.add(f"/daq:AtwdReadout/Atwd[{a}]/Channel[{j + 1}]")
    want = sorted(dupes)
    if got != want:
        return f"{numbers}: reported {got}, pairwise {want}"
    return None


_READOUT_MODEL = None


def prop_marshal_identity(rng: random.Random) -> str | None:
    value = _gen.random_readout_value(rng)
    back = databind.unmarshal(_READOUT_MODEL, databind.marshal(_READOUT_MODEL, value))
    if back != value:
        return f"{value} -> {back}"
    return None


def prop_generated_schemas(rng: random.Random) -> str | None:
    defn = _gen.random_defn(rng)
    try:
        setup_schema = schema.load_schema(parse_tree(serialize(stf.gen_setup_schema(defn))))
        result_schema = schema.load_schema(parse_tree(serialize(stf.gen_result_schema(defn))))
    except schema.SchemaError as exc:
        return f"{defn}: generated schema does not load: {exc}"
    for full in (True, False):
        setup = parse_tree(_gen.synth_setup(defn, include_defaulted=full))
        report = schema.validate(setup_schema, schema.apply_defaults(setup_schema, setup))
        if not report.valid:
            return f"{defn}: setup rejected: {report}"
    report = schema.validate(result_schema, parse_tree(_gen.synth_result(defn)))
    if not report.valid:
        return f"{defn}: result rejected: {report}"
    return None


PROPERTIES = {
    "parse/serialize round trip": prop_round_trip,
    "stream/tree equivalence": prop_stream_tree,
    "pattern vs evaluate": prop_pattern_vs_evaluate,
    "unique vs pairwise": prop_unique,
    "unmarshal(marshal(v)) == v": prop_marshal_identity,
    "generated setup/result schemas": prop_generated_schemas,
}


def test_property_suites():
    global _READOUT_SCHEMA, _READOUT_MODEL
    _READOUT_SCHEMA = schema.load_schema(doc("atwdReadout.xsd"))
    _READOUT_MODEL = databind.derive_bindings(_READOUT_SCHEMA)
    failures = []
    for i, (name, prop) in enumerate(PROPERTIES.items()):
        rng = random.Random(20060 + i)
        for case in range(PROPERTY_CASES):
            problem = prop(rng)
            if problem:
                failures.append(f"{name} case {case}: {problem}")
                break
    print(record(6, f"property suites, {PROPERTY_CASES} cases each", not failures,
                 "; ".join(failures) or f"{len(PROPERTIES)} suites"))
    assert not failures


if __name__ == "__main__":
    start = time.perf_counter()
    failed = 0
    for test in (test_golden_codegen, test_validation_negative_pair, test_validation_positive_and_mutations,
                 test_setup_result_round, test_binding_demo, test_property_suites):
        try:
            with contextlib.redirect_stdout(io.StringIO()):
                test()
        except AssertionError:
            failed += 1
    print("\n".join(RESULTS))
    print(f"{6 - failed}/6 criteria passed in {time.perf_counter() - start:.2f}s")
    sys.exit(1 if failed else 0)
