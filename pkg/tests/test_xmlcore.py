from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stfxml.xmlcore import (
    QName,
    StopParsing,
    Text,
    TextEvent,
    WellFormednessError,
    XmlDocument,
    XmlElement,
    escape_attr,
    escape_text,
    iter_events,
    parse_stream,
    parse_tree,
    serialize,
    tree_equal,
)

FIXTURES = Path(__file__).parent / "fixtures"
DAQ = "http://glacier.lbl.gov/icecube/daq/example"


def error_of(data):
    with pytest.raises(WellFormednessError) as info:
        parse_tree(data)
    return info.value


@pytest.mark.parametrize("name", [p.name for p in FIXTURES.glob("*.x*") if p.name != "exampleOneResult.xml"])
def test_fixtures_are_well_formed(name):
    doc = parse_tree((FIXTURES / name).read_bytes())
    assert tree_equal(doc, parse_tree(serialize(doc)))


def test_readout_tree_shape():
    doc = parse_tree((FIXTURES / "atwdExample.xml").read_bytes())
    assert doc.root.name == QName(DAQ, "AtwdReadout")
    assert doc.root.name.prefix == "daq"
    atwd = doc.root.elements[0]
    assert atwd.name == QName("", "Atwd")
    channels = atwd.elements
    assert [c.get("number") for c in channels] == ["0", "2"]
    assert channels[0].get("bitsPerSample") == "8"
    assert channels[1].get("bitsPerSample") is None
    assert channels[1].get("bitsPerSample", "16") == "16"
    assert channels[0].source_line == 7
    assert len(channels[0].text.split()) == 48
    assert doc.declared_encoding == "UTF-8"


def test_verbatim_result_mismatch_line():
    err = error_of((FIXTURES / "exampleOneResult.xml").read_bytes())
    assert err.line == 18
    assert "broadID" in err.message and "boardID" in err.message


@pytest.mark.parametrize(
    "data, line, fragment",
    [
        ("<a><b></a>", 1, "does not match"),
        ("<a>\n<b>\n</a>", 3, "does not match"),
        ("<a x='1' x='2'/>", 1, "duplicate attribute"),
        ("<a/><b/>", 1, "more than one root"),
        ("", 1, "no root"),
        ("<a>", 1, "unclosed"),
        ("<p:a/>", 1, "undeclared namespace prefix"),
        ("<a>&foo;</a>", 1, "undefined entity"),
        ("<a>&#0;</a>", 1, "not a legal character"),
        ("<a>x & y</a>", 1, "unescaped '&'"),
        ("<a><![CDATA[x]]></a>", 1, "CDATA"),
        ("<!DOCTYPE a><a/>", 1, "DOCTYPE"),
        ("<a><?pi x?></a>", 1, "processing instructions"),
        ('<?xml version="1.0" encoding="ISO-8859-1"?><a/>', 1, "only UTF-8"),
        ("<a>\n\n<!-- a -- b --></a>", 3, "'--'"),
        ("<a b='<'/>", 1, "'<' not allowed"),
        ("text<a/>", 1, "outside the root"),
        ('<a xmlns:p=""/>', 1, "empty URI"),
        ('<a xmlns::q="urn:x"/>', 1, "malformed namespace declaration"),
        ("<a x='1'y='2'/>", 1, "separated by whitespace"),
    ],
)
def test_well_formedness_errors(data, line, fragment):
    err = error_of(data)
    assert err.line == line
    assert fragment in err.message


def test_invalid_utf8_reports_line():
    err = error_of(b"<a>\n\xff</a>")
    assert err.line == 2
    assert "UTF-8" in err.message


def test_namespace_resolution():
    doc = parse_tree('<r xmlns="urn:d" xmlns:p="urn:p" a="1" p:b="2"><c xmlns=""/><p:d/></r>')
    root = doc.root
    assert root.name == QName("urn:d", "r")
    assert root.get("a") == "1"  # unprefixed attributes are in no namespace
    assert root.get("b", namespace_uri="urn:p") == "2"
    c, d = root.elements
    assert c.name == QName("", "c")
    assert d.name == QName("urn:p", "d")
    decls = [a for a in root.attributes if a.is_namespace_decl]
    assert len(decls) == 2


def test_entities_and_attribute_normalization():
    doc = parse_tree("<a v='x&#10;y\tz'>&lt;&amp;&gt;&quot;&apos;&#x4e2d;</a>")
    assert doc.root.get("v") == "x\ny z"
    assert doc.root.text == "<&>\"'中"


def test_crlf_normalized():
    doc = parse_tree(b"<a>\r\n<b/>\r</a>")
    assert doc.root.text == "\n\n"
    assert doc.root.elements[0].source_line == 2


def test_bom_accepted():
    assert parse_tree(b"\xef\xbb\xbf<a/>").root.name.local_name == "a"


def test_comments_dropped_and_text_merged():
    doc = parse_tree("<a>x<!-- c -->y</a>")
    assert [type(c) for c in doc.root.children] == [Text]
    assert doc.root.text == "xy"


def test_stream_stop_parsing():
    seen = []

    def handler(event):
        seen.append(event)
        if isinstance(event, TextEvent):
            raise StopParsing

    parse_stream("<a><b>t</b><c>broken</d></a>", handler)
    assert isinstance(seen[-1], TextEvent) and seen[-1].value == "t"


def test_stream_reports_same_error_as_tree():
    data = "<a>\n<b>\n</c></a>"
    with pytest.raises(WellFormednessError) as stream:
        parse_stream(data, lambda e: None)
    tree = error_of(data)
    assert (stream.value.line, stream.value.message) == (tree.line, tree.message)


def test_stream_is_lazy():
    events = iter_events("<a><b/></a><oops")
    assert next(events).name.local_name == "a"


def test_serialize_declares_missing_namespaces():
    root = XmlElement(QName("urn:x", "root", "x"), [(QName("urn:y", "attr", "y"), "1")], ["t"])
    out = serialize(XmlDocument(root)).decode()
    assert out.startswith('<?xml version="1.0" encoding="UTF-8"?>\n')
    back = parse_tree(out)
    assert back.root.name == QName("urn:x", "root")
    assert back.root.get("attr", namespace_uri="urn:y") == "1"


def test_escaping():
    assert escape_text("a<b&c>d") == "a&lt;b&amp;c&gt;d"
    assert escape_attr('"\n\t') == "&quot;&#10;&#9;"


def test_nodes_compare_by_identity():
    a, b = parse_tree("<a/>"), parse_tree("<a/>")
    assert a.root != b.root
    assert tree_equal(a, b)
    assert not tree_equal(a, parse_tree("<a x='1'/>"))


def test_element_cannot_join_two_documents():
    el = XmlElement(QName("", "a"))
    XmlDocument(el)
    with pytest.raises(ValueError):
        XmlDocument(XmlElement(QName("", "r"), children=[el]))


def test_document_order_and_parents():
    doc = parse_tree("<a x='1'><b/><c/></a>")
    a = doc.root
    b, c = a.elements
    assert a.parent is doc and b.parent is a
    assert a.order < a.attributes[0].order < b.order < c.order


def test_qname_rejects_colon():
    with pytest.raises(ValueError):
        QName("", "p:x")


_text = st.text(st.characters(blacklist_categories=("Cs",), blacklist_characters="\r"), max_size=20).filter(
    lambda s: not any(ord(ch) < 0x20 and ch not in "\t\n" for ch in s) and "￾" not in s and "￿" not in s
)


@settings(max_examples=200)
@given(_text, _text)
def test_text_and_attribute_round_trip(body, attr):
    root = XmlElement(QName("", "a"), [(QName("", "v"), attr)], [body])
    doc = parse_tree(serialize(XmlDocument(root)))
    assert doc.root.text == body
    assert doc.root.get("v") == attr
