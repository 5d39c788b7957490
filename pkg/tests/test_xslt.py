import warnings
from pathlib import Path

import pytest

from stfxml import stf
from stfxml.xmlcore import parse_tree
from stfxml.xslt import (
    AmbiguityWarning,
    StylesheetError,
    UnsupportedInstruction,
    load_stylesheet,
    transform,
)

FIXTURES = Path(__file__).parent / "fixtures"
SIGNATURE_XSL = Path(stf.__file__).parent / "data" / "defn2Signature.xsl"
XSL = 'xmlns:xsl="http://www.w3.org/1999/XSL/Transform"'


def sheet(body, method="text"):
    return load_stylesheet(parse_tree(
        f'<xsl:stylesheet version="1.0" {XSL}><xsl:output method="{method}"/>{body}</xsl:stylesheet>'))


@pytest.fixture(scope="module")
def signature():
    return load_stylesheet(parse_tree(SIGNATURE_XSL.read_bytes()))


def test_signature_stylesheet_shape(signature):
    assert signature.output_method == "text"
    assert signature.output_indent is True
    assert len(signature.templates) == 13
    matches = {(t.source, t.mode) for t in signature.templates}
    assert {("/", None), ("stf:test", None), ("stf:test/*/*", "Entry")} <= matches
    assert list(signature.variables) == ["nl"]
    assert {"Entry", "EntryLocal", "signature", "entryModifier"} <= signature.modes


def test_signature_transform_matches_golden(signature):
    out = transform(signature, parse_tree((FIXTURES / "exampleOne.xml").read_bytes()))
    assert out == (FIXTURES / "exampleOne.h").read_bytes()
    text = out.decode()
    assert "extern BOOLEAN ExampleOneInit(STF_DESCRIPTOR *);" in text
    for decl in ("const char* fruit", "unsigned int quantity", "BOOLEAN*  fufilled", "unsigned int*  numberRemaining"):
        assert decl in text


def test_minimal_stylesheet():
    s = sheet('<xsl:template match="/">ok</xsl:template>')
    assert len(s.templates) == 1
    assert transform(s, parse_tree("<a>ignored</a>")) == b"ok"


def test_for_each_is_unsupported():
    with pytest.raises(UnsupportedInstruction) as info:
        sheet('<xsl:template match="/"><xsl:for-each select="a"/></xsl:template>')
    assert "for-each" in str(info.value)


def test_builtin_rules_concatenate_text():
    s = sheet("")
    out = transform(s, parse_tree((FIXTURES / "exampleOneSetup.xml").read_bytes())).decode()
    assert "oranges" in out and "54" in out
    assert out.split() == ["oranges", "54"]


def test_newline_variable():
    s = sheet('<xsl:variable name="nl"><xsl:text>\n</xsl:text></xsl:variable>'
              '<xsl:template match="/"><xsl:copy-of select="$nl"/></xsl:template>')
    assert transform(s, parse_tree("<a/>")) == b"\n"


def test_mode_isolation_via_trace(signature):
    calls = []
    transform(signature, parse_tree((FIXTURES / "exampleOne.xml").read_bytes()),
              trace=lambda rule, node, mode: calls.append((rule, mode)))
    assert calls
    assert all(rule.mode == mode for rule, mode in calls if rule is not None)
    modes = {mode for _, mode in calls}
    assert {None, "Entry", "signature", "entryModifier"} <= modes


def test_more_specific_rule_wins():
    s = sheet('<xsl:template match="*">any</xsl:template>'
              '<xsl:template match="a/b">specific</xsl:template>'
              '<xsl:template match="b">named</xsl:template>'
              '<xsl:template match="/"><xsl:apply-templates select="a/b"/></xsl:template>')
    assert transform(s, parse_tree("<a><b/></a>")) == b"specific"


def test_tie_takes_last_and_warns():
    s = sheet('<xsl:template match="b">first</xsl:template>'
              '<xsl:template match="b">second</xsl:template>'
              '<xsl:template match="/"><xsl:apply-templates select="a/b"/></xsl:template>')
    with pytest.warns(AmbiguityWarning):
        out = transform(s, parse_tree("<a><b/></a>"))
    assert out == b"second"


def test_choose_and_value_tests():
    s = sheet('<xsl:template match="/"><xsl:apply-templates select="r/v"/></xsl:template>'
              '<xsl:template match="v"><xsl:choose>'
              '<xsl:when test=". = \'1\'">one</xsl:when>'
              '<xsl:when test="@k">keyed</xsl:when>'
              '<xsl:otherwise>other</xsl:otherwise></xsl:choose></xsl:template>')
    assert transform(s, parse_tree("<r><v>1</v><v k='x'>2</v><v>3</v></r>")) == b"onekeyedother"


def test_local_variable_scope():
    s = sheet('<xsl:template match="/"><xsl:variable name="n" select="r/name"/>'
              '[<xsl:copy-of select="$n"/>]</xsl:template>')
    assert transform(s, parse_tree("<r><name>X</name></r>")) == b"[X]"


def test_undefined_variable():
    with pytest.raises(StylesheetError):
        transform(sheet('<xsl:template match="/"><xsl:copy-of select="$nope"/></xsl:template>'),
                  parse_tree("<a/>"))


def test_whitespace_only_text_is_stripped_but_xsl_text_kept():
    s = sheet('<xsl:template match="/">\n   <xsl:text> </xsl:text>\n  x\n</xsl:template>')
    assert transform(s, parse_tree("<a/>")) == b" \n  x\n"


def test_xml_output_method():
    s = sheet('<xsl:template match="/"><out n="1"><xsl:copy-of select="r/item"/></out></xsl:template>',
              method="xml")
    out = transform(s, parse_tree("<r><item>a &amp; b</item></r>"))
    doc = parse_tree(out)
    assert doc.root.name.local_name == "out"
    assert doc.root.get("n") == "1"
    assert doc.root.elements[0].text == "a & b"


def test_not_a_stylesheet():
    with pytest.raises(StylesheetError):
        load_stylesheet(parse_tree("<a/>"))


def test_warning_free_on_signature(signature):
    with warnings.catch_warnings():
        warnings.simplefilter("error", AmbiguityWarning)
        transform(signature, parse_tree((FIXTURES / "exampleOne.xml").read_bytes()))
