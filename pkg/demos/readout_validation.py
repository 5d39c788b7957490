"""Validate a detector readout against its schema, then fix it.

The readout carries a channel numbered 2 while the schema only allows 0 and 1,
so the first validation reports exactly one problem.  Renumbering the channel
makes the document valid, and applying defaults fills in the missing
bitsPerSample attribute.
"""
from pathlib import Path

from stfxml import apply_defaults, load_schema, parse_tree, serialize, validate

fixtures = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
schema = load_schema(parse_tree((fixtures / "atwdReadout.xsd").read_bytes()))

raw = (fixtures / "atwdExample.xml").read_text()
report = validate(schema, parse_tree(raw))
print(f"{len(report)} violation(s):")
print(report)

fixed = parse_tree(raw.replace('number="2"', 'number="1"'))
print("after renumbering:", "valid" if validate(schema, fixed) else "invalid")

# The second channel gains bitsPerSample="16" from the schema default.
print(serialize(apply_defaults(schema, fixed)).decode())
