"""Generate C declarations for a test module from its XML definition.

Two routes give the same bytes: the bundled signature stylesheet run through
the XSLT engine, and gen_header().  A definition built in Python works the same
way as one read from disk.
"""
from pathlib import Path

from stfxml import ModuleDefn, Parameter, gen_header, load_defn, parse_tree

fixtures = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
defn = load_defn(parse_tree((fixtures / "exampleOne.xml").read_bytes()))
print(defn)
print(gen_header(defn))

pulser = ModuleDefn(
    "PulserScan",
    version=(2, 1),
    input_params=[Parameter("amplitude", "unsignedInt", 100, 0, 1023), Parameter("label", "string")],
    output_params=[Parameter("peak", "unsignedLong"), Parameter("ok", "boolean")],
)
print(gen_header(pulser))
