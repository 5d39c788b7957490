"""Check per-run setup and result documents for a test module.

The module definition drives both schemas.  Omitted inputs take their
defaults, out-of-range values are reported, and a result must echo the inputs
before its outputs and the standard trailer.
"""
from pathlib import Path

from stfxml import check_result, check_setup, gen_setup_schema, load_defn, parse_tree, serialize
from stfxml.stf import setup_values

fixtures = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
defn = load_defn(parse_tree((fixtures / "exampleOne.xml").read_bytes()))
setup = (fixtures / "exampleOneSetup.xml").read_text()

print(serialize(gen_setup_schema(defn)).decode())
print("setup as given:", setup_values(defn, parse_tree(setup)))
print("quantity omitted:", setup_values(defn, parse_tree(setup.replace("<quantity>54</quantity>", ""))))
print("quantity 101:", check_setup(defn, parse_tree(setup.replace(">54<", ">101<"))))

result = (fixtures / "exampleOneResult_corrected.xml").read_text()
print("result:", "valid" if check_result(defn, parse_tree(result)) else "invalid")
print("result without passed:", check_result(defn, parse_tree(result.replace("<passed>true</passed>", ""))))
