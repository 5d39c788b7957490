"""Bind a readout document to typed values and walk it like ordinary data.

This is the dynamic counterpart of generating binding classes: the record
layout comes from the schema at run time.
"""
from pathlib import Path

from stfxml import derive_bindings, load_schema, marshal, parse_tree, serialize, unmarshal
from stfxml.databind import format_value

fixtures = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
model = derive_bindings(load_schema(parse_tree((fixtures / "atwdReadout.xsd").read_bytes())))
readout = unmarshal(model, parse_tree((fixtures / "atwdExample_corrected.xml").read_bytes()))

channels = readout["atwd"][0]["channel"]
print(f"Found {len(channels)} channels in the first ATWD")
for ch in channels:
    samples = ch["value"]
    print(f"  channel {ch['number']}: {ch['bitsPerSample']} bits, peak {max(samples)} at sample {samples.index(max(samples))}")

print(format_value(model, readout))

# Values go back to XML just as easily.
channels[1].fields["bitsPerSample"] = 8
print(serialize(marshal(model, readout, prefix="daq")).decode()[:200], "...")
