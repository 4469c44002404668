"""Sequential reference parser.

Walks the packet header by header straight from the graph, reading fields
out of a '0'/'1' string.  It shares no code with the planner, the bit
helpers or the pipeline simulator, which is the point: it is the oracle the
pipeline is checked against.
"""

from __future__ import annotations

from .graph import ACCEPT, ParserGraph, VariableLength
from .simulator import MALFORMED, OK, TRUNCATED, HeaderPHV, ParseResult


def reference_parse(graph: ParserGraph, packet: bytes) -> ParseResult:
    bits = "".join(format(b, "08b") for b in packet)

    def read(offset, width):
        return int(bits[offset:offset + width], 2)

    phv = {h.id: HeaderPHV() for h in graph.headers}
    path = []
    headers = {}
    status, reason = OK, None
    pos = 0
    hid = graph.start
    while hid != ACCEPT:
        h = graph.header(hid)
        left = len(bits) - pos
        smallest = min(h.length.valid_lengths())
        if left < smallest:
            status, reason = TRUNCATED, f"{hid}: {left} bits left, header needs {smallest}"
            break
        if isinstance(h.length, VariableLength):
            v = h.length
            raw = read(pos + v.len_field.offset_bits, v.len_field.width_bits)
            if not v.min_value <= raw <= v.max_value:
                status, reason = MALFORMED, (f"{hid}: length-out-of-range "
                                             f"({raw} not in {v.min_value}..{v.max_value})")
                break
            size = v.multiplier_bits * raw + v.addend_bits
        else:
            size = h.length.nbytes * 8
        if size > left:
            status, reason = TRUNCATED, f"{hid}: {left} bits left, header needs {size}"
            break

        phv[hid] = HeaderPHV(True, {f.name: read(pos + f.offset_bits, f.width_bits)
                                    for f in h.fields})
        nxt = ACCEPT
        if h.key is not None:
            key = read(pos + h.key.offset_bits, h.key.width_bits)
            for t in h.transitions:
                if key & t.mask == t.value:
                    nxt = t.next
                    break
        elif h.transitions:
            nxt = h.transitions[0].next
        path.append(hid)
        headers[hid] = packet[pos // 8:(pos + size) // 8]
        pos += size
        hid = nxt

    return ParseResult(
        status=status,
        reason=reason,
        path=path,
        phv=phv,
        payload_offset_bits=pos,
        latency_cycles=0,
        payload=packet[pos // 8:],
        header_data=headers,
    )
