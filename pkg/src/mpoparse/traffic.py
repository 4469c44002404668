"""Seeded test-traffic generator.

Walks random paths through the parser graph and fills each header with
random bits, then forces the length field and transition key so the packet
follows the chosen path.  A share of the packets is deliberately broken:
either a length field is pushed outside its declared range, or the packet
is cut off inside a header.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import ACCEPT, HeaderSpec, ParserGraph, VariableLength

DEFAULT_SEED = 20190101

VALID = "valid"
MALFORMED = "malformed"
TRUNCATED = "truncated"


@dataclass(frozen=True)
class TrafficPacket:
    data: bytes
    kind: str
    path: tuple[str, ...]


def _put(value: int, offset: int, width: int, word: int, size: int) -> int:
    shift = size - offset - width
    mask = ((1 << width) - 1) << shift
    return (word & ~mask) | ((value << shift) & mask)


def _get(word: int, offset: int, width: int, size: int) -> int:
    return (word >> (size - offset - width)) & ((1 << width) - 1)


def _non_matching_key(h: HeaderSpec, rng: random.Random) -> int | None:
    """A key value that leads to no further header, if one exists."""
    live = [t for t in h.transitions if t.next != ACCEPT]
    width = h.key.width_bits
    for _ in range(64):
        v = rng.getrandbits(width)
        if not any(t.matches(v) for t in live):
            return v
    if width <= 16:
        free = [v for v in range(1 << width) if not any(t.matches(v) for t in live)]
        if free:
            return rng.choice(free)
    return None


def _key_for(h: HeaderSpec, target: str, rng: random.Random) -> int:
    t = rng.choice([t for t in h.transitions if t.next == target])
    free = rng.getrandbits(h.key.width_bits) & ~t.mask
    return t.value | free


def _build_header(h: HeaderSpec, rng: random.Random) -> tuple[bytes, str]:
    """Random header bytes plus the id of the header it leads to."""
    for _ in range(16):
        if isinstance(h.length, VariableLength):
            lv = h.length
            expr = rng.randint(lv.min_value, lv.max_value)
            size = lv.multiplier_bits * expr + lv.addend_bits
        else:
            expr, size = None, h.length.nbytes * 8
        word = rng.getrandbits(size)
        if expr is not None:
            lf = h.length.len_field
            word = _put(expr, lf.offset_bits, lf.width_bits, word, size)

        if h.key is None:
            nxt = h.transitions[0].next if h.transitions else ACCEPT
        else:
            targets = h.next_ids()
            nxt = rng.choice(targets + [ACCEPT])
            if nxt == ACCEPT:
                key = _non_matching_key(h, rng)
                if key is None:
                    nxt = rng.choice(targets)
            if nxt != ACCEPT:
                key = _key_for(h, nxt, rng)
            word = _put(key, h.key.offset_bits, h.key.width_bits, word, size)
        if expr is not None:
            lf = h.length.len_field
            if _get(word, lf.offset_bits, lf.width_bits, size) != expr:
                continue  # key overwrote the length field; draw again
        return word.to_bytes(size // 8, "big"), nxt
    raise RuntimeError(f"could not build a consistent {h.id} header")


def _walk(graph: ParserGraph, rng: random.Random):
    parts, path = [], []
    hid = graph.start
    while hid != ACCEPT:
        data, nxt = _build_header(graph.header(hid), rng)
        parts.append(data)
        path.append(hid)
        hid = nxt
    return parts, path


def _out_of_range(lv: VariableLength, rng: random.Random) -> int | None:
    top = (1 << lv.len_field.width_bits) - 1
    below = list(range(0, lv.min_value))
    above_n = top - lv.max_value
    if not below and above_n <= 0:
        return None
    if below and (above_n <= 0 or rng.random() < 0.5):
        return rng.choice(below)
    return rng.randint(lv.max_value + 1, top)


def _make_malformed(graph, parts, path, rng) -> bytes | None:
    spots = [i for i, hid in enumerate(path)
             if isinstance(graph.header(hid).length, VariableLength)]
    rng.shuffle(spots)
    for i in spots:
        h = graph.header(path[i])
        bad = _out_of_range(h.length, rng)
        if bad is None:
            continue
        size = len(parts[i]) * 8
        lf = h.length.len_field
        word = _put(bad, lf.offset_bits, lf.width_bits, int.from_bytes(parts[i], "big"), size)
        broken = list(parts)
        broken[i] = word.to_bytes(len(parts[i]), "big")
        return b"".join(broken)
    return None


def _make_truncated(parts, rng) -> bytes | None:
    starts = []
    pos = 0
    for p in parts:
        starts.append(pos)
        pos += len(p)
    spots = [(s, len(p)) for s, p in zip(starts, parts) if s + len(p) > 1 and len(p) > 0]
    if not spots:
        return None
    s, n = rng.choice(spots)
    cut = s + rng.randrange(n)
    if cut == 0:
        cut = 1
    if cut >= s + n:
        return None
    return b"".join(parts)[:cut]


def generate_traffic(graph: ParserGraph, count: int, seed: int = DEFAULT_SEED,
                     malformed_share: float = 0.15,
                     truncated_share: float = 0.15) -> list[TrafficPacket]:
    """``count`` packets; the same (graph, count, seed) always gives the same list."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        parts, path = _walk(graph, rng)
        payload = rng.randbytes(rng.randint(0, 48))
        roll = rng.random()
        if roll < malformed_share:
            data = _make_malformed(graph, parts, path, rng)
            if data is not None:
                out.append(TrafficPacket(data + payload, MALFORMED, tuple(path)))
                continue
            roll = 1.0 - truncated_share / 2  # fall back to a truncated packet
        if roll >= 1.0 - truncated_share:
            data = _make_truncated(parts, rng)
            if data is not None:
                out.append(TrafficPacket(data, TRUNCATED, tuple(path)))
                continue
        out.append(TrafficPacket(b"".join(parts) + payload, VALID, tuple(path)))
    return out
