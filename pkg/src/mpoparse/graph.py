"""Parser-graph model: loading, serialization and validation.

A design is a DAG of protocol headers.  Each header declares how long it is
(fixed, or linear in one of its own fields), where its transition key lives,
which key values lead to which next header, and which fields are copied to
the packet header vector (PHV).

The on-disk format is JSON::

    {"name": "...", "bus_width_bits": 512, "start": "eth",
     "headers": [{"id": "eth", "name": "Ethernet",
                  "length": {"fixed_bytes": 14},
                  "key": {"offset_bits": 96, "width_bits": 16},
                  "transitions": [{"value": "0x0800", "mask": "0xffff", "next": "ipv4"}],
                  "fields": [{"name": "ether_type", "offset_bits": 96, "width_bits": 16}]}]}

A variable length is written ``{"variable": {"field": {"offset_bits": 4,
"width_bits": 4}, "multiplier_bits": 32, "addend_bits": 0, "min": 5,
"max": 15}}``.  ``next`` may be the terminal ``"ACCEPT"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .bitlab import MAX_BUS_BITS, MAX_KEY_BITS, b2b, key_straddles
from .errors import (
    DuplicateIdError,
    LengthOutOfRange,
    SpecError,
    SpecSyntaxError,
    UnknownReferenceError,
)

ACCEPT = "ACCEPT"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    offset_bits: int
    width_bits: int

    @property
    def end_bits(self) -> int:
        return self.offset_bits + self.width_bits


@dataclass(frozen=True)
class KeyLocation:
    offset_bits: int
    width_bits: int

    @property
    def end_bits(self) -> int:
        return self.offset_bits + self.width_bits


@dataclass(frozen=True)
class TransitionKey:
    value: int
    mask: int
    next: str

    def matches(self, key_value: int) -> bool:
        return self.value == (key_value & self.mask)


# The two length kinds share one ``size_bits`` entry point; callers never
# branch on the kind themselves.

@dataclass(frozen=True)
class FixedLength:
    nbytes: int

    kind = "fixed"

    @property
    def min_bits(self) -> int:
        return b2b(self.nbytes)

    @property
    def max_bits(self) -> int:
        return b2b(self.nbytes)

    def size_bits(self, expr_val: int = 0) -> int:
        return b2b(self.nbytes)

    def valid_lengths(self) -> list[int]:
        return [b2b(self.nbytes)]


@dataclass(frozen=True)
class VariableLength:
    len_field: FieldSpec
    multiplier_bits: int
    addend_bits: int
    min_value: int
    max_value: int

    kind = "variable"

    @property
    def min_bits(self) -> int:
        return min(self.valid_lengths(), default=0)

    @property
    def max_bits(self) -> int:
        return max(self.valid_lengths(), default=0)

    def size_bits(self, expr_val: int) -> int:
        if not self.min_value <= expr_val <= self.max_value:
            raise LengthOutOfRange(
                f"length field {expr_val} outside {self.min_value}..{self.max_value}")
        return self.multiplier_bits * expr_val + self.addend_bits

    def valid_lengths(self) -> list[int]:
        return [self.multiplier_bits * v + self.addend_bits
                for v in range(self.min_value, self.max_value + 1)]


@dataclass(frozen=True)
class HeaderSpec:
    id: str
    name: str
    length: FixedLength | VariableLength
    key: KeyLocation | None = None
    transitions: tuple[TransitionKey, ...] = ()
    fields: tuple[FieldSpec, ...] = ()

    @property
    def is_variable(self) -> bool:
        return isinstance(self.length, VariableLength)

    @property
    def min_bits(self) -> int:
        return self.length.min_bits

    @property
    def max_bits(self) -> int:
        return self.length.max_bits

    def next_ids(self) -> list[str]:
        """Distinct successor headers in transition order (ACCEPT excluded)."""
        out = []
        for t in self.transitions:
            if t.next != ACCEPT and t.next not in out:
                out.append(t.next)
        return out


def header_size_bits(spec: HeaderSpec, expr_val: int = 0) -> int:
    """Header length in bits; ``expr_val`` is the length field (ignored when fixed)."""
    return spec.length.size_bits(expr_val)


@dataclass(frozen=True)
class ParserGraph:
    name: str
    bus_width_bits: int
    start: str
    headers: tuple[HeaderSpec, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {h.id: h for h in self.headers})

    def header(self, hid: str) -> HeaderSpec:
        return self._index[hid]

    def __contains__(self, hid):
        return hid in self._index

    @property
    def ids(self) -> list[str]:
        return [h.id for h in self.headers]

    def successors(self, hid: str) -> list[str]:
        return self._index[hid].next_ids()

    def predecessors(self, hid: str) -> list[str]:
        return [h.id for h in self.headers if hid in h.next_ids()]

    def edges(self) -> list[tuple[str, str]]:
        return [(h.id, t.next) for h in self.headers for t in h.transitions]


# --------------------------------------------------------------------------
# loading

_TOP_KEYS = {"name", "bus_width_bits", "start", "headers"}
_HEADER_KEYS = {"id", "name", "length", "key", "transitions", "fields"}


def _require(obj, key, kind, where):
    if not isinstance(obj, dict):
        raise SpecSyntaxError("expected an object", where)
    if key not in obj:
        raise SpecSyntaxError(f"missing '{key}'", where)
    return _typed(obj[key], kind, f"{where}.{key}" if where else key)


def _typed(value, kind, where):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecSyntaxError(f"expected an integer, got {value!r}", where)
    elif not isinstance(value, kind):
        raise SpecSyntaxError(f"expected {kind.__name__}, got {value!r}", where)
    return value


def _check_keys(obj, allowed, where):
    extra = set(obj) - allowed
    if extra:
        raise SpecSyntaxError(f"unknown keys {sorted(extra)}", where)


def _hex(value, where) -> int:
    _typed(value, str, where)
    try:
        n = int(value, 16)
    except ValueError:
        raise SpecSyntaxError(f"bad hex string {value!r}", where) from None
    if n < 0:
        raise SpecSyntaxError(f"negative value {value!r}", where)
    return n


def _slice(obj, where, name=None):
    _check_keys(obj, {"name", "offset_bits", "width_bits"} if name is None else
                {"offset_bits", "width_bits"}, where)
    off = _require(obj, "offset_bits", int, where)
    width = _require(obj, "width_bits", int, where)
    if off < 0 or width < 1:
        raise SpecSyntaxError("offset must be >= 0 and width >= 1", where)
    return off, width


def _length(obj, where):
    _typed(obj, dict, where)
    if set(obj) == {"fixed_bytes"}:
        n = _require(obj, "fixed_bytes", int, where)
        if n < 1:
            raise SpecSyntaxError("fixed_bytes must be >= 1", where + ".fixed_bytes")
        return FixedLength(n)
    if set(obj) == {"variable"}:
        v = _require(obj, "variable", dict, where)
        vw = where + ".variable"
        _check_keys(v, {"field", "multiplier_bits", "addend_bits", "min", "max"}, vw)
        off, width = _slice(_require(v, "field", dict, vw), vw + ".field", name="length")
        return VariableLength(
            len_field=FieldSpec("length", off, width),
            multiplier_bits=_require(v, "multiplier_bits", int, vw),
            addend_bits=_require(v, "addend_bits", int, vw),
            min_value=_require(v, "min", int, vw),
            max_value=_require(v, "max", int, vw),
        )
    raise SpecSyntaxError("length must be {'fixed_bytes': N} or {'variable': {...}}", where)


def _header(obj, where) -> HeaderSpec:
    _typed(obj, dict, where)
    _check_keys(obj, _HEADER_KEYS, where)
    hid = _require(obj, "id", str, where)
    if not hid or hid == ACCEPT:
        raise SpecSyntaxError(f"invalid header id {hid!r}", where + ".id")
    key = None
    if obj.get("key") is not None:
        off, width = _slice(_require(obj, "key", dict, where), where + ".key", name="key")
        key = KeyLocation(off, width)
    transitions = []
    for i, t in enumerate(_typed(obj.get("transitions", []), list, where + ".transitions")):
        tw = f"{where}.transitions[{i}]"
        _typed(t, dict, tw)
        _check_keys(t, {"value", "mask", "next"}, tw)
        transitions.append(TransitionKey(
            value=_hex(_require(t, "value", str, tw), tw + ".value"),
            mask=_hex(_require(t, "mask", str, tw), tw + ".mask"),
            next=_require(t, "next", str, tw),
        ))
    fields = []
    for i, f in enumerate(_typed(obj.get("fields", []), list, where + ".fields")):
        fw = f"{where}.fields[{i}]"
        name = _require(f, "name", str, fw)
        off, width = _slice(f, fw)
        fields.append(FieldSpec(name, off, width))
    return HeaderSpec(
        id=hid,
        name=_typed(obj.get("name", hid), str, where + ".name"),
        length=_length(_require(obj, "length", dict, where), where + ".length"),
        key=key,
        transitions=tuple(transitions),
        fields=tuple(fields),
    )


def graph_from_dict(doc) -> ParserGraph:
    _typed(doc, dict, "<document>")
    _check_keys(doc, _TOP_KEYS, "")
    headers_raw = _require(doc, "headers", list, "")
    if not headers_raw:
        raise SpecError("design declares no headers", "headers")
    headers = [_header(h, f"headers[{i}]") for i, h in enumerate(headers_raw)]

    seen = set()
    for i, h in enumerate(headers):
        if h.id in seen:
            raise DuplicateIdError(f"duplicate header id {h.id!r}", f"headers[{i}].id")
        seen.add(h.id)
    start = _require(doc, "start", str, "")
    if start not in seen:
        raise UnknownReferenceError(f"start header {start!r} is not declared", "start")
    for i, h in enumerate(headers):
        for j, t in enumerate(h.transitions):
            if t.next != ACCEPT and t.next not in seen:
                raise UnknownReferenceError(
                    f"transition to undeclared header {t.next!r}",
                    f"headers[{i}].transitions[{j}].next")
    return ParserGraph(
        name=_require(doc, "name", str, ""),
        bus_width_bits=_require(doc, "bus_width_bits", int, ""),
        start=start,
        headers=tuple(headers),
    )


def load_spec(text: str) -> ParserGraph:
    """Parse a JSON design document.  Only structure is checked; see ``validate``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecSyntaxError(f"{e.msg} (column {e.colno})", line=e.lineno) from None
    return graph_from_dict(doc)


def load_spec_file(path) -> ParserGraph:
    return load_spec(Path(path).read_text(encoding="utf-8"))


def _slice_dict(s, with_name=True):
    d = {"offset_bits": s.offset_bits, "width_bits": s.width_bits}
    if with_name:
        d["name"] = s.name
    return d


def graph_to_dict(graph: ParserGraph) -> dict:
    headers = []
    for h in graph.headers:
        if isinstance(h.length, FixedLength):
            length = {"fixed_bytes": h.length.nbytes}
        else:
            v = h.length
            length = {"variable": {
                "field": _slice_dict(v.len_field, with_name=False),
                "multiplier_bits": v.multiplier_bits,
                "addend_bits": v.addend_bits,
                "min": v.min_value,
                "max": v.max_value,
            }}
        d = {
            "id": h.id,
            "name": h.name,
            "length": length,
            "transitions": [{"value": hex(t.value), "mask": hex(t.mask), "next": t.next}
                            for t in h.transitions],
            "fields": [_slice_dict(f) for f in h.fields],
        }
        if h.key is not None:
            d["key"] = {"offset_bits": h.key.offset_bits, "width_bits": h.key.width_bits}
        headers.append(d)
    return {"name": graph.name, "bus_width_bits": graph.bus_width_bits,
            "start": graph.start, "headers": headers}


# --------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    kind: str
    where: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.where}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def add(self, kind, where, message):
        self.violations.append(Violation(kind, where, message))

    def __str__(self):
        return "ok" if self.ok else "\n".join(map(str, self.violations))


def keys_overlap(a: TransitionKey, b: TransitionKey) -> bool:
    """True when some key value satisfies both ``a`` and ``b``."""
    return (a.value & b.mask) == (b.value & a.mask)


def find_cycles(graph: ParserGraph) -> list[list[str]]:
    """One representative cycle per back edge found by depth-first search."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(graph.ids, WHITE)
    stack: list[str] = []
    cycles = []

    def visit(u):
        color[u] = GREY
        stack.append(u)
        for v in graph.successors(u):
            if color[v] == GREY:
                cycles.append(stack[stack.index(v):] + [v])
            elif color[v] == WHITE:
                visit(v)
        stack.pop()
        color[u] = BLACK

    for hid in [graph.start] + graph.ids:
        if color[hid] == WHITE:
            visit(hid)
    return cycles


def reachable(graph: ParserGraph) -> set[str]:
    seen = {graph.start}
    todo = [graph.start]
    while todo:
        for v in graph.successors(todo.pop()):
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def _validate_header(h: HeaderSpec, bus: int, max_key_bits: int, report: ValidationReport):
    where = h.id
    lengths = []
    if isinstance(h.length, VariableLength):
        v = h.length
        lf = v.len_field
        if v.min_value < 0 or v.min_value > v.max_value:
            report.add("length", where, f"length range {v.min_value}..{v.max_value} is empty")
        elif v.multiplier_bits < 1:
            report.add("length", where, "multiplier_bits must be positive")
        else:
            lengths = h.length.valid_lengths()
            if v.max_value >> lf.width_bits:
                report.add("length", where,
                           f"length field of {lf.width_bits} bits cannot hold max {v.max_value}")
            bad = [n for n in lengths if n <= 0 or n % 8]
            if bad:
                report.add("length", where, f"lengths {bad} are not positive byte multiples")
            elif lf.end_bits > min(lengths):
                report.add("length", where,
                           f"length field ends at bit {lf.end_bits}, past minimum length {min(lengths)}")
    else:
        lengths = h.length.valid_lengths()
    min_bits = min(lengths) if lengths else 0

    if h.key is None:
        if len(h.transitions) > 1:
            report.add("transition-keyless", where,
                       f"{len(h.transitions)} transitions declared without a key")
    else:
        k = h.key
        if k.width_bits > max_key_bits:
            report.add("key-width", where, f"key of {k.width_bits} bits exceeds {max_key_bits}")
        if lengths and k.end_bits > min_bits:
            report.add("key-bounds", where,
                       f"key ends at bit {k.end_bits}, past minimum length {min_bits}")
        if key_straddles(k.offset_bits, k.width_bits, bus):
            report.add("key-straddle", where,
                       f"key at bits {k.offset_bits}..{k.end_bits - 1} crosses a "
                       f"{bus}-bit word boundary")
        for i, t in enumerate(h.transitions):
            if t.value & ~t.mask:
                report.add("transition-mask", f"{where}.transitions[{i}]",
                           f"value {t.value:#x} has bits outside mask {t.mask:#x}")
            if t.mask >> k.width_bits:
                report.add("transition-mask", f"{where}.transitions[{i}]",
                           f"mask {t.mask:#x} wider than the {k.width_bits}-bit key")
        for i, a in enumerate(h.transitions):
            for j in range(i + 1, len(h.transitions)):
                b = h.transitions[j]
                if keys_overlap(a, b):
                    report.add("key-overlap", where,
                               f"transitions {i} ({a.value:#x}/{a.mask:#x}) and {j} "
                               f"({b.value:#x}/{b.mask:#x}) both match some key value")

    names = set()
    for f in h.fields:
        if f.name in names:
            report.add("field-duplicate", where, f"field name {f.name!r} repeated")
        names.add(f.name)
        if lengths and f.end_bits > min_bits:
            report.add("field-bounds", f"{where}.{f.name}",
                       f"field ends at bit {f.end_bits}, past minimum length {min_bits}")


def validate(graph: ParserGraph, max_key_bits: int = MAX_KEY_BITS) -> ValidationReport:
    """Collect every rule violation in ``graph``; an empty report means ok."""
    report = ValidationReport()
    bus = graph.bus_width_bits
    if not 8 <= bus <= MAX_BUS_BITS or bus % 8:
        report.add("bus-width", "bus_width_bits",
                   f"{bus} is not a byte multiple in 8..{MAX_BUS_BITS}")
        bus = max(8, min(MAX_BUS_BITS, bus - bus % 8))
    for cyc in find_cycles(graph):
        report.add("cycle", cyc[0], " -> ".join(cyc))
    live = reachable(graph)
    for hid in graph.ids:
        if hid not in live:
            report.add("unreachable", hid, f"not reachable from {graph.start}")
    for h in graph.headers:
        _validate_header(h, bus, max_key_bits, report)
    return report
