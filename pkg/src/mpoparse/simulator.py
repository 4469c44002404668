"""Beat-level simulation of a pipeline plan.

A packet is cut into bus words (beats) and streamed through the plan's
levels.  Each header owns one ``HeaderModule``; a module parses the stream
only when the stream's sideband names it as the next header, otherwise it
passes beats through untouched.  The active module extracts PHV fields,
evaluates its transition key on the beat that holds it, decides the header
length, and re-emits the rest of the stream left-aligned so the following
header starts at bit 0 of the first output beat.  Levels with alternatives
are merged by the plan's muxes on the modules' valid flags.

Cycle accounting follows the plan's latency model: each pipe-register bank
costs one cycle, the modules themselves are combinational, and a packet of
``n`` beats needs ``n - 1`` further cycles to stream through.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .bitlab import WideBits, create_mask, extract_bits, join_words, split_words
from .errors import LengthOutOfRange, PlanInvariantError
from .graph import ACCEPT, HeaderSpec, ParserGraph, header_size_bits
from .planner import FixedShift, HeaderPlan, LutShift, PipelinePlan

OK = "ok"
MALFORMED = "malformed"
TRUNCATED = "truncated"


@dataclass(frozen=True)
class StreamMeta:
    """Sideband travelling with a packet's beats."""

    next_header: str | None
    length_bits: int
    status: str = OK
    reason: str | None = None


@dataclass(frozen=True)
class BusWord:
    data: WideBits
    sop: bool
    eop: bool
    meta: StreamMeta


@dataclass
class HeaderPHV:
    valid: bool = False
    fields: dict[str, int] = field(default_factory=dict)


@dataclass
class ParseResult:
    status: str
    path: list[str]
    phv: dict[str, HeaderPHV]
    payload_offset_bits: int
    latency_cycles: int
    payload: bytes = b""
    header_data: dict[str, bytes] = field(default_factory=dict)
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "path": list(self.path),
            "phv": {hid: {"valid": p.valid, "fields": dict(p.fields)}
                    for hid, p in self.phv.items()},
            "payload_offset_bits": self.payload_offset_bits,
            "latency_cycles": self.latency_cycles,
            "payload": self.payload.hex(),
        }

    def reassemble(self) -> bytes:
        return b"".join(self.header_data[h] for h in self.path) + self.payload


def compare_results(a: ParseResult, b: ParseResult) -> list[str]:
    """Differences between two results, ignoring latency."""
    diffs = []
    for name in ("status", "path", "payload_offset_bits", "payload"):
        if getattr(a, name) != getattr(b, name):
            diffs.append(f"{name}: {getattr(a, name)!r} != {getattr(b, name)!r}")
    for hid in sorted(set(a.phv) | set(b.phv)):
        pa, pb = a.phv.get(hid), b.phv.get(hid)
        if pa is None or pb is None:
            diffs.append(f"phv[{hid}] missing on one side")
        elif pa.valid != pb.valid:
            diffs.append(f"phv[{hid}].valid: {pa.valid} != {pb.valid}")
        elif pa.fields != pb.fields:
            diffs.append(f"phv[{hid}].fields: {pa.fields} != {pb.fields}")
    return diffs


@dataclass
class HeaderRuntime:
    rx_bits: int = 0
    beats: int = 0
    next_header: str = ACCEPT
    next_header_valid: bool = False
    phv_accum: dict[str, int] = field(default_factory=dict)


def pipeline_adjust(shift_plan: FixedShift | LutShift, bus_bits: int, word: WideBits,
                    following: WideBits | None, consumed_bits: int) -> WideBits:
    """Left-align the stream after ``consumed_bits`` using only planned shift amounts.

    ``word`` is the beat holding the first surviving bit and ``following``
    the beat after it (``None`` past the end of the packet).
    """
    try:
        shift = shift_plan.lookup(consumed_bits)
    except KeyError:
        raise PlanInvariantError(
            f"no planned shift for a {consumed_bits}-bit header") from None
    if shift == 0:
        return word
    nxt = following.value if following is not None else 0
    mask = (1 << bus_bits) - 1
    return WideBits(bus_bits, ((word.value << shift) & mask) | (nxt >> (bus_bits - shift)))


class HeaderModule:
    """Runtime instance of one parser-graph node."""

    def __init__(self, spec: HeaderSpec, hplan: HeaderPlan, bus_bits: int):
        self.spec = spec
        self.plan = hplan
        self.bus = bus_bits
        self.rx_limit = (1 << hplan.rx_counter_width) - 1
        self.key_beat = spec.key.offset_bits // bus_bits if spec.key else None
        if spec.key is not None:
            self.key_mask = create_mask(spec.key.width_bits)
        # field pieces per beat index: (name, offset in beat, width)
        self.pieces: dict[int, list[tuple[str, int, int]]] = {}
        for f in spec.fields:
            pos = f.offset_bits
            while pos < f.end_bits:
                beat, off = divmod(pos, bus_bits)
                width = min(f.end_bits, (beat + 1) * bus_bits) - pos
                self.pieces.setdefault(beat, []).append((f.name, off, width))
                pos += width
        if spec.is_variable:
            lf = spec.length.len_field
            self.len_beat = (lf.end_bits - 1) // bus_bits
            self.len_off = lf.offset_bits - self.len_beat * bus_bits
        self.reset()

    def reset(self):
        self.rt = HeaderRuntime()
        self.phv = HeaderPHV()
        self.active = False
        self.decided = False
        self.in_words: list[WideBits] = []
        self.meta_in: StreamMeta | None = None
        self.meta_out: StreamMeta | None = None
        self.length_bits: int | None = None
        self.len_value: int | None = None
        self.emitted = 0
        self.n_out = 0
        self.raw = b""
        self.error: tuple[str, str] | None = None

    # -- key evaluation: only on the beat that holds the key ----------------
    def state_transition(self, word: WideBits):
        rt = self.rt
        key = self.spec.key
        if key is None:
            if not rt.next_header_valid:
                rt.next_header = self.spec.transitions[0].next if self.spec.transitions else ACCEPT
                rt.next_header_valid = True
            return
        if rt.next_header_valid or rt.rx_bits <= key.offset_bits:
            return
        if rt.beats - 1 != self.key_beat:
            return
        packet_key = int((word >> self.plan.state_shift) & self.key_mask)
        for t in self.spec.transitions:
            if t.value == (packet_key & t.mask):
                rt.next_header = t.next
                rt.next_header_valid = True

    def header_analysis(self, beat: BusWord) -> list[BusWord]:
        """Consume one beat; return the beats this module emits in response."""
        if beat.sop:
            self.reset()
            self.meta_in = beat.meta
            self.active = beat.meta.status == OK and beat.meta.next_header == self.spec.id
        if not self.active:
            return [beat]

        rt = self.rt
        word = beat.data
        self.in_words.append(word)
        rt.beats += 1
        rt.rx_bits = min(rt.rx_bits + self.bus, self.rx_limit)
        idx = rt.beats - 1
        for name, off, width in self.pieces.get(idx, ()):
            rt.phv_accum[name] = (rt.phv_accum.get(name, 0) << width) | extract_bits(word, off, width)
        if self.spec.is_variable and idx == self.len_beat:
            self.len_value = extract_bits(word, self.len_off, self.spec.length.len_field.width_bits)
        self.state_transition(word)

        if self.decided:
            if not self.phv.valid:
                return [replace(beat, meta=self.meta_out)]
            return self._emit(final=beat.eop)

        if self.length_bits is None:
            if not self.spec.is_variable:
                self.length_bits = header_size_bits(self.spec)
            elif self.len_value is not None:
                try:
                    self.length_bits = header_size_bits(self.spec, self.len_value)
                except LengthOutOfRange:
                    pass
        bad_length = self.len_value is not None and self.length_bits is None
        complete = self.length_bits is not None and rt.beats * self.bus >= self.length_bits
        if not (beat.eop or bad_length or complete):
            return []
        self._decide()
        if not self.phv.valid:
            # aborted: release the held beats unchanged, carrying the new status
            last = len(self.in_words) - 1
            return [BusWord(w, i == 0, beat.eop and i == last, self.meta_out)
                    for i, w in enumerate(self.in_words)]
        return self._emit(final=beat.eop)

    def _decide(self):
        self.decided = True
        meta = self.meta_in
        spec = self.spec
        avail = meta.length_bits
        status, reason = OK, None
        if avail < spec.min_bits:
            status, reason = TRUNCATED, f"{spec.id}: {avail} bits left, header needs {spec.min_bits}"
        elif spec.is_variable and self.length_bits is None:
            lv = spec.length
            status, reason = MALFORMED, (f"{spec.id}: length-out-of-range "
                                         f"({self.len_value} not in {lv.min_value}..{lv.max_value})")
        elif self.length_bits > avail:
            status, reason = TRUNCATED, f"{spec.id}: {avail} bits left, header needs {self.length_bits}"
        if status != OK:
            self.error = (status, reason)
            self.meta_out = StreamMeta(None, avail, status, reason)
            return
        self.phv.valid = True
        self.phv.fields = dict(self.rt.phv_accum)
        nxt = self.rt.next_header if self.rt.next_header_valid else ACCEPT
        self.meta_out = StreamMeta(nxt, avail - self.length_bits)
        self.n_out = max(1, -(-(avail - self.length_bits) // self.bus))
        self.raw = join_words(self.in_words[: -(-self.length_bits // self.bus)], self.length_bits)

    def _emit(self, final: bool) -> list[BusWord]:
        skip = self.length_bits // self.bus
        shift_needs_next = self.plan.shift_plan.lookup(self.length_bits) != 0
        out = []
        while self.emitted < self.n_out:
            j = self.emitted
            src = j + skip
            have_next = src + 1 < len(self.in_words)
            if not final and (src >= len(self.in_words) or (shift_needs_next and not have_next)):
                break
            word = self.in_words[src] if src < len(self.in_words) else WideBits(self.bus)
            following = self.in_words[src + 1] if have_next else None
            data = pipeline_adjust(self.plan.shift_plan, self.bus, word, following, self.length_bits)
            self.emitted += 1
            out.append(BusWord(data, j == 0, self.emitted == self.n_out, self.meta_out))
        return out


class Pipeline:
    """All header modules of a plan, wired level by level."""

    def __init__(self, plan: PipelinePlan, graph: ParserGraph):
        ids = [hid for lv in plan.levels for hid in lv]
        if sorted(ids) != sorted(graph.ids) or plan.bus_width_bits != graph.bus_width_bits:
            raise PlanInvariantError("plan was not built from this graph")
        self.plan = plan
        self.graph = graph
        self.bus = plan.bus_width_bits
        self.modules = {hid: HeaderModule(graph.header(hid), plan.header_plan(hid), self.bus)
                        for hid in ids}

    def _merge(self, level: int, streams: dict[str, list[BusWord]]) -> list[BusWord]:
        mux = self.plan.mux_at(level)
        if mux is None:
            (only,) = streams.values()
            return only
        # left fold of two-input selects: first valid input wins, last is the default
        for hid in mux.inputs[:-1]:
            if self.modules[hid].phv.valid:
                return streams[hid]
        return streams[mux.inputs[-1]]

    def run_packet(self, packet: bytes) -> ParseResult:
        if not packet:
            start = self.graph.header(self.plan.start)
            return ParseResult(
                status=TRUNCATED,
                reason=f"{start.id}: 0 bits left, header needs {start.min_bits}",
                path=[],
                phv={h.id: HeaderPHV() for h in self.graph.headers},
                payload_offset_bits=0,
                latency_cycles=self.plan.n_registers,
            )
        words = split_words(packet, self.bus)
        meta = StreamMeta(self.plan.start, len(packet) * 8)
        stream = [BusWord(w, i == 0, i == len(words) - 1, meta) for i, w in enumerate(words)]
        for level, hids in enumerate(self.plan.levels):
            outs = {}
            for hid in hids:
                mod = self.modules[hid]
                outs[hid] = [o for b in stream for o in mod.header_analysis(b)]
            stream = self._merge(level, outs)

        final = stream[0].meta
        order = [self.modules[hid] for lv in self.plan.levels for hid in lv]
        path = [m.spec.id for m in order if m.phv.valid]
        # a failing header reports through its own status flag: a mux may
        # have dropped its stream in favour of a sibling's pass-through
        status, reason = next((m.error for m in order if m.error), (OK, None))
        phv = {h.id: HeaderPHV(self.modules[h.id].phv.valid, dict(self.modules[h.id].phv.fields))
               for h in self.graph.headers}
        return ParseResult(
            status=status,
            reason=reason,
            path=path,
            phv=phv,
            payload_offset_bits=len(packet) * 8 - final.length_bits,
            latency_cycles=self.plan.n_registers + len(words) - 1,
            payload=join_words([b.data for b in stream], final.length_bits),
            header_data={hid: self.modules[hid].raw for hid in path},
        )


def run_packet(plan: PipelinePlan, graph: ParserGraph, packet: bytes) -> ParseResult:
    return Pipeline(plan, graph).run_packet(packet)


_worker_pipeline = None


def _init_worker(plan_json, graph_doc):
    global _worker_pipeline
    from .graph import graph_from_dict
    _worker_pipeline = Pipeline(PipelinePlan.from_json(plan_json), graph_from_dict(graph_doc))


def _run_one(packet):
    return _worker_pipeline.run_packet(packet)


def run_batch(plan: PipelinePlan, graph: ParserGraph, packets, jobs: int = 1) -> list[ParseResult]:
    """Simulate many packets; results keep input order whatever ``jobs`` is."""
    packets = list(packets)
    if jobs <= 1 or len(packets) < 2:
        pipe = Pipeline(plan, graph)
        return [pipe.run_packet(p) for p in packets]
    from .graph import graph_to_dict
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(plan.to_json(), graph_to_dict(graph))) as pool:
        return list(pool.map(_run_one, packets, chunksize=max(1, len(packets) // (jobs * 4))))
