"""Compile a validated parser graph into a pipeline plan.

Headers are placed on levels by longest-path depth from the start header.
Every level is followed by one pipe-register bank, and all headers on a
level read the same input stream (the previous bank).  Where a level holds
two or more headers their outputs are merged by a mux whose inputs are
tried in declaration order, the first valid one winning; the merged stream
feeds the next bank, or the packet output after the deepest level.

Per-header constants (key shift, alignment shifts, bus-span flags, receive
counter width) are folded here, once, so the runtime only looks them up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .bitlab import b2b, numbits, shift_def
from .errors import ValidationError
from .graph import HeaderSpec, ParserGraph, validate

OUTPUT = "OUTPUT"


@dataclass(frozen=True)
class MuxSpec:
    site: int | str
    inputs: tuple[str, ...]
    select: str

    @property
    def name(self) -> str:
        return "mux_out" if self.site == OUTPUT else f"mux_l{self.site}"


@dataclass(frozen=True)
class FixedShift:
    shift: int

    kind = "fixed"

    def lookup(self, length_bits: int) -> int:
        return self.shift


@dataclass(frozen=True)
class LutShift:
    entries: tuple[tuple[int, int], ...]

    kind = "lut"

    def lookup(self, length_bits: int) -> int:
        for length, shift in self.entries:
            if length == length_bits:
                return shift
        raise KeyError(length_bits)


@dataclass(frozen=True)
class HeaderPlan:
    header_id: str
    level: int
    state_shift: int | None
    shift_plan: FixedShift | LutShift
    bus_span: tuple[tuple[int, bool], ...]
    rx_counter_width: int
    valid_lengths: tuple[int, ...]


@dataclass(frozen=True)
class PipelinePlan:
    design: str
    bus_width_bits: int
    start: str
    levels: tuple[tuple[str, ...], ...]
    muxes: tuple[MuxSpec, ...]
    header_plans: tuple[HeaderPlan, ...]

    @property
    def registers(self) -> tuple[str, ...]:
        return tuple(f"pipe_reg{i}" for i in range(len(self.levels)))

    @property
    def n_registers(self) -> int:
        return len(self.levels)

    def header_plan(self, hid: str) -> HeaderPlan:
        for hp in self.header_plans:
            if hp.header_id == hid:
                return hp
        raise KeyError(hid)

    def level_of(self, hid: str) -> int:
        return self.header_plan(hid).level

    def mux_at(self, level: int) -> MuxSpec | None:
        site = OUTPUT if level == len(self.levels) - 1 else level + 1
        for m in self.muxes:
            if m.site == site:
                return m
        return None

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "bus_width_bits": self.bus_width_bits,
            "start": self.start,
            "levels": [list(lv) for lv in self.levels],
            "registers": list(self.registers),
            "muxes": [{"site": m.site, "inputs": list(m.inputs), "select": m.select}
                      for m in self.muxes],
            "header_plans": {hp.header_id: _header_plan_dict(hp) for hp in self.header_plans},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> PipelinePlan:
        levels = tuple(tuple(lv) for lv in d["levels"])
        order = [hid for lv in levels for hid in lv]
        hps = []
        for hid in order:
            h = d["header_plans"][hid]
            sp = h["shift_plan"]
            if sp["kind"] == "fixed":
                shift_plan = FixedShift(sp["shift"])
            else:
                shift_plan = LutShift(tuple((int(k), v) for k, v in sp["entries"]))
            hps.append(HeaderPlan(
                header_id=hid,
                level=h["level"],
                state_shift=h["state_shift"],
                shift_plan=shift_plan,
                bus_span=tuple((int(k), v) for k, v in h["bus_span"]),
                rx_counter_width=h["rx_counter_width"],
                valid_lengths=tuple(h["valid_lengths"]),
            ))
        return cls(
            design=d["design"],
            bus_width_bits=d["bus_width_bits"],
            start=d["start"],
            levels=levels,
            muxes=tuple(MuxSpec(m["site"], tuple(m["inputs"]), m["select"]) for m in d["muxes"]),
            header_plans=tuple(hps),
        )

    @classmethod
    def from_json(cls, text: str) -> PipelinePlan:
        return cls.from_dict(json.loads(text))


def _header_plan_dict(hp: HeaderPlan) -> dict:
    if isinstance(hp.shift_plan, FixedShift):
        sp = {"kind": "fixed", "shift": hp.shift_plan.shift}
    else:
        # pairs rather than an object: JSON object keys would become strings
        sp = {"kind": "lut", "entries": [list(e) for e in hp.shift_plan.entries]}
    return {
        "level": hp.level,
        "state_shift": hp.state_shift,
        "shift_plan": sp,
        "bus_span": [list(e) for e in hp.bus_span],
        "rx_counter_width": hp.rx_counter_width,
        "valid_lengths": list(hp.valid_lengths),
    }


def level_schedule(graph: ParserGraph) -> list[list[str]]:
    """Group headers by longest-path distance from the start header."""
    depth = {graph.start: 0}
    indeg = {hid: 0 for hid in graph.ids}
    for hid in graph.ids:
        for v in graph.successors(hid):
            indeg[v] += 1
    ready = [hid for hid in graph.ids if indeg[hid] == 0]
    while ready:
        u = ready.pop(0)
        for v in graph.successors(u):
            if u in depth:
                depth[v] = max(depth.get(v, 0), depth[u] + 1)
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    levels: list[list[str]] = [[] for _ in range(max(depth.values()) + 1)]
    for hid in graph.ids:
        if hid in depth:
            levels[depth[hid]].append(hid)
    return levels


def place_muxes(graph: ParserGraph, levels) -> list[MuxSpec]:
    """One merge per level holding two or more alternative headers.

    The site is the boundary the merged stream feeds: the next level's
    index, or OUTPUT after the deepest level.
    """
    muxes = []
    last = len(levels) - 1
    for i, level in enumerate(levels):
        if len(level) >= 2:
            muxes.append(MuxSpec(OUTPUT if i == last else i + 1, tuple(level), level[0]))
    return muxes


def build_header_plan(spec: HeaderSpec, bus_width_bits: int, level: int = 0) -> HeaderPlan:
    lengths = spec.length.valid_lengths()
    if spec.is_variable:
        entries = tuple((n, n % bus_width_bits) for n in lengths)
        if all(s == 0 for _, s in entries):
            shift_plan = FixedShift(0)
        else:
            shift_plan = LutShift(entries)
    else:
        shift_plan = FixedShift(lengths[0] % bus_width_bits)
    state_shift = None
    if spec.key is not None:
        state_shift = shift_def(spec.min_bits, bus_width_bits, spec.key.end_bits,
                                spec.key.width_bits)
    return HeaderPlan(
        header_id=spec.id,
        level=level,
        state_shift=state_shift,
        shift_plan=shift_plan,
        bus_span=tuple((n, n > bus_width_bits) for n in lengths),
        rx_counter_width=numbits(b2b(spec.max_bits // 8)),
        valid_lengths=tuple(lengths),
    )


def plan(graph: ParserGraph) -> PipelinePlan:
    report = validate(graph)
    if not report.ok:
        raise ValidationError(report.violations)
    levels = level_schedule(graph)
    level_of = {hid: i for i, lv in enumerate(levels) for hid in lv}
    return PipelinePlan(
        design=graph.name,
        bus_width_bits=graph.bus_width_bits,
        start=graph.start,
        levels=tuple(tuple(lv) for lv in levels),
        muxes=tuple(place_muxes(graph, levels)),
        header_plans=tuple(build_header_plan(graph.header(hid), graph.bus_width_bits, level_of[hid])
                           for lv in levels for hid in lv),
    )


def to_dot(p: PipelinePlan) -> str:
    """Graphviz rendering: one cluster per level, muxes as trapezium nodes."""
    lines = [f'digraph "{p.design}" {{', "  rankdir=LR;", "  node [shape=box];",
             '  pkt_in [shape=point, label="Data In"];',
             '  pkt_out [shape=point, label="Data Out"];']
    prev = "pkt_in"
    for i, level in enumerate(p.levels):
        lines.append(f"  subgraph cluster_level{i} {{")
        lines.append(f'    label="level {i}";')
        for hid in level:
            lines.append(f'    "{hid}";')
        lines.append("  }")
        for hid in level:
            lines.append(f'  {prev} -> "{hid}";')
        reg = p.registers[i]
        lines.append(f'  {reg} [shape=record, label="Pipe Register {i}"];')
        mux = p.mux_at(i)
        if mux is not None:
            lines.append(f'  {mux.name} [shape=trapezium, orientation=270, '
                         f'label="{mux.name}\\n{", ".join(mux.inputs)}", '
                         f'xlabel="sel: {mux.select}.valid"];')
            for hid in level:
                lines.append(f'  "{hid}" -> {mux.name};')
            lines.append(f"  {mux.name} -> {reg};")
        else:
            lines.append(f'  "{level[0]}" -> {reg};')
        prev = reg
    lines.append(f"  {prev} -> pkt_out;")
    lines.append("}")
    return "\n".join(lines) + "\n"
