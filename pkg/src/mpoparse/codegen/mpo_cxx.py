"""The ``mpo-cxx`` backend.

Output files:

``module.hpp``
    the generic node module, copied verbatim from package data.
``types.hpp``
    header id constants, one PHV record per header and one constant layout
    (key table, key location, length and shift tables) per header.
``pipeline.cpp``
    one static specialized module object per header, one static variable
    per pipe-register bank and one ternary statement per mux.
"""

from __future__ import annotations

import re
from importlib import resources

from ..bitlab import key_straddles, numbits
from ..errors import CodegenError
from ..graph import ACCEPT, HeaderSpec, ParserGraph
from ..planner import HeaderPlan, PipelinePlan

CXX_RESERVED = frozenset("""
alignas alignof and and_eq asm auto bitand bitor bool break case catch char char16_t
char32_t class compl const constexpr const_cast continue decltype default delete do
double dynamic_cast else enum explicit export extern false float for friend goto if
inline int long mutable namespace new noexcept not not_eq nullptr operator or or_eq
private protected public register reinterpret_cast return short signed sizeof static
static_assert static_cast struct switch template this thread_local throw true try
typedef typeid typename union unsigned using virtual void volatile wchar_t while xor
xor_eq array std parser main
""".split())


def sanitize_identifiers(names, reserved=CXX_RESERVED) -> dict[str, str]:
    """Map arbitrary names to unique lowercase C++ identifiers.

    Non-alphanumerics become ``_``, a leading digit gets an ``h_`` prefix,
    and clashes (with each other or with ``reserved``) get a numeric suffix.
    """
    out: dict[str, str] = {}
    used = set(reserved)
    for name in names:
        base = re.sub(r"[^0-9a-z]", "_", name.lower()) or "h"
        if base[0].isdigit():
            base = "h_" + base
        ident, n = base, 2
        while ident in used:
            ident, n = f"{base}_{n}", n + 1
        used.add(ident)
        out[name] = ident
    return out


def _camel(ident: str) -> str:
    return "".join(p[:1].upper() + p[1:] for p in ident.split("_") if p) or "H"


def _type_names(idents: dict[str, str]) -> dict[str, str]:
    out, used = {}, set()
    for hid, ident in idents.items():
        base = name = _camel(ident)
        n = 2
        while name in used:
            name, n = f"{base}{n}", n + 1
        used.add(name)
        out[hid] = name
    return out


def _literal(value: int, width: int) -> str:
    digits = max(1, (width + 3) // 4)
    suffix = "ULL" if width > 32 else ""
    return f"0x{value:0{digits}x}{suffix}"


def module_source() -> str:
    return resources.files(__package__).joinpath("module.hpp").read_text(encoding="utf-8")


def _extract_lines(h: HeaderSpec, bus: int, fields: dict[str, str]) -> list[str]:
    """Per-beat ``.range`` copies of every PHV field."""
    by_beat: dict[int, list[str]] = {}
    for f in h.fields:
        first, last = f.offset_bits // bus, (f.end_bits - 1) // bus
        for b in range(first, last + 1):
            lo = max(f.offset_bits, b * bus)
            hi = min(f.end_bits, (b + 1) * bus)
            src = f"Data.range({bus - 1 - (lo - b * bus)}, {bus - (hi - b * bus)})"
            if first == last:
                dst = fields[f.name]
            else:
                fhi = f.width_bits - 1 - (lo - f.offset_bits)
                flo = f.width_bits - (hi - f.offset_bits)
                dst = f"{fields[f.name]}.range({fhi}, {flo})"
            by_beat.setdefault(b, []).append(f"{dst} = {src};")
    lines = []
    for b in sorted(by_beat):
        lines.append(f"\t\tif (beat == {b}) {{")
        lines += [f"\t\t\t{s}" for s in by_beat[b]]
        lines.append("\t\t}")
    return lines


def _format_type(h: HeaderSpec) -> str:
    hsize = numbits(h.max_bits)
    if not h.is_variable:
        return f"fixedHeaderFormat<{hsize}, {h.min_bits}>"
    v = h.length
    hsize = max(hsize, v.len_field.width_bits)
    return (f"varHeaderFormat<{hsize}, {v.len_field.offset_bits}, {v.len_field.width_bits}, "
            f"{v.multiplier_bits}, {v.addend_bits}, {v.min_value}, {v.max_value}>")


def _types_hpp(plan: PipelinePlan, graph: ParserGraph, idents, tnames) -> str:
    bus = plan.bus_width_bits
    order = [hid for lv in plan.levels for hid in lv]
    out = [
        f"// Design-specific types for parser \"{plan.design}\".",
        "#ifndef MPO_PARSER_TYPES_HPP",
        "#define MPO_PARSER_TYPES_HPP",
        "",
        '#include "module.hpp"',
        "",
        f"constexpr unsigned BUS_SIZE = {bus};",
        "typedef PktData<BUS_SIZE> PktDataType;",
        "",
    ]
    for i, hid in enumerate(order, 1):
        out.append(f"constexpr headerIDType HDR_{idents[hid].upper()} = {i};")
    out.append("")

    for hid in order:
        h = graph.header(hid)
        hp: HeaderPlan = plan.header_plan(hid)
        ident, tname = idents[hid], tnames[hid]
        fields = sanitize_identifiers([f.name for f in h.fields],
                                      reserved=CXX_RESERVED | {"beat", "data", "extract"})
        kind = "variable" if h.is_variable else "fixed"
        out.append(f"// ---- {hid}: {kind} length, level {hp.level}")
        out.append(f"struct {tname}PHVDataType {{")
        out.append("\tbool Valid;")
        for f in h.fields:
            out.append(f"\tap_uint<{f.width_bits}> {fields[f.name]};")
        out.append("")
        out.append("\tvoid Extract(const ap_uint<BUS_SIZE>& Data, unsigned beat) {")
        body = _extract_lines(h, bus, fields)
        out += body if body else ["\t\t(void)Data;", "\t\t(void)beat;"]
        out.append("\t}")
        out.append("};")
        out.append("")

        key_w = h.key.width_bits if h.key else 1
        key_loc = (h.key.offset_bits, h.key.width_bits) if h.key else (0, 0)
        ktype = f"ap_uint<{key_w}>"
        entries = []
        if h.key is not None:
            for t in h.transitions:
                nxt = "HDR_ACCEPT" if t.next == ACCEPT else f"HDR_{idents[t.next].upper()}"
                entries.append(f"{{{_literal(t.value, key_w)}, {_literal(t.mask, key_w)}, {nxt}}}")
        elif h.transitions:
            t = h.transitions[0]
            nxt = "HDR_ACCEPT" if t.next == ACCEPT else f"HDR_{idents[t.next].upper()}"
            entries.append(f"{{0x0, 0x0, {nxt}}}")
        lengths = list(hp.valid_lengths)
        shifts = [hp.shift_plan.lookup(n) for n in lengths]
        layout_t = f"{tname}LayoutType"
        out.append(f"typedef HeaderLayout<{ktype}, {len(entries)}, {len(lengths)}, "
                   f"{_format_type(h)}> {layout_t};")
        out.append(f"const {layout_t} {ident}_layout = {{")
        out.append(f"\t{{{{{', '.join(entries)}}}}},")
        out.append(f"\t{{{key_loc[0]}, {key_loc[1]}}},")
        out.append(f"\t{{{{{', '.join(map(str, lengths))}}}}},")
        out.append(f"\t{{{{{', '.join(map(str, shifts))}}}}},")
        out.append("\t{}")
        out.append("};")
        out.append("")
    out.append("#endif  // MPO_PARSER_TYPES_HPP")
    return "\n".join(out) + "\n"


def _count(n, one, many=None):
    return f"{n} {one if n == 1 else many or one + 's'}"


def _select_expr(mux, idents, index) -> str:
    *tried, default = mux.inputs
    expr = f"tmpPOut[{index[default]}]"
    for hid in reversed(tried):
        expr = f"{idents[hid]}_PHV.Valid ? tmpPOut[{index[hid]}] : {expr}"
        if hid != tried[0]:
            expr = f"({expr})"
    return expr


def _pipeline_cpp(plan: PipelinePlan, graph: ParserGraph, idents, tnames) -> str:
    order = [hid for lv in plan.levels for hid in lv]
    index = {hid: i for i, hid in enumerate(order)}
    nreg = plan.n_registers
    out = [
        f"// Top-level parser \"{plan.design}\": {_count(len(plan.levels), 'level')}, "
        f"{_count(len(plan.muxes), 'mux', 'muxes')}, "
        f"{_count(nreg, 'pipe-register bank')}.",
        '#include "types.hpp"',
        "",
    ]
    for hid in order:
        h = graph.header(hid)
        cls = "VariableHeader" if h.is_variable else "FixedHeader"
        tname = tnames[hid]
        out.append(f"static {cls}<{h.max_bits // 8}, BUS_SIZE, {tname}LayoutType, "
                   f"{tname}PHVDataType> {idents[hid]}(HDR_{idents[hid].upper()}, "
                   f"{idents[hid]}_layout);")
    out.append("")
    for i in range(nreg):
        out.append(f"static PktDataType pipeReg{i};")
    out.append("")
    params = ", ".join(f"{tnames[hid]}PHVDataType& {idents[hid]}_PHV" for hid in order)
    out.append(f"// PktIn.NextHeader must carry HDR_{idents[plan.start].upper()} "
               "on the first beat of every packet.")
    out.append(f"void Parser(const PktDataType& PktIn, {params}, PktDataType& PktOut) {{")
    out.append(f"\tPktDataType tmpPOut[{len(order)}];")
    out.append("")
    out.append("\t// deepest bank first, so every bank hands on last cycle's word")
    out.append(f"\tPktOut = pipeReg{nreg - 1};")
    for level in range(len(plan.levels) - 1, -1, -1):
        src = "PktIn" if level == 0 else f"pipeReg{level - 1}"
        out.append("")
        out.append(f"\t// level {level}")
        for hid in plan.levels[level]:
            out.append(f"\t{idents[hid]}.HeaderAnalysis({src}, {idents[hid]}_PHV, "
                       f"tmpPOut[{index[hid]}]);")
        mux = plan.mux_at(level)
        if mux is None:
            out.append(f"\tpipeReg{level} = tmpPOut[{index[plan.levels[level][0]]}];")
        else:
            out.append(f"\tpipeReg{level} = {_select_expr(mux, idents, index)};")
    out.append("}")
    return "\n".join(out) + "\n"


def emit_mpo_cxx(plan: PipelinePlan, graph: ParserGraph):
    from . import finish_bundle

    order = [hid for lv in plan.levels for hid in lv]
    for hid in order:
        h = graph.header(hid)
        if h.is_variable:
            lf = h.length.len_field
            if key_straddles(lf.offset_bits, lf.width_bits, plan.bus_width_bits):
                raise CodegenError(f"{hid}: length field crosses a {plan.bus_width_bits}-bit "
                                   "word; the node module reads it from a single beat")
    idents = sanitize_identifiers(order)
    tnames = _type_names(idents)
    files = {
        "module.hpp": module_source(),
        "types.hpp": _types_hpp(plan, graph, idents, tnames),
        "pipeline.cpp": _pipeline_cpp(plan, graph, idents, tnames),
    }
    purposes = {
        "module.hpp": "generic parser-node module",
        "types.hpp": "header ids, PHV records and per-node layouts",
        "pipeline.cpp": "node objects, pipe registers and muxes",
    }
    return finish_bundle(plan.design, "mpo-cxx", files, purposes)
