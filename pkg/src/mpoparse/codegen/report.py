"""The ``plan-report`` backend: a plain-text summary and the DOT graph."""

from __future__ import annotations

from ..planner import FixedShift, PipelinePlan, to_dot


def plan_report_text(plan: PipelinePlan) -> str:
    out = [
        f"design: {plan.design}",
        f"bus width: {plan.bus_width_bits} bits",
        f"levels: {len(plan.levels)}, muxes: {len(plan.muxes)}, "
        f"register banks: {plan.n_registers}",
        "",
    ]
    for i, level in enumerate(plan.levels):
        out.append(f"level {i}: {', '.join(level)} -> {plan.registers[i]}")
    out.append("")
    out.append("muxes:")
    if not plan.muxes:
        out.append("  (none)")
    for m in plan.muxes:
        out.append(f"  {m.name:<10} site {str(m.site):<7} inputs {', '.join(m.inputs)}"
                   f"  (select {m.select}.valid, default {m.inputs[-1]})")
    out.append("")
    out.append("headers:")
    for hp in plan.header_plans:
        key = "none" if hp.state_shift is None else str(hp.state_shift)
        out.append(f"  {hp.header_id}: level {hp.level}, key shift {key}, "
                   f"rx counter {hp.rx_counter_width} bits")
        if isinstance(hp.shift_plan, FixedShift):
            out.append(f"    realign: fixed shift {hp.shift_plan.shift}")
        else:
            out.append(f"    realign: lookup table, {len(hp.shift_plan.entries)} entries")
            for length, shift in hp.shift_plan.entries:
                span = dict(hp.bus_span).get(length, False)
                out.append(f"      {length:>6} bits -> shift {shift}"
                           f"{', spans words' if span else ''}")
    out.append("")
    out.append(f"latency model: {plan.n_registers} register banks + (bus words - 1) cycles")
    return "\n".join(out) + "\n"


def render_plan_report(plan: PipelinePlan):
    from . import finish_bundle

    files = {"report.txt": plan_report_text(plan), "plan.dot": to_dot(plan)}
    purposes = {"report.txt": "plan summary", "plan.dot": "Graphviz pipeline drawing"}
    return finish_bundle(plan.design, "plan-report", files, purposes, subdir="report")
