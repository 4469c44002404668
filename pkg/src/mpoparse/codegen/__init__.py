"""Source emission backends.

``mpo-cxx`` renders a plan as HLS-style C++: one generic node module shared
by all headers, a types file with PHV records and per-node constant tables,
and a top-level pipeline declaring one static specialized object per node.
``plan-report`` renders a human-readable summary plus the DOT graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import CodegenError
from ..graph import ParserGraph
from ..planner import PipelinePlan


@dataclass(frozen=True)
class SourceBundle:
    design: str
    backend: str
    files: dict[str, str]
    purposes: dict[str, str]
    subdir: str = ""

    @property
    def manifest(self) -> list[tuple[str, str, int]]:
        return [(path, self.purposes[path], len(self.files[path].encode()))
                for path in sorted(self.files) if path != "MANIFEST.json"]

    def write(self, out_root) -> Path:
        target = Path(out_root) / self.design / self.subdir
        target.mkdir(parents=True, exist_ok=True)
        for path, text in sorted(self.files.items()):
            (target / path).write_text(text, encoding="utf-8", newline="\n")
        return target


def finish_bundle(design: str, backend: str, files: dict[str, str],
                  purposes: dict[str, str], subdir: str = "") -> SourceBundle:
    """Attach MANIFEST.json to a set of generated files."""
    entries = [{"path": p, "purpose": purposes[p], "bytes": len(files[p].encode())}
               for p in sorted(files)]
    manifest = json.dumps({"design": design, "backend": backend, "files": entries},
                          sort_keys=True, indent=2) + "\n"
    files = dict(files, **{"MANIFEST.json": manifest})
    purposes = dict(purposes, **{"MANIFEST.json": "file list"})
    return SourceBundle(design, backend, files, purposes, subdir)


def check_plan_matches(plan: PipelinePlan, graph: ParserGraph):
    plan_ids = sorted(hid for lv in plan.levels for hid in lv)
    if plan_ids != sorted(graph.ids):
        raise CodegenError(f"plan headers {plan_ids} do not match graph headers {sorted(graph.ids)}")
    if plan.bus_width_bits != graph.bus_width_bits or plan.start != graph.start:
        raise CodegenError("plan bus width or start header differs from the graph")


def _mpo_cxx(plan, graph):
    from .mpo_cxx import emit_mpo_cxx
    return emit_mpo_cxx(plan, graph)


def _plan_report(plan, graph):
    from .report import render_plan_report
    return render_plan_report(plan)


BACKENDS = {"mpo-cxx": _mpo_cxx, "plan-report": _plan_report}


def emit(plan: PipelinePlan, graph: ParserGraph, backend: str = "mpo-cxx") -> SourceBundle:
    if backend not in BACKENDS:
        raise CodegenError(f"unknown backend {backend!r}; available: {', '.join(sorted(BACKENDS))}")
    check_plan_matches(plan, graph)
    return BACKENDS[backend](plan, graph)
