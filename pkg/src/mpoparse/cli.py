"""Command-line driver: ``mpoparse <command> SPEC [options]``.

SPEC is a path to a JSON design document or the name of a bundled fixture
(``fig1``, ``linear_chain``, ``diamond``, ``variable_only``,
``straddle_negative``, ``cyclic_negative``).

Exit status: 0 on success, 1 on operational failures (I/O, syntax, unknown
backend, oracle divergence), 2 when the design fails validation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .codegen import BACKENDS, emit
from .codegen.report import plan_report_text
from .errors import MpoParseError, ValidationError
from .graph import ParserGraph, load_spec, validate
from .packets import FORMATS, read_packets, results_to_jsonl, write_packets
from .planner import PipelinePlan, plan, to_dot
from .reference import reference_parse
from .simulator import compare_results, run_batch
from .traffic import DEFAULT_SEED, generate_traffic

log = logging.getLogger("mpoparse")

OUT_ENV = "MPOPARSE_OUT"
DEFAULT_OUT = "gen"

EXIT_OK = 0
EXIT_OPERATIONAL = 1
EXIT_VALIDATION = 2


def bundled_fixtures() -> list[str]:
    root = resources.files("mpoparse").joinpath("fixtures")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_spec(ref: str) -> ParserGraph:
    path = Path(ref)
    if path.exists() or ref not in bundled_fixtures():
        return load_spec(path.read_text(encoding="utf-8"))
    return load_spec(resources.files("mpoparse").joinpath("fixtures", ref + ".json")
                     .read_text(encoding="utf-8"))


def _planned(ref: str) -> tuple[ParserGraph, PipelinePlan]:
    graph = read_spec(ref)
    return graph, plan(graph)


def _write_text(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)


def _guess_format(path: str) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".pcap", ".cap"):
        return "pcap"
    if suffix in (".raw", ".bin"):
        return "raw"
    return "hex"


def cmd_validate(args) -> int:
    graph = read_spec(args.spec)
    report = validate(graph)
    if report.ok:
        print(f"{graph.name}: ok ({len(graph.headers)} headers)")
        return EXIT_OK
    for v in report.violations:
        print(v)
    return EXIT_VALIDATION


def cmd_plan(args) -> int:
    graph, p = _planned(args.spec)
    if args.format == "json":
        text = p.to_json()
    elif args.format == "dot":
        text = to_dot(p)
    else:
        text = plan_report_text(p)
    _write_text(text, args.out)
    return EXIT_OK


def cmd_sim(args) -> int:
    graph, p = _planned(args.spec)
    fmt = args.packet_format or _guess_format(args.packets)
    packets = read_packets(args.packets, fmt)
    results = run_batch(p, graph, packets, jobs=args.jobs)
    _write_text(results_to_jsonl(results), args.out)
    counts: dict[str, int] = {}
    for r in results:
        counts[r.status] = counts.get(r.status, 0) + 1
    log.info("%d packets: %s", len(results),
             ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
    if not args.oracle_check:
        return EXIT_OK
    bad = 0
    for i, (pkt, got) in enumerate(zip(packets, results)):
        diffs = compare_results(got, reference_parse(graph, pkt))
        if diffs:
            bad += 1
            print(f"packet {i}: pipeline and reference disagree: {'; '.join(diffs)}",
                  file=sys.stderr)
    if bad:
        print(f"oracle check: {bad} of {len(packets)} packets diverge", file=sys.stderr)
        return EXIT_OPERATIONAL
    print(f"oracle check: {len(packets)} packets agree", file=sys.stderr)
    return EXIT_OK


def cmd_emit(args) -> int:
    graph, p = _planned(args.spec)
    bundle = emit(p, graph, args.backend)
    out_root = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    target = bundle.write(out_root)
    for path in sorted(bundle.files):
        print(target / path)
    return EXIT_OK


def cmd_gen_traffic(args) -> int:
    graph = read_spec(args.spec)
    report = validate(graph)
    if not report.ok:
        raise ValidationError(report.violations)
    corpus = generate_traffic(graph, args.count, seed=args.seed)
    packets = [t.data for t in corpus]
    notes = [f"{t.kind} {'/'.join(t.path)}" for t in corpus] if args.annotate else None
    if args.out is None or args.out == "-":
        from .packets import format_hex_lines
        sys.stdout.write(format_hex_lines(packets, notes))
    else:
        fmt = args.packet_format or _guess_format(args.out)
        write_packets(args.out, packets, fmt, notes if fmt == "hex" else None)
        log.info("wrote %d packets to %s", len(packets), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpoparse", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("spec", help="design JSON file or bundled fixture name")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a design and list every violation")

    p = add("plan", cmd_plan, "compile a design into a pipeline plan")
    p.add_argument("--format", choices=("text", "json", "dot"), default="text")
    p.add_argument("--out", help="output file (default: stdout)")

    p = add("sim", cmd_sim, "run packets through the pipeline model")
    p.add_argument("--packets", required=True)
    p.add_argument("--packet-format", choices=FORMATS,
                   help="default: from the file suffix, else hex")
    p.add_argument("--out", help="JSON-lines results (default: stdout)")
    p.add_argument("--oracle-check", action="store_true",
                   help="also run the reference parser; exit 1 on any divergence")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = add("emit", cmd_emit, "generate source files for a design")
    p.add_argument("--backend", default="mpo-cxx",
                   help=f"one of: {', '.join(sorted(BACKENDS))}")
    p.add_argument("--out", help=f"output root (default: ${OUT_ENV} or ./{DEFAULT_OUT})")

    p = add("gen-traffic", cmd_gen_traffic, "generate a seeded test-packet corpus")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="output file (default: stdout, hex)")
    p.add_argument("--packet-format", choices=FORMATS)
    p.add_argument("--annotate", action="store_true",
                   help="append '# kind path' comments to hex lines")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as e:
        for v in e.violations:
            print(v, file=sys.stderr)
        return EXIT_VALIDATION
    except (MpoParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OPERATIONAL


if __name__ == "__main__":
    sys.exit(main())
