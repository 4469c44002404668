import hashlib
import os
import re
import shutil
import subprocess
from pathlib import Path

import pytest

from mpoparse.codegen import BACKENDS, emit
from mpoparse.codegen.mpo_cxx import module_source, sanitize_identifiers
from mpoparse.errors import CodegenError
from mpoparse.planner import plan

from conftest import VALID_FIXTURES, fixed, load_fixture, make_graph

GOLDEN = Path(__file__).parent / "golden"
SHIM = Path(__file__).parent / "support"
UPDATE = os.environ.get("MPOPARSE_UPDATE_GOLDEN") == "1"

OBJECT_DECL = re.compile(r"^static (Fixed|Variable)Header<", re.M)
TERNARY = re.compile(r"^\tpipeReg\d+ = .*\?", re.M)
REGISTER = re.compile(r"^static PktDataType pipeReg\d+;$", re.M)


def bundle_for(name, backend="mpo-cxx"):
    g = load_fixture(name)
    return emit(plan(g), g, backend)


def digest(bundle):
    h = hashlib.sha256()
    for path in sorted(bundle.files):
        h.update(path.encode() + b"\0" + bundle.files[path].encode() + b"\0")
    return h.hexdigest()


def test_fig1_pipeline_shape():
    src = bundle_for("fig1").files["pipeline.cpp"]
    assert len(OBJECT_DECL.findall(src)) == 5
    assert len(TERNARY.findall(src)) == 2
    assert len(REGISTER.findall(src)) == 3
    assert "pipeReg1 = ipv4_PHV.Valid ? tmpPOut[1] : tmpPOut[2];" in src
    assert "pipeReg2 = udp_PHV.Valid ? tmpPOut[3] : tmpPOut[4];" in src
    assert "static VariableHeader<60, BUS_SIZE, Ipv4LayoutType, Ipv4PHVDataType> ipv4" in src


def test_single_header_shape():
    g = make_graph([fixed("only", 14)])
    src = emit(plan(g), g).files["pipeline.cpp"]
    assert len(OBJECT_DECL.findall(src)) == 1
    assert len(TERNARY.findall(src)) == 0


def test_three_way_mux_is_one_nested_ternary():
    g = make_graph([
        fixed("s", 4, key=(0, 8), transitions=[(1, 0xff, "x"), (2, 0xff, "y"), (3, 0xff, "z")]),
        fixed("x", 4), fixed("y", 4), fixed("z", 4),
    ])
    src = emit(plan(g), g).files["pipeline.cpp"]
    assert len(TERNARY.findall(src)) == 1
    assert "pipeReg1 = x_PHV.Valid ? tmpPOut[1] : (y_PHV.Valid ? tmpPOut[2] : tmpPOut[3]);" in src


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_module_per_object_properties(name):
    g = load_fixture(name)
    p = plan(g)
    b = emit(p, g)
    src = b.files["pipeline.cpp"]
    assert len(OBJECT_DECL.findall(src)) == len(g.headers)
    assert len(TERNARY.findall(src)) == len(p.muxes)
    assert len(REGISTER.findall(src)) == p.n_registers
    # the generic module is defined once, in module.hpp only
    everything = "".join(b.files.values())
    assert everything.count("class Header {") == 1
    assert b.files["module.hpp"] == module_source()
    assert digest(emit(p, g)) == digest(b)


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_bundle_layout(name):
    b = bundle_for(name)
    assert sorted(b.files) == ["MANIFEST.json", "module.hpp", "pipeline.cpp", "types.hpp"]
    assert all(text.endswith("\n") for text in b.files.values())
    assert [m[0] for m in b.manifest] == ["module.hpp", "pipeline.cpp", "types.hpp"]


def test_no_pragmas_emitted():
    for text in bundle_for("fig1").files.values():
        assert "#pragma" not in text


def test_ipv4_layout_tables():
    types = bundle_for("fig1").files["types.hpp"]
    lengths = ", ".join(str(n) for n in range(160, 481, 32))
    assert f"{{{{{lengths}}}}}," in types
    assert "varHeaderFormat<9, 4, 4, 32, 0, 5, 15>" in types
    assert "{{{0x11, 0xff, HDR_UDP}, {0x06, 0xff, HDR_TCP}}}," in types


def test_field_split_across_beats():
    # 16-bit field at bits 56..71 of a header on a 64-bit bus
    g = make_graph([fixed("a", 10, fields=[("split", 56, 16)])], bus=64)
    types = emit(plan(g), g).files["types.hpp"]
    assert "split.range(15, 8) = Data.range(7, 0);" in types
    assert "split.range(7, 0) = Data.range(63, 56);" in types


def test_plan_report():
    b = bundle_for("fig1", "plan-report")
    report = b.files["report.txt"]
    assert "levels: 3, muxes: 2" in report
    ipv4 = report.split("  ipv4:")[1].split("  ipv6:")[0]
    assert "lookup table, 11 entries" in ipv4
    assert len(re.findall(r"bits -> shift", ipv4)) == 11
    assert b.files["plan.dot"].count("shape=trapezium") == 2


def test_plan_report_single_node():
    g = make_graph([fixed("only", 14)])
    assert "levels: 1, muxes: 0" in emit(plan(g), g, "plan-report").files["report.txt"]


def test_unknown_backend():
    g = load_fixture("fig1")
    with pytest.raises(CodegenError) as e:
        emit(plan(g), g, "verilog")
    for name in BACKENDS:
        assert name in str(e.value)


def test_plan_graph_mismatch():
    with pytest.raises(CodegenError):
        emit(plan(load_fixture("fig1")), load_fixture("diamond"))


def test_length_field_across_words_rejected():
    h = fixed("a", 1)
    h["length"] = {"variable": {"field": {"offset_bits": 4, "width_bits": 8},
                                "multiplier_bits": 8, "addend_bits": 0, "min": 2, "max": 9}}
    g = make_graph([h], bus=8)
    with pytest.raises(CodegenError, match="length field"):
        emit(plan(g), g)


def test_sanitize_identifiers():
    m = sanitize_identifiers(["IPv4", "ipv4", "802.1Q", "class", "a-b", "a_b"])
    assert m == {"IPv4": "ipv4", "ipv4": "ipv4_2", "802.1Q": "h_802_1q",
                 "class": "class_2", "a-b": "a_b", "a_b": "a_b_2"}


def test_bundle_write(tmp_path):
    b = bundle_for("fig1")
    target = b.write(tmp_path)
    assert target == tmp_path / "fig1"
    assert sorted(p.name for p in target.iterdir()) == sorted(b.files)
    report = bundle_for("fig1", "plan-report").write(tmp_path)
    assert report == tmp_path / "fig1" / "report"
    assert (target / "MANIFEST.json").read_text() == b.files["MANIFEST.json"]


@pytest.mark.parametrize("name", VALID_FIXTURES)
@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_golden(name, backend):
    b = bundle_for(name, backend)
    root = GOLDEN / backend / name
    if UPDATE:
        root.mkdir(parents=True, exist_ok=True)
        for path, text in b.files.items():
            if path != "module.hpp":
                (root / path).write_text(text)
    for path, text in b.files.items():
        if path == "module.hpp":
            continue
        assert (root / path).read_text() == text, f"{backend}/{name}/{path} differs from golden"


@pytest.mark.skipif(shutil.which("g++") is None, reason="g++ not installed")
@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_generated_cxx_compiles(tmp_path, name):
    target = bundle_for(name).write(tmp_path)
    proc = subprocess.run(
        ["g++", "-std=c++11", "-fsyntax-only", "-Wall", "-Werror", f"-I{SHIM}",
         str(target / "pipeline.cpp")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
