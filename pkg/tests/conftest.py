from importlib import resources

import pytest

from mpoparse.graph import graph_from_dict, load_spec
from mpoparse.planner import plan

VALID_FIXTURES = ("fig1", "linear_chain", "diamond", "variable_only")
NEGATIVE_FIXTURES = ("straddle_negative", "cyclic_negative")


def fixture_text(name):
    return resources.files("mpoparse").joinpath("fixtures", name + ".json").read_text()


def load_fixture(name):
    return load_spec(fixture_text(name))


def fixed(hid, nbytes, key=None, transitions=(), fields=()):
    """Compact header document for hand-built test graphs."""
    h = {"id": hid, "name": hid.upper(), "length": {"fixed_bytes": nbytes},
         "transitions": [{"value": hex(v), "mask": hex(m), "next": n} for v, m, n in transitions],
         "fields": [{"name": n, "offset_bits": o, "width_bits": w} for n, o, w in fields]}
    if key is not None:
        h["key"] = {"offset_bits": key[0], "width_bits": key[1]}
    return h


def make_graph(headers, bus=64, start=None, name="t"):
    return graph_from_dict({"name": name, "bus_width_bits": bus,
                            "start": start or headers[0]["id"], "headers": headers})


@pytest.fixture(scope="session")
def fig1():
    return load_fixture("fig1")


@pytest.fixture(scope="session")
def fig1_plan(fig1):
    return plan(fig1)


def random_dag(rng, n_nodes, bus=64, p_edge=0.35, p_variable=0.3):
    """Random acyclic graph in which every node is reachable from node 0.

    Keys are the first byte of each header, the length field (for variable
    headers) is the next nibble, so every generated graph validates.
    """
    ids = [f"n{i}" for i in range(n_nodes)]
    succ = {i: set() for i in range(n_nodes)}
    for j in range(1, n_nodes):
        succ[rng.randrange(j)].add(j)
        for i in range(j):
            if rng.random() < p_edge:
                succ[i].add(j)
    headers = []
    for i, hid in enumerate(ids):
        targets = sorted(succ[i])
        values = rng.sample(range(256), len(targets))
        trans = [(v, 0xFF, ids[t]) for v, t in zip(values, targets)]
        fields = [("tag", 0, 8)]
        if rng.random() < p_variable:
            lo = rng.randint(2, 4)
            h = fixed(hid, 1, key=(0, 8), transitions=trans, fields=fields + [("hlen", 8, 4)])
            h["length"] = {"variable": {"field": {"offset_bits": 8, "width_bits": 4},
                                        "multiplier_bits": rng.choice([8, 32, 40]),
                                        "addend_bits": 0, "min": lo,
                                        "max": rng.randint(lo, 15)}}
        else:
            nbytes = rng.randint(2, 24)
            fields.append(("body", 8, nbytes * 8 - 8))
            h = fixed(hid, nbytes, key=(0, 8), transitions=trans, fields=fields)
        headers.append(h)
    return make_graph(headers, bus=bus, name=f"dag{n_nodes}")


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""
    def record(number, passed, detail):
        verdict = "NOTE" if passed is None else "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"criterion {number}: {verdict}  {detail}"
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
