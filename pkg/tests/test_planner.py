import random

import pytest

from mpoparse.bitlab import b2b, numbits
from mpoparse.errors import ValidationError
from mpoparse.graph import ACCEPT, header_size_bits
from mpoparse.planner import (
    OUTPUT, FixedShift, LutShift, PipelinePlan, build_header_plan, level_schedule,
    place_muxes, plan, to_dot,
)

from conftest import VALID_FIXTURES, fixed, load_fixture, make_graph, random_dag


def diamond_graph():
    return make_graph([
        fixed("A", 4, key=(0, 8), transitions=[(1, 0xff, "B"), (2, 0xff, "C")]),
        fixed("B", 4, key=(0, 8), transitions=[(1, 0xff, "D")]),
        fixed("C", 4, key=(0, 8), transitions=[(1, 0xff, "D")]),
        fixed("D", 4),
    ])


def test_fig1_levels(fig1):
    assert level_schedule(fig1) == [["eth"], ["ipv4", "ipv6"], ["udp", "tcp"]]


def test_single_node_levels():
    assert level_schedule(make_graph([fixed("only", 4)])) == [["only"]]


def test_diamond_levels():
    assert level_schedule(diamond_graph()) == [["A"], ["B", "C"], ["D"]]


def test_longest_path_not_shortest():
    # a -> c directly and a -> b -> c: c sits below b
    g = make_graph([
        fixed("a", 4, key=(0, 8), transitions=[(1, 0xff, "b"), (2, 0xff, "c")]),
        fixed("b", 4, key=(0, 8), transitions=[(1, 0xff, "c")]),
        fixed("c", 4),
    ])
    assert level_schedule(g) == [["a"], ["b"], ["c"]]


def test_fig1_muxes(fig1):
    muxes = place_muxes(fig1, level_schedule(fig1))
    assert [(m.site, m.inputs, m.select) for m in muxes] == [
        (2, ("ipv4", "ipv6"), "ipv4"),
        (OUTPUT, ("udp", "tcp"), "udp"),
    ]
    assert [m.name for m in muxes] == ["mux_l2", "mux_out"]


def test_linear_chain_no_muxes():
    g = load_fixture("linear_chain")
    assert place_muxes(g, level_schedule(g)) == []


def test_three_way_convergence():
    g = make_graph([
        fixed("s", 4, key=(0, 8), transitions=[(1, 0xff, "x"), (2, 0xff, "y"), (3, 0xff, "z")]),
        fixed("z", 4, key=(0, 8), transitions=[(1, 0xff, "t")]),
        fixed("x", 4, key=(0, 8), transitions=[(1, 0xff, "t")]),
        fixed("y", 4, key=(0, 8), transitions=[(1, 0xff, "t")]),
        fixed("t", 4),
    ])
    (m,) = place_muxes(g, level_schedule(g))
    # priority follows declaration order, not transition order
    assert m.inputs == ("z", "x", "y") and m.select == "z" and m.site == 2


def test_ipv4_lut(fig1):
    hp = build_header_plan(fig1.header("ipv4"), 512)
    assert isinstance(hp.shift_plan, LutShift)
    lengths = [n for n, _ in hp.shift_plan.entries]
    assert lengths == [(0x4 * ihl) * 0x8 for ihl in range(5, 16)]
    assert lengths == list(range(160, 481, 32))
    assert all(not span for _, span in hp.bus_span)
    assert hp.state_shift == 432


def test_ethernet_fixed(fig1):
    hp = build_header_plan(fig1.header("eth"), 512)
    assert hp.shift_plan == FixedShift(112)
    assert hp.state_shift == 400
    assert hp.rx_counter_width == numbits(112)


def test_forty_byte_header_on_narrow_bus(fig1):
    hp = build_header_plan(fig1.header("ipv6"), 128)
    assert hp.shift_plan == FixedShift(64)
    assert hp.bus_span == ((320, True),)


def test_lut_collapses_when_all_shifts_zero():
    g = load_fixture("variable_only")
    outer = g.header("outer")
    hp = build_header_plan(outer, 32)
    assert all(n % 32 == 0 for n in hp.valid_lengths)
    assert hp.shift_plan == FixedShift(0)


def test_fig1_plan(fig1_plan):
    assert fig1_plan.levels == (("eth",), ("ipv4", "ipv6"), ("udp", "tcp"))
    assert fig1_plan.n_registers == 3
    assert len(fig1_plan.muxes) == 2


def test_single_header_plan():
    p = plan(make_graph([fixed("only", 14)]))
    assert p.levels == (("only",),) and p.n_registers == 1 and p.muxes == ()


def test_plan_rejects_invalid():
    with pytest.raises(ValidationError) as e:
        plan(load_fixture("cyclic_negative"))
    assert any(v.kind == "cycle" for v in e.value.violations)


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_plan_json_roundtrip_and_determinism(name):
    g = load_fixture(name)
    a, b = plan(g), plan(load_fixture(name))
    assert a.to_json() == b.to_json()
    assert PipelinePlan.from_json(a.to_json()) == a


def test_dot_has_one_trapezium_per_mux(fig1_plan):
    dot = to_dot(fig1_plan)
    assert dot.count("shape=trapezium") == 2
    assert dot.count("subgraph cluster_level") == 3
    assert 'xlabel="sel: ipv4.valid"' in dot


def check_plan_invariants(g, p):
    levels = {hid: i for i, lv in enumerate(p.levels) for hid in lv}
    assert sorted(levels) == sorted(g.ids)
    for h in g.headers:
        preds = g.predecessors(h.id)
        want = 0 if h.id == g.start else 1 + max(levels[q] for q in preds)
        assert levels[h.id] == want
    assert p.n_registers == len(p.levels)
    last = len(p.levels) - 1
    sites = {m.site: m for m in p.muxes}
    for i, lv in enumerate(p.levels):
        site = OUTPUT if i == last else i + 1
        if len(lv) >= 2:
            m = sites[site]
            assert m.inputs == lv and m.select == lv[0] and len(m.inputs) >= 2
            # the select is a header of a level strictly before the site
            assert site == OUTPUT or levels[m.select] < site
        else:
            assert site not in sites
    for h in g.headers:
        hp = p.header_plan(h.id)
        assert hp.rx_counter_width == numbits(b2b(h.max_bits // 8))
        lengths = set(h.length.valid_lengths())
        if h.is_variable:
            v = h.length
            assert lengths == {header_size_bits(h, x) for x in range(v.min_value, v.max_value + 1)}
            if isinstance(hp.shift_plan, LutShift):
                keys = [n for n, _ in hp.shift_plan.entries]
                assert len(keys) == len(set(keys)) == v.max_value - v.min_value + 1
                assert set(keys) == lengths
            else:
                assert hp.shift_plan == FixedShift(0)
                assert all(n % p.bus_width_bits == 0 for n in lengths)
        for n in lengths:
            assert hp.shift_plan.lookup(n) == n % p.bus_width_bits
        assert dict(hp.bus_span) == {n: n > p.bus_width_bits for n in lengths}


@pytest.mark.parametrize("seed", range(60))
def test_random_dag_plan_invariants(seed):
    rng = random.Random(seed)
    g = random_dag(rng, rng.randint(1, 12), bus=rng.choice([64, 128, 512]))
    p = plan(g)
    check_plan_invariants(g, p)
    assert plan(g).to_json() == p.to_json()


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_fixture_plan_invariants(name):
    g = load_fixture(name)
    check_plan_invariants(g, plan(g))


def test_accept_edges_do_not_create_levels(fig1):
    assert ACCEPT not in {hid for lv in level_schedule(fig1) for hid in lv}
