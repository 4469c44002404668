import pytest

from mpoparse.reference import reference_parse
from mpoparse.simulator import OK
from mpoparse.traffic import DEFAULT_SEED, MALFORMED, TRUNCATED, VALID, generate_traffic

from conftest import VALID_FIXTURES, load_fixture


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_deterministic(name):
    g = load_fixture(name)
    assert generate_traffic(g, 100, seed=5) == generate_traffic(g, 100, seed=5)
    assert generate_traffic(g, 100, seed=5) != generate_traffic(g, 100, seed=6)


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_labels_agree_with_oracle(name):
    g = load_fixture(name)
    corpus = generate_traffic(g, 400, seed=DEFAULT_SEED)
    assert len(corpus) == 400
    for t in corpus:
        r = reference_parse(g, t.data)
        if t.kind == VALID:
            assert r.status == OK and tuple(r.path) == t.path
        else:
            assert r.status == t.kind


@pytest.mark.parametrize("name", VALID_FIXTURES)
def test_broken_share_at_least_ten_percent(name):
    corpus = generate_traffic(load_fixture(name), 1000)
    broken = sum(t.kind in (MALFORMED, TRUNCATED) for t in corpus)
    assert broken >= 100


def test_fig1_has_malformed_and_every_path(fig1):
    corpus = generate_traffic(fig1, 1000)
    assert any(t.kind == MALFORMED for t in corpus)
    paths = {t.path for t in corpus if t.kind == VALID}
    assert {("eth",), ("eth", "ipv4", "udp"), ("eth", "ipv4", "tcp"),
            ("eth", "ipv6", "udp"), ("eth", "ipv6", "tcp")} <= paths


def test_fixed_only_graph_falls_back_to_truncation():
    corpus = generate_traffic(load_fixture("linear_chain"), 500)
    assert not any(t.kind == MALFORMED for t in corpus)
    assert sum(t.kind == TRUNCATED for t in corpus) >= 50

