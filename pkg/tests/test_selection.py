import itertools

import pytest
from hypothesis import given, strategies as st

from n3access.core import AccessType, RoamingMode
from n3access.errors import AnqpUnsupportedError, ConfigurationError, GoldenParseError, NoCandidateError
from n3access.scenario import build_topology
from n3access.selection import (
    AdvertisedNetwork, Connectivity, Origin, Rule, SelectionPolicy, anqp_exchange, parse_policies,
    select_network,
)

A = AdvertisedNetwork("cafe-wifi", "20893")
B = AdvertisedNetwork("airport", "20893", (AccessType.UNTRUSTED, AccessType.TRUSTED_TNGF))
C = AdvertisedNetwork("hotel-5", "20801")


def test_priority_order():
    pol = SelectionPolicy((Rule("airport", 2), Rule("cafe-wifi", 1)))
    assert select_network([A, B], [pol]).network is A


def test_home_wins_tie_when_roaming():
    home = SelectionPolicy((Rule("cafe-wifi", 1),), Origin.HOME)
    visited = SelectionPolicy((Rule("hotel-*", 1),), Origin.VISITED)
    for nets in itertools.permutations([A, C]):
        for pols in itertools.permutations([home, visited]):
            sel = select_network(nets, pols, roaming=True)
            assert sel.network is A and sel.origin is Origin.HOME


def test_visited_policy_ignored_at_home():
    visited = SelectionPolicy((Rule("hotel-*", 0),), Origin.VISITED)
    home = SelectionPolicy((Rule("*", 5),), Origin.HOME)
    assert select_network([A, C], [visited, home]).rule.priority == 5


def test_visited_better_priority_wins_when_roaming():
    visited = SelectionPolicy((Rule("hotel-*", 0),), Origin.VISITED)
    home = SelectionPolicy((Rule("*", 5),), Origin.HOME)
    assert select_network([A, C], [visited, home], roaming=True).network is C


def test_access_constraint_and_gateway():
    t = build_topology(AccessType.TRUSTED_TNGF)
    pol = SelectionPolicy((Rule("airport", 1, AccessType.TRUSTED_TNGF),))
    sel = select_network([A, B], [pol], topology=t)
    assert sel.access is AccessType.TRUSTED_TNGF
    assert sel.gateway == "tngf"


def test_errors():
    pol = SelectionPolicy((Rule("nothing", 1),))
    with pytest.raises(NoCandidateError):
        select_network([], [pol])
    with pytest.raises(NoCandidateError):
        select_network([A], [pol])
    with pytest.raises(ConfigurationError):
        SelectionPolicy((Rule("a", 1), Rule("b", 1)))
    with pytest.raises(ConfigurationError):
        Rule("a*b*", 1)
    with pytest.raises(ConfigurationError):
        Rule("a", -1)


NETS = [AdvertisedNetwork(f"net-{i}", "20893") for i in range(6)]


@given(st.permutations(NETS), st.lists(st.integers(0, 50), min_size=1, max_size=6, unique=True))
def test_order_independent(nets, prios):
    rules = tuple(Rule(f"net-{i}", p) for i, p in enumerate(prios))
    pol = SelectionPolicy(rules)
    assert select_network(nets, [pol]).network == select_network(NETS, [pol]).network


def test_anqp():
    net = AdvertisedNetwork("op", "20893", anqp_enabled=True,
                            advertisement=(("20893", Connectivity.TRUSTED),))
    entries, trace = anqp_exchange("ue", net)
    assert entries == [("20893", Connectivity.TRUSTED)]
    assert [r.kind_name for r in trace.messages] == ["ANQP_QUERY", "ANQP_RESPONSE"]
    empty, trace = anqp_exchange("ue", AdvertisedNetwork("x", "1"))
    assert empty == [] and len(trace.messages) == 2
    with pytest.raises(AnqpUnsupportedError):
        anqp_exchange("ue", AdvertisedNetwork("x", "1", anqp_enabled=False))


def test_policy_file():
    pols = parse_policies([
        "# pattern, priority, access, origin",
        "cafe-*, 1, UNTRUSTED, HOME",
        "airport, 2, ANY, HOME",
        "hotel-*, 1, any, visited",
    ])
    assert {p.origin for p in pols} == {Origin.HOME, Origin.VISITED}
    home = next(p for p in pols if p.origin is Origin.HOME)
    assert home.rules[0].access is AccessType.UNTRUSTED and home.rules[1].access is None
    with pytest.raises(GoldenParseError) as ei:
        parse_policies(["a, 1, ANY"], "p.txt")
    assert ei.value.lineno == 1
    with pytest.raises(GoldenParseError):
        parse_policies(["a, x, ANY, HOME"])
