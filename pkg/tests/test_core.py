import random
import string

import pytest
from hypothesis import given, strategies as st

from n3access.core import (
    AccessType, GatewayPlacement, Identity, Link, Node, NodeRole, PduSessionContext,
    PduSessionState, RoamingMode, Topology, conceal_identity, deconceal_identity,
    topology_errors, validate_topology,
)
from n3access.errors import InvalidIdentityError, TopologyError
from n3access.scenario import build_topology, load_scenario, shipped_scenarios

# Gateway column of the access-network comparison, one row per access type.
GATEWAY_TABLE = {
    AccessType.UNTRUSTED: NodeRole.N3IWF,
    AccessType.TRUSTED_TNGF: NodeRole.TNGF,
    AccessType.TRUSTED_TWIF: NodeRole.TWIF,
    AccessType.WIRELINE_5GRG: NodeRole.W_AGF,
    AccessType.WIRELINE_FNRG: NodeRole.W_AGF,
}


def test_gateway_mapping_is_total():
    assert {a: a.gateway_role for a in AccessType} == GATEWAY_TABLE


def test_nas_capability():
    capable = {a for a in AccessType if a.nas_capable}
    assert capable == {AccessType.UNTRUSTED, AccessType.TRUSTED_TNGF, AccessType.WIRELINE_5GRG}


def test_conceal_round_trip_example():
    s = conceal_identity("imsi-001010000000001", AccessType.WIRELINE_FNRG)
    assert s != "imsi-001010000000001"
    assert deconceal_identity(s) == "imsi-001010000000001"


def test_conceal_empty_rejected():
    with pytest.raises(InvalidIdentityError):
        conceal_identity("", AccessType.UNTRUSTED)


@given(st.text(min_size=1, max_size=40), st.sampled_from(list(AccessType)))
def test_conceal_round_trip(supi, access):
    assert deconceal_identity(conceal_identity(supi, access)) == supi


def test_conceal_injective_over_random_ids():
    rng = random.Random(1234)
    ids = {"imsi-" + "".join(rng.choices(string.digits, k=15)) for _ in range(1000)}
    concealed = {conceal_identity(i, AccessType.UNTRUSTED) for i in ids}
    assert len(concealed) == len(ids)


@pytest.mark.parametrize("bad", ["", "suci", "suci-zz-00", "imsi-1", "suci-U-", "suci-U-nothex"])
def test_deconceal_rejects_garbage(bad):
    with pytest.raises(InvalidIdentityError):
        deconceal_identity(bad)


def test_identity_realm_required_for_trusted():
    ident = Identity.from_supi("imsi-208930000000001", AccessType.TRUSTED_TNGF, "20893")
    assert ident.realm == "nai.5gc.20893.3gppnetwork.org"
    with pytest.raises(InvalidIdentityError):
        Identity.from_supi("imsi-1", AccessType.TRUSTED_TNGF, "20893", nai_template="{user}")
    # untrusted access does not route on the realm
    assert Identity.from_supi("imsi-1", AccessType.UNTRUSTED, "20893", nai_template="{user}").realm is None


def test_identity_rejects_foreign_suci():
    with pytest.raises(InvalidIdentityError):
        Identity("imsi-1", conceal_identity("imsi-2", AccessType.UNTRUSTED), "1@x")


# ---------------------------------------------------------------------------
# topology validation

def _two_plmn(mode, placement, sepp=True):
    nodes = [Node("ue", NodeRole.UE, "v"), Node("n3iwf", NodeRole.N3IWF, "v"),
             Node("amf", NodeRole.AMF, "v"), Node("udm", NodeRole.UDM, "h")]
    links = [Link("ue", "n3iwf"), Link("n3iwf", "amf")]
    if sepp:
        nodes += [Node("sv", NodeRole.SEPP, "v"), Node("sh", NodeRole.SEPP, "h")]
        links += [Link("amf", "sv"), Link("sv", "sh"), Link("sh", "udm")]
    else:
        links.append(Link("amf", "udm"))
    return Topology(tuple(nodes), tuple(links), mode, placement, home_plmn="h")


def test_single_plmn_non_roaming_valid():
    t = build_topology()
    assert validate_topology(t) is t


def test_missing_sepp():
    with pytest.raises(TopologyError) as ei:
        validate_topology(_two_plmn(RoamingMode.LBO, GatewayPlacement.VISITED_SAME, sepp=False))
    assert "missing-sepp" in ei.value.errors


def test_lbo_home_placement_illegal():
    errs = [e for e, _ in topology_errors(_two_plmn(RoamingMode.LBO, GatewayPlacement.HOME))]
    assert "illegal-placement" in errs


def test_hr_allows_three_placements():
    for p in (GatewayPlacement.VISITED_SAME, GatewayPlacement.VISITED_OTHER):
        assert topology_errors(_two_plmn(RoamingMode.HR, p)) == []


def test_every_violation_reported():
    t = Topology((Node("a", NodeRole.UE, "p"), Node("a", NodeRole.AMF, "q")),
                 (Link("a", "zz", -1),), RoamingMode.NON_ROAMING, GatewayPlacement.HOME)
    errs = {e for e, _ in topology_errors(t)}
    assert {"duplicate-node", "unknown-node", "negative-latency", "plmn-mismatch",
            "illegal-placement"} <= errs


@pytest.mark.parametrize("name", shipped_scenarios())
def test_shipped_topologies_valid(name):
    validate_topology(load_scenario(name).topology)


def _mutations(t):
    """Single-fault mutations of a valid topology."""
    yield "dup", Topology(t.nodes + (t.nodes[0],), t.links, t.roaming_mode, t.gateway_placement, t.home_plmn)
    yield "latency", Topology(t.nodes, t.links[:-1] + (Link(t.links[-1].a, t.links[-1].b, -1),),
                              t.roaming_mode, t.gateway_placement, t.home_plmn)
    yield "dangling", Topology(t.nodes, t.links + (Link(t.nodes[0].id, "ghost"),),
                               t.roaming_mode, t.gateway_placement, t.home_plmn)
    if t.roaming_mode is RoamingMode.NON_ROAMING:
        yield "placement", Topology(t.nodes, t.links, t.roaming_mode, GatewayPlacement.HOME, t.home_plmn)
        yield "second-plmn", Topology(t.nodes + (Node("x", NodeRole.DN, "99999"),), t.links,
                                      t.roaming_mode, t.gateway_placement, t.home_plmn)
    else:
        sepps = [n.id for n in t.nodes if n.role is NodeRole.SEPP]
        stripped = tuple(n if n.id != sepps[0] else Node(n.id, NodeRole.DN, n.plmn) for n in t.nodes)
        yield "sepp", Topology(stripped, t.links, t.roaming_mode, t.gateway_placement, t.home_plmn)


@pytest.mark.parametrize("name", shipped_scenarios())
def test_single_fault_mutations_rejected(name):
    t = load_scenario(name).topology
    for what, bad in _mutations(t):
        assert topology_errors(bad), what


# ---------------------------------------------------------------------------
# PDU session context

def test_established_needs_teid_and_child_sa():
    with pytest.raises(ValueError):
        PduSessionContext(1, PduSessionState.ESTABLISHED, (1,), (7,))
    with pytest.raises(ValueError):
        PduSessionContext(1, PduSessionState.ESTABLISHED, (1,), (), gtpu_teid=5)
    # TWIF and wireline sessions have no child SA
    PduSessionContext(1, PduSessionState.ESTABLISHED, (1,), (), gtpu_teid=5, access=AccessType.TRUSTED_TWIF)


def test_child_sa_count_bounded_by_profiles():
    with pytest.raises(ValueError):
        PduSessionContext(1, PduSessionState.REQUESTED, (1, 1), (3, 4))
    ctx = PduSessionContext(1, PduSessionState.ESTABLISHED, (1, 2), (3, 4), gtpu_teid=9,
                            sa_for_profile=((1, 3), (2, 4)))
    assert ctx.child_sa_for(2) == 4
    assert ctx.child_sa_for() == 3
    assert ctx.evolve(state=PduSessionState.FAILED).state is PduSessionState.FAILED
