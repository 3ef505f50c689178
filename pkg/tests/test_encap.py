import dataclasses

import pytest
from hypothesis import given, strategies as st

from oracles import N3_OVERHEAD, NWU_OVERHEAD
from n3access.core import AccessType, PduSessionContext, PduSessionState
from n3access.encap import (
    EncapsulatedPacket, Leg, N3_LAYERS, NWU_LAYERS, TunnelMap, decap, encap_n3, encap_nwu,
    overhead_rows, payload_rows, relay_downlink, relay_uplink, render_overhead,
)
from n3access.errors import MalformedPacketError, NoTunnelError

CTX = PduSessionContext(4, PduSessionState.ESTABLISHED, (1, 2), (11, 12), gtpu_teid=0x1001,
                        gre_key=77, sa_for_profile=((1, 11), (2, 12)))


def test_fixed_overheads():
    assert encap_nwu(1000, CTX).total_bytes == 1000 + NWU_OVERHEAD == 1044
    assert encap_nwu(0, CTX).total_bytes == 44
    assert encap_n3(1000, CTX).total_bytes == 1000 + N3_OVERHEAD == 1036
    assert encap_n3(0, CTX).total_bytes == 36


def test_layer_order():
    assert [n for n, _ in encap_nwu(1, CTX).layers] == ["OUTER_IP", "ESP", "GRE"]
    assert [n for n, _ in encap_n3(1, CTX).layers] == ["IP", "UDP", "GTP_U"]
    assert [b for _, b in N3_LAYERS] == [20, 8, 8]


def test_tags():
    p = encap_nwu(10, CTX, qos_profile=2)
    assert (p.tunnel_key, p.child_sa) == (77, 12)
    assert encap_n3(10, CTX).tunnel_key == 0x1001


@given(st.integers(0, 65535), st.sampled_from(["nwu", "n3"]))
def test_round_trip(size, leg):
    tunnels = TunnelMap([CTX])
    pkt = encap_nwu(size, CTX, token=("t", size)) if leg == "nwu" else encap_n3(size, CTX, token=size)
    d = decap(pkt, tunnels)
    assert (d.pdu_bytes, d.session_id) == (size, CTX.session_id)
    assert d.token == pkt.token


@given(st.integers(0, 9000))
def test_relay_preserves_payload_and_session(size):
    tunnels = TunnelMap([CTX])
    up = relay_uplink(encap_nwu(size, CTX), tunnels)
    assert up.leg is Leg.N3 and up.inner_pdu_bytes == size
    assert decap(up, tunnels).session_id == CTX.session_id
    down = relay_downlink(up, tunnels, qos_profile=2)
    assert down.leg is Leg.NWU and down.child_sa == 12 and down.inner_pdu_bytes == size


def test_errors():
    with pytest.raises(NoTunnelError):
        encap_nwu(1, CTX.evolve(state=PduSessionState.REQUESTED))
    with pytest.raises(NoTunnelError):
        encap_n3(1, PduSessionContext(1))
    with pytest.raises(ValueError):
        encap_n3(-1, CTX)
    bad = EncapsulatedPacket((("UDP", 8), ("IP", 20)), 5, Leg.N3)
    with pytest.raises(MalformedPacketError):
        decap(bad)
    mislabeled = dataclasses.replace(encap_n3(5, CTX), leg=Leg.NWU)
    with pytest.raises(MalformedPacketError):
        decap(mislabeled)
    with pytest.raises(NoTunnelError):
        relay_uplink(encap_nwu(5, CTX), TunnelMap())


def test_null_encryption_changes_no_size():
    trusted = CTX.evolve(null_encryption=True, access=AccessType.TRUSTED_TNGF)
    a, b = encap_nwu(300, CTX), encap_nwu(300, trusted)
    assert b.null_encryption and a.total_bytes == b.total_bytes


def test_overhead_report():
    rows = overhead_rows()
    assert {(leg, total) for leg, _, _, total in rows} == {("NWU", 44), ("N3", 36)}
    assert sum(b for leg, _, b, _ in rows if leg == "NWU") == 44
    assert payload_rows([1, 10, 100]) == [(1, 45, 37), (10, 54, 46), (100, 144, 136)]
    csv_text = render_overhead([1000], "records")
    assert csv_text.splitlines()[0] == "leg,layer,header_bytes,total_overhead"
    assert "1000,1044,1036" in csv_text
    assert NWU_LAYERS[1] == ("ESP", 16)
