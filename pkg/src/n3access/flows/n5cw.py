"""Registration and PDU sessions for devices without 5G NAS (N5CW) behind a
TWAP/TWIF pair.

The TWIF authors every NAS message on the device's behalf, so NAS never
reaches the device. The device secures its WLAN link with keys derived from
the AN key through the PMK, and its user-plane connection is bound to an N3
tunnel once a PDU session exists.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Optional

from ..core import AccessType, Identity, NodeRole, PduSessionContext, PduSessionState, Topology
from ..encap import EncapsulatedPacket, encap_lan, encap_n3
from ..errors import NoTunnelError, PreconditionError
from ..kdf import KeyHierarchy, KeyLabel, complete_handshake, derive, derive_chain
from ..messages import MessageKind as K, Procedure
from ..sim import Simulation
from ..trace import Outcome
from .base import (UeConfig, authenticate, check_access, core_of, home_function, key_handle,
                   require, require_node, select_amf, session_functions)


class ConnectionKind(Enum):
    L2 = "L2"
    L3 = "L3"


class N5cwPhase(IntEnum):
    INIT = 0
    ASSOCIATED = 1
    IDENTIFIED = 2
    AUTHENTICATING = 3
    SMC = 4
    AN_KEYED = 5
    LINK_SECURED = 6
    REGISTERED = 7
    FAILED = 8


#: Session parameters the TWIF uses when the device brings none.
DEFAULT_PDU_PROFILE = (("dnn", "internet"), ("sst", 1), ("qos", 9), ("pdu_type", "IPv4"))


@dataclass(frozen=True)
class DeviceConfig(UeConfig):
    node: str = "n5cw"
    supi: str = "imsi-208930000000101"
    connection_kind: ConnectionKind = ConnectionKind.L3
    pdu_profile: Optional[tuple] = None      # provided during registration, else defaults
    wlan_reservation: bool = False


@dataclass(frozen=True)
class N5cwRegistrationState:
    phase: N5cwPhase
    device: DeviceConfig
    gateway: str
    twap: str
    access: AccessType = AccessType.TRUSTED_TWIF
    identity: Optional[Identity] = None
    keys: KeyHierarchy = field(default_factory=KeyHierarchy)           # device side
    network_keys: KeyHierarchy = field(default_factory=KeyHierarchy)   # AMF / TWIF side
    twap_wlan_keys: Optional[bytes] = None
    selected_amf: Optional[str] = None
    connection_id: Optional[int] = None
    connection_kind: ConnectionKind = ConnectionKind.L3
    history: tuple = ()

    def advance(self, phase: N5cwPhase, **changes) -> "N5cwRegistrationState":
        if self.phase is N5cwPhase.FAILED:
            raise PreconditionError("registration already failed")
        if phase is not N5cwPhase.FAILED and phase < self.phase:
            raise ValueError(f"phase cannot go back from {self.phase.name} to {phase.name}")
        return replace(self, phase=phase, history=self.history + (self.phase,), **changes)

    @property
    def registered(self) -> bool:
        return self.phase is N5cwPhase.REGISTERED

    @property
    def ue(self):
        return self.device


def run_registration_n5cw(topology: Topology, device: Optional[DeviceConfig] = None, *,
                          sim: Optional[Simulation] = None) -> tuple:
    """Register an N5CW device. Returns ``(trace, state)``.

    Home-routed topologies are rejected before anything is sent.
    """
    device = device or DeviceConfig()
    check_access(topology, AccessType.TRUSTED_TWIF)
    sim = sim or Simulation(topology)
    core = core_of(sim)
    d = require_node(topology, device.node, NodeRole.UE)
    twap = require(topology, NodeRole.TWAP)
    twif = require(topology, NodeRole.TWIF)
    ausf = home_function(topology, NodeRole.AUSF)
    amf = select_amf(sim, twif, device.serving_plmn)
    serving = topology.node(amf).plmn
    core.provision(device)

    ident = Identity.from_supi(device.supi, AccessType.TRUSTED_TWIF, topology.effective_home_plmn)
    st = N5cwRegistrationState(N5cwPhase.INIT, device, twif, twap, identity=ident,
                               selected_amf=amf, connection_kind=device.connection_kind)
    rec = sim.begin(Procedure.N5CW_REGISTRATION)

    def send(step, kind, src, dst, label="", **kw):
        return rec.send(kind, src, dst, step=step, label=label, **kw)

    rec.internal("NETWORK_SELECTION", d, step=1)
    send(2, K.LINK_LAYER_ASSOC, d, twap, "ASSOCIATION")
    st = st.advance(N5cwPhase.ASSOCIATED)
    send(3, K.EAP_IDENTITY_REQ, twap, d, "EAP_ID_REQ")
    send(3, K.EAP_IDENTITY_RESP, d, twap, "EAP_ID_RESP(NAI)", payload={"nai": ident.nai})
    send(4, K.EAP_IDENTITY_RESP, twap, twif, "AAA(NAI)", payload={"nai": ident.nai})
    st = st.advance(N5cwPhase.IDENTIFIED)
    # default registration parameters, shared by all N5CW devices
    rec.internal("TWIF_BUILDS_REG_REQ", twif, step=5)
    rec.internal("AMF_SELECTION", twif, step=6)
    send(7, K.NGAP_INITIAL_UE_MESSAGE, twif, amf, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ],
         payload={"suci": ident.suci, "on_behalf_of": d})
    send(8, K.AAA_KEY_REQ, amf, ausf, "AUTH_REQ", payload={"suci": ident.suci})
    st = st.advance(N5cwPhase.AUTHENTICATING)

    challenge = sim.nonce(16)
    auth = authenticate(core, device.supi, device.secret, challenge)
    # one EAP-5G challenge/response round trip; NAS stays between TWIF and AMF
    send(9, K.NAS_AUTH_REQ, amf, twif, "EAP_CHALLENGE", payload={"rand": challenge.hex()})
    send(9, K.EAP_5G_NAS, twif, twap, "EAP_CHALLENGE")
    send(9, K.EAP_5G_NAS, twap, d, "EAP_CHALLENGE")
    send(9, K.EAP_5G_NAS, d, twap, "EAP_RESPONSE", payload={"res": auth.ue_response.hex()})
    send(9, K.EAP_5G_NAS, twap, twif, "EAP_RESPONSE")
    send(9, K.NAS_AUTH_RESP, twif, amf, "EAP_RESPONSE", payload={"res": auth.ue_response.hex()})
    send(9, K.AAA_KEY_REQ, amf, ausf, "AUTH_CONFIRM")
    if not auth.success:
        rec.internal("AUTH_FAILURE", ausf, amf, step=9)
        return rec.finish(Outcome.FAILED), st.advance(N5cwPhase.FAILED)
    send(10, K.AAA_KEY_RESP, ausf, amf, "SEAF_KEY")

    net = derive_chain(KeyHierarchy(anchor_key=auth.anchor_key), AccessType.TRUSTED_TWIF, serving)
    rec.internal("AN_KEY_DERIVATION", amf, step=11)
    st = st.advance(N5cwPhase.SMC)
    send(12, K.NAS_SMC_CMD, amf, twif, "SMC(null algorithms)", payload={"algorithms": "NULL"})
    send(13, K.NAS_SMC_COMPLETE, twif, amf, "SMC_COMPLETE")
    send(14, K.NGAP_INITIAL_CTX_SETUP_REQ, amf, twif, "ICS_REQ(AN key)",
         payload={"an_key": key_handle(net.gateway_key)})
    st = st.advance(N5cwPhase.AN_KEYED, network_keys=net)
    send(15, K.AAA_KEY_RESP, twif, twap, "PMK", payload={"pmk": key_handle(net.pmk)})
    twap_pmk = net.pmk
    send(16, K.EAP_5G_SUCCESS, twap, d, "EAP_SUCCESS")

    dev = derive_chain(KeyHierarchy(long_term_key=device.secret,
                                    anchor_key=derive(device.secret, KeyLabel.ANCHOR, challenge)),
                       AccessType.TRUSTED_TWIF, serving)
    rec.internal("DEVICE_DERIVES_PMK", d, step=17)
    # 4-way handshake folded into two nonce events
    anonce, snonce = sim.nonce(16), sim.nonce(16)
    send(18, K.LINK_LAYER_ASSOC, twap, d, "4WAY_HANDSHAKE(anonce)", payload={"anonce": anonce.hex()})
    send(18, K.LINK_LAYER_ASSOC, d, twap, "4WAY_HANDSHAKE(snonce)", payload={"snonce": snonce.hex()})
    dev = complete_handshake(dev, anonce, snonce)
    twap_wlan = derive(twap_pmk, KeyLabel.WLAN, anonce + snonce)
    net = replace(net, wlan_keys=twap_wlan)
    if dev.wlan_keys != twap_wlan:
        return rec.finish(Outcome.FAILED), st.advance(N5cwPhase.FAILED)
    st = st.advance(N5cwPhase.LINK_SECURED, keys=dev, network_keys=net, twap_wlan_keys=twap_wlan)

    conn = core.next_connection()
    rec.internal(f"{device.connection_kind.value}_CONNECTION {conn}", twap, twif, step=19)
    send(20, K.NGAP_INITIAL_CTX_SETUP_RESP, twif, amf, "ICS_RESP")
    send(21, K.NGAP_DOWNLINK_NAS, amf, twif, "REG_ACCEPT", inner=[K.NAS_REGISTRATION_ACCEPT])
    st = st.advance(N5cwPhase.REGISTERED, connection_id=conn)
    return rec.finish(Outcome.SUCCESS), st


# ---------------------------------------------------------------------------
# PDU session and binding

@dataclass(frozen=True)
class Binding:
    device: str
    connection_id: int
    session_id: int
    gtpu_teid: int


class BindingTable:
    """(device, L2/L3 connection) -> N3 tunnel, owned by the TWIF."""

    def __init__(self):
        self._entries = {}

    def bind(self, device: str, connection_id: int, ctx: PduSessionContext) -> Binding:
        key = (device, connection_id)
        if key in self._entries:
            raise PreconditionError(f"connection {key} is already bound")
        if ctx.state is not PduSessionState.ESTABLISHED:
            raise PreconditionError("only an established session can be bound")
        b = Binding(device, connection_id, ctx.session_id, ctx.gtpu_teid)
        self._entries[key] = b
        return b

    def lookup(self, device: str, connection_id: int) -> Binding:
        try:
            return self._entries[(device, connection_id)]
        except KeyError:
            raise NoTunnelError(f"no binding for {device}/{connection_id}") from None

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    def __len__(self):
        return len(self._entries)


def run_pdu_establishment_n5cw(topology: Topology, reg: N5cwRegistrationState, *,
                               sim: Optional[Simulation] = None,
                               bindings: Optional[BindingTable] = None) -> tuple:
    """Set up a PDU session the TWIF requests for a registered device.

    Returns ``(trace, context, binding)``; the binding is also stored in
    ``bindings`` when one is given.
    """
    if reg is None or reg.phase is not N5cwPhase.REGISTERED:
        got = "none" if reg is None else reg.phase.name
        raise PreconditionError(f"N5CW PDU session needs REGISTERED, got {got}")
    if reg.connection_id is None:
        raise PreconditionError("no L2/L3 connection recorded for the device")
    sim = sim or Simulation(topology)
    bindings = bindings if bindings is not None else BindingTable()
    core = core_of(sim)
    d, twif, twap, amf = reg.device.node, reg.gateway, reg.twap, reg.selected_amf
    smf, upf = session_functions(topology, amf)
    profile = dict(reg.device.pdu_profile or DEFAULT_PDU_PROFILE)
    rec = sim.begin(Procedure.N5CW_PDU_SESSION_EST)

    def send(step, kind, src, dst, label="", **kw):
        return rec.send(kind, src, dst, step=step, label=label, **kw)

    sid = core.next_session()
    send(1, K.IP_CONFIG_REQ, d, twif, "IP_CONFIG_REQ")
    rec.internal("TWIF_BUILDS_PDU_REQ", twif, step=2)
    send(3, K.NGAP_UPLINK_NAS, twif, amf, "PDU_SESSION_REQ", inner=[K.NAS_PDU_SESSION_EST_REQ],
         payload={"session": sid, **profile})
    teid = core.next_teid()
    send(4, K.PFCP_SESSION_EST_REQ, smf, upf, "N4_SESSION")
    send(4, K.PFCP_SESSION_EST_RESP, upf, smf, "N4_SESSION", payload={"ul_teid": teid})
    send(4, K.NGAP_PDU_RESOURCE_SETUP_REQ, amf, twif, "PDU_RESOURCE_SETUP",
         inner=[K.NAS_PDU_SESSION_EST_ACCEPT], payload={"ul_teid": teid})
    label = "WLAN_RESERVATION" if reg.device.wlan_reservation else "WLAN_RESERVATION(skipped)"
    rec.internal(label, twif, twap, step=5)
    ip = core.next_ue_ip()
    send(6, K.IP_CONFIG_RESP, twif, d, "IP_CONFIG_RESP", payload={"ip": ip})
    send(7, K.NGAP_PDU_RESOURCE_SETUP_RESP, twif, amf, "PDU_RESOURCE_SETUP_RESP",
         payload={"dl_teid": teid})
    ctx = PduSessionContext(sid, PduSessionState.ESTABLISHED, (profile.get("qos", 9),), (),
                            gtpu_teid=teid, inner_ip_ue=ip, inner_ip_upf=core.upf_ip,
                            access=AccessType.TRUSTED_TWIF)
    binding = bindings.bind(d, reg.connection_id, ctx)
    rec.internal(f"BIND {reg.connection_kind.value}:{reg.connection_id}->TEID {teid}", twif, step=8)
    rec.internal("UP_FORWARDING", d, upf, step=9)
    return rec.finish(Outcome.SUCCESS), ctx, binding


def forward_device_packet(pdu_bytes: int, device: str, connection_id: int,
                          bindings: BindingTable, sessions) -> EncapsulatedPacket:
    """Carry a device packet from the LAN onto its bound N3 tunnel.

    ``sessions`` maps session id to :class:`PduSessionContext`.
    """
    lan = encap_lan(pdu_bytes, connection_id)
    b = bindings.lookup(device, connection_id)
    return encap_n3(lan.inner_pdu_bytes, sessions[b.session_id], token=lan.token)


__all__ = ["ConnectionKind", "N5cwPhase", "DeviceConfig", "N5cwRegistrationState",
           "DEFAULT_PDU_PROFILE", "Binding", "BindingTable", "run_registration_n5cw",
           "run_pdu_establishment_n5cw", "forward_device_packet"]
