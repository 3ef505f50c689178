"""Wireline access through a W-AGF for 5G residential gateways (5G-RG, NAS
capable, EAP-5G over W-CP) and fixed-network gateways (FN-RG, no NAS: the
W-AGF registers on their behalf)."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Optional

from ..core import (AccessType, Identity, NodeRole, PduSessionContext, PduSessionState,
                    Topology, conceal_identity, deconceal_identity)
from ..errors import ConfigurationError, InvalidIdentityError, PreconditionError
from ..kdf import KeyHierarchy, KeyLabel, derive, derive_chain
from ..messages import MessageKind as K, Procedure
from ..sim import Simulation
from ..trace import Outcome
from .base import (UeConfig, authenticate, check_access, core_of, home_function, key_handle,
                   require, require_node, select_amf, session_functions)

TRIGGER_ON_REGISTRATION = "on-registration-complete"
TRIGGER_ON_TRAFFIC = "on-first-traffic"
PDU_TRIGGERS = (TRIGGER_ON_REGISTRATION, TRIGGER_ON_TRAFFIC)


class RgPhase(IntEnum):
    INIT = 0
    CONNECTED = 1
    NAS_EXCHANGE = 2
    AUTHENTICATING = 3
    SMC = 4
    CONTEXT_SETUP = 5
    REGISTERED = 6
    FAILED = 7


@dataclass(frozen=True)
class RgConfig(UeConfig):
    """A residential gateway. For an FN-RG ``secret`` is the line credential
    the W-AGF presents on its behalf."""
    node: str = "rg"
    supi: str = "imsi-208930000000201"
    rg_type: NodeRole = NodeRole.RG_5G
    identity_rerequest: bool = False      # conditional identity step
    wcp_signaling: bool = False           # conditional W-CP connection step
    pdu_trigger: Optional[str] = TRIGGER_ON_REGISTRATION

    @property
    def access(self) -> AccessType:
        return AccessType.WIRELINE_5GRG if self.rg_type is NodeRole.RG_5G else AccessType.WIRELINE_FNRG

    @property
    def nas_capable(self) -> bool:
        return self.rg_type is NodeRole.RG_5G


@dataclass(frozen=True)
class ResidentialGateway:
    rg_type: NodeRole
    nas_capable: bool
    identity: Identity
    wcp_connection: Optional[int] = None
    link_connection: Optional[int] = None


@dataclass(frozen=True)
class RgRegistrationState:
    phase: RgPhase
    rg: RgConfig
    gateway: str
    access: AccessType
    identity: Optional[Identity] = None
    keys: KeyHierarchy = field(default_factory=KeyHierarchy)           # RG side (W-AGF for FN-RG)
    network_keys: KeyHierarchy = field(default_factory=KeyHierarchy)   # AMF side
    wagf_key: Optional[bytes] = None                                   # delivered to the W-AGF
    selected_amf: Optional[str] = None
    gateway_record: Optional[ResidentialGateway] = None
    history: tuple = ()

    def advance(self, phase: RgPhase, **changes) -> "RgRegistrationState":
        if self.phase is RgPhase.FAILED:
            raise PreconditionError("registration already failed")
        if phase is not RgPhase.FAILED and phase < self.phase:
            raise ValueError(f"phase cannot go back from {self.phase.name} to {phase.name}")
        return replace(self, phase=phase, history=self.history + (self.phase,), **changes)

    @property
    def registered(self) -> bool:
        return self.phase is RgPhase.REGISTERED

    @property
    def ue(self):
        return self.rg


def _setup(topology, rg, role, sim):
    check_access(topology, rg.access)
    sim = sim or Simulation(topology)
    node = require_node(topology, rg.node, role)
    wagf = require(topology, NodeRole.W_AGF)
    ausf = home_function(topology, NodeRole.AUSF)
    amf = select_amf(sim, wagf, rg.serving_plmn)
    return sim, node, wagf, ausf, amf


def run_registration_5grg(topology: Topology, rg: Optional[RgConfig] = None, *,
                          sim: Optional[Simulation] = None) -> tuple:
    """Register a 5G-RG. Returns ``(trace, state)``."""
    rg = rg or RgConfig()
    if rg.rg_type is not NodeRole.RG_5G:
        raise ConfigurationError("run_registration_5grg needs rg_type RG_5G")
    sim, r, wagf, ausf, amf = _setup(topology, rg, NodeRole.RG_5G, sim)
    core = core_of(sim)
    core.provision(rg)
    serving = topology.node(amf).plmn
    access = AccessType.WIRELINE_5GRG
    ident = Identity.from_supi(rg.supi, access, topology.effective_home_plmn)
    st = RgRegistrationState(RgPhase.INIT, rg, wagf, access, identity=ident, selected_amf=amf)
    rec = sim.begin(Procedure.RG5G_REGISTRATION)

    def send(step, kind, src, dst, label="", **kw):
        return rec.send(kind, src, dst, step=step, label=label, **kw)

    wcp = core.next_connection()
    send(1, K.LINK_LAYER_ASSOC, r, wagf, "W-CP_CONNECTION", payload={"wcp": wcp})
    st = st.advance(RgPhase.CONNECTED)
    send(2, K.EAP_5G_START, wagf, r, "EAP5G_START")
    send(3, K.EAP_5G_NAS, r, wagf, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ],
         payload={"suci": ident.suci})
    rec.internal("AMF_SELECTION", wagf, step=4)
    send(5, K.NGAP_INITIAL_UE_MESSAGE, wagf, amf, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ])
    st = st.advance(RgPhase.NAS_EXCHANGE)
    send(6, K.NGAP_DOWNLINK_NAS, amf, wagf, "IDENTITY_REQ")
    send(6, K.EAP_5G_NAS, wagf, r, "IDENTITY_REQ")
    send(6, K.EAP_5G_NAS, r, wagf, "IDENTITY_RESP")
    send(6, K.NGAP_UPLINK_NAS, wagf, amf, "IDENTITY_RESP")

    send(7, K.AAA_KEY_REQ, amf, ausf, "AUTH_REQ", payload={"suci": ident.suci})
    st = st.advance(RgPhase.AUTHENTICATING)
    challenge = sim.nonce(16)
    auth = authenticate(core, rg.supi, rg.secret, challenge)
    send(7, K.NAS_AUTH_REQ, amf, wagf, "AUTH_CHALLENGE", payload={"rand": challenge.hex()})
    send(7, K.EAP_5G_NAS, wagf, r, "AUTH_CHALLENGE", inner=[K.NAS_AUTH_REQ])
    send(7, K.EAP_5G_NAS, r, wagf, "AUTH_RESPONSE", inner=[K.NAS_AUTH_RESP],
         payload={"res": auth.ue_response.hex()})
    send(7, K.NAS_AUTH_RESP, wagf, amf, "AUTH_RESPONSE")
    send(7, K.AAA_KEY_REQ, amf, ausf, "AUTH_CONFIRM")
    if not auth.success:
        rec.internal("AUTH_FAILURE", ausf, amf, step=7)
        return rec.finish(Outcome.FAILED), st.advance(RgPhase.FAILED)
    send(7, K.AAA_KEY_RESP, ausf, amf, "SEAF_KEY")

    net = derive_chain(KeyHierarchy(anchor_key=auth.anchor_key), access, serving)
    st = st.advance(RgPhase.SMC)
    # SMC command, SMC complete, then the context set-up trigger
    send(8, K.NAS_SMC_CMD, amf, wagf, "SMC")
    send(8, K.EAP_5G_NAS, wagf, r, "SMC", inner=[K.NAS_SMC_CMD])
    ue_keys = derive_chain(KeyHierarchy(long_term_key=rg.secret,
                                        anchor_key=derive(rg.secret, KeyLabel.ANCHOR, challenge)),
                           access, serving)
    send(8, K.EAP_5G_NAS, r, wagf, "SMC_COMPLETE", inner=[K.NAS_SMC_COMPLETE])
    send(8, K.NGAP_UPLINK_NAS, wagf, amf, "SMC_COMPLETE", inner=[K.NAS_SMC_COMPLETE])
    rec.internal("ICS_TRIGGER", amf, step=8)
    if rg.identity_rerequest:
        send(9, K.NGAP_DOWNLINK_NAS, amf, wagf, "IDENTITY_REQ")
        send(9, K.EAP_5G_NAS, wagf, r, "IDENTITY_REQ")
        send(9, K.EAP_5G_NAS, r, wagf, "IDENTITY_RESP")
        send(9, K.NGAP_UPLINK_NAS, wagf, amf, "IDENTITY_RESP")
    send(10, K.NGAP_INITIAL_CTX_SETUP_REQ, amf, wagf, "ICS_REQ(W-AGF key)",
         payload={"wagf_key": key_handle(net.gateway_key)})
    st = st.advance(RgPhase.CONTEXT_SETUP, keys=ue_keys, network_keys=net,
                    wagf_key=net.gateway_key)
    send(11, K.EAP_5G_SUCCESS, wagf, r, "EAP_SUCCESS")
    if rg.wcp_signaling:
        send(12, K.LINK_LAYER_ASSOC, wagf, r, "W-CP_SIGNALING")
        send(12, K.LINK_LAYER_ASSOC, r, wagf, "W-CP_SIGNALING")
    send(13, K.NGAP_INITIAL_CTX_SETUP_RESP, wagf, amf, "ICS_RESP")
    send(14, K.NGAP_DOWNLINK_NAS, amf, wagf, "REG_ACCEPT", inner=[K.NAS_REGISTRATION_ACCEPT])
    send(15, K.NAS_REGISTRATION_ACCEPT, wagf, r, "REG_ACCEPT")
    send(16, K.NAS_REGISTRATION_COMPLETE, r, wagf, "REG_COMPLETE")
    send(17, K.NGAP_UPLINK_NAS, wagf, amf, "REG_COMPLETE", inner=[K.NAS_REGISTRATION_COMPLETE])
    if ue_keys.gateway_key != net.gateway_key:
        return rec.finish(Outcome.FAILED), st.advance(RgPhase.FAILED)
    st = st.advance(RgPhase.REGISTERED,
                    gateway_record=ResidentialGateway(NodeRole.RG_5G, True, ident, wcp_connection=wcp))
    return rec.finish(Outcome.SUCCESS), st


def run_registration_fnrg(topology: Topology, rg: Optional[RgConfig] = None, *,
                          sim: Optional[Simulation] = None) -> tuple:
    """Register an FN-RG; the W-AGF authors its NAS. Returns ``(trace, state)``.

    The UDM resolves the W-AGF-built SUCI and caches the mapping, so a repeat
    registration of the same line takes the same steps.
    """
    rg = rg or RgConfig(rg_type=NodeRole.RG_FN, node="fnrg", supi="imsi-208930000000301")
    if rg.rg_type is not NodeRole.RG_FN:
        raise ConfigurationError("run_registration_fnrg needs rg_type RG_FN")
    sim, r, wagf, ausf, amf = _setup(topology, rg, NodeRole.RG_FN, sim)
    udm = home_function(topology, NodeRole.UDM)
    core = core_of(sim)
    core.provision(rg)
    serving = topology.node(amf).plmn
    access = AccessType.WIRELINE_FNRG
    ident = Identity.from_supi(rg.supi, access, topology.effective_home_plmn)
    st = RgRegistrationState(RgPhase.INIT, rg, wagf, access, identity=ident, selected_amf=amf)
    rec = sim.begin(Procedure.FNRG_REGISTRATION)

    def send(step, kind, src, dst, label="", **kw):
        return rec.send(kind, src, dst, step=step, label=label, **kw)

    link = core.next_connection()
    send(1, K.LINK_LAYER_ASSOC, r, wagf, "DATA_LINK_CONNECTION", payload={"line": link})
    st = st.advance(RgPhase.CONNECTED)
    suci = conceal_identity(rg.supi, access)
    rec.internal("AMF_SELECTION+SUCI", wagf, step=2)
    send(3, K.NGAP_INITIAL_UE_MESSAGE, wagf, amf, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ],
         payload={"suci": suci})
    st = st.advance(RgPhase.NAS_EXCHANGE)

    send(4, K.AAA_KEY_REQ, amf, ausf, "AUTH_REQ", payload={"suci": suci})
    st = st.advance(RgPhase.AUTHENTICATING)
    supi = core.suci_to_supi.get(suci)
    rec.internal("SUCI_TO_SUPI" if supi is None else "SUCI_TO_SUPI(cached)", ausf, udm, step=4)
    if supi is None:
        try:
            candidate = deconceal_identity(suci)
        except InvalidIdentityError:
            candidate = None
        if candidate is not None and core.subscription_secret(candidate) is not None:
            supi = core.suci_to_supi[suci] = candidate
    if supi is None:
        rec.internal("UDM_MAPPING_FAILURE", udm, amf, step=4)
        return rec.finish(Outcome.FAILED), st.advance(RgPhase.FAILED)
    challenge = sim.nonce(16)
    auth = authenticate(core, supi, rg.secret, challenge)
    send(4, K.NAS_AUTH_REQ, amf, wagf, "AUTH_CHALLENGE", payload={"rand": challenge.hex()})
    send(4, K.NAS_AUTH_RESP, wagf, amf, "AUTH_RESPONSE", payload={"res": auth.ue_response.hex()})
    send(4, K.AAA_KEY_REQ, amf, ausf, "AUTH_CONFIRM")
    if not auth.success:
        rec.internal("AUTH_FAILURE", ausf, amf, step=4)
        return rec.finish(Outcome.FAILED), st.advance(RgPhase.FAILED)
    send(4, K.AAA_KEY_RESP, ausf, amf, "SEAF_KEY")

    net = derive_chain(KeyHierarchy(anchor_key=auth.anchor_key), access, serving)
    # the W-AGF holds the line credential and derives for the FN-RG
    line_keys = derive_chain(KeyHierarchy(long_term_key=rg.secret,
                                          anchor_key=derive(rg.secret, KeyLabel.ANCHOR, challenge)),
                             access, serving)
    st = st.advance(RgPhase.SMC)
    send(5, K.NAS_SMC_CMD, amf, wagf, "SMC")
    send(6, K.NAS_SMC_COMPLETE, wagf, amf, "SMC_COMPLETE")
    send(7, K.NGAP_INITIAL_CTX_SETUP_REQ, amf, wagf, "ICS_REQ(W-AGF key)",
         payload={"wagf_key": key_handle(net.gateway_key)})
    st = st.advance(RgPhase.CONTEXT_SETUP, keys=line_keys, network_keys=net,
                    wagf_key=net.gateway_key)
    send(8, K.NGAP_INITIAL_CTX_SETUP_RESP, wagf, amf, "ICS_RESP")
    send(9, K.NGAP_DOWNLINK_NAS, amf, wagf, "REG_ACCEPT", inner=[K.NAS_REGISTRATION_ACCEPT])
    send(10, K.NGAP_UPLINK_NAS, wagf, amf, "REG_COMPLETE", inner=[K.NAS_REGISTRATION_COMPLETE])
    if line_keys.gateway_key != net.gateway_key:
        return rec.finish(Outcome.FAILED), st.advance(RgPhase.FAILED)
    st = st.advance(RgPhase.REGISTERED,
                    gateway_record=ResidentialGateway(NodeRole.RG_FN, False, ident, link_connection=link))
    return rec.finish(Outcome.SUCCESS), st


def run_pdu_establishment_wireline(topology: Topology, reg: RgRegistrationState,
                                   rg_type: Optional[NodeRole] = None, *,
                                   sim: Optional[Simulation] = None) -> tuple:
    """PDU session via the W-5GAN. Returns ``(trace, context)``.

    A 5G-RG sends the request itself over W-CP; for an FN-RG the W-AGF
    originates it when the configured trigger fires.
    """
    if reg is None or reg.phase is not RgPhase.REGISTERED:
        got = "none" if reg is None else reg.phase.name
        raise PreconditionError(f"wireline PDU session needs a registered RG, got {got}")
    rg_type = rg_type or reg.rg.rg_type
    if rg_type is not reg.rg.rg_type:
        raise ConfigurationError(f"registration is for {reg.rg.rg_type.value}, not {rg_type.value}")
    if rg_type is NodeRole.RG_FN:
        if reg.rg.pdu_trigger is None:
            raise ConfigurationError("FN-RG PDU trigger policy is not set")
        if reg.rg.pdu_trigger not in PDU_TRIGGERS:
            raise ConfigurationError(f"unknown FN-RG PDU trigger {reg.rg.pdu_trigger!r}")
    sim = sim or Simulation(topology)
    core = core_of(sim)
    r, wagf, amf = reg.rg.node, reg.gateway, reg.selected_amf
    smf, upf = session_functions(topology, amf)
    proc = Procedure.RG5G_PDU_SESSION_EST if rg_type is NodeRole.RG_5G else Procedure.FNRG_PDU_SESSION_EST
    rec = sim.begin(proc)
    sid = core.next_session()

    if rg_type is NodeRole.RG_5G:
        rec.send(K.NAS_PDU_SESSION_EST_REQ, r, wagf, step=1, label="PDU_SESSION_REQ(W-CP)",
                 payload={"session": sid})
    else:
        rec.internal(f"TRIGGER {reg.rg.pdu_trigger}", wagf, step=1)
    rec.send(K.NGAP_UPLINK_NAS, wagf, amf, step=2, label="PDU_SESSION_REQ",
             inner=[K.NAS_PDU_SESSION_EST_REQ], payload={"session": sid})
    teid = core.next_teid()
    rec.send(K.PFCP_SESSION_EST_REQ, smf, upf, step=3, label="N4_SESSION")
    rec.send(K.PFCP_SESSION_EST_RESP, upf, smf, step=3, label="N4_SESSION",
             payload={"ul_teid": teid})
    rec.send(K.NGAP_PDU_RESOURCE_SETUP_REQ, amf, wagf, step=4, label="PDU_RESOURCE_SETUP",
             inner=[K.NAS_PDU_SESSION_EST_ACCEPT], payload={"ul_teid": teid})
    rec.internal("W-UP_RESOURCES", wagf, step=5)
    if rg_type is NodeRole.RG_5G:
        rec.send(K.NAS_PDU_SESSION_EST_ACCEPT, wagf, r, step=6, label="PDU_SESSION_ACCEPT(W-CP)")
    rec.send(K.NGAP_PDU_RESOURCE_SETUP_RESP, wagf, amf, step=7, label="PDU_RESOURCE_SETUP_RESP",
             payload={"dl_teid": teid})
    ctx = PduSessionContext(sid, PduSessionState.ESTABLISHED, (9,), (), gtpu_teid=teid,
                            inner_ip_ue=core.next_ue_ip(), inner_ip_upf=core.upf_ip,
                            access=reg.access)
    return rec.finish(Outcome.SUCCESS), ctx


__all__ = ["RgPhase", "RgConfig", "ResidentialGateway", "RgRegistrationState",
           "run_registration_5grg", "run_registration_fnrg", "run_pdu_establishment_wireline",
           "TRIGGER_ON_REGISTRATION", "TRIGGER_ON_TRAFFIC", "PDU_TRIGGERS"]
