"""Untrusted access through an N3IWF: registration over IKEv2/EAP-5G and
UE-requested PDU session establishment.

The registration emits the twenty measured signaling messages in their
measured order; N3IWF forwarding is serialized (each relayed message leaves
only after the previous one has arrived).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Callable, Optional

from ..core import AccessType, Identity, NodeRole, PduSessionContext, PduSessionState, Topology
from ..errors import PreconditionError
from ..kdf import KeyHierarchy, KeyLabel, derive, derive_chain
from ..messages import MessageKind as K, Procedure
from ..sim import Simulation
from ..trace import Outcome, ProcedureTrace
from .base import (CoreContext, UeConfig, authenticate, check_access, core_of, home_function, key_handle,
                   require, require_node, select_amf, session_functions)


class Phase(IntEnum):
    INIT = 0
    IKE_INIT_DONE = 1
    EAP5G_STARTED = 2
    NAS_EXCHANGE = 3
    AUTHENTICATING = 4
    SMC = 5
    CONTEXT_SETUP = 6
    IPSEC_SA_UP = 7
    REGISTERED = 8
    FAILED = 9


@dataclass(frozen=True)
class RegistrationState:
    phase: Phase
    ue: UeConfig
    gateway: str
    access: AccessType = AccessType.UNTRUSTED
    identity: Optional[Identity] = None
    keys: KeyHierarchy = field(default_factory=KeyHierarchy)          # UE side
    network_keys: KeyHierarchy = field(default_factory=KeyHierarchy)  # AMF / N3IWF side
    selected_amf: Optional[str] = None
    signaling_sa: Optional[int] = None
    inner_ip_ue: Optional[str] = None
    history: tuple = ()

    def __post_init__(self):
        if self.phase is not Phase.FAILED:
            has_gw = self.keys.gateway_key is not None
            if has_gw != (self.phase >= Phase.CONTEXT_SETUP):
                raise ValueError(f"gateway key presence inconsistent with {self.phase.name}")
            if (self.signaling_sa is not None) != (self.phase >= Phase.IPSEC_SA_UP):
                raise ValueError(f"signaling SA presence inconsistent with {self.phase.name}")

    def advance(self, phase: Phase, **changes) -> "RegistrationState":
        if self.phase is Phase.FAILED:
            raise PreconditionError("registration already failed")
        if phase is not Phase.FAILED and phase < self.phase:
            raise ValueError(f"phase cannot go back from {self.phase.name} to {phase.name}")
        return replace(self, phase=phase, history=self.history + (self.phase,), **changes)

    @property
    def registered(self) -> bool:
        return self.phase is Phase.REGISTERED


def _ikeauth(n: int) -> str:
    return f"IKE_Auth ({n})"


def run_registration(topology: Topology, ue: Optional[UeConfig] = None, *,
                     sim: Optional[Simulation] = None) -> tuple:
    """Register ``ue`` over untrusted access.

    Returns ``(trace, state)``. A credential mismatch ends the run in
    phase FAILED right after the authentication response reaches the AMF.
    """
    ue = ue or UeConfig()
    check_access(topology, AccessType.UNTRUSTED)
    sim = sim or Simulation(topology)
    core = core_of(sim)
    u = require_node(topology, ue.node, NodeRole.UE)
    require(topology, NodeRole.AP)
    n3iwf = require(topology, NodeRole.N3IWF)
    ausf = home_function(topology, NodeRole.AUSF)
    udm = home_function(topology, NodeRole.UDM)
    amf = select_amf(sim, n3iwf, ue.serving_plmn)
    serving = topology.node(amf).plmn.encode()
    core.provision(ue)

    ident = Identity.from_supi(ue.supi, AccessType.UNTRUSTED, topology.effective_home_plmn)
    st = RegistrationState(Phase.INIT, ue, n3iwf, identity=ident, selected_amf=amf)
    rec = sim.begin(Procedure.IPSEC_SA_SIGNALING)
    send = rec.send

    send(K.IKE_SA_INIT_REQ, u, n3iwf, row=1, label="IKE_SA_INIT (0)")
    send(K.IKE_SA_INIT_RESP, n3iwf, u, row=2, label="IKE_SA_INIT (0)")
    st = st.advance(Phase.IKE_INIT_DONE)

    # from here on everything rides the IKE SA
    send(K.IKE_AUTH_REQ, u, n3iwf, row=3, label=_ikeauth(1), protected=True,
         payload={"idi": ident.nai})
    send(K.IKE_AUTH_RESP, n3iwf, u, row=4, label=_ikeauth(1), protected=True,
         inner=[K.EAP_5G_START])
    st = st.advance(Phase.EAP5G_STARTED)

    send(K.IKE_AUTH_REQ, u, n3iwf, row=5, label=_ikeauth(2), protected=True,
         inner=[K.EAP_5G_NAS, K.NAS_REGISTRATION_REQ], payload={"suci": ident.suci})
    send(K.NGAP_INITIAL_UE_MESSAGE, n3iwf, amf, row=6, label="InitialUEMessage", protected=True,
         inner=[K.NAS_REGISTRATION_REQ], payload={"suci": ident.suci})
    st = st.advance(Phase.NAS_EXCHANGE)

    rec.internal("authenticate request", amf, ausf)
    rec.internal("auth vector fetch", ausf, udm)
    rec.internal("auth vector", udm, ausf)
    challenge = sim.nonce(16)
    rec.internal("authentication challenge", ausf, amf)
    send(K.NAS_AUTH_REQ, amf, n3iwf, row=7, label="Authentication Request", protected=True,
         payload={"rand": challenge.hex()})
    send(K.IKE_AUTH_RESP, n3iwf, u, row=8, label=_ikeauth(2), protected=True,
         inner=[K.EAP_5G_NAS, K.NAS_AUTH_REQ])
    st = st.advance(Phase.AUTHENTICATING)

    auth = authenticate(core, ue.supi, ue.secret, challenge)
    send(K.IKE_AUTH_REQ, u, n3iwf, row=9, label=_ikeauth(3), protected=True,
         inner=[K.EAP_5G_NAS, K.NAS_AUTH_RESP], payload={"res": auth.ue_response.hex()})
    send(K.NAS_AUTH_RESP, n3iwf, amf, row=10, label="Authentication Response", protected=True,
         payload={"res": auth.ue_response.hex()})
    rec.internal("authentication confirm", amf, ausf)
    if not auth.success:
        return rec.finish(Outcome.FAILED), st.advance(Phase.FAILED)
    rec.internal("EAP success + SEAF key", ausf, amf)

    ue_keys = KeyHierarchy(long_term_key=ue.secret,
                           anchor_key=derive(ue.secret, KeyLabel.ANCHOR, challenge))
    net_keys = derive_chain(KeyHierarchy(anchor_key=auth.anchor_key), AccessType.UNTRUSTED,
                            serving.decode())
    st = st.advance(Phase.SMC, network_keys=KeyHierarchy(anchor_key=net_keys.anchor_key,
                                                         seaf_key=net_keys.seaf_key,
                                                         nas_keys=net_keys.nas_keys))
    send(K.NAS_SMC_CMD, amf, n3iwf, row=11, label="Security Mode Command", protected=True)
    send(K.IKE_AUTH_RESP, n3iwf, u, row=12, label=_ikeauth(3), protected=True,
         inner=[K.EAP_5G_NAS, K.NAS_SMC_CMD])
    # the UE derives its whole chain once it accepts the SMC
    ue_keys = derive_chain(ue_keys, AccessType.UNTRUSTED, serving.decode())
    send(K.IKE_AUTH_REQ, u, n3iwf, row=13, label=_ikeauth(4), protected=True,
         inner=[K.EAP_5G_NAS, K.NAS_SMC_COMPLETE])
    send(K.NGAP_UPLINK_NAS, n3iwf, amf, row=14, label="UplinkNASTransport", protected=True,
         inner=[K.NAS_SMC_COMPLETE])

    send(K.NGAP_INITIAL_CTX_SETUP_REQ, amf, n3iwf, row=15, label="InitialContextSetupRequest",
         protected=True, payload={"n3iwf_key": key_handle(net_keys.gateway_key)})
    st = st.advance(Phase.CONTEXT_SETUP, keys=ue_keys, network_keys=net_keys)
    send(K.IKE_AUTH_RESP, n3iwf, u, row=16, label=_ikeauth(4), protected=True,
         inner=[K.EAP_5G_SUCCESS])

    # AUTH payloads computed from the shared N3IWF key
    send(K.IKE_AUTH_REQ, u, n3iwf, row=17, label=_ikeauth(5), protected=True,
         payload={"auth": key_handle(ue_keys.gateway_key)})
    if ue_keys.gateway_key != net_keys.gateway_key:
        return rec.finish(Outcome.FAILED), st.advance(Phase.FAILED)
    sa = core.next_sa()
    ip = core.next_ue_ip()
    send(K.IKE_AUTH_RESP, n3iwf, u, row=18, label=_ikeauth(5), protected=True,
         payload={"auth": key_handle(net_keys.gateway_key), "signaling_sa": sa, "inner_ip": ip})
    st = st.advance(Phase.IPSEC_SA_UP, signaling_sa=sa, inner_ip_ue=ip)

    send(K.NGAP_INITIAL_CTX_SETUP_RESP, n3iwf, amf, row=19, label="InitialContextSetupResponse",
         protected=True)
    send(K.NGAP_DOWNLINK_NAS, amf, n3iwf, row=20, label="DownlinkNASTransport", protected=True,
         inner=[K.NAS_REGISTRATION_ACCEPT])
    st = st.advance(Phase.REGISTERED)
    return rec.finish(Outcome.SUCCESS), st


# ---------------------------------------------------------------------------
# PDU session establishment

def one_sa_per_profile(qos_profiles) -> list:
    """Default gateway policy: one child SA per distinct QoS profile."""
    out = []
    for p in qos_profiles:
        if [p] not in out:
            out.append([p])
    return out


def single_sa(qos_profiles) -> list:
    """All profiles share one child SA."""
    return [list(dict.fromkeys(qos_profiles))]


def establish_session(sim: Simulation, state, qos_profiles, *, procedure: Procedure,
                      access: AccessType, child_sa_policy: Callable = one_sa_per_profile,
                      null_encryption: bool = False, extra_qos_info: bool = False) -> tuple:
    """The gateway-mediated PDU session exchange shared by N3IWF and TNGF."""
    topology = sim.topology
    qos_profiles = list(qos_profiles)
    if not qos_profiles:
        raise PreconditionError("at least one QoS profile is required")
    core = core_of(sim)
    u, gw, amf = state.ue.node, state.gateway, state.selected_amf
    smf, upf = session_functions(topology, amf)
    groups = child_sa_policy(qos_profiles)
    if not groups or len(groups) > len(set(qos_profiles)):
        raise PreconditionError(f"child SA policy returned {len(groups)} SAs "
                                f"for {len(set(qos_profiles))} profiles")

    sid = core.next_session()
    rec = sim.begin(procedure)
    send = rec.send
    rec.internal("PDU session establishment request (signaling SA)", u, amf, step="1")
    rec.internal("create SM context", amf, smf, step="2")
    teid_ul = core.next_teid()
    send(K.PFCP_SESSION_EST_REQ, smf, upf, row=1, step="3", label="PFCPSessionEstablishmentReq",
         payload={"session": sid})
    send(K.PFCP_SESSION_EST_RESP, upf, smf, row=2, step="3", label="PFCPSessionEstablishmentResp",
         payload={"ul_teid": teid_ul})
    rec.internal("N1N2 message transfer", smf, amf, step="3")
    send(K.NGAP_PDU_RESOURCE_SETUP_REQ, amf, gw, row=3, step="3", label="PDUResourceSetupReq",
         inner=[K.NAS_PDU_SESSION_EST_ACCEPT],
         payload={"session": sid, "qos": tuple(qos_profiles), "ul_teid": teid_ul})
    send(K.GTPU_ECHO_REQ, gw, upf, row=4, step="3", label="Echo Request")
    send(K.GTPU_ECHO_RESP, upf, gw, row=5, step="3", label="Echo Response")

    gre_key = core.next_gre_key()
    sas, mapping = [], []
    for group in groups:
        sa = core.next_sa()
        payload = {"child_sa": sa, "qfi": tuple(group), "gre_key": gre_key}
        if extra_qos_info:
            payload["additional_qos"] = tuple(group)
        if null_encryption:
            payload["encr"] = "NULL"
        send(K.CREATE_CHILD_SA_REQ, gw, u, row=6, step="4", label="Create_Child_SA Req",
             protected=True, payload=payload)
        send(K.CREATE_CHILD_SA_RESP, u, gw, row=7, step="4", label="Create_Child_SA Res",
             protected=True, payload={"child_sa": sa})
        sas.append(sa)
        mapping += [(p, sa) for p in group]
    rec.internal("PDU session establishment accept (signaling SA)", gw, u, step="6")
    send(K.NGAP_PDU_RESOURCE_SETUP_RESP, gw, amf, row=8, step="7", label="PDUResourceSetupRes",
         payload={"session": sid, "dl_teid": teid_ul})
    rec.internal("update SM context", amf, smf, step="8")

    ctx = PduSessionContext(sid, PduSessionState.ESTABLISHED, tuple(qos_profiles), tuple(sas),
                            gtpu_teid=teid_ul, gre_key=gre_key,
                            inner_ip_ue=state.inner_ip_ue or core.next_ue_ip(),
                            inner_ip_upf=core.upf_ip, access=access,
                            null_encryption=null_encryption, sa_for_profile=tuple(mapping))
    return rec.finish(Outcome.SUCCESS), ctx


def run_pdu_establishment(topology: Topology, reg: RegistrationState, qos_profiles=(1,), *,
                          sim: Optional[Simulation] = None,
                          child_sa_policy: Callable = one_sa_per_profile) -> tuple:
    """Establish a PDU session for a registered UE. Returns ``(trace, context)``."""
    if reg is None or reg.phase is not Phase.REGISTERED:
        got = "none" if reg is None else reg.phase.name
        raise PreconditionError(f"PDU session establishment needs REGISTERED, got {got}")
    sim = sim or Simulation(topology)
    return establish_session(sim, reg, qos_profiles, procedure=Procedure.PDU_SESSION_EST,
                             access=AccessType.UNTRUSTED, child_sa_policy=child_sa_policy)


__all__ = ["Phase", "RegistrationState", "run_registration", "run_pdu_establishment",
           "one_sa_per_profile", "single_sa", "establish_session", "CoreContext"]
