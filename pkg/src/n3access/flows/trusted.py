"""Trusted non-3GPP access through a TNAP/TNGF pair.

Registration runs EAP-5G between UE and TNGF, with the TNAP relaying EAP
over the link layer towards the UE and in AAA format towards the TNGF. On
success the TNAP holds a key for link-layer security and the UE brings up
an NWt IPsec SA with null encryption. PDU sessions reuse the untrusted
exchange with the TNGF in place of the N3IWF.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Callable, Optional

from ..core import AccessType, Identity, NodeRole, Topology
from ..errors import PreconditionError
from ..kdf import KeyHierarchy, KeyLabel, derive, derive_chain
from ..messages import MessageKind as K, Procedure
from ..sim import Simulation
from ..trace import Outcome
from .base import (UeConfig, authenticate, check_access, core_of, home_function, key_handle,
                   require, require_node, select_amf)
from .untrusted import establish_session, one_sa_per_profile


class TrustedPhase(IntEnum):
    INIT = 0
    LINK_ASSOC = 1
    EAP_IDENTITY = 2
    EAP5G_NAS = 3
    AUTHENTICATING = 4
    SMC = 5
    TNAP_SECURED = 6
    IP_CONFIGURED = 7
    NWT_UP = 8
    REGISTERED = 9
    FAILED = 10


@dataclass(frozen=True)
class TrustedUeConfig(UeConfig):
    skip_link_assoc: bool = False     # Ethernet-style access needs no association
    link_assoc_fails: bool = False


@dataclass(frozen=True)
class TrustedRegistrationState:
    phase: TrustedPhase
    ue: UeConfig
    gateway: str
    tnap: str
    access: AccessType = AccessType.TRUSTED_TNGF
    identity: Optional[Identity] = None
    keys: KeyHierarchy = field(default_factory=KeyHierarchy)          # UE side
    network_keys: KeyHierarchy = field(default_factory=KeyHierarchy)  # AMF / TNGF side
    tnap_key: Optional[bytes] = None                                  # held by the TNAP
    selected_amf: Optional[str] = None
    signaling_sa: Optional[int] = None
    inner_ip_ue: Optional[str] = None
    history: tuple = ()

    def __post_init__(self):
        if self.phase is TrustedPhase.FAILED:
            return
        if (self.keys.tnap_key is not None) != (self.phase >= TrustedPhase.TNAP_SECURED):
            raise ValueError(f"TNAP key presence inconsistent with {self.phase.name}")
        if (self.signaling_sa is not None) != (self.phase >= TrustedPhase.NWT_UP):
            raise ValueError(f"NWt SA presence inconsistent with {self.phase.name}")

    def advance(self, phase: TrustedPhase, **changes) -> "TrustedRegistrationState":
        if self.phase is TrustedPhase.FAILED:
            raise PreconditionError("registration already failed")
        if phase is not TrustedPhase.FAILED and phase < self.phase:
            raise ValueError(f"phase cannot go back from {self.phase.name} to {phase.name}")
        return replace(self, phase=phase, history=self.history + (self.phase,), **changes)

    @property
    def registered(self) -> bool:
        return self.phase is TrustedPhase.REGISTERED


def run_registration_trusted(topology: Topology, ue: Optional[UeConfig] = None, *,
                             sim: Optional[Simulation] = None) -> tuple:
    """Register ``ue`` over trusted access. Returns ``(trace, state)``.

    Every record carries the step it realizes; the step map shipped
    as ``fig13.steps`` lists the expected sequence.
    """
    ue = ue or TrustedUeConfig()
    skip_assoc = getattr(ue, "skip_link_assoc", False)
    assoc_fails = getattr(ue, "link_assoc_fails", False)
    check_access(topology, AccessType.TRUSTED_TNGF)
    sim = sim or Simulation(topology)
    core = core_of(sim)
    u = require_node(topology, ue.node, NodeRole.UE)
    tnap = require(topology, NodeRole.TNAP)
    tngf = require(topology, NodeRole.TNGF)
    ausf = home_function(topology, NodeRole.AUSF)
    amf = select_amf(sim, tngf, ue.serving_plmn)
    serving = topology.node(amf).plmn
    core.provision(ue)

    ident = Identity.from_supi(ue.supi, AccessType.TRUSTED_TNGF, topology.effective_home_plmn)
    st = TrustedRegistrationState(TrustedPhase.INIT, ue, tngf, tnap, identity=ident,
                                  selected_amf=amf)
    rec = sim.begin(Procedure.TRUSTED_REGISTRATION)

    def send(step, kind, src, dst, label="", **kw):
        return rec.send(kind, src, dst, step=step, label=label, **kw)

    if not skip_assoc:
        send(1, K.LINK_LAYER_ASSOC, u, tnap, "LINK_ASSOC")
        if assoc_fails:
            return rec.finish(Outcome.FAILED), st.advance(TrustedPhase.FAILED)
        st = st.advance(TrustedPhase.LINK_ASSOC)

    send(2, K.EAP_IDENTITY_REQ, tnap, u, "EAP_ID_REQ")
    send(3, K.EAP_IDENTITY_RESP, u, tnap, "EAP_ID_RESP(NAI)", payload={"nai": ident.nai})
    send(3, K.EAP_IDENTITY_RESP, tnap, tngf, "EAP_ID_RESP(NAI)", payload={"nai": ident.nai})
    st = st.advance(TrustedPhase.EAP_IDENTITY)

    send(4, K.EAP_5G_START, tngf, tnap, "EAP5G_START")
    send(4, K.EAP_5G_START, tnap, u, "EAP5G_START")
    send(5, K.EAP_5G_NAS, u, tnap, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ],
         payload={"suci": ident.suci})
    send(5, K.EAP_5G_NAS, tnap, tngf, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ])
    st = st.advance(TrustedPhase.EAP5G_NAS)
    rec.internal("AMF_SELECTION", tngf, step=6)
    send(7, K.NGAP_INITIAL_UE_MESSAGE, tngf, amf, "REG_REQ", inner=[K.NAS_REGISTRATION_REQ],
         payload={"suci": ident.suci})

    # identity request/response relayed over EAP-5G
    send(8, K.NGAP_DOWNLINK_NAS, amf, tngf, "IDENTITY_REQ")
    send(8, K.EAP_5G_NAS, tngf, tnap, "IDENTITY_REQ")
    send(8, K.EAP_5G_NAS, tnap, u, "IDENTITY_REQ")
    send(9, K.EAP_5G_NAS, u, tnap, "IDENTITY_RESP")
    send(9, K.EAP_5G_NAS, tnap, tngf, "IDENTITY_RESP")
    send(9, K.NGAP_UPLINK_NAS, tngf, amf, "IDENTITY_RESP")

    # authentication through the AUSF
    send(10, K.AAA_KEY_REQ, amf, ausf, "AUTH_REQ", payload={"suci": ident.suci})
    st = st.advance(TrustedPhase.AUTHENTICATING)
    challenge = sim.nonce(16)
    auth = authenticate(core, ue.supi, ue.secret, challenge)
    send(11, K.NAS_AUTH_REQ, amf, tngf, "AUTH_CHALLENGE", payload={"rand": challenge.hex()})
    send(11, K.EAP_5G_NAS, tngf, tnap, "AUTH_CHALLENGE", inner=[K.NAS_AUTH_REQ])
    send(11, K.EAP_5G_NAS, tnap, u, "AUTH_CHALLENGE", inner=[K.NAS_AUTH_REQ])
    send(11, K.EAP_5G_NAS, u, tnap, "AUTH_RESPONSE", inner=[K.NAS_AUTH_RESP],
         payload={"res": auth.ue_response.hex()})
    send(11, K.EAP_5G_NAS, tnap, tngf, "AUTH_RESPONSE", inner=[K.NAS_AUTH_RESP])
    send(11, K.NAS_AUTH_RESP, tngf, amf, "AUTH_RESPONSE", payload={"res": auth.ue_response.hex()})
    send(11, K.AAA_KEY_REQ, amf, ausf, "AUTH_CONFIRM")
    if not auth.success:
        rec.internal("AUTH_FAILURE", ausf, amf, step=12)
        return rec.finish(Outcome.FAILED), st.advance(TrustedPhase.FAILED)
    send(12, K.AAA_KEY_RESP, ausf, amf, "SEAF_KEY")

    net = derive_chain(KeyHierarchy(anchor_key=auth.anchor_key), AccessType.TRUSTED_TNGF, serving)
    ue_keys = KeyHierarchy(long_term_key=ue.secret,
                           anchor_key=derive(ue.secret, KeyLabel.ANCHOR, challenge))
    st = st.advance(TrustedPhase.SMC, network_keys=KeyHierarchy(
        anchor_key=net.anchor_key, seaf_key=net.seaf_key, nas_keys=net.nas_keys))
    send(13, K.NAS_SMC_CMD, amf, tngf, "SMC")
    send(13, K.EAP_5G_NAS, tngf, tnap, "SMC", inner=[K.NAS_SMC_CMD])
    send(13, K.EAP_5G_NAS, tnap, u, "SMC", inner=[K.NAS_SMC_CMD])
    ue_keys = derive_chain(ue_keys, AccessType.TRUSTED_TNGF, serving)
    send(14, K.EAP_5G_NAS, u, tnap, "SMC_COMPLETE", inner=[K.NAS_SMC_COMPLETE])
    send(14, K.EAP_5G_NAS, tnap, tngf, "SMC_COMPLETE", inner=[K.NAS_SMC_COMPLETE])
    send(14, K.NGAP_UPLINK_NAS, tngf, amf, "SMC_COMPLETE", inner=[K.NAS_SMC_COMPLETE])

    rec.internal("TNGF_KEY_DERIVATION", amf, step=15)
    send(15, K.NGAP_INITIAL_CTX_SETUP_REQ, amf, tngf, "ICS_REQ(TNGF key)",
         payload={"tngf_key": key_handle(net.gateway_key)})
    st = replace(st, network_keys=net)

    # TNGF contact information for the later NWt set-up
    send(16, K.EAP_5G_NAS, tngf, tnap, "TNGF_INFO_REQ", payload={"tngf": tngf})
    send(16, K.EAP_5G_NAS, tnap, u, "TNGF_INFO_REQ", payload={"tngf": tngf})
    send(16, K.EAP_5G_NAS, u, tnap, "TNGF_INFO_RESP")
    send(16, K.EAP_5G_NAS, tnap, tngf, "TNGF_INFO_RESP")

    send(17, K.EAP_5G_SUCCESS, tngf, tnap, "EAP_SUCCESS(TNAP key)",
         payload={"tnap_key": key_handle(net.tnap_key)})
    tnap_key = net.tnap_key
    send(18, K.EAP_5G_SUCCESS, tnap, u, "EAP_SUCCESS")
    anonce, snonce = sim.nonce(16), sim.nonce(16)
    send(19, K.LINK_LAYER_ASSOC, tnap, u, "LINK_SECURITY", payload={"anonce": anonce.hex()})
    send(19, K.LINK_LAYER_ASSOC, u, tnap, "LINK_SECURITY",
         payload={"snonce": snonce.hex(), "mic": key_handle(ue_keys.tnap_key + anonce + snonce)})
    if ue_keys.tnap_key != tnap_key:
        return rec.finish(Outcome.FAILED), st.advance(TrustedPhase.FAILED)
    st = st.advance(TrustedPhase.TNAP_SECURED, keys=ue_keys, tnap_key=tnap_key)

    ip = core.next_ue_ip()
    send(20, K.IP_CONFIG_REQ, u, tngf, "IP_CONFIG", protected=True)
    send(20, K.IP_CONFIG_RESP, tngf, u, "IP_CONFIG", protected=True, payload={"ip": ip})
    st = st.advance(TrustedPhase.IP_CONFIGURED, inner_ip_ue=ip)

    send(21, K.IKE_SA_INIT_REQ, u, tngf, "NWT_SETUP", protected=True)
    send(21, K.IKE_SA_INIT_RESP, tngf, u, "NWT_SETUP", protected=True)
    send(21, K.IKE_AUTH_REQ, u, tngf, "NWT_SETUP", protected=True,
         payload={"auth": key_handle(ue_keys.gateway_key)})
    sa = core.next_sa()
    send(21, K.IKE_AUTH_RESP, tngf, u, "NWT_SETUP", protected=True,
         payload={"auth": key_handle(net.gateway_key), "signaling_sa": sa, "encr": "NULL",
                  "nas_channel": "TCP"})
    if ue_keys.gateway_key != net.gateway_key:
        return rec.finish(Outcome.FAILED), st.advance(TrustedPhase.FAILED)
    st = st.advance(TrustedPhase.NWT_UP, signaling_sa=sa)

    send(22, K.NGAP_INITIAL_CTX_SETUP_RESP, tngf, amf, "ICS_RESP")
    send(23, K.NGAP_DOWNLINK_NAS, amf, tngf, "REG_ACCEPT", inner=[K.NAS_REGISTRATION_ACCEPT])
    send(23, K.NAS_REGISTRATION_ACCEPT, tngf, u, "REG_ACCEPT", protected=True)
    send(24, K.NAS_REGISTRATION_COMPLETE, u, tngf, "NAS_OVER_IPSEC", protected=True)
    send(24, K.NGAP_UPLINK_NAS, tngf, amf, "NAS_OVER_IPSEC", inner=[K.NAS_REGISTRATION_COMPLETE])
    st = st.advance(TrustedPhase.REGISTERED)
    return rec.finish(Outcome.SUCCESS), st


def run_pdu_establishment_trusted(topology: Topology, reg: TrustedRegistrationState,
                                  qos_profiles=(1,), *, sim: Optional[Simulation] = None,
                                  child_sa_policy: Callable = one_sa_per_profile) -> tuple:
    """The untrusted PDU exchange with the TNGF substituted for the N3IWF.

    Child SAs carry the additional QoS information and use null encryption.
    """
    if reg is None or reg.phase is not TrustedPhase.REGISTERED:
        got = "none" if reg is None else reg.phase.name
        raise PreconditionError(f"PDU session establishment needs REGISTERED, got {got}")
    sim = sim or Simulation(topology)
    return establish_session(sim, reg, qos_profiles, procedure=Procedure.TRUSTED_PDU_SESSION_EST,
                             access=AccessType.TRUSTED_TNGF, child_sa_policy=child_sa_policy,
                             null_encryption=True, extra_qos_info=True)


__all__ = ["TrustedPhase", "TrustedUeConfig", "TrustedRegistrationState",
           "run_registration_trusted", "run_pdu_establishment_trusted"]
