"""Pieces shared by the flow engines: subscriber configuration, the core
network's per-run allocators, and role lookups."""
from __future__ import annotations

import hashlib
import ipaddress
import itertools
from dataclasses import dataclass, replace
from typing import Optional

from ..core import AccessType, NodeRole, RoamingMode, Topology, validate_topology
from ..kdf import AuthResult, run_authentication
from ..errors import PreconditionError, SelectionError, TopologyError, UnreachableError

DEFAULT_UE_IP = "60.60.0.1"
DEFAULT_UPF_IP = "60.60.0.101"


def _secret_for(supi: str) -> bytes:
    return hashlib.sha256(b"subscriber-secret:" + supi.encode()).digest()


@dataclass(frozen=True)
class UeConfig:
    """A subscriber and the device that carries its credentials.

    ``secret`` is what the device (or the W-AGF acting for an FN-RG) holds;
    ``subscription_secret`` is what the UDM has provisioned, which defaults to
    the same value. A mismatch is how a corrupted credential is modeled.
    """
    supi: str = "imsi-208930000000001"
    node: str = "ue"
    secret: Optional[bytes] = None
    subscription_secret: Optional[bytes] = None
    provisioned: bool = True
    serving_plmn: Optional[str] = None

    def __post_init__(self):
        if self.secret is None:
            object.__setattr__(self, "secret", _secret_for(self.supi))
        if self.subscription_secret is None:
            object.__setattr__(self, "subscription_secret", self.secret)

    def with_corrupted_secret(self, bit: int = 0) -> "UeConfig":
        """Copy whose device-side secret differs from the provisioned one in one bit."""
        b = bytearray(self.secret)
        b[(bit // 8) % len(b)] ^= 1 << (bit % 8)
        return replace(self, secret=bytes(b), subscription_secret=self.subscription_secret)


class CoreContext:
    """Subscriber data and identifier allocators of one simulated core.

    Allocation is sequential, so runs are reproducible.
    """

    def __init__(self, subscribers=None, ue_ip: str = DEFAULT_UE_IP, upf_ip: str = DEFAULT_UPF_IP):
        self.subscribers = dict(subscribers or {})
        self.suci_to_supi = {}          # UDM-side resolution cache
        self.upf_ip = upf_ip
        self._ue_ip = ipaddress.ip_address(ue_ip)
        self._teid = itertools.count(0x1001)
        self._gre = itertools.count(1)
        self._sa = itertools.count(1)
        self._session = itertools.count(1)
        self._conn = itertools.count(1)

    def provision(self, ue: UeConfig):
        if ue.provisioned:
            self.subscribers.setdefault(ue.supi, ue.subscription_secret)

    def subscription_secret(self, supi: Optional[str]) -> Optional[bytes]:
        return self.subscribers.get(supi) if supi else None

    def next_teid(self) -> int:
        return next(self._teid)

    def next_gre_key(self) -> int:
        return next(self._gre)

    def next_sa(self) -> int:
        return next(self._sa)

    def next_session(self) -> int:
        return next(self._session)

    def next_connection(self) -> int:
        return next(self._conn)

    def next_ue_ip(self) -> str:
        ip = str(self._ue_ip)
        self._ue_ip += 1
        return ip


def core_of(sim) -> CoreContext:
    core = getattr(sim, "core", None)
    if core is None:
        core = sim.core = CoreContext()
    return core


def key_handle(key: bytes) -> str:
    """Short public fingerprint of a key, safe to put in a message payload."""
    return hashlib.sha256(key).hexdigest()[:12]


def check_access(topology: Topology, access: AccessType) -> Topology:
    """Validate ``topology`` and reject roaming modes ``access`` cannot use."""
    validate_topology(topology)
    if topology.roaming_mode not in access.roaming_support:
        raise TopologyError(["roaming-unsupported"],
                            [f"{access.value} does not support {topology.roaming_mode.value}"])
    return topology


def require(topology: Topology, role: NodeRole, plmn: Optional[str] = None) -> str:
    node = topology.first(role, plmn)
    if node is None and plmn is not None:
        node = topology.first(role)
    if node is None:
        raise TopologyError([f"missing-{role.value.lower()}"], [f"no {role.value} node"])
    return node


def require_node(topology: Topology, node_id: str, role: NodeRole) -> str:
    if not topology.has_node(node_id) or topology.role_of(node_id) is not role:
        raise TopologyError([f"missing-{role.value.lower()}"], [f"{node_id} is not a {role.value}"])
    return node_id


def select_amf(sim, gateway: str, target_plmn: Optional[str] = None) -> str:
    """First AMF (by node id) in the target PLMN that the gateway can reach."""
    topo = sim.topology
    plmn = target_plmn or topo.node(gateway).plmn
    amfs = topo.with_role(NodeRole.AMF, plmn)
    if not amfs:
        raise SelectionError(f"no AMF in PLMN {plmn}")
    amf = amfs[0]
    try:
        sim.network.route(gateway, amf)
    except UnreachableError as e:
        raise SelectionError(f"AMF {amf} unreachable from {gateway}: {e}") from None
    return amf


def home_function(topology: Topology, role: NodeRole) -> str:
    """The ``role`` node of the subscriber's home PLMN."""
    return require(topology, role, topology.effective_home_plmn)


def session_functions(topology: Topology, amf: str) -> tuple:
    """(SMF, UPF) that anchor a new PDU session.

    Home-routed roaming anchors the session in the home PLMN; otherwise
    it breaks out in the AMF's PLMN.
    """
    plmn = topology.node(amf).plmn
    if topology.roaming_mode is RoamingMode.HR:
        plmn = topology.effective_home_plmn
    smf = topology.first(NodeRole.SMF, plmn)
    upf = topology.first(NodeRole.UPF, plmn)
    missing = [r for r, n in (("missing-smf", smf), ("missing-upf", upf)) if n is None]
    if missing:
        raise TopologyError(missing, [f"no {m[8:].upper()} in {plmn}" for m in missing])
    return smf, upf


def require_phase(state, wanted, what: str):
    if state is None or state.phase is not wanted:
        got = "none" if state is None else state.phase.name
        raise PreconditionError(f"{what} needs phase {wanted.name}, registration is {got}")


def authenticate(core: CoreContext, supi: Optional[str], device_secret: bytes,
                 challenge: bytes) -> AuthResult:
    """Run the challenge/response against the UDM's record for ``supi``.

    An unknown subscriber fails like a wrong credential.
    """
    net = core.subscription_secret(supi)
    if net is None:
        r = run_authentication(device_secret, device_secret, challenge)
        return AuthResult(r.ue_response, b"", False, None)
    return run_authentication(device_secret, net, challenge)
