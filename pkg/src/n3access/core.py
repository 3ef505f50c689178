"""Domain types shared by all procedures: identities, access types, node
roles, topologies and PDU session contexts.

All types are immutable value objects. Use :func:`dataclasses.replace` to
derive a modified copy.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .errors import InvalidIdentityError, TopologyError


class NodeRole(Enum):
    UE = "UE"
    AP = "AP"
    TNAP = "TNAP"
    TWAP = "TWAP"
    N3IWF = "N3IWF"
    TNGF = "TNGF"
    TWIF = "TWIF"
    W_AGF = "W_AGF"
    AMF = "AMF"
    SMF = "SMF"
    UPF = "UPF"
    AUSF = "AUSF"
    UDM = "UDM"
    SEPP = "SEPP"
    DN = "DN"
    RG_5G = "RG_5G"
    RG_FN = "RG_FN"


class AccessType(Enum):
    UNTRUSTED = "UNTRUSTED"
    TRUSTED_TNGF = "TRUSTED_TNGF"
    TRUSTED_TWIF = "TRUSTED_TWIF"
    WIRELINE_5GRG = "WIRELINE_5GRG"
    WIRELINE_FNRG = "WIRELINE_FNRG"

    @property
    def gateway_role(self) -> NodeRole:
        return _GATEWAY[self]

    @property
    def nas_capable(self) -> bool:
        return self in (AccessType.UNTRUSTED, AccessType.TRUSTED_TNGF, AccessType.WIRELINE_5GRG)

    @property
    def roaming_support(self) -> frozenset:
        """Roaming modes allowed for this access type (NON_ROAMING always is)."""
        return _ROAMING[self]

    @property
    def code(self) -> str:
        return _ACCESS_CODE[self]


class RoamingMode(Enum):
    NON_ROAMING = "NON_ROAMING"
    LBO = "LBO"
    HR = "HR"


class GatewayPlacement(Enum):
    VISITED_SAME = "VISITED_SAME"
    VISITED_OTHER = "VISITED_OTHER"
    HOME = "HOME"


_GATEWAY = {
    AccessType.UNTRUSTED: NodeRole.N3IWF,
    AccessType.TRUSTED_TNGF: NodeRole.TNGF,
    AccessType.TRUSTED_TWIF: NodeRole.TWIF,
    AccessType.WIRELINE_5GRG: NodeRole.W_AGF,
    AccessType.WIRELINE_FNRG: NodeRole.W_AGF,
}

_ROAMING = {
    AccessType.UNTRUSTED: frozenset({RoamingMode.NON_ROAMING, RoamingMode.LBO, RoamingMode.HR}),
    AccessType.TRUSTED_TNGF: frozenset({RoamingMode.NON_ROAMING, RoamingMode.LBO, RoamingMode.HR}),
    AccessType.TRUSTED_TWIF: frozenset({RoamingMode.NON_ROAMING, RoamingMode.LBO}),
    AccessType.WIRELINE_5GRG: frozenset({RoamingMode.NON_ROAMING}),
    AccessType.WIRELINE_FNRG: frozenset({RoamingMode.NON_ROAMING}),
}

_ACCESS_CODE = {
    AccessType.UNTRUSTED: "u",
    AccessType.TRUSTED_TNGF: "t",
    AccessType.TRUSTED_TWIF: "w",
    AccessType.WIRELINE_5GRG: "g",
    AccessType.WIRELINE_FNRG: "f",
}
_CODE_ACCESS = {v: k for k, v in _ACCESS_CODE.items()}

#: Roles that act on the subscriber side of an access network.
SUBSCRIBER_ROLES = frozenset({NodeRole.UE, NodeRole.RG_5G, NodeRole.RG_FN})

#: Roles whose messages cross into the home network only through a SEPP pair.
GATEWAY_ROLES = frozenset({NodeRole.N3IWF, NodeRole.TNGF, NodeRole.TWIF, NodeRole.W_AGF})


# ---------------------------------------------------------------------------
# Identities

# Fixed home-network concealment key. Concealment is a reversible keystream
# transform, not ECIES; it only has to be deterministic and injective.
_HN_KEY = b"n3access home network concealment key"

DEFAULT_NAI_TEMPLATE = "{user}@nai.5gc.{plmn}.3gppnetwork.org"


def _keystream(n: int) -> bytes:
    return hashlib.shake_256(_HN_KEY).digest(n)


def conceal_identity(supi: str, access: AccessType) -> str:
    """Return the concealed identifier (SUCI) for ``supi``.

    The access type is folded into the scheme tag, mirroring that a W-AGF
    builds the SUCI according to the access network it serves.
    """
    if not supi:
        raise InvalidIdentityError("empty SUPI")
    raw = supi.encode("utf-8")
    masked = bytes(a ^ b for a, b in zip(raw, _keystream(len(raw))))
    return f"suci-{access.code}-{masked.hex()}"


def deconceal_identity(suci: str) -> str:
    """Inverse of :func:`conceal_identity`."""
    try:
        prefix, code, payload = suci.split("-", 2)
        if prefix != "suci" or code not in _CODE_ACCESS:
            raise ValueError
        masked = bytes.fromhex(payload)
    except ValueError:
        raise InvalidIdentityError(f"not a concealed identifier: {suci!r}") from None
    if not masked:
        raise InvalidIdentityError("empty SUCI payload")
    raw = bytes(a ^ b for a, b in zip(masked, _keystream(len(masked))))
    return raw.decode("utf-8")


def make_nai(supi: str, plmn: str, template: str = DEFAULT_NAI_TEMPLATE) -> str:
    user = supi.split("-", 1)[-1]
    return template.format(user=user, supi=supi, plmn=plmn)


@dataclass(frozen=True)
class Identity:
    supi: str
    suci: str
    nai: str

    def __post_init__(self):
        if not self.supi:
            raise InvalidIdentityError("empty SUPI")
        if not self.nai:
            raise InvalidIdentityError("empty NAI")
        if deconceal_identity(self.suci) != self.supi:
            raise InvalidIdentityError("SUCI does not conceal the given SUPI")

    @property
    def realm(self) -> Optional[str]:
        return self.nai.split("@", 1)[1] if "@" in self.nai else None

    @classmethod
    def from_supi(cls, supi: str, access: AccessType, plmn: str,
                  nai_template: str = DEFAULT_NAI_TEMPLATE) -> "Identity":
        ident = cls(supi, conceal_identity(supi, access), make_nai(supi, plmn, nai_template))
        if access in (AccessType.TRUSTED_TNGF, AccessType.TRUSTED_TWIF) and ident.realm is None:
            # trusted access routes to a PLMN by the NAI realm
            raise InvalidIdentityError(f"NAI {ident.nai!r} lacks a realm")
        return ident


# ---------------------------------------------------------------------------
# Topology

@dataclass(frozen=True)
class Node:
    id: str
    role: NodeRole
    plmn: str


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    latency_ms: int = 0


@dataclass(frozen=True)
class Topology:
    nodes: tuple
    links: tuple
    roaming_mode: RoamingMode = RoamingMode.NON_ROAMING
    gateway_placement: GatewayPlacement = GatewayPlacement.VISITED_SAME
    home_plmn: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def has_node(self, node_id: str) -> bool:
        return any(n.id == node_id for n in self.nodes)

    def role_of(self, node_id: str) -> NodeRole:
        return self.node(node_id).role

    def with_role(self, role: NodeRole, plmn: Optional[str] = None) -> list:
        """Node ids holding ``role`` (optionally in ``plmn``), sorted by id."""
        return sorted(n.id for n in self.nodes
                      if n.role is role and (plmn is None or n.plmn == plmn))

    def first(self, role: NodeRole, plmn: Optional[str] = None) -> Optional[str]:
        ids = self.with_role(role, plmn)
        return ids[0] if ids else None

    @property
    def plmns(self) -> list:
        return sorted({n.plmn for n in self.nodes})

    @property
    def effective_home_plmn(self) -> str:
        if self.home_plmn is not None:
            return self.home_plmn
        udm = self.first(NodeRole.UDM) or self.first(NodeRole.AUSF)
        if udm is not None:
            return self.node(udm).plmn
        return self.plmns[0]


def topology_errors(t: Topology) -> list:
    """Return ``(rule, detail)`` pairs for every violated topology rule."""
    errs = []
    ids = [n.id for n in t.nodes]
    seen = set()
    for i in ids:
        if i in seen:
            errs.append(("duplicate-node", i))
        seen.add(i)
    byid = {n.id: n for n in t.nodes}

    for ln in t.links:
        for end in (ln.a, ln.b):
            if end not in byid:
                errs.append(("unknown-node", f"link {ln.a}-{ln.b} references {end}"))
        if ln.latency_ms < 0:
            errs.append(("negative-latency", f"{ln.a}-{ln.b}"))

    plmns = {n.plmn for n in t.nodes}
    home = t.effective_home_plmn if t.nodes else None
    if t.home_plmn is not None and t.home_plmn not in plmns:
        errs.append(("unknown-home-plmn", t.home_plmn))

    if t.roaming_mode is RoamingMode.NON_ROAMING:
        if len(plmns) > 1:
            errs.append(("plmn-mismatch", "non-roaming topology spans " + ",".join(sorted(plmns))))
        if t.gateway_placement is not GatewayPlacement.VISITED_SAME:
            errs.append(("illegal-placement", f"{t.gateway_placement.value} under NON_ROAMING"))
    else:
        allowed = {
            RoamingMode.LBO: {GatewayPlacement.VISITED_SAME, GatewayPlacement.VISITED_OTHER},
            RoamingMode.HR: {GatewayPlacement.VISITED_SAME, GatewayPlacement.VISITED_OTHER,
                             GatewayPlacement.HOME},
        }[t.roaming_mode]
        if t.gateway_placement not in allowed:
            errs.append(("illegal-placement",
                         f"{t.gateway_placement.value} under {t.roaming_mode.value}"))
        if len(plmns) < 2:
            errs.append(("no-visited-plmn", f"{t.roaming_mode.value} needs a visited PLMN"))
        # every inter-PLMN link must be mediated by a SEPP on each side
        for ln in t.links:
            a, b = byid.get(ln.a), byid.get(ln.b)
            if a is None or b is None or a.plmn == b.plmn:
                continue
            if a.role is not NodeRole.SEPP or b.role is not NodeRole.SEPP:
                errs.append(("missing-sepp", f"{ln.a}-{ln.b}"))
        # gateway location must agree with the declared placement
        if t.gateway_placement is not None and home is not None:
            for n in t.nodes:
                if n.role not in GATEWAY_ROLES:
                    continue
                at_home = n.plmn == home
                if (t.gateway_placement is GatewayPlacement.HOME) != at_home:
                    errs.append(("placement-mismatch",
                                 f"{n.id} in {n.plmn} vs {t.gateway_placement.value}"))
    return errs


def validate_topology(t: Topology) -> Topology:
    """Return ``t`` unchanged if it is valid, else raise :class:`TopologyError`
    naming every violated rule."""
    errs = topology_errors(t)
    if errs:
        raise TopologyError([e for e, _ in errs], [f"{e}: {d}" for e, d in errs])
    return t


# ---------------------------------------------------------------------------
# PDU sessions

class PduSessionState(Enum):
    IDLE = "IDLE"
    REQUESTED = "REQUESTED"
    RESOURCES_PENDING = "RESOURCES_PENDING"
    ESTABLISHED = "ESTABLISHED"
    FAILED = "FAILED"


@dataclass(frozen=True)
class PduSessionContext:
    session_id: int
    state: PduSessionState = PduSessionState.IDLE
    qos_profiles: tuple = ()
    child_sas: tuple = ()
    gtpu_teid: Optional[int] = None
    gre_key: Optional[int] = None
    inner_ip_ue: Optional[str] = None
    inner_ip_upf: Optional[str] = None
    access: AccessType = AccessType.UNTRUSTED
    null_encryption: bool = False
    # child SA id per QoS profile, as chosen by the gateway policy
    sa_for_profile: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "qos_profiles", tuple(self.qos_profiles))
        object.__setattr__(self, "child_sas", tuple(self.child_sas))
        object.__setattr__(self, "sa_for_profile", tuple(self.sa_for_profile))
        if len(self.child_sas) > max(1, len(set(self.qos_profiles))):
            raise ValueError("more child SAs than distinct QoS profiles")
        if self.state is PduSessionState.ESTABLISHED:
            if self.gtpu_teid is None:
                raise ValueError("established session without a GTP-U TEID")
            if self.access in (AccessType.UNTRUSTED, AccessType.TRUSTED_TNGF) and not self.child_sas:
                raise ValueError("established session without a child SA")

    def child_sa_for(self, qos_profile=None) -> Optional[int]:
        if not self.child_sas:
            return None
        if qos_profile is not None:
            for prof, sa in self.sa_for_profile:
                if prof == qos_profile:
                    return sa
        return self.child_sas[0]

    def evolve(self, **changes) -> "PduSessionContext":
        return replace(self, **changes)

