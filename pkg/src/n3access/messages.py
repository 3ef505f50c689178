"""Control-plane message catalog, nesting, and the size model.

Message sizes are configuration: the normative tables transcribe the
measured byte counts of the untrusted-access proof of concept; every other
procedure falls back to per-kind nominal sizes (non-normative) with an extra
envelope on AAA legs.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .core import NodeRole, SUBSCRIBER_ROLES
from .errors import GoldenParseError, IncompleteSizeTableError, TraceIncompleteError

MAX_NESTING = 3


class Protocol(Enum):
    IKE = "IKE"
    EAP = "EAP"
    NAS = "NAS"
    NGAP = "NGAP"
    PFCP = "PFCP"
    GTPU = "GTPU"
    ANQP = "ANQP"
    AAA = "AAA"
    LINK = "LINK"
    IP = "IP"


class MessageKind(Enum):
    IKE_SA_INIT_REQ = "IKE_SA_INIT_REQ"
    IKE_SA_INIT_RESP = "IKE_SA_INIT_RESP"
    IKE_AUTH_REQ = "IKE_AUTH_REQ"
    IKE_AUTH_RESP = "IKE_AUTH_RESP"
    CREATE_CHILD_SA_REQ = "CREATE_CHILD_SA_REQ"
    CREATE_CHILD_SA_RESP = "CREATE_CHILD_SA_RESP"
    EAP_5G_START = "EAP_5G_START"
    EAP_5G_NAS = "EAP_5G_NAS"
    EAP_5G_SUCCESS = "EAP_5G_SUCCESS"
    EAP_IDENTITY_REQ = "EAP_IDENTITY_REQ"
    EAP_IDENTITY_RESP = "EAP_IDENTITY_RESP"
    NAS_REGISTRATION_REQ = "NAS_REGISTRATION_REQ"
    NAS_AUTH_REQ = "NAS_AUTH_REQ"
    NAS_AUTH_RESP = "NAS_AUTH_RESP"
    NAS_SMC_CMD = "NAS_SMC_CMD"
    NAS_SMC_COMPLETE = "NAS_SMC_COMPLETE"
    NAS_REGISTRATION_ACCEPT = "NAS_REGISTRATION_ACCEPT"
    NAS_REGISTRATION_COMPLETE = "NAS_REGISTRATION_COMPLETE"
    NAS_PDU_SESSION_EST_REQ = "NAS_PDU_SESSION_EST_REQ"
    NAS_PDU_SESSION_EST_ACCEPT = "NAS_PDU_SESSION_EST_ACCEPT"
    NGAP_INITIAL_UE_MESSAGE = "NGAP_INITIAL_UE_MESSAGE"
    NGAP_UPLINK_NAS = "NGAP_UPLINK_NAS"
    NGAP_DOWNLINK_NAS = "NGAP_DOWNLINK_NAS"
    NGAP_INITIAL_CTX_SETUP_REQ = "NGAP_INITIAL_CTX_SETUP_REQ"
    NGAP_INITIAL_CTX_SETUP_RESP = "NGAP_INITIAL_CTX_SETUP_RESP"
    NGAP_PDU_RESOURCE_SETUP_REQ = "NGAP_PDU_RESOURCE_SETUP_REQ"
    NGAP_PDU_RESOURCE_SETUP_RESP = "NGAP_PDU_RESOURCE_SETUP_RESP"
    PFCP_SESSION_EST_REQ = "PFCP_SESSION_EST_REQ"
    PFCP_SESSION_EST_RESP = "PFCP_SESSION_EST_RESP"
    GTPU_ECHO_REQ = "GTPU_ECHO_REQ"
    GTPU_ECHO_RESP = "GTPU_ECHO_RESP"
    ANQP_QUERY = "ANQP_QUERY"
    ANQP_RESPONSE = "ANQP_RESPONSE"
    AAA_KEY_REQ = "AAA_KEY_REQ"
    AAA_KEY_RESP = "AAA_KEY_RESP"
    LINK_LAYER_ASSOC = "LINK_LAYER_ASSOC"
    IP_CONFIG_REQ = "IP_CONFIG_REQ"
    IP_CONFIG_RESP = "IP_CONFIG_RESP"

    @property
    def protocol(self) -> Protocol:
        if self.name.startswith("CREATE_CHILD_SA"):
            return Protocol.IKE
        return Protocol(self.name.split("_", 1)[0])

    @property
    def is_nas(self) -> bool:
        return self.protocol is Protocol.NAS


class Procedure(Enum):
    IPSEC_SA_SIGNALING = "IPSEC_SA_SIGNALING"
    PDU_SESSION_EST = "PDU_SESSION_EST"
    TRUSTED_REGISTRATION = "TRUSTED_REGISTRATION"
    TRUSTED_PDU_SESSION_EST = "TRUSTED_PDU_SESSION_EST"
    N5CW_REGISTRATION = "N5CW_REGISTRATION"
    N5CW_PDU_SESSION_EST = "N5CW_PDU_SESSION_EST"
    RG5G_REGISTRATION = "RG5G_REGISTRATION"
    FNRG_REGISTRATION = "FNRG_REGISTRATION"
    RG5G_PDU_SESSION_EST = "RG5G_PDU_SESSION_EST"
    FNRG_PDU_SESSION_EST = "FNRG_PDU_SESSION_EST"
    ANQP_DISCOVERY = "ANQP_DISCOVERY"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    seq: int
    src: str
    dst: str
    size_bytes: int
    inner: Optional["Message"] = None
    payload: Mapping = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ValueError(f"{self.kind.name}: size must be positive")
        if self.inner is not None and self.inner.size_bytes > self.size_bytes:
            raise ValueError(f"{self.kind.name}: inner message larger than outer")
        if self.depth > MAX_NESTING:
            raise ValueError(f"{self.kind.name}: nesting deeper than {MAX_NESTING}")
        if not isinstance(self.payload, MappingProxyType):
            object.__setattr__(self, "payload", MappingProxyType(dict(self.payload)))

    @property
    def depth(self) -> int:
        return 1 + (self.inner.depth if self.inner is not None else 0)

    @property
    def chain(self) -> tuple:
        """Kinds from outermost to innermost."""
        out, m = [], self
        while m is not None:
            out.append(m.kind)
            m = m.inner
        return tuple(out)

    @property
    def carries_nas(self) -> bool:
        return any(k.is_nas for k in self.chain)


# Envelope overhead subtracted from an outer message to size its inner one.
# Descriptive only: the outer size is authoritative for accounting.
_ENVELOPE = {
    Protocol.IKE: 36, Protocol.EAP: 12, Protocol.NGAP: 40, Protocol.AAA: 32,
    Protocol.LINK: 18, Protocol.IP: 28, Protocol.NAS: 8,
}


def nest(kind: MessageKind, size: int, inner: Iterable = (), **fields) -> Message:
    """Build a message whose payload nests ``inner`` kinds, outermost first.

    Inner messages get nominal sizes clipped so each fits inside its parent.
    """
    inner = list(inner)
    child = None
    if inner:
        sizes = [size]
        parent_kind = kind
        for k in inner:
            nominal = NOMINAL_SIZES.get(k, 64)
            room = sizes[-1] - _ENVELOPE.get(parent_kind.protocol, 8)
            sizes.append(max(1, min(nominal, room)))
            parent_kind = k
        for k, s in reversed(list(zip(inner, sizes[1:]))):
            child = Message(k, 0, fields.get("src", ""), fields.get("dst", ""), s, inner=child)
    return Message(kind, fields.pop("seq", 0), fields.pop("src", ""), fields.pop("dst", ""),
                   size, inner=child, **fields)


# ---------------------------------------------------------------------------
# Size tables

#: Non-normative per-kind sizes. Kinds that occur in the measured tables reuse
#: the first measured size of that kind; the rest are nominal estimates.
NOMINAL_SIZES = {
    MessageKind.IKE_SA_INIT_REQ: 644,
    MessageKind.IKE_SA_INIT_RESP: 644,
    MessageKind.IKE_AUTH_REQ: 216,
    MessageKind.IKE_AUTH_RESP: 1448,
    MessageKind.CREATE_CHILD_SA_REQ: 488,
    MessageKind.CREATE_CHILD_SA_RESP: 456,
    MessageKind.NGAP_INITIAL_UE_MESSAGE: 128,
    MessageKind.NAS_AUTH_REQ: 148,
    MessageKind.NAS_AUTH_RESP: 140,
    MessageKind.NAS_SMC_CMD: 124,
    MessageKind.NGAP_UPLINK_NAS: 168,
    MessageKind.NGAP_INITIAL_CTX_SETUP_REQ: 188,
    MessageKind.NGAP_INITIAL_CTX_SETUP_RESP: 100,
    MessageKind.NGAP_DOWNLINK_NAS: 160,
    MessageKind.PFCP_SESSION_EST_REQ: 271,
    MessageKind.PFCP_SESSION_EST_RESP: 107,
    MessageKind.NGAP_PDU_RESOURCE_SETUP_REQ: 271,
    MessageKind.NGAP_PDU_RESOURCE_SETUP_RESP: 120,
    MessageKind.GTPU_ECHO_REQ: 58,
    MessageKind.GTPU_ECHO_RESP: 58,
    # not measured
    MessageKind.EAP_5G_START: 24,
    MessageKind.EAP_5G_NAS: 112,
    MessageKind.EAP_5G_SUCCESS: 18,
    MessageKind.EAP_IDENTITY_REQ: 23,
    MessageKind.EAP_IDENTITY_RESP: 64,
    MessageKind.NAS_REGISTRATION_REQ: 88,
    MessageKind.NAS_SMC_COMPLETE: 40,
    MessageKind.NAS_REGISTRATION_ACCEPT: 120,
    MessageKind.NAS_REGISTRATION_COMPLETE: 24,
    MessageKind.NAS_PDU_SESSION_EST_REQ: 64,
    MessageKind.NAS_PDU_SESSION_EST_ACCEPT: 96,
    MessageKind.ANQP_QUERY: 48,
    MessageKind.ANQP_RESPONSE: 128,
    MessageKind.AAA_KEY_REQ: 96,
    MessageKind.AAA_KEY_RESP: 128,
    MessageKind.LINK_LAYER_ASSOC: 64,
    MessageKind.IP_CONFIG_REQ: 342,
    MessageKind.IP_CONFIG_RESP: 342,
}

AAA_ENVELOPE_BYTES = 32

# legs whose messages are carried in AAA format
_AAA_LEGS = {
    frozenset({NodeRole.TNAP, NodeRole.TNGF}),
    frozenset({NodeRole.TWAP, NodeRole.TWIF}),
}

# Procedures that reuse another procedure's measured rows (role-substituted).
_ALIASES = {Procedure.TRUSTED_PDU_SESSION_EST: Procedure.PDU_SESSION_EST}


@dataclass(frozen=True)
class SizeEntry:
    procedure: Procedure
    seq: int
    kind: MessageKind
    src_role: NodeRole
    dst_role: NodeRole
    size_bytes: int


def _parse_enum(enum, token, lineno, path, what):
    try:
        return enum[token]
    except KeyError:
        raise GoldenParseError(f"unknown {what} {token!r}", lineno, path) from None


def parse_size_lines(lines: Iterable[str], path=None) -> list:
    entries = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 6:
            raise GoldenParseError(f"expected 6 fields, got {len(fields)}", lineno, path)
        proc = _parse_enum(Procedure, fields[0], lineno, path, "procedure")
        kind = _parse_enum(MessageKind, fields[2], lineno, path, "message kind")
        src = _parse_enum(NodeRole, fields[3], lineno, path, "role")
        dst = _parse_enum(NodeRole, fields[4], lineno, path, "role")
        try:
            seq, size = int(fields[1]), int(fields[5])
        except ValueError:
            raise GoldenParseError("seq and size must be integers", lineno, path) from None
        if seq < 1 or size <= 0:
            raise GoldenParseError("seq must be >= 1 and size > 0", lineno, path)
        entries.append(SizeEntry(proc, seq, kind, src, dst, size))
    return entries


def read_table_text(name: str) -> str:
    return resources.files("n3access").joinpath("tables", name).read_text()


class SizeTable:
    """Lookup from (procedure, seq) to message size.

    Read-only after construction. ``defaults`` must cover the whole message
    catalog, which makes lookups for any emitted message total.
    """

    def __init__(self, entries: Iterable = (), defaults: Optional[Mapping] = None,
                 aaa_envelope: int = AAA_ENVELOPE_BYTES, aliases: Optional[Mapping] = None):
        self._entries = {}
        for e in entries:
            self._entries[(e.procedure, e.seq)] = e
        self.defaults = dict(NOMINAL_SIZES if defaults is None else defaults)
        missing = [k.name for k in MessageKind if k not in self.defaults]
        if missing:
            raise IncompleteSizeTableError("no default size for " + ", ".join(missing))
        self.aaa_envelope = aaa_envelope
        self.aliases = dict(_ALIASES if aliases is None else aliases)

    @classmethod
    def load(cls, path, **kw) -> "SizeTable":
        with open(path) as fh:
            return cls(parse_size_lines(fh, path), **kw)

    @classmethod
    def default(cls) -> "SizeTable":
        entries = []
        for name in ("table6.sizes", "table7.sizes"):
            entries += parse_size_lines(io.StringIO(read_table_text(name)), name)
        return cls(entries)

    def merged(self, path) -> "SizeTable":
        """Copy of this table with entries from ``path`` overriding."""
        with open(path) as fh:
            extra = parse_size_lines(fh, os.fspath(path))
        return SizeTable(list(self._entries.values()) + extra, self.defaults,
                         self.aaa_envelope, self.aliases)

    def entries(self, procedure: Optional[Procedure] = None) -> list:
        out = [e for e in self._entries.values() if procedure is None or e.procedure is procedure]
        return sorted(out, key=lambda e: (e.procedure.value, e.seq))

    def has(self, procedure: Procedure, seq: int) -> bool:
        return (procedure, seq) in self._entries

    def entry(self, procedure: Procedure, seq: int) -> SizeEntry:
        key = (self.aliases.get(procedure, procedure), seq)
        if (procedure, seq) in self._entries:
            key = (procedure, seq)
        try:
            return self._entries[key]
        except KeyError:
            raise IncompleteSizeTableError(
                f"no size entry for ({procedure.value}, {seq})") from None

    def size_of(self, procedure: Procedure, seq: int) -> int:
        return self.entry(procedure, seq).size_bytes

    def size_for(self, procedure: Procedure, seq: int, kind: MessageKind,
                 src_role: NodeRole, dst_role: NodeRole) -> int:
        """Size of a message a flow emits: the table entry if one exists for
        (procedure, seq), else the per-kind default plus any AAA envelope."""
        proc = procedure if (procedure, seq) in self._entries else self.aliases.get(procedure, procedure)
        e = self._entries.get((proc, seq))
        if e is not None:
            if e.kind is not kind:
                raise IncompleteSizeTableError(
                    f"({procedure.value}, {seq}) is {e.kind.name} in the table, "
                    f"flow emitted {kind.name}")
            return e.size_bytes
        size = self.defaults[kind]
        if frozenset({src_role, dst_role}) in _AAA_LEGS:
            size += self.aaa_envelope
        return size


_TABLE_PROCEDURES = (Procedure.IPSEC_SA_SIGNALING, Procedure.PDU_SESSION_EST)


def size_of(procedure: Procedure, seq: int, table: Optional[SizeTable] = None) -> int:
    return (table or default_size_table()).size_of(procedure, seq)


_DEFAULT = None


def default_size_table() -> SizeTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = SizeTable.default()
    return _DEFAULT


# ---------------------------------------------------------------------------
# Byte accounting

class Scope(Enum):
    UE_GATEWAY = "UE_GATEWAY"
    CORE_INTERNAL = "CORE_INTERNAL"
    ALL = "ALL"


def record_scope(src_role: NodeRole, dst_role: NodeRole) -> Scope:
    if src_role in SUBSCRIBER_ROLES or dst_role in SUBSCRIBER_ROLES:
        return Scope.UE_GATEWAY
    return Scope.CORE_INTERNAL


def sum_by_scope(trace, scope: Scope) -> int:
    """Sum message bytes of a finished trace over ``scope``.

    UE_GATEWAY counts messages with a subscriber-side endpoint (UE or
    residential gateway); CORE_INTERNAL counts every other message; internal
    events carry no bytes.
    """
    if not trace.complete:
        raise TraceIncompleteError(f"{trace.procedure.value} trace has no terminal outcome")
    total = 0
    for r in trace.records:
        if r.kind is None:
            continue
        if scope is Scope.ALL or record_scope(r.src_role, r.dst_role) is scope:
            total += r.size
    return total
