"""User-plane encapsulation for the NWu leg (UE <-> N3IWF/TNGF) and the N3
leg (gateway <-> UPF), with per-layer header accounting.

Payloads are modeled by size only. Header sizes::

    NWu:  OUTER_IP 20 | ESP 16 (header + null-cipher trailer) | GRE 8 (with key)  = 44
    N3:   IP 20 | UDP 8 | GTP_U 8                                                 = 36
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .core import PduSessionContext, PduSessionState
from .errors import MalformedPacketError, NoTunnelError


class Leg(Enum):
    NWU = "NWU"
    N3 = "N3"
    LAN = "LAN"


NWU_LAYERS = (("OUTER_IP", 20), ("ESP", 16), ("GRE", 8))
N3_LAYERS = (("IP", 20), ("UDP", 8), ("GTP_U", 8))
LEG_LAYERS = {Leg.NWU: NWU_LAYERS, Leg.N3: N3_LAYERS, Leg.LAN: ()}

NWU_OVERHEAD = sum(b for _, b in NWU_LAYERS)
N3_OVERHEAD = sum(b for _, b in N3_LAYERS)


@dataclass(frozen=True)
class EncapsulatedPacket:
    layers: tuple                  # (name, header_bytes), outermost first
    inner_pdu_bytes: int
    leg: Leg
    tunnel_key: Optional[int] = None     # GRE key (NWu) or TEID (N3)
    child_sa: Optional[int] = None
    null_encryption: bool = False
    token: object = None                 # opaque stand-in for payload content
    meta: tuple = field(default=())

    @property
    def header_bytes(self) -> int:
        return sum(b for _, b in self.layers)

    @property
    def total_bytes(self) -> int:
        return self.inner_pdu_bytes + self.header_bytes


@dataclass(frozen=True)
class Decapsulated:
    pdu_bytes: int
    leg: Leg
    tunnel_key: Optional[int]
    session_id: Optional[int]
    token: object = None


def _check_size(pdu_bytes: int):
    if pdu_bytes < 0:
        raise ValueError("payload size must be >= 0")


def encap_nwu(pdu_bytes: int, ctx: PduSessionContext, qos_profile=None, token=None) -> EncapsulatedPacket:
    _check_size(pdu_bytes)
    if ctx.state is not PduSessionState.ESTABLISHED:
        raise NoTunnelError(f"session {ctx.session_id} is {ctx.state.value}")
    sa = ctx.child_sa_for(qos_profile)
    if sa is None or ctx.gre_key is None:
        raise NoTunnelError(f"session {ctx.session_id} has no child SA")
    return EncapsulatedPacket(NWU_LAYERS, pdu_bytes, Leg.NWU, ctx.gre_key, sa,
                              ctx.null_encryption, token)


def encap_n3(pdu_bytes: int, ctx: PduSessionContext, token=None) -> EncapsulatedPacket:
    _check_size(pdu_bytes)
    if ctx.gtpu_teid is None:
        raise NoTunnelError(f"session {ctx.session_id} has no GTP-U TEID")
    return EncapsulatedPacket(N3_LAYERS, pdu_bytes, Leg.N3, ctx.gtpu_teid, token=token)


def encap_lan(pdu_bytes: int, connection_id, token=None) -> EncapsulatedPacket:
    """A device packet on the access LAN, before any tunnel is applied."""
    _check_size(pdu_bytes)
    return EncapsulatedPacket((), pdu_bytes, Leg.LAN, token=token, meta=(("connection", connection_id),))


class TunnelMap:
    """Gateway-side lookup from GRE key / TEID to PDU session."""

    def __init__(self, sessions=()):
        self._by_gre = {}
        self._by_teid = {}
        self._ctx = {}
        for s in sessions:
            self.add(s)

    def add(self, ctx: PduSessionContext):
        self._ctx[ctx.session_id] = ctx
        if ctx.gre_key is not None:
            self._by_gre[ctx.gre_key] = ctx.session_id
        if ctx.gtpu_teid is not None:
            self._by_teid[ctx.gtpu_teid] = ctx.session_id

    def session(self, session_id) -> PduSessionContext:
        return self._ctx[session_id]

    def lookup(self, leg: Leg, key) -> Optional[int]:
        if leg is Leg.NWU:
            return self._by_gre.get(key)
        if leg is Leg.N3:
            return self._by_teid.get(key)
        return None


def decap(pkt: EncapsulatedPacket, tunnels: Optional[TunnelMap] = None) -> Decapsulated:
    """Strip the headers of ``pkt`` outermost-first.

    The session is recovered from the GRE key or TEID through ``tunnels``;
    without a tunnel map ``session_id`` is None.
    """
    names = tuple(n for n, _ in pkt.layers)
    for leg, layers in LEG_LAYERS.items():
        if names == tuple(n for n, _ in layers):
            break
    else:
        raise MalformedPacketError(f"unknown layer order {list(names)}")
    if leg is not pkt.leg:
        raise MalformedPacketError(f"{pkt.leg.value} packet carries {leg.value} layers")
    if tuple(pkt.layers) != layers:
        raise MalformedPacketError(f"unexpected header sizes {list(pkt.layers)}")
    sid = tunnels.lookup(leg, pkt.tunnel_key) if tunnels is not None else None
    return Decapsulated(pkt.inner_pdu_bytes, leg, pkt.tunnel_key, sid, pkt.token)


def relay_uplink(pkt: EncapsulatedPacket, tunnels: TunnelMap) -> EncapsulatedPacket:
    """Gateway relay: decapsulate an NWu packet and re-encapsulate it on N3."""
    d = decap(pkt, tunnels)
    if d.leg is not Leg.NWU or d.session_id is None:
        raise NoTunnelError(f"no session for GRE key {pkt.tunnel_key}")
    return encap_n3(d.pdu_bytes, tunnels.session(d.session_id), token=d.token)


def relay_downlink(pkt: EncapsulatedPacket, tunnels: TunnelMap, qos_profile=None) -> EncapsulatedPacket:
    d = decap(pkt, tunnels)
    if d.leg is not Leg.N3 or d.session_id is None:
        raise NoTunnelError(f"no session for TEID {pkt.tunnel_key}")
    return encap_nwu(d.pdu_bytes, tunnels.session(d.session_id), qos_profile, token=d.token)


# ---------------------------------------------------------------------------
# Overhead report

def overhead_rows() -> list:
    """``(leg, layer, header_bytes, total_overhead)`` rows for both tunnels."""
    rows = []
    for leg, layers in ((Leg.NWU, NWU_LAYERS), (Leg.N3, N3_LAYERS)):
        total = sum(b for _, b in layers)
        rows += [(leg.value, name, b, total) for name, b in layers]
    return rows


def payload_rows(sizes) -> list:
    """``(payload, nwu_total, n3_total)`` for each payload size."""
    out = []
    for s in sizes:
        _check_size(s)
        out.append((s, s + NWU_OVERHEAD, s + N3_OVERHEAD))
    return out


def render_overhead(sizes=(), fmt: str = "text") -> str:
    rows = overhead_rows()
    pay = payload_rows(sizes)
    buf = io.StringIO()
    if fmt == "records":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["leg", "layer", "header_bytes", "total_overhead"])
        w.writerows(rows)
        if pay:
            w.writerow([])
            w.writerow(["payload", "nwu_total", "n3_total"])
            w.writerows(pay)
        return buf.getvalue()
    buf.write(f"{'leg':<5} {'layer':<9} {'header':>6} {'overhead':>8}\n")
    for leg, layer, b, total in rows:
        buf.write(f"{leg:<5} {layer:<9} {b:>6} {total:>8}\n")
    if pay:
        buf.write(f"\n{'payload':>8} {'NWu total':>10} {'N3 total':>9}\n")
        for s, nwu, n3 in pay:
            buf.write(f"{s:>8} {nwu:>10} {n3:>9}\n")
    return buf.getvalue()
