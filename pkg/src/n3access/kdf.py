"""Key hierarchy derived on both sides of a non-3GPP registration.

Every derived key is 32 bytes, produced by HMAC-SHA256 keyed with the parent
key over ``label || 0x00 || context``. The chain edges are::

    long-term secret --ANCHOR(challenge)--> anchor
    anchor --SEAF(serving PLMN)--> SEAF key
    SEAF --NAS_INT / NAS_ENC--> NAS keys          (NAS-capable access only)
    SEAF --GW_*--> gateway key                    (N3IWF / TNGF / W-AGF / AN key)
    TNGF key --TNAP--> TNAP key                   (trusted TNGF path)
    AN key --PMK--> PMK --WLAN(anonce||snonce)--> WLAN keys   (TWIF path)
"""
from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from .core import AccessType
from .errors import DerivationError, IncompleteHierarchyError

KEY_LEN = 32
RES_LEN = 16


class KeyLabel(Enum):
    ANCHOR = "ANCHOR"
    SEAF = "SEAF"
    NAS_INT = "NAS_INT"
    NAS_ENC = "NAS_ENC"
    GW_N3IWF = "GW_N3IWF"
    GW_TNGF = "GW_TNGF"
    GW_WAGF = "GW_WAGF"
    GW_AN = "GW_AN"
    TNAP = "TNAP"
    PMK = "PMK"
    WLAN = "WLAN"


GATEWAY_LABEL = {
    AccessType.UNTRUSTED: KeyLabel.GW_N3IWF,
    AccessType.TRUSTED_TNGF: KeyLabel.GW_TNGF,
    AccessType.TRUSTED_TWIF: KeyLabel.GW_AN,
    AccessType.WIRELINE_5GRG: KeyLabel.GW_WAGF,
    AccessType.WIRELINE_FNRG: KeyLabel.GW_WAGF,
}


def derive(parent: bytes, label, context: bytes = b"") -> bytes:
    """Derive a 32-byte child key of ``parent`` under ``label``.

    ``label`` may be a :class:`KeyLabel` or its name.
    """
    if not isinstance(label, KeyLabel):
        try:
            label = KeyLabel[label]
        except (KeyError, TypeError):
            raise DerivationError(f"unknown derivation label {label!r}") from None
    if len(parent) != KEY_LEN:
        raise DerivationError(f"parent key must be {KEY_LEN} bytes, got {len(parent)}")
    msg = label.value.encode("ascii") + b"\x00" + bytes(context)
    return hmac.new(parent, msg, hashlib.sha256).digest()


@dataclass(frozen=True)
class AuthResult:
    ue_response: bytes
    network_expected: bytes
    success: bool
    anchor_key: Optional[bytes]     # set only on success


def _response(anchor: bytes) -> bytes:
    return hashlib.sha256(b"RES" + anchor).digest()[:RES_LEN]


def run_authentication(ue_secret: bytes, network_secret: bytes, challenge: bytes) -> AuthResult:
    """Challenge/response over a shared long-term secret.

    Both sides compute ``derive(secret, ANCHOR, challenge)``; the UE returns a
    response digest of its anchor, which the network compares with its own.
    A mismatch is an ordinary outcome, never an exception.
    """
    ue_anchor = derive(ue_secret, KeyLabel.ANCHOR, challenge)
    net_anchor = derive(network_secret, KeyLabel.ANCHOR, challenge)
    res, xres = _response(ue_anchor), _response(net_anchor)
    ok = hmac.compare_digest(res, xres)
    return AuthResult(res, xres, ok, net_anchor if ok else None)


@dataclass(frozen=True)
class KeyHierarchy:
    long_term_key: Optional[bytes] = None
    anchor_key: Optional[bytes] = None
    seaf_key: Optional[bytes] = None
    nas_keys: Optional[tuple] = None        # (integrity, ciphering)
    gateway_key: Optional[bytes] = None
    tnap_key: Optional[bytes] = None
    pmk: Optional[bytes] = None
    wlan_keys: Optional[bytes] = None

    def populated(self) -> frozenset:
        """Names of the derived levels that hold a key."""
        names = ("anchor_key", "seaf_key", "nas_keys", "gateway_key", "tnap_key", "pmk", "wlan_keys")
        return frozenset(n for n in names if getattr(self, n) is not None)

    def derived_levels(self) -> dict:
        return {n: getattr(self, n) for n in sorted(self.populated())}


def derive_chain(h: KeyHierarchy, access: AccessType, serving_plmn: str = "",
                 nonces: Optional[tuple] = None) -> KeyHierarchy:
    """Fill every key below the anchor that ``access`` uses.

    ``nonces`` is the (anonce, snonce) pair of the WLAN 4-way handshake; WLAN
    keys are only derived on the TWIF path and only once nonces are given.
    """
    if h.anchor_key is None:
        raise IncompleteHierarchyError("anchor key missing")
    seaf = derive(h.anchor_key, KeyLabel.SEAF, serving_plmn.encode())
    nas = None
    if access.nas_capable:
        nas = (derive(seaf, KeyLabel.NAS_INT), derive(seaf, KeyLabel.NAS_ENC))
    gw = derive(seaf, GATEWAY_LABEL[access], access.value.encode())
    tnap = pmk = wlan = None
    if access is AccessType.TRUSTED_TNGF:
        tnap = derive(gw, KeyLabel.TNAP)
    elif access is AccessType.TRUSTED_TWIF:
        pmk = derive(gw, KeyLabel.PMK)
        if nonces is not None:
            wlan = derive(pmk, KeyLabel.WLAN, bytes(nonces[0]) + bytes(nonces[1]))
    return replace(h, seaf_key=seaf, nas_keys=nas, gateway_key=gw,
                   tnap_key=tnap, pmk=pmk, wlan_keys=wlan)


def complete_handshake(h: KeyHierarchy, anonce: bytes, snonce: bytes) -> KeyHierarchy:
    """Derive WLAN keys from an established PMK and the handshake nonces."""
    if h.pmk is None:
        raise IncompleteHierarchyError("PMK missing")
    return replace(h, wlan_keys=derive(h.pmk, KeyLabel.WLAN, anonce + snonce))
