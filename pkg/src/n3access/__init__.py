"""Simulator for 5G non-3GPP access: untrusted (N3IWF), trusted (TNGF and
TWIF) and wireline (W-AGF) registration, PDU session establishment, byte
accounting and user-plane tunnel overhead."""
__version__ = "0.1.0"
