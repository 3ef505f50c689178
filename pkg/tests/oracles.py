"""Reference values transcribed by hand for the tests, independent of the
package's own shipped tables."""

# (kind, src role, dst role, bytes) for the untrusted registration exchange.
REGISTRATION_ROWS = [
    ("IKE_SA_INIT_REQ", "UE", "N3IWF", 644),
    ("IKE_SA_INIT_RESP", "N3IWF", "UE", 644),
    ("IKE_AUTH_REQ", "UE", "N3IWF", 216),
    ("IKE_AUTH_RESP", "N3IWF", "UE", 1448),
    ("IKE_AUTH_REQ", "UE", "N3IWF", 200),
    ("NGAP_INITIAL_UE_MESSAGE", "N3IWF", "AMF", 128),
    ("NAS_AUTH_REQ", "AMF", "N3IWF", 148),
    ("IKE_AUTH_RESP", "N3IWF", "UE", 168),
    ("IKE_AUTH_REQ", "UE", "N3IWF", 152),
    ("NAS_AUTH_RESP", "N3IWF", "AMF", 140),
    ("NAS_SMC_CMD", "AMF", "N3IWF", 124),
    ("IKE_AUTH_RESP", "N3IWF", "UE", 152),
    ("IKE_AUTH_REQ", "UE", "N3IWF", 184),
    ("NGAP_UPLINK_NAS", "N3IWF", "AMF", 168),
    ("NGAP_INITIAL_CTX_SETUP_REQ", "AMF", "N3IWF", 188),
    ("IKE_AUTH_RESP", "N3IWF", "UE", 120),
    ("IKE_AUTH_REQ", "UE", "N3IWF", 136),
    ("IKE_AUTH_RESP", "N3IWF", "UE", 296),
    ("NGAP_INITIAL_CTX_SETUP_RESP", "N3IWF", "AMF", 100),
    ("NGAP_DOWNLINK_NAS", "AMF", "N3IWF", 160),
]
REGISTRATION_SUMS = (4360, 1156, 5516)

PDU_ROWS = [
    ("PFCP_SESSION_EST_REQ", "SMF", "UPF", 271),
    ("PFCP_SESSION_EST_RESP", "UPF", "SMF", 107),
    ("NGAP_PDU_RESOURCE_SETUP_REQ", "AMF", "N3IWF", 271),
    ("GTPU_ECHO_REQ", "N3IWF", "UPF", 58),
    ("GTPU_ECHO_RESP", "UPF", "N3IWF", 58),
    ("CREATE_CHILD_SA_REQ", "N3IWF", "UE", 488),
    ("CREATE_CHILD_SA_RESP", "UE", "N3IWF", 456),
    ("NGAP_PDU_RESOURCE_SETUP_RESP", "N3IWF", "AMF", 120),
]
PDU_SUMS = (944, 885, 1829)

# Direction census of the registration rows, counted by hand.
REGISTRATION_CENSUS = {("UE", "N3IWF"): 6, ("N3IWF", "UE"): 6, ("N3IWF", "AMF"): 4, ("AMF", "N3IWF"): 4}

NWU_OVERHEAD = 20 + 16 + 8
N3_OVERHEAD = 20 + 8 + 8

# (n, mean, std) -> two-decimal CI bounds as printed in the timing table.
TIMING_ROWS = [
    ((30, 0.93, 0.41), (0.78, 1.07)),
    ((30, 0.22, 0.04), (0.21, 0.23)),
]


def sums(rows, ue_side=("UE",)):
    ue = sum(r[3] for r in rows if r[1] in ue_side or r[2] in ue_side)
    total = sum(r[3] for r in rows)
    return ue, total - ue, total
