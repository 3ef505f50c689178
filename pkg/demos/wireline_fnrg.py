"""A legacy FN-RG has no NAS stack, so the W-AGF registers on its behalf."""
from n3access.core import AccessType, NodeRole
from n3access.flows.wireline import run_pdu_establishment_wireline, run_registration_fnrg
from n3access.scenario import build_topology
from n3access.sim import Simulation

topo = build_topology(AccessType.WIRELINE_FNRG)
sim = Simulation(topo, seed=5)

for attempt in (1, 2):
    trace, reg = run_registration_fnrg(topo, sim=sim)
    senders = sorted({r.src_role.name for r in trace.messages})
    cached = any("cached" in r.label for r in trace.records)
    print(f"attempt {attempt}: registered={reg.registered} steps={len(trace.steps)}"
          f" senders={senders} cached-identity={cached}")

pdu, ctx = run_pdu_establishment_wireline(topo, reg, sim=sim)
print("PDU requested by", next(r.src_role.name for r in pdu.messages
                               if "NAS_PDU_SESSION_EST_REQ" in r.nesting))
print("FN-RG itself sent:", [r.kind_name for r in pdu.messages if r.src_role is NodeRole.RG_FN])
