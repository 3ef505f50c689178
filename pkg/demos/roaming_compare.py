"""Same UE, three roaming setups. Home routing pays for every SEPP crossing."""
from n3access.core import AccessType, RoamingMode
from n3access.scenario import load_scenario, run_scenario, run_trials

for name in ("untrusted_default", "untrusted_lbo", "untrusted_hr"):
    sc = load_scenario(name)
    run = run_scenario(sc)
    crossings = sum(r.sepp_hops > 0 for _, t in run.traces for r in t.records)
    pdu = run_trials(sc, "pdu_session", 20).stats
    print(f"{name:18s} {sc.topology.roaming_mode.name:12s} SEPP legs={crossings:2d}"
          f"  PDU setup mean={pdu.mean_s:.3f}s")

# N5CW devices are not allowed to roam home-routed
from n3access.errors import TopologyError
from n3access.flows.n5cw import run_registration_n5cw
from n3access.scenario import build_topology
try:
    run_registration_n5cw(build_topology(AccessType.TRUSTED_TWIF, RoamingMode.HR))
except TopologyError as e:
    print("n5cw under HR:", e.errors)
