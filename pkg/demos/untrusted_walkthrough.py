"""Register a UE over untrusted Wi-Fi, open a PDU session and print what it cost."""
from n3access.encap import encap_n3, encap_nwu
from n3access.flows.untrusted import run_pdu_establishment, run_registration
from n3access.scenario import build_topology
from n3access.sim import Simulation
from n3access.trace import render_chart


def main():
    topo = build_topology()
    sim = Simulation(topo, seed=1)

    reg_trace, reg = run_registration(topo, sim=sim)
    print(render_chart(reg_trace))
    print(f"registered={reg.registered}  messages={len(reg_trace.messages)}"
          f"  bytes={sum(r.size for r in reg_trace.messages)}  took {reg_trace.duration_ms} ms\n")

    pdu_trace, ctx = run_pdu_establishment(topo, reg, sim=sim)
    print(render_chart(pdu_trace))
    print(f"session {ctx.session_id} up, teid={ctx.gtpu_teid:#x}\n")

    # what a user packet looks like on each leg
    for size in (64, 576, 1400):
        print(f"{size:5d} B payload -> NWu {encap_nwu(size, ctx).total_bytes:5d} B,"
              f" N3 {encap_n3(size, ctx).total_bytes:5d} B")


if __name__ == "__main__":
    main()
