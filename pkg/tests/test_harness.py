import dataclasses
import math

import pytest
import yaml

from oracles import REGISTRATION_ROWS
from n3access.core import AccessType, GatewayPlacement, Link, Node, NodeRole, RoamingMode, Topology
from n3access.errors import ConfigurationError, GoldenParseError, UnreachableError
from n3access.flows.untrusted import run_registration
from n3access.messages import MessageKind, nest
from n3access.scenario import (
    build_topology, load_scenario, run_scenario, run_trials, scenario_from_dict, scenario_to_dict,
    shipped_scenarios,
)
from n3access.sim import ProcessingModel, SimNetwork, Simulation, ZERO_PROCESSING, deliver
from n3access.stats import TimingStats
from n3access.trace import (
    Outcome, conformance_check, dump_trace, load_trace, parse_golden, render_chart, shipped_golden,
)


def _line(latency):
    return Topology((Node("a", NodeRole.UE, "p"), Node("b", NodeRole.N3IWF, "p")),
                    (Link("a", "b", latency),))


def test_deliver_zero_latency():
    msg = nest(MessageKind.IKE_SA_INIT_REQ, 10, src="a", dst="b")
    assert deliver(SimNetwork(_line(0)), msg, 42).time_ms == 42
    assert deliver(SimNetwork(_line(7)), msg, 42).time_ms == 49


def test_hr_amf_path_crosses_two_sepps():
    net = SimNetwork(build_topology(AccessType.UNTRUSTED, RoamingMode.HR))
    r = net.route("amf-v", "amf-h")
    assert r.sepp_hops == 2
    assert r.latency_ms == 1 + 10 + 1


def test_partitioned_unreachable():
    t = Topology((Node("a", NodeRole.UE, "p"), Node("b", NodeRole.AMF, "p")), ())
    with pytest.raises(UnreachableError):
        SimNetwork(t).route("a", "b")


def test_processing_delay_bounds():
    import numpy as np
    pm = ProcessingModel({NodeRole.AMF: 10}, (2, 5))
    rng = np.random.default_rng(0)
    ds = {pm.delay(NodeRole.AMF, rng) for _ in range(500)}
    assert ds == {12, 13, 14, 15}
    assert ZERO_PROCESSING.delay(NodeRole.AMF, rng) == 0


def test_conservation_and_ordering():
    t = build_topology()
    sim = Simulation(t, seed=3)
    trace, _ = run_registration(t, sim=sim)
    assert sim.sent == sim.delivered == len(trace.records)
    keys = [(r.time_ms, r.seq) for r in trace.records]
    assert keys == sorted(keys)
    assert trace.duration_ms >= 0


def test_serialization_round_trip():
    trace, _ = run_registration(build_topology(), sim=Simulation(build_topology(), seed=11))
    text = dump_trace(trace)
    back = load_trace(text)
    assert dump_trace(back) == text
    assert back.outcome is Outcome.SUCCESS
    assert [(r.kind_name, r.size) for r in back.messages] == [(r.kind_name, r.size) for r in trace.messages]
    chart = render_chart(trace)
    assert "IKE_SA_INIT_REQ" in chart and "UE" in chart


def test_load_trace_errors():
    with pytest.raises(GoldenParseError):
        load_trace("# procedure=NOPE\n")
    with pytest.raises(GoldenParseError):
        load_trace("# procedure=IPSEC_SA_SIGNALING outcome=SUCCESS\nfoo,bar\n")


# ---------------------------------------------------------------------------
# conformance

@pytest.fixture(scope="module")
def reg_trace():
    trace, _ = run_registration(build_topology())
    return trace


def test_conformance_pass(reg_trace):
    res = conformance_check(reg_trace, shipped_golden("table6.sizes"))
    assert res and res.report() == "conformance: pass"


def _swap_messages(trace, i, j):
    recs = list(trace.records)
    pos = [k for k, r in enumerate(recs) if r.kind is not None]
    a, b = pos[i - 1], pos[j - 1]
    recs[a], recs[b] = recs[b], recs[a]
    return dataclasses.replace(trace, records=tuple(recs))


def test_swapped_messages_diverge_at_7(reg_trace):
    res = conformance_check(_swap_messages(reg_trace, 7, 8), shipped_golden("table6.sizes"))
    assert not res and res.index == 7


def test_altered_size_cited(reg_trace):
    recs = list(reg_trace.records)
    k = next(i for i, r in enumerate(recs) if r.kind is not None and r.seq > 3)
    recs[k] = dataclasses.replace(recs[k], size=recs[k].size + 1)
    res = conformance_check(dataclasses.replace(reg_trace, records=tuple(recs)),
                            shipped_golden("table6.sizes"))
    assert not res and res.field == "size"


def test_length_mismatch(reg_trace):
    short = dataclasses.replace(reg_trace, records=reg_trace.records[:-1])
    res = conformance_check(short, shipped_golden("table6.sizes"))
    assert not res and res.field == "length" and res.index == 20


def test_golden_parse_errors():
    with pytest.raises(GoldenParseError) as ei:
        parse_golden(["# c", "1, IKE_SA_INIT_REQ, UE"], "g")
    assert ei.value.lineno == 2
    with pytest.raises(GoldenParseError):
        parse_golden(["1, NOT_A_KIND, UE, N3IWF"])
    with pytest.raises(GoldenParseError):
        parse_golden(["1, INTERNAL, UE, WIZARD"])
    with pytest.raises(GoldenParseError):
        parse_golden(["# only comments"])
    assert len(parse_golden(["9?, INTERNAL, UE, UE"], include_conditional=True)) == 1


# ---------------------------------------------------------------------------
# statistics

def test_stats_formula():
    s = TimingStats.from_summary(30, 0.93, 0.41)
    half = 1.96 * 0.41 / math.sqrt(30)
    assert s.ci95 == pytest.approx((0.93 - half, 0.93 + half))
    assert TimingStats.from_summary(30, 0.22, 0.04).rounded()[2:] == (0.21, 0.23)
    t = TimingStats.from_summary(30, 0.93, 0.41, t_dist=True)
    assert t.ci95[1] - t.ci95[0] > s.ci95[1] - s.ci95[0]


def test_stats_from_samples():
    s = TimingStats.from_samples([1.0, 2.0, 3.0])
    assert s.mean_s == 2.0 and s.std_s == 1.0
    with pytest.raises(ValueError):
        TimingStats.from_samples([1.0])


def test_zero_jitter_collapses():
    sc = dataclasses.replace(load_scenario("untrusted_default"), jitter_ms=(0, 0))
    r = run_trials(sc, "registration", 5)
    assert r.stats.std_s == 0 and r.stats.ci95 == (r.stats.mean_s, r.stats.mean_s)


def test_trials_deterministic():
    sc = load_scenario("untrusted_default")
    a, b = run_trials(sc, "pdu_session", 6, seed=4), run_trials(sc, "pdu_session", 6, seed=4)
    assert a.stats == b.stats
    assert run_trials(sc, "pdu_session", 6, seed=5).stats != a.stats


def test_trials_need_two():
    with pytest.raises(ConfigurationError):
        run_trials(load_scenario("untrusted_default"), "registration", 1)


def test_erroring_trial_marks_invalid():
    sc = load_scenario("untrusted_default")
    t = sc.topology
    no_upf = Topology(tuple(n for n in t.nodes if n.role is not NodeRole.UPF),
                      tuple(l for l in t.links if "upf" not in (l.a, l.b)),
                      t.roaming_mode, t.gateway_placement, t.home_plmn)
    r = run_trials(dataclasses.replace(sc, topology=no_upf), "pdu_session", 3)
    assert not r.valid and r.failing_trial == 1 and r.outcomes == [Outcome.ERROR]


def test_calibrated_means():
    sc = load_scenario("untrusted_default")
    reg = run_trials(sc, "registration", 30, seed=7).stats
    pdu = run_trials(sc, "pdu_session", 30, seed=7).stats
    assert round(reg.mean_s, 2) == 0.93
    assert round(pdu.mean_s, 2) == 0.22


# ---------------------------------------------------------------------------
# scenarios

def test_shipped_scenarios_listed():
    names = shipped_scenarios()
    assert "untrusted_default" in names and len(names) == 10


@pytest.mark.parametrize("name", shipped_scenarios())
def test_scenario_dict_round_trip(name):
    sc = load_scenario(name)
    again = scenario_from_dict(scenario_to_dict(sc), name)
    assert again == sc


def test_scenario_file_with_topology(tmp_path):
    d = scenario_to_dict(load_scenario("untrusted_default"))
    d["seed"] = 99
    p = tmp_path / "mine.yaml"
    p.write_text(yaml.safe_dump(d))
    sc = load_scenario(p)
    assert sc.name == "untrusted_default" and sc.seed == 99
    run = run_scenario(sc)
    assert [(r.kind_name, r.src_role.name, r.dst_role.name, r.size)
            for r in run.traces[0][1].messages] == REGISTRATION_ROWS


@pytest.mark.parametrize("bad", [
    {"flow": "carrier-pigeon"},
    {"roaming_mode": "SOMETIMES"},
    {"jitter_ms": [5, 1]},
    {"procedures": ["teleport"]},
    {"seed": "abc"},
])
def test_bad_scenarios(bad):
    with pytest.raises(ConfigurationError):
        scenario_from_dict(dict({"flow": "untrusted"}, **bad))


def test_missing_scenario():
    with pytest.raises(ConfigurationError):
        load_scenario("does/not/exist.yaml")
