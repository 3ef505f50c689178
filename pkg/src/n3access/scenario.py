"""Scenario files, topology builders, and trial orchestration.

A scenario is a YAML mapping::

    name: untrusted_default
    flow: untrusted            # untrusted | trusted | n5cw | wireline_5grg | wireline_fnrg
    procedures: [registration, pdu_session]
    roaming_mode: NON_ROAMING
    gateway_placement: VISITED_SAME
    home_plmn: "20893"
    seed: 7
    trials: 30
    jitter_ms: [0, 20]
    processing_ms: {AMF: 45}   # optional per-role overrides
    size_table: null           # optional file merged over the shipped tables
    qos_profiles: [1]
    subscriber: {supi: imsi-208930000000001}
    topology:
      nodes: [[ue, UE, "20893"], ...]
      links: [[ue, ap, 2], ...]
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from .core import (AccessType, GatewayPlacement, Link, Node, NodeRole, RoamingMode, Topology,
                   validate_topology)
from .errors import ConfigurationError, N3AccessError
from .flows import n5cw, trusted, untrusted, wireline
from .flows.base import UeConfig
from .messages import Procedure, SizeTable, default_size_table
from .sim import DEFAULT_PROCESSING_MS, ProcessingModel, Simulation
from .stats import TimingStats
from .trace import Outcome, ProcedureTrace

log = logging.getLogger(__name__)

HOME_PLMN = "20893"
VISITED_PLMN = "20801"

REGISTRATION = "registration"
PDU_SESSION = "pdu_session"

# ---------------------------------------------------------------------------
# Topology builders

_ACCESS_SIDE = {
    AccessType.UNTRUSTED: (("ue", NodeRole.UE), ("ap", NodeRole.AP), ("n3iwf", NodeRole.N3IWF)),
    AccessType.TRUSTED_TNGF: (("ue", NodeRole.UE), ("tnap", NodeRole.TNAP), ("tngf", NodeRole.TNGF)),
    AccessType.TRUSTED_TWIF: (("n5cw", NodeRole.UE), ("twap", NodeRole.TWAP), ("twif", NodeRole.TWIF)),
    AccessType.WIRELINE_5GRG: (("rg", NodeRole.RG_5G), ("wagf", NodeRole.W_AGF)),
    AccessType.WIRELINE_FNRG: (("fnrg", NodeRole.RG_FN), ("wagf", NodeRole.W_AGF)),
}

DEFAULT_LATENCY_MS = {"access": 2, "core": 1, "sepp": 10}


def build_topology(access: AccessType = AccessType.UNTRUSTED,
                   roaming: RoamingMode = RoamingMode.NON_ROAMING,
                   placement: GatewayPlacement = GatewayPlacement.VISITED_SAME,
                   extra_devices: int = 0, latency: Optional[dict] = None) -> Topology:
    """A small topology for ``access``.

    Without roaming everything sits in one PLMN. Under LBO or HR the
    access side and a serving core sit in the visited PLMN, the AUSF/UDM and
    a home core in the home PLMN, and the two meet only through a SEPP pair.
    With HOME placement the gateway (and the access side reaching it) is in
    the home PLMN.
    """
    lat = dict(DEFAULT_LATENCY_MS, **(latency or {}))
    side = list(_ACCESS_SIDE[access])
    dev_id, dev_role = side[0]
    side += [(f"{dev_id}{i + 2}", dev_role) for i in range(extra_devices)]
    gw = side[1 if len(_ACCESS_SIDE[access]) == 2 else 2][0]
    first_hop = side[1][0]
    nodes, links = [], []

    def core(plmn, suffix=""):
        ids = {r: f"{r.value.lower()}{suffix}" for r in
               (NodeRole.AMF, NodeRole.SMF, NodeRole.UPF, NodeRole.DN)}
        for r, i in ids.items():
            nodes.append(Node(i, r, plmn))
        links.extend([Link(ids[NodeRole.AMF], ids[NodeRole.SMF], lat["core"]),
                      Link(ids[NodeRole.SMF], ids[NodeRole.UPF], lat["core"]),
                      Link(ids[NodeRole.UPF], ids[NodeRole.DN], lat["core"])])
        return ids

    def attach_access(plmn, ids):
        for i, r in side:
            nodes.append(Node(i, r, plmn))
        for i, r in side:
            if r is dev_role:
                links.append(Link(i, first_hop, lat["access"]))
        if first_hop != gw:
            links.append(Link(first_hop, gw, lat["core"]))
        links.append(Link(gw, ids[NodeRole.AMF], lat["core"]))
        links.append(Link(gw, ids[NodeRole.UPF], lat["core"]))

    def auth_functions(plmn, amf):
        nodes.extend([Node("ausf", NodeRole.AUSF, plmn), Node("udm", NodeRole.UDM, plmn)])
        links.extend([Link(amf, "ausf", lat["core"]), Link("ausf", "udm", lat["core"])])

    if roaming is RoamingMode.NON_ROAMING:
        ids = core(HOME_PLMN)
        attach_access(HOME_PLMN, ids)
        auth_functions(HOME_PLMN, ids[NodeRole.AMF])
        return Topology(tuple(nodes), tuple(links), roaming, placement, HOME_PLMN)

    v = core(VISITED_PLMN, "-v")
    h = core(HOME_PLMN, "-h")
    access_plmn, access_core = ((HOME_PLMN, h) if placement is GatewayPlacement.HOME
                                else (VISITED_PLMN, v))
    attach_access(access_plmn, access_core)
    auth_functions(HOME_PLMN, h[NodeRole.AMF])
    nodes.extend([Node("sepp-v", NodeRole.SEPP, VISITED_PLMN), Node("sepp-h", NodeRole.SEPP, HOME_PLMN)])
    links.extend([Link(v[NodeRole.AMF], "sepp-v", lat["core"]),
                  Link(v[NodeRole.SMF], "sepp-v", lat["core"]),
                  Link(v[NodeRole.UPF], "sepp-v", lat["core"]),
                  Link("sepp-v", "sepp-h", lat["sepp"]),
                  Link("sepp-h", h[NodeRole.AMF], lat["core"]),
                  Link("sepp-h", h[NodeRole.SMF], lat["core"]),
                  Link("sepp-h", h[NodeRole.UPF], lat["core"]),
                  Link("sepp-h", "ausf", lat["core"])])
    return Topology(tuple(nodes), tuple(links), roaming, placement, HOME_PLMN)


def topology_to_dict(t: Topology) -> dict:
    return {"nodes": [[n.id, n.role.value, n.plmn] for n in t.nodes],
            "links": [[ln.a, ln.b, ln.latency_ms] for ln in t.links]}


def topology_from_dict(d: dict, roaming: RoamingMode, placement: GatewayPlacement,
                       home_plmn: Optional[str]) -> Topology:
    try:
        nodes = tuple(Node(str(i), NodeRole[str(r)], str(p)) for i, r, p in d["nodes"])
        links = tuple(Link(str(a), str(b), int(lat)) for a, b, lat in d["links"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"bad topology section: {e}") from None
    return Topology(nodes, links, roaming, placement, home_plmn)


# ---------------------------------------------------------------------------
# Scenarios

FLOW_ACCESS = {
    "untrusted": AccessType.UNTRUSTED,
    "trusted": AccessType.TRUSTED_TNGF,
    "n5cw": AccessType.TRUSTED_TWIF,
    "wireline_5grg": AccessType.WIRELINE_5GRG,
    "wireline_fnrg": AccessType.WIRELINE_FNRG,
}


@dataclass(frozen=True)
class Scenario:
    name: str
    flow: str
    topology: Topology
    procedures: tuple = (REGISTRATION, PDU_SESSION)
    seed: int = 0
    trials: int = 1
    jitter_ms: tuple = (0, 0)
    processing_ms: tuple = ()                 # (role name, ms) overrides
    size_table: Optional[str] = None
    qos_profiles: tuple = (1,)
    subscriber: tuple = ()                    # (field, value) overrides
    t_dist: bool = False

    def __post_init__(self):
        if self.flow not in FLOW_ACCESS:
            raise ConfigurationError(f"unknown flow {self.flow!r}; expected one of {sorted(FLOW_ACCESS)}")
        bad = [p for p in self.procedures if p not in (REGISTRATION, PDU_SESSION)]
        if bad or not self.procedures:
            raise ConfigurationError(f"unknown procedures {bad}")
        lo, hi = self.jitter_ms
        if lo < 0 or hi < lo:
            raise ConfigurationError(f"bad jitter bounds {self.jitter_ms}")

    @property
    def access(self) -> AccessType:
        return FLOW_ACCESS[self.flow]

    def processing(self) -> ProcessingModel:
        base = dict(DEFAULT_PROCESSING_MS)
        for role, ms in self.processing_ms:
            base[NodeRole[role]] = int(ms)
        return ProcessingModel(base, tuple(self.jitter_ms))

    def sizes(self) -> SizeTable:
        if self.size_table is None:
            return default_size_table()
        return default_size_table().merged(self.size_table)

    def subscriber_config(self):
        kw = dict(self.subscriber)
        for k in ("secret", "subscription_secret"):
            if kw.get(k) is None:
                continue
            if not isinstance(kw[k], str):
                raise ConfigurationError(f"subscriber {k} must be a quoted hex string")
            try:
                kw[k] = bytes.fromhex(kw[k])
            except ValueError:
                raise ConfigurationError(f"subscriber {k} is not valid hex") from None
        if self.flow == "untrusted":
            return UeConfig(**kw)
        if self.flow == "trusted":
            return trusted.TrustedUeConfig(**kw)
        if self.flow == "n5cw":
            if "connection_kind" in kw:
                kw["connection_kind"] = n5cw.ConnectionKind(kw["connection_kind"])
            if kw.get("pdu_profile") is not None:
                kw["pdu_profile"] = tuple(sorted(dict(kw["pdu_profile"]).items()))
            return n5cw.DeviceConfig(**kw)
        if self.flow == "wireline_5grg":
            return wireline.RgConfig(**kw)
        kw.setdefault("node", "fnrg")
        kw.setdefault("supi", "imsi-208930000000301")
        return wireline.RgConfig(rg_type=NodeRole.RG_FN, **kw)

    def simulation(self, seed=None) -> Simulation:
        return Simulation(self.topology, seed=self.seed if seed is None else seed,
                          processing=self.processing(), sizes=self.sizes())


def _as_tuple_items(d) -> tuple:
    return tuple(sorted((str(k), v) for k, v in (d or {}).items()))


def scenario_from_dict(d: dict, name: Optional[str] = None, base_dir: Optional[str] = None) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigurationError("scenario must be a mapping")
    try:
        roaming = RoamingMode[str(d.get("roaming_mode", "NON_ROAMING"))]
        placement = GatewayPlacement[str(d.get("gateway_placement", "VISITED_SAME"))]
    except KeyError as e:
        raise ConfigurationError(f"unknown enum value {e}") from None
    flow = str(d.get("flow", "untrusted"))
    home = d.get("home_plmn")
    home = str(home) if home is not None else None
    if "topology" in d:
        topo = topology_from_dict(d["topology"], roaming, placement, home)
    else:
        if flow not in FLOW_ACCESS:
            raise ConfigurationError(f"unknown flow {flow!r}")
        topo = build_topology(FLOW_ACCESS[flow], roaming, placement)
    size_table = d.get("size_table")
    if size_table and base_dir and not os.path.isabs(size_table):
        size_table = os.path.join(base_dir, size_table)
    procs = d.get("procedures", [REGISTRATION, PDU_SESSION])
    try:
        return Scenario(
            name=str(d.get("name", name or "scenario")), flow=flow, topology=topo,
            procedures=tuple(procs), seed=int(d.get("seed", 0)), trials=int(d.get("trials", 1)),
            jitter_ms=tuple(int(x) for x in d.get("jitter_ms", (0, 0))),
            processing_ms=_as_tuple_items(d.get("processing_ms")), size_table=size_table,
            qos_profiles=tuple(d.get("qos_profiles", (1,))),
            subscriber=_as_tuple_items(d.get("subscriber")), t_dist=bool(d.get("t_dist", False)))
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigurationError):
            raise
        raise ConfigurationError(f"bad scenario field: {e}") from None


def scenario_to_dict(s: Scenario) -> dict:
    out = {"name": s.name, "flow": s.flow, "procedures": list(s.procedures),
           "roaming_mode": s.topology.roaming_mode.value,
           "gateway_placement": s.topology.gateway_placement.value,
           "home_plmn": s.topology.home_plmn, "seed": s.seed, "trials": s.trials,
           "jitter_ms": list(s.jitter_ms), "qos_profiles": list(s.qos_profiles)}
    if s.processing_ms:
        out["processing_ms"] = dict(s.processing_ms)
    if s.size_table:
        out["size_table"] = s.size_table
    if s.subscriber:
        out["subscriber"] = dict(s.subscriber)
    out["topology"] = topology_to_dict(s.topology)
    return out


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a shipped scenario by name."""
    path = os.fspath(path)
    if not os.path.exists(path):
        stem = os.path.basename(path)
        stem = stem[:-5] if stem.endswith(".yaml") else stem
        shipped = resources.files("n3access").joinpath("scenarios", stem + ".yaml")
        if os.path.dirname(path) in ("", "scenarios") and shipped.is_file():
            return scenario_from_dict(yaml.safe_load(shipped.read_text()), stem)
        if os.path.exists(path + ".yaml"):
            path = path + ".yaml"
        else:
            raise ConfigurationError(f"scenario not found: {path}")
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError(f"cannot read scenario {path}: {e}") from None
    stem = os.path.splitext(os.path.basename(path))[0]
    return scenario_from_dict(data, stem, os.path.dirname(os.path.abspath(path)))


def shipped_scenarios() -> list:
    d = resources.files("n3access").joinpath("scenarios")
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".yaml"))


# ---------------------------------------------------------------------------
# Running

_REGISTER = {
    "untrusted": untrusted.run_registration,
    "trusted": trusted.run_registration_trusted,
    "n5cw": n5cw.run_registration_n5cw,
    "wireline_5grg": wireline.run_registration_5grg,
    "wireline_fnrg": wireline.run_registration_fnrg,
}


def _pdu(scenario: Scenario, sim: Simulation, reg):
    t = scenario.topology
    if scenario.flow == "untrusted":
        return untrusted.run_pdu_establishment(t, reg, scenario.qos_profiles, sim=sim)
    if scenario.flow == "trusted":
        return trusted.run_pdu_establishment_trusted(t, reg, scenario.qos_profiles, sim=sim)
    if scenario.flow == "n5cw":
        tr, ctx, _ = n5cw.run_pdu_establishment_n5cw(t, reg, sim=sim)
        return tr, ctx
    return wireline.run_pdu_establishment_wireline(t, reg, sim=sim)


@dataclass
class ScenarioRun:
    scenario: Scenario
    traces: list = field(default_factory=list)        # (procedure key, ProcedureTrace)
    registration: object = None
    session: object = None

    @property
    def outcomes(self) -> list:
        return [t.outcome for _, t in self.traces]


def run_scenario(scenario: Scenario, seed=None) -> ScenarioRun:
    """Run the scenario's procedures once, in order, on one simulation."""
    validate_topology(scenario.topology)
    sim = scenario.simulation(seed)
    out = ScenarioRun(scenario)
    trace, reg = _REGISTER[scenario.flow](scenario.topology, scenario.subscriber_config(), sim=sim)
    out.registration = reg
    if REGISTRATION in scenario.procedures:
        out.traces.append((REGISTRATION, trace))
    if PDU_SESSION in scenario.procedures:
        if trace.outcome is not Outcome.SUCCESS:
            return out
        ptrace, ctx = _pdu(scenario, sim, reg)
        out.session = ctx
        out.traces.append((PDU_SESSION, ptrace))
    return out


@dataclass(frozen=True)
class TrialResult:
    procedure: str
    stats: Optional[TimingStats]
    traces: tuple
    valid: bool = True
    failing_trial: Optional[int] = None       # 1-based index of the first ERROR trial
    error: Optional[str] = None

    @property
    def outcomes(self) -> list:
        return [t.outcome for t in self.traces]


_ERROR_PROC = {REGISTRATION: Procedure.IPSEC_SA_SIGNALING, PDU_SESSION: Procedure.PDU_SESSION_EST}


def run_trials(scenario: Scenario, procedure: str = REGISTRATION, n: Optional[int] = None,
               seed=None) -> TrialResult:
    """Run ``n`` independent instances and summarize ``procedure`` durations.

    Each trial gets its own child of the seed sequence, so the jitter of
    trial ``i`` does not depend on how many draws earlier trials made.
    """
    n = scenario.trials if n is None else n
    if n < 2:
        raise ConfigurationError("run_trials needs n >= 2")
    if procedure not in (REGISTRATION, PDU_SESSION):
        raise ConfigurationError(f"unknown procedure {procedure!r}")
    seed = scenario.seed if seed is None else seed
    children = np.random.SeedSequence(seed).spawn(n)
    sc = scenario if procedure in scenario.procedures else replace(
        scenario, procedures=tuple(dict.fromkeys(scenario.procedures + (procedure,))))
    traces, durations = [], []
    for i, child in enumerate(children, 1):
        try:
            run = run_scenario(sc, seed=child)
            tr = dict(run.traces).get(procedure)
            if tr is None:
                tr = dict(run.traces)[REGISTRATION]
        except N3AccessError as e:
            log.warning("trial %d failed: %s", i, e)
            traces.append(ProcedureTrace(_ERROR_PROC[procedure], (), Outcome.ERROR))
            return TrialResult(procedure, None, tuple(traces), False, i, str(e))
        traces.append(tr)
        durations.append(tr.duration_ms / 1000.0)
    return TrialResult(procedure, TimingStats.from_samples(durations, sc.t_dist), tuple(traces))
