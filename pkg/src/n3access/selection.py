"""Access network discovery and selection.

Untrusted access ranks the visible networks with prioritized policy rules;
trusted access learns what each network offers through an ANQP exchange.
"""
from __future__ import annotations

import fnmatch
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .core import AccessType, Link, Node, NodeRole, Topology
from .errors import AnqpUnsupportedError, ConfigurationError, GoldenParseError, NoCandidateError
from .messages import MessageKind, Procedure
from .sim import ZERO_PROCESSING, Simulation
from .trace import Outcome


class Origin(Enum):
    HOME = "HOME"
    VISITED = "VISITED"


class Connectivity(Enum):
    TRUSTED = "trusted"
    UNTRUSTED = "untrusted"


@dataclass(frozen=True)
class Rule:
    pattern: str
    priority: int
    access: Optional[AccessType] = None    # None matches any access type

    def __post_init__(self):
        if self.priority < 0:
            raise ConfigurationError(f"negative priority in rule {self.pattern!r}")
        if self.pattern.count("*") > 1 or any(c in self.pattern for c in "?[]"):
            raise ConfigurationError(f"pattern {self.pattern!r}: at most one '*' wildcard")

    def matches(self, network_id: str) -> bool:
        if "*" in self.pattern:
            return fnmatch.fnmatchcase(network_id, self.pattern)
        return network_id == self.pattern


@dataclass(frozen=True)
class SelectionPolicy:
    rules: tuple
    origin: Origin = Origin.HOME

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        prios = [r.priority for r in self.rules]
        if len(prios) != len(set(prios)):
            raise ConfigurationError(f"duplicate priorities in {self.origin.value} policy")


@dataclass(frozen=True)
class AdvertisedNetwork:
    network_id: str                 # e.g. an SSID
    plmn: str
    access_types: tuple = (AccessType.UNTRUSTED,)
    ap: Optional[str] = None        # node id answering ANQP queries
    anqp_enabled: bool = True
    advertisement: tuple = ()       # (plmn, Connectivity) pairs offered over ANQP


@dataclass(frozen=True)
class Selection:
    network: AdvertisedNetwork
    access: AccessType
    rule: Rule
    origin: Origin
    gateway: Optional[str]


def select_network(available: Iterable, policies: Iterable, roaming: bool = False,
                   topology: Optional[Topology] = None) -> Selection:
    """Pick the network matched by the best-priority rule.

    Lower priority numbers win. When roaming, home and visited policies
    compete and home wins a priority tie; otherwise visited policies are
    ignored. Remaining ties go to the lexicographically smallest network id,
    so the result does not depend on the order of ``available``.
    """
    available = list(available)
    if not available:
        raise NoCandidateError("no networks available")
    candidates = []
    for pol in policies:
        if pol.origin is Origin.VISITED and not roaming:
            continue
        for rule in pol.rules:
            for net in available:
                if not rule.matches(net.network_id):
                    continue
                for acc in sorted(net.access_types, key=lambda a: a.value):
                    if rule.access is not None and rule.access is not acc:
                        continue
                    rank = (rule.priority, 0 if pol.origin is Origin.HOME else 1,
                            net.network_id, net.plmn, acc.value)
                    candidates.append((rank, net, acc, rule, pol.origin))
    if not candidates:
        raise NoCandidateError("no policy rule matches an available network")
    _, net, acc, rule, origin = min(candidates, key=lambda c: c[0])
    gw = topology.first(acc.gateway_role, net.plmn) if topology is not None else None
    return Selection(net, acc, rule, origin, gw)


def anqp_exchange(ue: str, network: AdvertisedNetwork, sim: Optional[Simulation] = None) -> tuple:
    """Query ``network`` over ANQP. Returns ``(entries, trace)``.

    The entries are the network's advertisement, verbatim.
    """
    if not network.anqp_enabled:
        raise AnqpUnsupportedError(f"{network.network_id} does not answer ANQP; use static configuration")
    ap = network.ap or f"ap-{network.network_id}"
    if sim is None:
        topo = Topology((Node(ue, NodeRole.UE, network.plmn), Node(ap, NodeRole.AP, network.plmn)),
                        (Link(ue, ap, 0),))
        sim = Simulation(topo, processing=ZERO_PROCESSING)
    entries = tuple(network.advertisement)
    rec = sim.begin(Procedure.ANQP_DISCOVERY)
    rec.send(MessageKind.ANQP_QUERY, ue, ap, label="ANQP query")
    rec.send(MessageKind.ANQP_RESPONSE, ap, ue, label="ANQP response",
             payload={"plmns": tuple((p, getattr(c, "value", c)) for p, c in entries)})
    return list(entries), rec.finish(Outcome.SUCCESS)


# ---------------------------------------------------------------------------
# Policy files

def parse_policies(lines: Iterable[str], path=None) -> list:
    """Parse ``pattern, priority, access_constraint, origin`` lines into one
    policy per origin. ``access_constraint`` is an access type name or ``ANY``."""
    rules = {Origin.HOME: [], Origin.VISITED: []}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        f = [x.strip() for x in line.split(",")]
        if len(f) != 4:
            raise GoldenParseError(f"policy line needs 4 fields, got {len(f)}", lineno, path)
        try:
            prio = int(f[1])
            acc = None if f[2].upper() == "ANY" else AccessType[f[2].upper()]
            origin = Origin[f[3].upper()]
            rules[origin].append(Rule(f[0], prio, acc))
        except (ValueError, KeyError) as e:
            raise GoldenParseError(f"bad policy line: {e}", lineno, path) from None
    return [SelectionPolicy(tuple(r), o) for o, r in rules.items() if r]


def load_policies(path) -> list:
    with open(path) as fh:
        return parse_policies(fh, str(path))
