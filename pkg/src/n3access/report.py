"""Run reports: per-procedure outcome, message count, byte sums, timing
statistics, and the tunnel overhead table."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .encap import overhead_rows
from .messages import Scope, sum_by_scope


@dataclass(frozen=True)
class ProcedureSummary:
    procedure: str
    outcome: str
    messages: int
    bytes_ue_gateway: Optional[int]
    bytes_core_internal: Optional[int]
    bytes_all: Optional[int]
    duration_ms: int
    trials: Optional[int] = None
    mean_s: Optional[float] = None
    std_s: Optional[float] = None
    ci95: Optional[tuple] = None
    trials_valid: Optional[bool] = None
    failing_trial: Optional[int] = None


@dataclass(frozen=True)
class RunReport:
    scenario: str
    seed: int
    procedures: tuple
    overhead: tuple = field(default_factory=lambda: tuple(overhead_rows()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["overhead"] = [dict(zip(("leg", "layer", "header_bytes", "total_overhead"), r))
                         for r in self.overhead]
        return d


def summarize(key: str, trace, trials=None) -> ProcedureSummary:
    sums = [None, None, None]
    if trace.complete:
        sums = [sum_by_scope(trace, s) for s in (Scope.UE_GATEWAY, Scope.CORE_INTERNAL, Scope.ALL)]
    extra = {}
    if trials is not None:
        extra = {"trials": len(trials.traces), "trials_valid": trials.valid,
                 "failing_trial": trials.failing_trial}
        if trials.stats is not None:
            st = trials.stats
            extra.update(mean_s=round(st.mean_s, 6), std_s=round(st.std_s, 6),
                         ci95=(round(st.ci95[0], 6), round(st.ci95[1], 6)))
    return ProcedureSummary(f"{key}:{trace.procedure.value}",
                            trace.outcome.value if trace.outcome else "NONE",
                            len(trace.messages), *sums, trace.duration_ms, **extra)


def render_text(report: RunReport) -> str:
    out = [f"scenario {report.scenario}  seed {report.seed}", ""]
    head = f"{'procedure':<42} {'outcome':<8} {'msgs':>4} {'UE-GW':>6} {'core':>6} {'total':>6} {'ms':>6}"
    out.append(head)
    out.append("-" * len(head))

    def num(v):
        return "-" if v is None else str(v)

    for p in report.procedures:
        out.append(f"{p.procedure:<42} {p.outcome:<8} {p.messages:>4} {num(p.bytes_ue_gateway):>6} "
                   f"{num(p.bytes_core_internal):>6} {num(p.bytes_all):>6} {p.duration_ms:>6}")
    timed = [p for p in report.procedures if p.trials]
    if timed:
        out += ["", f"{'procedure':<42} {'n':>3} {'mean s':>7} {'std s':>7} {'95% CI':>16}"]
        for p in timed:
            if p.mean_s is None:
                out.append(f"{p.procedure:<42} {p.trials:>3}  invalid: trial {p.failing_trial} errored")
                continue
            ci = f"({p.ci95[0]:.2f}, {p.ci95[1]:.2f})"
            out.append(f"{p.procedure:<42} {p.trials:>3} {p.mean_s:>7.2f} {p.std_s:>7.2f} {ci:>16}")
    out += ["", f"{'leg':<5} {'layer':<9} {'header':>6} {'overhead':>8}"]
    for leg, layer, b, total in report.overhead:
        out.append(f"{leg:<5} {layer:<9} {b:>6} {total:>8}")
    return "\n".join(out) + "\n"


def render_records(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
