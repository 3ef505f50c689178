"""Procedure traces: records, serialization, golden files and conformance."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .core import NodeRole
from .errors import GoldenParseError
from .messages import Message, MessageKind, Procedure, read_table_text

INTERNAL = "INTERNAL"


class Outcome(Enum):
    SUCCESS = "SUCCESS"
    FAILED = "FAILED"
    ERROR = "ERROR"


@dataclass(frozen=True)
class TraceRecord:
    seq: int
    time_ms: int                     # departure
    arrival_ms: int
    kind: Optional[MessageKind]      # None for an internal event
    src: str
    dst: str
    src_role: NodeRole
    dst_role: NodeRole
    size: int = 0
    protected: bool = False
    nesting: tuple = ()
    step: str = ""
    label: str = ""
    hops: int = 0
    sepp_hops: int = 0
    message: Optional[Message] = field(default=None, compare=False, repr=False)

    @property
    def is_message(self) -> bool:
        return self.kind is not None

    @property
    def kind_name(self) -> str:
        return self.kind.name if self.kind is not None else INTERNAL


@dataclass(frozen=True)
class ProcedureTrace:
    procedure: Procedure
    records: tuple
    outcome: Optional[Outcome]
    roles: tuple = ()        # (node_id, NodeRole) pairs for every endpoint seen

    @property
    def complete(self) -> bool:
        return self.outcome in (Outcome.SUCCESS, Outcome.FAILED)

    @property
    def messages(self) -> list:
        return [r for r in self.records if r.is_message]

    @property
    def duration_ms(self) -> int:
        if not self.records:
            return 0
        return max(r.arrival_ms for r in self.records) - self.records[0].time_ms

    @property
    def steps(self) -> list:
        """Distinct step labels in order of first appearance."""
        out = []
        for r in self.records:
            if r.step and r.step not in out:
                out.append(r.step)
        return out

    def __len__(self):
        return len(self.records)


# ---------------------------------------------------------------------------
# Serialization

RECORD_FIELDS = ("seq", "time_ms", "kind", "src", "dst", "size", "protected", "nesting",
                 "step", "label", "arrival_ms", "hops", "sepp_hops")


def dump_trace(trace: ProcedureTrace) -> str:
    """Machine-readable record listing. Byte sums are re-derivable from it."""
    buf = io.StringIO()
    outcome = trace.outcome.value if trace.outcome else "NONE"
    buf.write(f"# procedure={trace.procedure.value} outcome={outcome}\n")
    buf.write("# roles=" + ",".join(f"{n}:{r.value}" for n, r in trace.roles) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in trace.records:
        w.writerow([r.seq, r.time_ms, r.kind_name, r.src, r.dst, r.size, int(r.protected),
                    ">".join(r.nesting), r.step, r.label, r.arrival_ms, r.hops, r.sepp_hops])
    return buf.getvalue()


def load_trace(text: str, path=None) -> ProcedureTrace:
    lines = text.splitlines()
    header = {}
    body = []
    for ln in lines:
        if ln.startswith("#"):
            for part in ln[1:].split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    header[k] = v
        elif ln.strip():
            body.append(ln)
    try:
        procedure = Procedure[header["procedure"]]
        roles = {}
        if header.get("roles"):
            for pair in header["roles"].split(","):
                n, r = pair.rsplit(":", 1)
                roles[n] = NodeRole[r]
    except (KeyError, ValueError) as e:
        raise GoldenParseError(f"bad trace header: {e}", 1, path) from None
    outcome = None if header.get("outcome", "NONE") == "NONE" else Outcome[header["outcome"]]
    records = []
    reader = csv.DictReader(body)
    if reader.fieldnames is None or tuple(reader.fieldnames[:8]) != RECORD_FIELDS[:8]:
        raise GoldenParseError("missing or malformed record header", None, path)
    for i, row in enumerate(reader, 1):
        try:
            kind = None if row["kind"] == INTERNAL else MessageKind[row["kind"]]
            records.append(TraceRecord(
                seq=int(row["seq"]), time_ms=int(row["time_ms"]),
                arrival_ms=int(row.get("arrival_ms") or row["time_ms"]),
                kind=kind, src=row["src"], dst=row["dst"],
                src_role=roles[row["src"]], dst_role=roles[row["dst"]],
                size=int(row["size"]), protected=row["protected"] == "1",
                nesting=tuple(x for x in row["nesting"].split(">") if x),
                step=row.get("step") or "", label=row.get("label") or "",
                hops=int(row.get("hops") or 0), sepp_hops=int(row.get("sepp_hops") or 0)))
        except (KeyError, ValueError) as e:
            raise GoldenParseError(f"bad record: {e}", i, path) from None
    return ProcedureTrace(procedure, tuple(records), outcome, tuple(roles.items()))


def render_chart(trace: ProcedureTrace) -> str:
    """Human-readable sequence chart."""
    out = [f"{trace.procedure.value}  outcome={trace.outcome.value if trace.outcome else '-'}"
           f"  duration={trace.duration_ms} ms"]
    for r in trace.records:
        step = f"({r.step})" if r.step else ""
        if r.is_message:
            what = r.kind_name + (f" [{r.label}]" if r.label else "")
            lock = "*" if r.protected else " "
            out.append(f"{r.seq:>3} {r.time_ms:>7} ms {step:>6} {r.src_role.value:>6} -> "
                       f"{r.dst_role.value:<6} {lock} {what} ({r.size} B)")
        else:
            out.append(f"{r.seq:>3} {r.time_ms:>7} ms {step:>6} {r.src_role.value:>6} .. "
                       f"{r.dst_role.value:<6}   <{r.label}>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Golden files and conformance

@dataclass(frozen=True)
class GoldenEntry:
    kind: str                 # MessageKind name or INTERNAL
    src_role: NodeRole
    dst_role: NodeRole
    size: Optional[int] = None
    step: Optional[str] = None
    label: str = ""
    conditional: bool = False
    lineno: int = 0


def parse_golden(lines: Iterable[str], path=None, include_conditional: bool = True) -> list:
    """Parse a size table (``procedure, seq, kind, src, dst, size``) or a step
    map (``step, kind-or-internal, src, dst[, label]``).

    In step maps a step written as ``9?`` is conditional and dropped when
    ``include_conditional`` is false.
    """
    entries = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        f = [x.strip() for x in line.split(",")]
        if f[0] and f[0][0].isdigit():
            if len(f) not in (4, 5):
                raise GoldenParseError(f"step map line needs 4 or 5 fields, got {len(f)}", lineno, path)
            step, cond = f[0], False
            if step.endswith("?"):
                step, cond = step[:-1], True
            if not step.isdigit():
                raise GoldenParseError(f"bad step {f[0]!r}", lineno, path)
            kind = f[1].upper()
            label = f[4] if len(f) == 5 else ""
            size = None
        else:
            if len(f) != 6:
                raise GoldenParseError(f"size table line needs 6 fields, got {len(f)}", lineno, path)
            if f[0] not in Procedure.__members__:
                raise GoldenParseError(f"unknown procedure {f[0]!r}", lineno, path)
            step, cond, kind, label = f[1], False, f[2], ""
            try:
                size = int(f[5])
            except ValueError:
                raise GoldenParseError("size must be an integer", lineno, path) from None
        if kind != INTERNAL and kind not in MessageKind.__members__:
            raise GoldenParseError(f"unknown message kind {kind!r}", lineno, path)
        try:
            src, dst = NodeRole[f[2 if size is None else 3]], NodeRole[f[3 if size is None else 4]]
        except KeyError as e:
            raise GoldenParseError(f"unknown role {e.args[0]!r}", lineno, path) from None
        if cond and not include_conditional:
            continue
        entries.append(GoldenEntry(kind, src, dst, size, step, label, cond, lineno))
    if not entries:
        raise GoldenParseError("golden file has no entries", None, path)
    return entries


def load_golden(path, include_conditional: bool = True) -> list:
    with open(path) as fh:
        return parse_golden(fh, os.fspath(path), include_conditional)


def shipped_golden(name: str, include_conditional: bool = True) -> list:
    return parse_golden(read_table_text(name).splitlines(), name, include_conditional)


@dataclass(frozen=True)
class ConformanceResult:
    passed: bool
    index: Optional[int] = None       # 1-based position of the first divergence
    field: Optional[str] = None
    expected: object = None
    actual: object = None

    def __bool__(self):
        return self.passed

    def report(self) -> str:
        if self.passed:
            return "conformance: pass"
        return (f"conformance: divergence at index {self.index} ({self.field}): "
                f"expected {self.expected!r}, actual {self.actual!r}")


def conformance_check(trace: ProcedureTrace, golden) -> ConformanceResult:
    """Compare a trace to a golden sequence, reporting the first divergence.

    Internal events are compared only when the golden lists internal
    entries; otherwise the trace's messages alone are compared.
    """
    if isinstance(golden, (str, os.PathLike)):
        golden = load_golden(golden)
    with_internal = any(g.kind == INTERNAL for g in golden)
    recs = list(trace.records) if with_internal else trace.messages
    for i, g in enumerate(golden):
        if i >= len(recs):
            return ConformanceResult(False, i + 1, "length", g.kind, None)
        r = recs[i]
        checks = [("kind", g.kind, r.kind_name), ("src", g.src_role, r.src_role),
                  ("dst", g.dst_role, r.dst_role)]
        if g.size is not None:
            checks.append(("size", g.size, r.size))
        if g.size is None and g.step is not None:
            checks.append(("step", g.step, r.step))
        for name, exp, act in checks:
            if exp != act:
                return ConformanceResult(False, i + 1, name, exp, act)
    if len(recs) > len(golden):
        r = recs[len(golden)]
        return ConformanceResult(False, len(golden) + 1, "length", None, r.kind_name)
    return ConformanceResult(True)
