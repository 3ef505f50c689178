import io

import pytest
from hypothesis import given, strategies as st

from oracles import PDU_ROWS, PDU_SUMS, REGISTRATION_ROWS, REGISTRATION_SUMS
from n3access.core import NodeRole
from n3access.errors import GoldenParseError, IncompleteSizeTableError, TraceIncompleteError
from n3access.messages import (
    MAX_NESTING, Message, MessageKind, Procedure, Scope, SizeTable, default_size_table, nest,
    parse_size_lines, size_of, sum_by_scope,
)
from n3access.scenario import load_scenario, run_scenario, shipped_scenarios
from n3access.trace import ProcedureTrace


def test_catalog_is_closed():
    assert len(MessageKind) == 38
    with pytest.raises(KeyError):
        MessageKind["NOT_A_MESSAGE"]


def test_size_lookups():
    assert size_of(Procedure.IPSEC_SA_SIGNALING, 1) == 644
    assert size_of(Procedure.PDU_SESSION_EST, 6) == 488
    with pytest.raises(IncompleteSizeTableError):
        size_of(Procedure.IPSEC_SA_SIGNALING, 99)


def test_shipped_tables_match_transcription():
    t = default_size_table()
    for proc, rows in ((Procedure.IPSEC_SA_SIGNALING, REGISTRATION_ROWS),
                       (Procedure.PDU_SESSION_EST, PDU_ROWS)):
        got = [(e.kind.name, e.src_role.name, e.dst_role.name, e.size_bytes) for e in t.entries(proc)]
        assert got == rows


def test_table_sums():
    t = default_size_table()
    for proc, want in ((Procedure.IPSEC_SA_SIGNALING, REGISTRATION_SUMS),
                       (Procedure.PDU_SESSION_EST, PDU_SUMS)):
        es = t.entries(proc)
        ue = sum(e.size_bytes for e in es if NodeRole.UE in (e.src_role, e.dst_role))
        total = sum(e.size_bytes for e in es)
        assert (ue, total - ue, total) == want


@pytest.mark.parametrize("line,msg", [
    ("IPSEC_SA_SIGNALING, 1, IKE_SA_INIT_REQ, UE, N3IWF", "6 fields"),
    ("NOPE, 1, IKE_SA_INIT_REQ, UE, N3IWF, 4", "procedure"),
    ("IPSEC_SA_SIGNALING, x, IKE_SA_INIT_REQ, UE, N3IWF, 4", "integers"),
    ("IPSEC_SA_SIGNALING, 1, IKE_SA_INIT_REQ, UE, N3IWF, 0", "size > 0"),
    ("IPSEC_SA_SIGNALING, 1, BOGUS, UE, N3IWF, 4", "kind"),
])
def test_size_table_parse_errors(line, msg):
    with pytest.raises(GoldenParseError) as ei:
        parse_size_lines(io.StringIO("# header\n" + line + "\n"), "t.sizes")
    assert ei.value.lineno == 2
    assert msg in str(ei.value)


def test_override_table(tmp_path):
    p = tmp_path / "o.sizes"
    p.write_text("IPSEC_SA_SIGNALING, 1, IKE_SA_INIT_REQ, UE, N3IWF, 700\n")
    t = default_size_table().merged(p)
    assert t.size_of(Procedure.IPSEC_SA_SIGNALING, 1) == 700
    assert t.size_of(Procedure.IPSEC_SA_SIGNALING, 2) == 644


def test_incomplete_defaults_rejected():
    with pytest.raises(IncompleteSizeTableError):
        SizeTable(defaults={MessageKind.IKE_SA_INIT_REQ: 1})


def test_nesting():
    m = nest(MessageKind.IKE_AUTH_REQ, 200, [MessageKind.EAP_5G_NAS, MessageKind.NAS_REGISTRATION_REQ])
    assert m.depth == 3
    assert m.chain == (MessageKind.IKE_AUTH_REQ, MessageKind.EAP_5G_NAS, MessageKind.NAS_REGISTRATION_REQ)
    assert m.carries_nas
    sizes, cur = [], m
    while cur is not None:
        sizes.append(cur.size_bytes)
        cur = cur.inner
    assert sizes == sorted(sizes, reverse=True)


@given(st.integers(1, 3000), st.lists(st.sampled_from(list(MessageKind)), max_size=MAX_NESTING - 1))
def test_nest_inner_never_larger(size, inner):
    m = nest(MessageKind.IKE_AUTH_REQ, size, inner)
    cur = m
    while cur.inner is not None:
        assert cur.inner.size_bytes <= cur.size_bytes
        cur = cur.inner


def test_message_invariants():
    with pytest.raises(ValueError):
        Message(MessageKind.IKE_AUTH_REQ, 1, "a", "b", 0)
    with pytest.raises(ValueError):
        Message(MessageKind.IKE_AUTH_REQ, 1, "a", "b", 10,
                inner=Message(MessageKind.EAP_5G_NAS, 0, "a", "b", 11))
    with pytest.raises(ValueError):
        nest(MessageKind.IKE_AUTH_REQ, 500, [MessageKind.EAP_5G_NAS] * MAX_NESTING)
    m = Message(MessageKind.ANQP_QUERY, 1, "a", "b", 5, payload={"x": 1})
    with pytest.raises(TypeError):
        m.payload["x"] = 2


def test_incomplete_trace_has_no_sums():
    with pytest.raises(TraceIncompleteError):
        sum_by_scope(ProcedureTrace(Procedure.PDU_SESSION_EST, (), None), Scope.ALL)


@pytest.mark.parametrize("name", shipped_scenarios())
def test_all_is_sum_of_scopes(name):
    for _, tr in run_scenario(load_scenario(name)).traces:
        assert sum_by_scope(tr, Scope.ALL) == (sum_by_scope(tr, Scope.UE_GATEWAY)
                                               + sum_by_scope(tr, Scope.CORE_INTERNAL))


@pytest.mark.parametrize("name", shipped_scenarios())
def test_every_emitted_message_is_sized(name):
    for _, tr in run_scenario(load_scenario(name)).traces:
        for r in tr.messages:
            assert r.kind in MessageKind and r.size > 0
