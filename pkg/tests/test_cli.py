import json
import subprocess
import sys

from n3access.cli import main, table_hashes


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_default_reports_totals(capsys, tmp_path):
    code, out, _ = run(capsys, "run", "scenarios/untrusted_default", "--trials", "1",
                       "--out-dir", str(tmp_path))
    assert code == 0
    reg = next(l for l in out.splitlines() if l.startswith("registration:"))
    assert reg.split()[-4:-1] == ["4360", "1156", "5516"]
    pdu = next(l for l in out.splitlines() if l.startswith("pdu_session:"))
    assert pdu.split()[-4:-1] == ["944", "885", "1829"]
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "untrusted_default.registration.trace" in names
    assert "untrusted_default.report.json" in names


def test_run_twice_identical(capsys, tmp_path):
    outs = []
    for d in ("a", "b"):
        code, out, _ = run(capsys, "run", "untrusted_default", "--trials", "30", "--seed", "7",
                           "--out-dir", str(tmp_path / d))
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_records_format(capsys):
    code, out, _ = run(capsys, "run", "--scenario", "wireline_fnrg", "--trials", "3", "--format", "records")
    assert code == 0
    rep = json.loads(out)
    assert rep["scenario"] == "wireline_fnrg"
    assert all(p["outcome"] == "SUCCESS" for p in rep["procedures"])
    assert {r["leg"]: r["total_overhead"] for r in rep["overhead"]} == {"NWU": 44, "N3": 36}


def test_run_missing_file(capsys):
    code, _, err = run(capsys, "run", "missing.file")
    assert code == 2 and "not found" in err


def test_run_failure_exit_1(capsys, tmp_path):
    p = tmp_path / "bad_cred.yaml"
    p.write_text("flow: untrusted\nsubscriber:\n  subscription_secret: '" + "00" * 32 + "'\n")
    code, out, _ = run(capsys, "run", str(p), "--trials", "1")
    assert code == 1 and "FAILED" in out

    p.write_text("flow: untrusted\nsubscriber:\n  secret: 12\n")
    assert run(capsys, "run", str(p), "--trials", "1")[0] == 2


def test_run_roaming_violation_exit_2(capsys, tmp_path):
    p = tmp_path / "n5cw_hr.yaml"
    p.write_text("flow: n5cw\nroaming_mode: HR\n")
    code, _, err = run(capsys, "run", str(p), "--trials", "1")
    assert code == 2 and "roaming-unsupported" in err


def test_size_table_override(capsys, tmp_path):
    p = tmp_path / "o.sizes"
    p.write_text("IPSEC_SA_SIGNALING, 1, IKE_SA_INIT_REQ, UE, N3IWF, 645\n")
    code, out, _ = run(capsys, "run", "untrusted_default", "--trials", "1", "--size-table", str(p))
    reg = next(l for l in out.splitlines() if l.startswith("registration:"))
    assert code == 0 and reg.split()[-2] == "5517"


def test_parallel_jobs_match_serial(capsys):
    names = ["untrusted_default", "trusted_default", "n5cw_default"]
    _, serial, _ = run(capsys, "run", *names, "--trials", "3")
    _, parallel, _ = run(capsys, "run", *names, "--trials", "3", "--jobs", "3")
    assert serial == parallel


def test_verify(capsys, tmp_path):
    run(capsys, "run", "untrusted_default", "--trials", "1", "--out-dir", str(tmp_path))
    trace = tmp_path / "untrusted_default.registration.trace"
    code, out, _ = run(capsys, "verify", str(trace), "table6.sizes")
    assert code == 0 and "pass" in out

    lines = trace.read_text().splitlines()
    idx = next(i for i, l in enumerate(lines) if ",IKE_AUTH_RESP," in l)
    lines[idx] = lines[idx].replace(",1448,", ",1449,")
    trace.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "verify", str(trace), "table6.sizes")
    assert code == 1 and "index 4" in out

    empty = tmp_path / "empty.golden"
    empty.write_text("")
    code, _, _ = run(capsys, "verify", str(trace), str(empty))
    assert code == 2


def test_verify_conditional_goldens(capsys, tmp_path):
    run(capsys, "run", "wireline_5grg", "--trials", "1", "--out-dir", str(tmp_path))
    trace = str(tmp_path / "wireline_5grg.registration.trace")
    assert run(capsys, "verify", trace, "fig19.steps", "--skip-conditional")[0] == 0
    assert run(capsys, "verify", trace, "fig19.steps")[0] == 1


def test_overhead(capsys):
    code, out, _ = run(capsys, "overhead", "1000")
    assert code == 0 and "1000       1044      1036" in out
    code, out, _ = run(capsys, "overhead", "0", "--format", "records")
    assert "0,44,36" in out
    code, out, _ = run(capsys, "overhead", "1,10,100", "--format", "records")
    rows = [l for l in out.splitlines() if l and l[0].isdigit() and l.count(",") == 2]
    assert [r.split(",")[0] for r in rows] == ["1", "10", "100"]
    assert run(capsys, "overhead", "--", "-5")[0] == 2
    assert run(capsys, "overhead", "abc")[0] == 2


def test_stats(capsys):
    code, out, _ = run(capsys, "stats", "--n", "30", "--mean", "0.22", "--std", "0.04")
    assert code == 0 and "(0.21, 0.23)" in out
    assert run(capsys, "stats", "--n", "1", "--mean", "1", "--std", "0")[0] == 2


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert len(table_hashes()) == 7
    for name, h in table_hashes():
        assert f"{name}" in out and h in out


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "run")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "n3access.cli", "overhead", "64"],
                       capture_output=True, text=True, check=False)
    assert p.returncode == 0 and "108" in p.stdout
