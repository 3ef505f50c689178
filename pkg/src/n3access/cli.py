"""Command-line entry point.

    n3access run SCENARIO [SCENARIO ...] [--trials N] [--seed S] [--out-dir DIR]
    n3access verify TRACE GOLDEN [--skip-conditional]
    n3access overhead SIZE [SIZE ...]
    n3access stats --n 30 --mean 0.93 --std 0.41

Exit status: 0 when everything succeeded, 1 when a flow failed or a trace
diverged from its golden, 2 on configuration or parse errors.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from importlib import resources

from . import __version__
from .encap import render_overhead
from .errors import N3AccessError
from .report import RunReport, render_records, render_text, summarize
from .scenario import load_scenario, run_scenario, run_trials
from .stats import TimingStats
from .trace import Outcome, conformance_check, dump_trace, load_golden, load_trace, render_chart, shipped_golden

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage already; route it through our handler
    # so the diagnostic format matches the rest of the tool.
    def error(self, message):
        raise _Usage(message)


def table_hashes() -> list:
    """``(name, sha256)`` of every shipped golden table."""
    d = resources.files("n3access").joinpath("tables")
    out = []
    for p in sorted(d.iterdir(), key=lambda p: p.name):
        if p.name.endswith((".sizes", ".steps")):
            out.append((p.name, hashlib.sha256(p.read_bytes()).hexdigest()))
    return out


def _version_text() -> str:
    lines = [f"n3access {__version__}"]
    lines += [f"  {name:<14} sha256:{h}" for name, h in table_hashes()]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# run

def _run_one(path, args):
    sc = load_scenario(path)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    if args.trials is not None:
        sc = replace(sc, trials=args.trials)
    if args.size_table is not None:
        sc = replace(sc, size_table=os.path.abspath(args.size_table))
    run = run_scenario(sc)
    trials = {}
    if sc.trials >= 2:
        for key, _ in run.traces:
            trials[key] = run_trials(sc, key, sc.trials, sc.seed)
    procs = tuple(summarize(key, tr, trials.get(key)) for key, tr in run.traces)
    report = RunReport(sc.name, sc.seed, procs)
    failed = any(t.outcome is not Outcome.SUCCESS for _, t in run.traces)
    failed = failed or any(not r.valid for r in trials.values())
    failed = failed or len(run.traces) < len(sc.procedures)   # a later procedure was skipped
    return sc, run, report, failed


def _write_outputs(out_dir, sc, run, report):
    os.makedirs(out_dir, exist_ok=True)
    for key, tr in run.traces:
        base = os.path.join(out_dir, f"{sc.name}.{key}")
        with open(base + ".trace", "w") as fh:
            fh.write(dump_trace(tr))
        with open(base + ".chart.txt", "w") as fh:
            fh.write(render_chart(tr))
    with open(os.path.join(out_dir, f"{sc.name}.report.txt"), "w") as fh:
        fh.write(render_text(report))
    with open(os.path.join(out_dir, f"{sc.name}.report.json"), "w") as fh:
        fh.write(render_records(report))


def cmd_run(args) -> int:
    paths = list(args.scenarios) + list(args.scenario or [])
    if not paths:
        raise _Usage("run needs at least one scenario")
    if args.trials is not None and args.trials < 1:
        raise _Usage("--trials must be >= 1")
    render = render_records if args.format == "records" else render_text
    jobs = max(1, args.jobs)
    # Each scenario owns its simulation, so threads share no mutable state.
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(lambda p: _run_one(p, args), paths))
    status = EXIT_OK
    for sc, run, report, failed in results:
        if args.out_dir:
            _write_outputs(args.out_dir, sc, run, report)
        sys.stdout.write(render(report))
        if failed:
            status = EXIT_FAILED
    return status


# ---------------------------------------------------------------------------
# verify

def _golden(path, include_conditional):
    if os.path.exists(path):
        return load_golden(path, include_conditional)
    if os.path.dirname(path) in ("", "tables"):
        try:
            return shipped_golden(os.path.basename(path), include_conditional)
        except FileNotFoundError:
            pass
    raise FileNotFoundError(f"golden not found: {path}")


def cmd_verify(args) -> int:
    with open(args.trace) as fh:
        trace = load_trace(fh.read(), args.trace)
    golden = _golden(args.golden, not args.skip_conditional)
    res = conformance_check(trace, golden)
    print(res.report())
    return EXIT_OK if res else EXIT_FAILED


# ---------------------------------------------------------------------------
# overhead and stats

def _sizes(tokens) -> list:
    out = []
    for tok in tokens:
        for part in str(tok).split(","):
            if part.strip():
                try:
                    out.append(int(part))
                except ValueError:
                    raise _Usage(f"payload size must be an integer: {part!r}") from None
    return out


def cmd_overhead(args) -> int:
    sizes = _sizes(args.sizes)
    if any(s < 0 for s in sizes):
        raise _Usage("payload sizes must be >= 0")
    sys.stdout.write(render_overhead(sizes, args.format))
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        st = TimingStats.from_summary(args.n, args.mean, args.std, args.t_dist)
    except ValueError as e:
        raise _Usage(str(e)) from None
    mean, std, lo, hi = st.rounded(args.digits)
    if args.format == "records":
        print("n,mean_s,std_s,ci_lower_s,ci_upper_s")
        print(f"{st.n},{mean},{std},{lo},{hi}")
    else:
        print(f"n={st.n} mean={mean} s std={std} s 95% CI=({lo}, {hi})")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="n3access", description="Simulate 5G non-3GPP access procedures.")
    p.add_argument("--version", action="store_true", help="print version and golden table hashes")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    r = sub.add_parser("run", help="run scenarios and write traces and reports")
    r.add_argument("scenarios", nargs="*", metavar="SCENARIO",
                   help="scenario file, or the name of a shipped scenario")
    r.add_argument("--scenario", action="append", metavar="PATH", help="scenario (repeatable)")
    r.add_argument("--trials", type=int, default=None,
                   help="timing trials per procedure (default: from the scenario; 1 skips statistics)")
    r.add_argument("--seed", type=int, default=None, help="master seed (default: from the scenario)")
    r.add_argument("--out-dir", default=None, help="write traces, charts and reports here (default: none)")
    r.add_argument("--format", choices=("text", "records"), default="text",
                   help="report format on stdout (default: text)")
    r.add_argument("--size-table", default=None, help="size table overriding the shipped one (default: none)")
    r.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel (default: 1)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a trace file against a golden sequence")
    v.add_argument("trace")
    v.add_argument("golden", help="golden file, or a shipped table name such as table6.sizes")
    v.add_argument("--skip-conditional", action="store_true",
                   help="drop conditional steps from the golden (default: keep them)")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("overhead", help="per-leg tunnel overhead for payload sizes")
    o.add_argument("sizes", nargs="*", help="payload sizes in bytes, space or comma separated")
    o.add_argument("--format", choices=("text", "records"), default="text")
    o.set_defaults(func=cmd_overhead)

    s = sub.add_parser("stats", help="95%% confidence interval from n, mean and std")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mean", type=float, required=True, help="seconds")
    s.add_argument("--std", type=float, required=True, help="sample standard deviation, seconds")
    s.add_argument("--t-dist", action="store_true", help="Student-t quantile instead of 1.96")
    s.add_argument("--digits", type=int, default=2)
    s.add_argument("--format", choices=("text", "records"), default="text")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.version:
            print(_version_text())
            return EXIT_OK
        if not args.command:
            parser.print_help()
            return EXIT_CONFIG
        return args.func(args)
    except _Usage as e:
        print(f"n3access: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (N3AccessError, OSError) as e:
        print(f"n3access: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
