"""Command-line entry point.

Commands::

    safetrack run (--preset ID | --scenario PATH)... [--out DIR] [--plots]
                  [--seed N] [--duration S] [--jobs N]
    safetrack check-gains (--preset ID | --scenario PATH) [--K VALUE] [--strict]
    safetrack validate --scenario PATH

Exit codes: 0 success, 1 I/O or input error, 2 safety violation, 3 aborted
run.  With several scenarios the largest code is returned.  The default
output directory is taken from ``SAFETRACK_OUT_DIR`` (fallback
``./safetrack_out``).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..exceptions import SafetrackError
from ..models import sigma_bounds
from ..sim.runner import SimulationAborted, compute_metrics, gain_report, run
from ..sim.scenario import Scenario
from ..smc import SmcGains, validate_gain
from .output import metrics_document, write_metrics_json, write_trace_csv
from .plots import write_plots
from .presets import PRESET_IDS, get_preset
from .scenario_io import ScenarioFileError, load_scenario

OUT_DIR_ENV = "SAFETRACK_OUT_DIR"
DEFAULT_OUT_DIR = "safetrack_out"

EXIT_OK = 0
EXIT_IO = 1
EXIT_UNSAFE = 2
EXIT_ABORT = 3


class _Parser(argparse.ArgumentParser):
    # usage errors share the I/O code so that 2 always means "unsafe"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


class _Source(argparse.Action):
    """Collect ``--preset``/``--scenario`` in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        items = list(getattr(namespace, "sources", None) or [])
        items.append((self.dest, values))
        namespace.sources = items


def _add_sources(p, multiple):
    help_suffix = " (repeatable)" if multiple else ""
    p.add_argument("--preset", dest="preset", action=_Source, choices=PRESET_IDS,
                   help="built-in scenario" + help_suffix)
    p.add_argument("--scenario", dest="scenario", action=_Source, metavar="PATH",
                   help="scenario JSON file" + help_suffix)
    p.set_defaults(sources=[])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="safetrack", description="Sliding-mode tracking with a barrier-QP safety filter.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log control-step warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("run", help="simulate one or more scenarios")
    _add_sources(pr, multiple=True)
    pr.add_argument("--out", metavar="DIR",
                    help=f"output directory (default ${OUT_DIR_ENV} or ./{DEFAULT_OUT_DIR})")
    pr.add_argument("--plots", action="store_true", help="also write trajectory.svg and timeseries.svg")
    pr.add_argument("--seed", type=int, help="override the scenario seed")
    pr.add_argument("--duration", type=float, metavar="S", help="override the duration [s]")
    pr.add_argument("--jobs", type=int, default=1, metavar="N",
                    help="run several scenarios concurrently in N processes")

    pg = sub.add_parser("check-gains", help="check the switching gain against the reaching condition")
    _add_sources(pg, multiple=False)
    pg.add_argument("--K", type=float, dest="K", help="switching gain to check instead of the scenario's")
    pg.add_argument("--strict", action="store_true", help="exit 2 when the check fails")

    pv = sub.add_parser("validate", help="validate a scenario file")
    pv.add_argument("--scenario", required=True, metavar="PATH")
    return parser


def _resolve(kind: str, value: str) -> Scenario:
    if kind == "preset":
        return get_preset(value)
    return load_scenario(value)


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def run_one(scenario: Scenario, out_dir: Path, plots: bool) -> tuple[int, str]:
    """Simulate and write artifacts; returns ``(exit code, summary line)``."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return EXIT_IO, f"{scenario.name}: cannot create {out_dir}: {exc.strerror or exc}"
    try:
        trace, metrics = run(scenario)
        status, code, reason = "completed", EXIT_OK, None
        if not metrics.safe:
            status, code = "safety_violation", EXIT_UNSAFE
    except SimulationAborted as exc:
        trace = exc.trace
        metrics = compute_metrics(scenario, trace)
        status, code, reason = "aborted", EXIT_ABORT, str(exc)
    try:
        write_trace_csv(trace, out_dir / "trace.csv")
        write_metrics_json(metrics_document(metrics, scenario.name, status, reason),
                           out_dir / "metrics.json")
        if plots:
            write_plots(scenario, trace, out_dir)
    except OSError as exc:
        return EXIT_IO, f"{scenario.name}: cannot write artifacts to {out_dir}: {exc.strerror or exc}"
    line = (f"{scenario.name}: {status}; min_h_c3bf={metrics.min_h_c3bf}, "
            f"rms_e1_post_reach={metrics.rms_e1_post_reach}, "
            f"qp_infeasible_count={metrics.qp_infeasible_count} -> {out_dir}")
    if reason:
        line += f"\n  {reason}"
    return code, line


def _run_job(args):
    scenario, out_dir, plots = args
    return run_one(scenario, out_dir, plots)


def cmd_run(ns) -> int:
    if not ns.sources:
        print("run: one of --preset or --scenario is required", file=sys.stderr)
        return EXIT_IO
    scenarios = []
    for kind, value in ns.sources:
        try:
            s = _resolve(kind, value)
            changes = {}
            if ns.seed is not None:
                changes["seed"] = ns.seed
            if ns.duration is not None:
                changes["duration"] = ns.duration
            scenarios.append(s.with_overrides(**changes) if changes else s)
        except (SafetrackError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    base = _out_dir(ns.out)
    if len(scenarios) == 1:
        jobs = [(scenarios[0], base, ns.plots)]
    else:
        jobs, seen = [], {}
        for s in scenarios:
            n = seen.get(s.name, 0)
            seen[s.name] = n + 1
            sub = s.name if n == 0 else f"{s.name}_{n}"
            jobs.append((s, base / sub, ns.plots))
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(ns.jobs, len(jobs))) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    for code, line in results:
        print(line, file=sys.stderr if code == EXIT_IO else sys.stdout)
    return max(code for code, _ in results)


def cmd_check_gains(ns) -> int:
    if len(ns.sources) != 1:
        print("check-gains: exactly one of --preset or --scenario is required", file=sys.stderr)
        return EXIT_IO
    try:
        s = _resolve(*ns.sources[0])
    except (SafetrackError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if ns.K is None:
        report = gain_report(s)
    else:
        try:
            SmcGains(K=ns.K)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        report = validate_gain(ns.K, s.params, s.d_bar, s.gains.eta)
    lo, hi = sigma_bounds(s.params)
    print(f"scenario:        {s.name} ({s.kind})")
    print(f"sigma bounds:    lower={lo:.6f} upper={hi:.6f}")
    print(f"d_bar:           {s.d_bar:g}")
    print(f"eta:             {report.eta:g}")
    print(f"threshold:       sqrt(2)*{hi:.6f}*{s.d_bar:g} + {report.eta:g} = {report.threshold:.6f}")
    print(f"K:               {report.K:g}")
    print(f"result:          {'PASS' if report.ok else 'FAIL'} "
          f"(K {'>' if report.ok else '<='} {report.threshold:.6f})")
    if not report.ok and ns.strict:
        return EXIT_UNSAFE
    return EXIT_OK


def cmd_validate(ns) -> int:
    try:
        s = load_scenario(ns.scenario)
    except (ScenarioFileError, SafetrackError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{ns.scenario}: valid ({s.name}, {s.kind}, {len(s.obstacles)} obstacle(s), "
          f"{s.duration:g} s)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if ns.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "check-gains": cmd_check_gains, "validate": cmd_validate}
    return handler[ns.command](ns)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
