"""Batch command line front end.

    tiltsim simulate --preset fl3_10s --out runs/fl3
    tiltsim sweep --config grid.ini --jobs 4
    tiltsim verify
    tiltsim presets [NAME]

Exit status is 0 on success, 1 when a simulation or check fails and 2 on a
configuration error.  ``--seed`` is accepted for forward compatibility; the
dynamics are deterministic and ignore it.
"""

import argparse
import csv
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .engine import NonFiniteState, run_simulation

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

SWEEP_COLUMNS = ("cell", "overrides", "status", "settle_time", "drift_slope", "drift_detected",
                 "first_saturation", "final_error", "message")


def _load(args):
    if bool(args.config) == bool(args.preset):
        raise cfgmod.ConfigError("give exactly one of --config or --preset")
    if args.preset:
        return cfgmod.load_preset(args.preset)
    return cfgmod.load_config(args.config)


def _out_root(args, cfg):
    if args.out:
        return Path(args.out)
    if cfg.out_dir:
        return Path(cfg.out_dir)
    return Path(os.environ.get("TILTSIM_OUT", "tiltsim_out")) / cfg.name


def _publish(tmp, out):
    """Move finished files from ``tmp`` into ``out``, then drop ``tmp``."""
    out.mkdir(parents=True, exist_ok=True)
    for item in sorted(tmp.iterdir()):
        os.replace(item, out / item.name)
    tmp.rmdir()


def run_experiment(cfg, out):
    """Simulate one configuration and write all artifacts into ``out``.

    Files are staged in a sibling temporary directory, so a failed run leaves
    nothing behind.  Returns the report dictionary.
    """
    from .export import analyze, build_report, write_events_json, write_json, write_timeseries_csv

    out = Path(out)
    traj, events = run_simulation(cfg.sim, cfg.params, cfg.gains, cfg.spec)
    drift, sat = analyze(traj, events, cfg.metrics)
    report = build_report(cfg, traj, events, drift, sat)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        write_timeseries_csv(traj, tmp / "timeseries.csv")
        write_events_json(events, tmp / "events.json")
        write_json(report, tmp / "report.json")
        if cfg.plots:
            from .plots import write_plots
            write_plots(traj, tmp)
        _publish(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return report


def _summary(report):
    drift = report["drift"]
    return {
        "settle_time": drift["settle_time"],
        "drift_slope": drift["slope"],
        "drift_detected": drift["detected"],
        "first_saturation": report["saturation"]["first_time"],
        "final_error": report["final_error"],
    }


def _print_summary(report, out):
    s = _summary(report)
    fmt = lambda v: "none" if v is None else (f"{v:.6g}" if isinstance(v, float) else str(v))
    print(f"{report['name']}: {report['controller']} for {report['t_end']:g} s -> {out}")
    for k, v in s.items():
        print(f"  {k:<17} {fmt(v)}")


def cmd_simulate(args):
    try:
        cfg = _load(args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_root(args, cfg)
    try:
        report = run_experiment(cfg, out)
    except NonFiniteState as exc:
        print(f"simulation failed: non-finite state at t={exc.time:g}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"cannot write output to {out}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _print_summary(report, out)
    return EXIT_OK


def _run_cell(cell, out):
    cfg, overrides = cell
    row = {"cell": cfg.name, "overrides": ";".join(f"{k}={v}" for k, v in overrides.items()),
           "status": "ok", "message": ""}
    try:
        row.update(_summary(run_experiment(cfg, out)))
    except NonFiniteState as exc:
        row.update(status="failed", message=f"non-finite state at t={exc.time:g}")
    except Exception as exc:  # one bad cell must not stop the grid
        row.update(status="failed", message=f"{type(exc).__name__}: {exc}")
    return row


def _write_sweep_csv(rows, path):
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.DictWriter(fh, SWEEP_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: "" if row.get(k) is None else row.get(k) for k in SWEEP_COLUMNS})
    os.replace(tmp, path)


def cmd_sweep(args):
    try:
        cfg = _load(args)
        cells = cfg.cells()
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    root = _out_root(args, cfg)
    jobs = max(1, min(args.jobs or os.cpu_count() or 1, len(cells)))
    dirs = [root / c.name for c, _ in cells]
    if jobs == 1:
        rows = [_run_cell(c, d) for c, d in zip(cells, dirs)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells, dirs))
    try:
        root.mkdir(parents=True, exist_ok=True)
        _write_sweep_csv(rows, root / "sweep.csv")
    except OSError as exc:
        print(f"cannot write output to {root}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    failed = [r for r in rows if r["status"] != "ok"]
    print(f"{len(rows)} cells, {len(failed)} failed -> {root / 'sweep.csv'}")
    for r in failed:
        print(f"  {r['cell']}: {r['message']}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args):
    from .verify import format_table, run_all

    results = run_all(yaw_coupled=not args.uncoupled_tilt_gain)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_presets(args):
    if args.name:
        try:
            sys.stdout.write(cfgmod.preset_text(args.name))
        except cfgmod.ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return EXIT_OK
    for name in cfgmod.PRESETS + ("example",):
        first = cfgmod.preset_text(name).splitlines()[0].lstrip("; ").strip()
        print(f"{name:<10} {first}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="tiltsim", description="Tilt-rotor planar vehicle experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", metavar="PATH", help="experiment INI file")
        sp.add_argument("--preset", metavar="NAME", help="bundled experiment (see `tiltsim presets`)")
        sp.add_argument("--out", metavar="DIR",
                        help="output directory (default: $TILTSIM_OUT/<name> or ./tiltsim_out/<name>)")
        sp.add_argument("--seed", type=int, default=None,
                        help="accepted and ignored: the dynamics are deterministic")

    sp = sub.add_parser("simulate", help="run one experiment and write its artifacts")
    run_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="run every cell of a [sweep] grid")
    run_flags(sp)
    sp.add_argument("--jobs", type=int, default=None, metavar="N",
                    help="parallel cells (default: CPU count)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run the numerical oracle checks")
    sp.add_argument("--uncoupled-tilt-gain", action="store_true",
                    help="use a unit tilt column in the snap gain (expected to fail the snap check)")
    sp.add_argument("--seed", type=int, default=None, help="accepted and ignored")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("presets", help="list bundled presets or print one")
    sp.add_argument("name", nargs="?", help="preset to print")
    sp.set_defaults(func=cmd_presets)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
