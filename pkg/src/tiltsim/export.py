"""Writing and reading run artifacts: CSV time series, event and report JSON."""

import csv
import json
from dataclasses import asdict
from importlib import resources

import numpy as np

from .engine import CSV_COLUMNS, EventLog
from .metrics import NeverSettled, detect_saturation, drift_event, drift_metric

REPORT_VERSION = 1


def write_timeseries_csv(traj, path):
    cols = traj.columns()
    data = [cols[name] for name in CSV_COLUMNS]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in zip(*data):
            w.writerow([repr(float(v)) if i < 19 else str(int(v)) for i, v in enumerate(row)])


def read_timeseries_csv(path):
    """Column name -> array; ``sat1``/``sat2`` come back as integers."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header in {path}")
    cols = {}
    for j, name in enumerate(header):
        kind = int if name in ("sat1", "sat2") else float
        cols[name] = np.array([kind(r[j]) for r in body], dtype=kind)
    return cols


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2)
        fh.write("\n")


def write_events_json(events, path):
    write_json(events.to_list(), path)


def read_events_json(path):
    with open(path) as fh:
        return EventLog.from_list(json.load(fh))


def analyze(traj, events, metrics):
    """Drift report and saturation summary for one run.

    A run that never settles yields a report with ``settle_time=None``.

    A detected drift onset is appended to ``events``.
    """
    try:
        drift = drift_metric(traj, metrics.settle_tol, metrics.settle_window,
                             metrics.drift_slope, metrics.drift_ratio)
    except NeverSettled as exc:
        drift = exc.report
    ev = drift_event(drift)
    if ev is not None:
        events.add(ev)
    return drift, detect_saturation(events, traj)


def build_report(cfg, traj, events, drift, saturation):
    err = traj.error_norm
    ts = drift.settle_time
    transient = ts if ts is not None else min(10.0, float(traj.t[-1]))
    after = traj.t >= transient
    return {
        "version": REPORT_VERSION,
        "name": cfg.name,
        "controller": cfg.sim.controller.value,
        "dt": cfg.sim.dt,
        "t_end": cfg.sim.t_end,
        "n_records": len(traj),
        "final_error": float(err[-1]),
        "max_error": float(err.max()),
        "min_error_after_transient": float(err[after].min()) if after.any() else None,
        "final_input_gap": float(traj.input_gap[-1]),
        "inputs_identical_at_end": bool(traj.input_gap[-1] < cfg.metrics.drift_tol),
        "drift": drift.to_dict(),
        "saturation": saturation.to_dict(),
        "singularity_events": len(events.of_kind("SingularityFloor")),
        "params": asdict(cfg.params),
        "gains": {"x": list(cfg.gains.x), "y": list(cfg.gains.y)},
        "reference": {"radius": cfg.spec.radius, "speed": cfg.spec.speed,
                      "start": list(cfg.spec.start), "center": list(cfg.spec.center),
                      "orientation": "ccw" if cfg.spec.ccw else "cw"},
        "compat": {"gait_phase_offset": cfg.sim.gait_phase_offset,
                   "yaw_coupled_alpha_gain": cfg.sim.yaw_coupled_alpha_gain},
        "metrics": asdict(cfg.metrics),
    }


def report_schema():
    text = resources.files("tiltsim.schemas").joinpath("report.schema.json").read_text()
    return json.loads(text)

