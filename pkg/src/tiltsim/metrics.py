"""Diagnostics: tracking error, thrust-direction band, drift and saturation."""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import psi_from_alpha
from .engine import Event, EventKind
from .reference import center_direction, wrap_angle

SETTLE_TOL = 0.1
SETTLE_WINDOW = 2.0
DRIFT_SLOPE = 1.0
DRIFT_RATIO = 10.0
#: input gap (omega^2 units) below which two channels count as identical
DRIFT_TOL = 1.0


class NeverSettled(RuntimeError):
    """The tracking error never stayed inside the settle band for a full window.

    ``report`` still carries the input-gap series.
    """

    def __init__(self, report):
        self.report = report
        super().__init__("tracking error never settled")


class DirectionBand(NamedTuple):
    mid: float
    upper: float
    lower: float
    to_center: float


@dataclass
class DriftReport:
    times: np.ndarray
    gap: np.ndarray
    settle_time: Optional[float] = None
    slope: float = 0.0
    detected: bool = False
    onset_time: Optional[float] = None

    @property
    def settled(self):
        return self.settle_time is not None

    def gap_at(self, t):
        """Input gap at the last sample not after ``t``."""
        i = np.searchsorted(self.times, t, side="right") - 1
        return float(self.gap[max(i, 0)])

    def to_dict(self):
        return {
            "settled": self.settled,
            "settle_time": self.settle_time,
            "slope": float(self.slope),
            "detected": bool(self.detected),
            "onset_time": self.onset_time,
            "gap_start": float(self.gap[0]),
            "gap_settle": None if self.settle_time is None else self.gap_at(self.settle_time),
            "gap_end": float(self.gap[-1]),
        }


@dataclass
class ChannelSaturation:
    first_time: float
    duration: float
    fraction: float


@dataclass
class SaturationSummary:
    channels: dict = field(default_factory=dict)

    @property
    def empty(self):
        return not self.channels

    @property
    def first_time(self):
        if self.empty:
            return None
        return min(c.first_time for c in self.channels.values())

    def to_dict(self):
        return {
            "first_time": self.first_time,
            "channels": {str(ch): {"first_time": c.first_time, "duration": c.duration,
                                   "fraction": c.fraction}
                         for ch, c in sorted(self.channels.items())},
        }


def dynamic_error(state, ref):
    """Reference position minus vehicle position."""
    return np.asarray(ref.pos, dtype=float) - state.position


def thrust_direction_band(state, spec, params):
    """Bisector direction and the reachable acceleration directions around it."""
    mid = wrap_angle(state.alpha + psi_from_alpha(state.alpha, params))
    return DirectionBand(mid, mid + params.theta, mid - params.theta,
                         center_direction(state.position, spec))


def settle_time(times, err, tol=SETTLE_TOL, window=SETTLE_WINDOW):
    """First time after which ``err < tol`` holds for at least ``window`` seconds."""
    ok = np.asarray(err) < tol
    start = None
    for i, good in enumerate(ok):
        if good:
            if start is None:
                start = i
            if times[i] - times[start] >= window:
                return float(times[start])
        else:
            start = None
    return None


def drift_metric(traj, settle_tol=SETTLE_TOL, settle_window=SETTLE_WINDOW,
                 slope_threshold=DRIFT_SLOPE, growth_ratio=DRIFT_RATIO):
    """Detect input drift after the tracking error has settled.

    Drift is reported when the least-squares slope of the input gap
    ``|omega1^2 - omega2^2|`` over the settled part of the run exceeds
    ``slope_threshold`` and the final gap is more than ``growth_ratio`` times
    the gap at the settle time.
    """
    if len(traj) == 0:
        raise ValueError("empty record stream")
    times = np.asarray(traj.t, dtype=float)
    gap = traj.input_gap
    report = DriftReport(times, gap)
    ts = settle_time(times, traj.error_norm, settle_tol, settle_window)
    if ts is None:
        raise NeverSettled(report)
    report.settle_time = ts
    post = times >= ts
    if post.sum() >= 2:
        report.slope = float(np.polyfit(times[post] - ts, gap[post], 1)[0])
    base = report.gap_at(ts)
    report.detected = bool(report.slope > slope_threshold and gap[-1] > growth_ratio * base)
    if report.detected:
        crossed = np.nonzero(post & (gap > growth_ratio * base))[0]
        report.onset_time = float(times[crossed[0]])
    return report


def drift_event(report):
    """``DriftOnset`` event for a detected drift, else ``None``."""
    if not report.detected:
        return None
    return Event(report.onset_time, EventKind.DRIFT_ONSET, 0, report.gap_at(report.onset_time))


def detect_saturation(events, traj=None):
    """Per-channel first saturation time, saturated duration and sampled fraction.

    Open saturation intervals are closed at the end of ``traj`` (or at the
    last event when no record stream is given).
    """
    events = list(events)
    if traj is not None and len(traj):
        t_end = float(traj.t[-1])
    else:
        t_end = max((e.time for e in events), default=0.0)
    summary = SaturationSummary()
    for ch in (1, 2):
        on = None
        first = None
        duration = 0.0
        for e in events:
            if e.channel != ch:
                continue
            if e.kind is EventKind.SATURATION_ON and on is None:
                on = e.time
                first = e.time if first is None else first
            elif e.kind is EventKind.SATURATION_OFF and on is not None:
                duration += e.time - on
                on = None
        if on is not None:
            duration += t_end - on
        if first is None:
            continue
        fraction = float(np.mean(traj.saturated[:, ch - 1])) if traj is not None and len(traj) else float("nan")
        summary.channels[ch] = ChannelSaturation(first, duration, fraction)
    return summary
