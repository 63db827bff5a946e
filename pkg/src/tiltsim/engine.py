"""Fixed-step closed-loop simulation.

The integrator is the three-stage, third-order Bogacki-Shampine scheme
(the propagating half of the 3(2) pair, used here without step-size
control).  By default the controller is sampled once per step and held
across the stages; ``control_mode="continuous"`` re-evaluates it inside
every stage, which turns the loop into a plain ODE solve of the
continuous-time closed loop.
"""

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .controllers import (OMEGA_MIN, ControllerKind, Gains, _fl3_command, _fl4_command,
                          _gait_alpha, _gait_command, default_gains)
from .dynamics import BASE_SIZE, EXTENDED_SIZE, SimState, VehicleParams, _accel
from .reference import CircleSpec, _circle, wrap_angle


class NonFiniteState(FloatingPointError):
    def __init__(self, time, state):
        self.time = float(time)
        self.state = np.asarray(state)
        super().__init__(f"state became non-finite at t={self.time:.6g}")


class ButcherTableau(NamedTuple):
    a: tuple
    b: tuple
    c: tuple


BOGACKI_SHAMPINE = ButcherTableau(
    a=((0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (0.0, 0.75, 0.0)),
    b=(2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0),
    c=(0.0, 0.5, 0.75),
)


def rk3_step(state, t, dt, rhs, tableau=BOGACKI_SHAMPINE):
    """Advance ``state`` by one explicit Runge-Kutta step of size ``dt``.

    ``rhs(t, y)`` returns dy/dt.  Works for scalars and arrays.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = np.asarray(state, dtype=float)
    ks = []
    for i, ci in enumerate(tableau.c):
        yi = y + dt * sum(aij * kj for aij, kj in zip(tableau.a[i], ks))
        ks.append(np.asarray(rhs(t + ci * dt, yi), dtype=float))
    out = y + dt * sum(bi * ki for bi, ki in zip(tableau.b, ks))
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(t + dt, out)
    return out if out.ndim else float(out)


class EventKind(str, enum.Enum):
    SATURATION_ON = "SaturationOn"
    SATURATION_OFF = "SaturationOff"
    SINGULARITY_FLOOR = "SingularityFloor"
    DRIFT_ONSET = "DriftOnset"


_EVENT_CODES = [EventKind.SATURATION_ON, EventKind.SATURATION_OFF, EventKind.SINGULARITY_FLOOR]


class Event(NamedTuple):
    time: float
    kind: EventKind
    channel: int
    value: float

    def to_dict(self):
        return {"time": self.time, "kind": self.kind.value, "channel": self.channel,
                "value": None if not np.isfinite(self.value) else self.value}


class EventLog:
    """Time-ordered list of discrete events.

    Channel 1 and 2 refer to the propellers; channel 0 marks an event on
    the decoupling matrix as a whole.
    """

    def __init__(self, events=()):
        self._events = sorted(events, key=lambda e: e.time)

    def __iter__(self):
        return iter(self._events)

    def __len__(self):
        return len(self._events)

    def __getitem__(self, i):
        return self._events[i]

    def add(self, event):
        self._events.append(event)
        self._events.sort(key=lambda e: e.time)

    def of_kind(self, kind, channel=None):
        kind = EventKind(kind)
        return [e for e in self._events
                if e.kind is kind and (channel is None or e.channel == channel)]

    def to_list(self):
        return [e.to_dict() for e in self._events]

    @classmethod
    def from_list(cls, items):
        return cls(Event(float(d["time"]), EventKind(d["kind"]), int(d["channel"]),
                         float("nan") if d["value"] is None else float(d["value"]))
                   for d in items)


class SimRecord(NamedTuple):
    """One recorded sample of a run."""
    time: float
    state: np.ndarray
    command: np.ndarray
    error: np.ndarray
    omega_sq: np.ndarray
    thrust_direction: float
    center_direction: float
    saturated: tuple


CSV_COLUMNS = ("t", "x", "y", "vx", "vy", "omega1", "omega2", "alpha", "psi", "x_r", "y_r",
               "err_x", "err_y", "omega1_sq", "omega2_sq", "dir_mid", "dir_upper",
               "dir_lower", "dir_center", "sat1", "sat2")


@dataclass
class Trajectory:
    """Columnar record stream of one run.

    Angle columns are cumulative (unwrapped); the ``*_wrapped`` properties
    give the same angles folded into (-pi, pi].
    """
    kind: ControllerKind
    t: np.ndarray
    states: np.ndarray
    commands: np.ndarray
    saturated: np.ndarray
    ref_pos: np.ndarray
    params: VehicleParams = field(default_factory=VehicleParams)
    spec: CircleSpec = field(default_factory=CircleSpec)

    def __len__(self):
        return len(self.t)

    @property
    def omega(self):
        return self.states[:, 4:6]

    @property
    def alpha(self):
        return self.states[:, 6]

    @property
    def psi(self):
        return -(self.params.i_t / self.params.i_b) * self.alpha

    @property
    def error(self):
        return self.ref_pos - self.states[:, 0:2]

    @property
    def error_norm(self):
        e = self.error
        return np.hypot(e[:, 0], e[:, 1])

    @property
    def omega_sq(self):
        return self.omega ** 2

    @property
    def input_gap(self):
        """|omega1^2 - omega2^2| per sample."""
        sq = self.omega_sq
        return np.abs(sq[:, 0] - sq[:, 1])

    @property
    def dir_mid(self):
        return self.alpha + self.psi

    @property
    def dir_center(self):
        d = np.array(self.spec.center) - self.states[:, 0:2]
        ang = np.arctan2(d[:, 1], d[:, 0])
        ang[np.hypot(d[:, 0], d[:, 1]) < 1e-9] = np.nan
        ok = np.isfinite(ang)
        if ok.any():
            ang[ok] = np.unwrap(ang[ok])
        return ang

    @property
    def dir_mid_wrapped(self):
        return wrap_angle(self.dir_mid)

    @property
    def dir_center_wrapped(self):
        return wrap_angle(self.dir_center)

    def record(self, i):
        return SimRecord(float(self.t[i]), self.states[i].copy(), self.commands[i].copy(),
                         self.error[i], self.omega_sq[i], float(self.dir_mid[i]),
                         float(self.dir_center[i]),
                         (bool(self.saturated[i, 0]), bool(self.saturated[i, 1])))

    def __iter__(self):
        return (self.record(i) for i in range(len(self)))

    def columns(self):
        """CSV columns in their fixed order."""
        theta = self.params.theta
        mid = self.dir_mid
        err = self.error
        sq = self.omega_sq
        s = self.states
        return {
            "t": self.t, "x": s[:, 0], "y": s[:, 1], "vx": s[:, 2], "vy": s[:, 3],
            "omega1": s[:, 4], "omega2": s[:, 5], "alpha": s[:, 6], "psi": self.psi,
            "x_r": self.ref_pos[:, 0], "y_r": self.ref_pos[:, 1],
            "err_x": err[:, 0], "err_y": err[:, 1],
            "omega1_sq": sq[:, 0], "omega2_sq": sq[:, 1],
            "dir_mid": mid, "dir_upper": mid + theta, "dir_lower": mid - theta,
            "dir_center": self.dir_center,
            "sat1": self.saturated[:, 0].astype(int), "sat2": self.saturated[:, 1].astype(int),
        }


@dataclass(frozen=True)
class SimConfig:
    controller: ControllerKind = ControllerKind.FL3
    dt: float = 0.01
    t_end: float = 10.0
    initial: SimState = field(default_factory=SimState)
    record_stride: Optional[int] = None
    control_mode: str = "hold"
    substeps: int = 1
    omega_min: float = OMEGA_MIN
    omega_sq_max: Optional[float] = None
    gait_phase_offset: bool = True
    yaw_coupled_alpha_gain: bool = True

    def __post_init__(self):
        object.__setattr__(self, "controller", ControllerKind(self.controller))
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise ValueError("t_end must be nonnegative")
        if self.record_stride is not None and int(self.record_stride) < 1:
            raise ValueError("record_stride must be >= 1")
        if self.control_mode not in ("hold", "continuous"):
            raise ValueError("control_mode must be 'hold' or 'continuous'")
        if int(self.substeps) < 1:
            raise ValueError("substeps must be >= 1")
        if not self.omega_min >= 0:
            raise ValueError("omega_min must be nonnegative")
        if self.omega_sq_max is not None and not self.omega_sq_max > 0:
            raise ValueError("omega_sq_max must be positive")

    @property
    def n_steps(self):
        return int(np.floor(self.t_end / self.dt + 1e-9))

    @property
    def stride(self):
        if self.record_stride is not None:
            return int(self.record_stride)
        return 1 if self.t_end <= 100 else 100

    def initial_array(self):
        x0 = self.initial.to_array()
        if self.controller is ControllerKind.FL4:
            if x0.size == BASE_SIZE:
                x0 = np.concatenate([x0, np.zeros(3)])
        else:
            x0 = x0[:BASE_SIZE]
        return x0


# --- compiled loop ----------------------------------------------------------

_FL3, _GAIT, _FL4 = 0, 1, 2
_KIND_CODE = {ControllerKind.FL3: _FL3, ControllerKind.GAIT: _GAIT, ControllerKind.FL4: _FL4}


@njit(cache=True)
def _control(kind, t, X, p, kx, ky, spec, omega_min, alpha_factor, phase0, rate,
             raw_schedule, omega_sq_max):
    """Returns (command[3], floored, singular, saturated[2], raw[2])."""
    ref = _circle(t, spec)
    sat = np.zeros(2, dtype=np.bool_)
    raw = np.zeros(2)
    if kind == _FL3:
        cmd, floored, singular = _fl3_command(X, ref, kx, ky, p, omega_min)
    elif kind == _FL4:
        cmd, floored, singular = _fl4_command(X, ref, kx, ky, p, omega_min, alpha_factor)
    else:
        alpha = _gait_alpha(t, phase0, rate, 1.0 - p[2] / p[3], raw_schedule)
        u, raw, sat = _gait_command(X, ref, kx, ky, p, alpha, omega_sq_max)
        cmd = np.empty(3)
        cmd[0] = u[0]
        cmd[1] = u[1]
        cmd[2] = alpha
        floored = False
        singular = False
    return cmd, floored, singular, sat, raw


@njit(cache=True)
def _plant(kind, t, X, cmd, p, phase0, rate, raw_schedule):
    d = np.zeros(X.size)
    d[0] = X[2]
    d[1] = X[3]
    if kind == _GAIT:
        # the tilt schedule is a known function of time, not a held sample
        alpha = _gait_alpha(t, phase0, rate, 1.0 - p[2] / p[3], raw_schedule)
        a = _accel(np.sqrt(cmd[0]), np.sqrt(cmd[1]), alpha, p)
    else:
        a = _accel(X[4], X[5], X[6], p)
    d[2] = a[0]
    d[3] = a[1]
    if kind == _FL3:
        d[4] = cmd[0]
        d[5] = cmd[1]
        d[6] = cmd[2]
    elif kind == _FL4:
        d[4] = X[7]
        d[5] = X[8]
        d[6] = X[9]
        d[7] = cmd[0]
        d[8] = cmd[1]
        d[9] = cmd[2]
    return d


@njit(cache=True)
def _push(ev_t, ev_k, ev_c, ev_v, n_ev, t, k, c, v):
    if n_ev == ev_t.size:
        cap = 2 * ev_t.size
        nt = np.empty(cap)
        nk = np.empty(cap, dtype=np.int64)
        nc = np.empty(cap, dtype=np.int64)
        nv = np.empty(cap)
        nt[:n_ev] = ev_t
        nk[:n_ev] = ev_k
        nc[:n_ev] = ev_c
        nv[:n_ev] = ev_v
        ev_t, ev_k, ev_c, ev_v = nt, nk, nc, nv
    ev_t[n_ev] = t
    ev_k[n_ev] = k
    ev_c[n_ev] = c
    ev_v[n_ev] = v
    return ev_t, ev_k, ev_c, ev_v, n_ev + 1


@njit(cache=True)
def _simulate(kind, x0, n_steps, dt, substeps, stride, continuous, p, kx, ky, spec,
              omega_min, alpha_factor, phase0, rate, raw_schedule, omega_sq_max):
    n_rec = n_steps // stride + 1
    nx = x0.size
    rec_t = np.empty(n_rec)
    rec_x = np.empty((n_rec, nx))
    rec_u = np.empty((n_rec, 3))
    rec_s = np.zeros((n_rec, 2), dtype=np.bool_)
    rec_r = np.empty((n_rec, 2))
    ev_t = np.empty(16)
    ev_k = np.empty(16, dtype=np.int64)
    ev_c = np.empty(16, dtype=np.int64)
    ev_v = np.empty(16)
    n_ev = 0

    X = x0.copy()
    prev_sat = np.zeros(2, dtype=np.bool_)
    prev_floor = False
    clamp = np.zeros(2, dtype=np.bool_)
    clamp_val = np.zeros(2)
    h = dt / substeps
    failed = -1

    for i in range(n_steps + 1):
        t = i * dt
        cmd, floored, singular, gsat, raw = _control(kind, t, X, p, kx, ky, spec, omega_min,
                                                     alpha_factor, phase0, rate, raw_schedule,
                                                     omega_sq_max)
        if singular:
            cmd[:] = 0.0
        if kind == _GAIT:
            X[4] = np.sqrt(cmd[0])
            X[5] = np.sqrt(cmd[1])
            X[6] = cmd[2]
            sat = gsat
            val = raw
        else:
            sat = clamp
            val = clamp_val

        for ch in range(2):
            if sat[ch] and not prev_sat[ch]:
                ev_t, ev_k, ev_c, ev_v, n_ev = _push(ev_t, ev_k, ev_c, ev_v, n_ev, t, 0, ch + 1, val[ch])
            elif prev_sat[ch] and not sat[ch]:
                ev_t, ev_k, ev_c, ev_v, n_ev = _push(ev_t, ev_k, ev_c, ev_v, n_ev, t, 1, ch + 1,
                                                     X[4 + ch] ** 2 if kind == _GAIT else X[4 + ch])
            prev_sat[ch] = sat[ch]
        if singular or floored:
            if not prev_floor:
                ch = 0
                if not singular:
                    ch = 1 if X[4] < omega_min else 2
                ev_t, ev_k, ev_c, ev_v, n_ev = _push(ev_t, ev_k, ev_c, ev_v, n_ev, t, 2, ch,
                                                     min(X[4], X[5]))
            prev_floor = True
        else:
            prev_floor = False

        if i % stride == 0:
            k = i // stride
            rec_t[k] = t
            rec_x[k] = X
            rec_u[k] = cmd
            rec_s[k, 0] = sat[0]
            rec_s[k, 1] = sat[1]
            ref = _circle(t, spec)
            rec_r[k, 0] = ref[0, 0]
            rec_r[k, 1] = ref[0, 1]
        if i == n_steps:
            break

        clamp[:] = False
        for j in range(substeps):
            ts = t + j * h
            if continuous:
                c1 = _control(kind, ts, X, p, kx, ky, spec, omega_min, alpha_factor,
                              phase0, rate, raw_schedule, omega_sq_max)[0]
                k1 = _plant(kind, ts, X, c1, p, phase0, rate, raw_schedule)
                y2 = X + 0.5 * h * k1
                c2 = _control(kind, ts + 0.5 * h, y2, p, kx, ky, spec, omega_min, alpha_factor,
                              phase0, rate, raw_schedule, omega_sq_max)[0]
                k2 = _plant(kind, ts + 0.5 * h, y2, c2, p, phase0, rate, raw_schedule)
                y3 = X + 0.75 * h * k2
                c3 = _control(kind, ts + 0.75 * h, y3, p, kx, ky, spec, omega_min, alpha_factor,
                              phase0, rate, raw_schedule, omega_sq_max)[0]
                k3 = _plant(kind, ts + 0.75 * h, y3, c3, p, phase0, rate, raw_schedule)
            else:
                k1 = _plant(kind, ts, X, cmd, p, phase0, rate, raw_schedule)
                k2 = _plant(kind, ts + 0.5 * h, X + 0.5 * h * k1, cmd, p, phase0, rate, raw_schedule)
                k3 = _plant(kind, ts + 0.75 * h, X + 0.75 * h * k2, cmd, p, phase0, rate, raw_schedule)
            X = X + h * (2.0 * k1 + 3.0 * k2 + 4.0 * k3) / 9.0
            if kind != _GAIT:
                for ch in range(2):
                    if X[4 + ch] < 0.0:
                        if not clamp[ch]:
                            clamp_val[ch] = X[4 + ch]
                        clamp[ch] = True
                        X[4 + ch] = 0.0
        if not np.all(np.isfinite(X)):
            failed = i + 1
            break

    return (rec_t, rec_x, rec_u, rec_s, rec_r, ev_t[:n_ev].copy(), ev_k[:n_ev].copy(),
            ev_c[:n_ev].copy(), ev_v[:n_ev].copy(), failed, X)


def run_simulation(config, params=None, gains=None, spec=None):
    """Simulate one closed-loop run.

    Returns ``(trajectory, events)``.  Identical inputs give bit-identical
    outputs.  Raises :class:`NonFiniteState` if the state blows up.
    """
    params = params or VehicleParams()
    spec = spec or CircleSpec()
    kind = config.controller
    gains = gains or default_gains(kind)
    if gains.order != kind.order:
        raise ValueError(f"{kind.value} needs {kind.order} gains per axis, got {gains.order}")
    kx, ky = gains.arrays()
    out = _simulate(
        _KIND_CODE[kind], config.initial_array(), config.n_steps, float(config.dt),
        int(config.substeps), config.stride, config.control_mode == "continuous",
        params.packed(), kx, ky, spec.packed(), float(config.omega_min),
        params.tilt_gain if config.yaw_coupled_alpha_gain else 1.0,
        wrap_angle(spec.phase0 + np.pi), spec.rate, not config.gait_phase_offset,
        -1.0 if config.omega_sq_max is None else float(config.omega_sq_max),
    )
    rec_t, rec_x, rec_u, rec_s, rec_r, ev_t, ev_k, ev_c, ev_v, failed, x_last = out
    if failed >= 0:
        raise NonFiniteState(failed * config.dt, x_last)
    traj = Trajectory(kind, rec_t, rec_x, rec_u, rec_s, rec_r, params, spec)
    events = EventLog(Event(float(t), _EVENT_CODES[k], int(c), float(v))
                      for t, k, c, v in zip(ev_t, ev_k, ev_c, ev_v))
    return traj, events

