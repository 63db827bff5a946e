"""Control laws for the tilt vehicle.

``fl3``
    Dynamic extension by one integrator on every input; the input rates
    are allocated with the minimum-norm right inverse of the jerk gain.
``gait``
    The tilt is scheduled so the thrust bisector tracks the direction to
    the circle center; the two squared speeds are found by inverting the
    (square) thrust map under a PD outer loop.
``fl4``
    Two integrators on every input; second input derivatives are allocated
    through the snap decomposition.

All three are pure functions.  The ``_``-prefixed kernels are shared with
the compiled simulation loop.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .dynamics import _accel, _j_theta, _jerk_gain, _snap_bias
from .linalg2 import RankDeficient, _inv2, _pinv_2x3, _rotation
from .reference import CircleSpec, wrap_angle

#: speed floor applied before building a decoupling matrix
OMEGA_MIN = 1e-6


class ControllerKind(str, enum.Enum):
    FL3 = "fl3"
    GAIT = "gait"
    FL4 = "fl4"

    @property
    def order(self):
        return {"fl3": 3, "gait": 2, "fl4": 4}[self.value]


class InvalidGains(ValueError):
    pass


def _is_hurwitz(coeffs):
    roots = np.roots(np.concatenate(([1.0], coeffs)))
    return bool(np.all(roots.real < 0))


@dataclass(frozen=True)
class Gains:
    """Per-axis error feedback coefficients, highest derivative first.

    For ``fl3`` the x axis uses ``x = (k1, k2, k3)`` on the acceleration,
    velocity and position errors; ``gait`` uses two and ``fl4`` four.
    """
    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(k) for k in self.x))
        object.__setattr__(self, "y", tuple(float(k) for k in self.y))
        if len(self.x) != len(self.y):
            raise InvalidGains("x and y gain vectors differ in length")
        if len(self.x) not in (2, 3, 4):
            raise InvalidGains(f"expected 2, 3 or 4 gains per axis, got {len(self.x)}")
        for axis, ks in (("x", self.x), ("y", self.y)):
            if not all(np.isfinite(k) and k > 0 for k in ks):
                raise InvalidGains(f"{axis} gains must be finite and positive: {ks}")
            if not _is_hurwitz(ks):
                raise InvalidGains(f"{axis} error polynomial is not Hurwitz: {ks}")

    @property
    def order(self):
        return len(self.x)

    @classmethod
    def from_poles(cls, order, pole=-2.0):
        """All closed-loop error poles placed at ``pole`` (must be negative)."""
        if pole >= 0:
            raise InvalidGains("pole must be strictly negative")
        ks = tuple(np.poly([pole] * order)[1:])
        return cls(ks, ks)

    def arrays(self):
        return np.array(self.x), np.array(self.y)


def default_gains(kind):
    return Gains.from_poles(ControllerKind(kind).order, -2.0)


@dataclass(frozen=True)
class ControlCommand:
    """Controller output at one instant.

    ``values`` holds the input rates (``fl3``), the squared speeds after
    clamping (``gait``) or the second input derivatives (``fl4``).
    ``raw`` keeps the pre-clamp squared speeds of a gait command.
    ``singular`` is set when the speed floor engaged while building the
    decoupling matrix.
    """
    kind: ControllerKind
    values: np.ndarray
    alpha: Optional[float] = None
    saturated: tuple = (False, False)
    singular: bool = False
    raw: Optional[np.ndarray] = None


# --- compiled kernels -------------------------------------------------------


@njit(cache=True)
def _floor(w, omega_min):
    if w < omega_min:
        return omega_min, True
    return w, False


@njit(cache=True)
def _fl3_command(X, ref, kx, ky, p, omega_min):
    w1, f1 = _floor(X[4], omega_min)
    w2, f2 = _floor(X[5], omega_min)
    acc = _accel(X[4], X[5], X[6], p)
    v = np.empty(2)
    v[0] = ref[3, 0] + kx[0] * (ref[2, 0] - acc[0]) + kx[1] * (ref[1, 0] - X[2]) + kx[2] * (ref[0, 0] - X[0])
    v[1] = ref[3, 1] + ky[0] * (ref[2, 1] - acc[1]) + ky[1] * (ref[1, 1] - X[3]) + ky[2] * (ref[0, 1] - X[1])
    gain = _jerk_gain(w1, w2, X[6], p, 1.0 - p[2] / p[3])
    pinv, det, singular = _pinv_2x3(gain)
    return pinv @ v, f1 or f2, singular


@njit(cache=True)
def _fl4_command(X, ref, kx, ky, p, omega_min, alpha_factor):
    w1, f1 = _floor(X[4], omega_min)
    w2, f2 = _floor(X[5], omega_min)
    acc = _accel(X[4], X[5], X[6], p)
    rates = X[7:10].copy()
    jerk = _jerk_gain(X[4], X[5], X[6], p, 1.0 - p[2] / p[3]) @ rates
    bias = _snap_bias(X[4], X[5], X[6], X[7], X[8], X[9], p)
    v = np.empty(2)
    v[0] = (ref[4, 0] + kx[0] * (ref[3, 0] - jerk[0]) + kx[1] * (ref[2, 0] - acc[0])
            + kx[2] * (ref[1, 0] - X[2]) + kx[3] * (ref[0, 0] - X[0]))
    v[1] = (ref[4, 1] + ky[0] * (ref[3, 1] - jerk[1]) + ky[1] * (ref[2, 1] - acc[1])
            + ky[2] * (ref[1, 1] - X[3]) + ky[3] * (ref[0, 1] - X[1]))
    gain = _jerk_gain(w1, w2, X[6], p, alpha_factor)
    pinv, det, singular = _pinv_2x3(gain)
    return pinv @ (v - bias), f1 or f2, singular


@njit(cache=True)
def _gait_alpha(t, phase0, rate, tilt_gain, raw_schedule):
    if raw_schedule:
        return t / tilt_gain
    return (phase0 + rate * t) / tilt_gain


@njit(cache=True)
def _gait_command(X, ref, kx, ky, p, alpha, omega_sq_max):
    phi = (1.0 - p[2] / p[3]) * alpha
    inv, det = _inv2(_rotation(phi) @ _j_theta(p))
    d = np.empty(2)
    d[0] = ref[2, 0] + kx[0] * (ref[1, 0] - X[2]) + kx[1] * (ref[0, 0] - X[0])
    d[1] = ref[2, 1] + ky[0] * (ref[1, 1] - X[3]) + ky[1] * (ref[0, 1] - X[1])
    raw = p[5] * (inv @ d)
    u = raw.copy()
    sat = np.zeros(2, dtype=np.bool_)
    for i in range(2):
        if u[i] < 0.0:
            u[i] = 0.0
            sat[i] = True
        elif omega_sq_max > 0.0 and u[i] > omega_sq_max:
            u[i] = omega_sq_max
            sat[i] = True
    return u, raw, sat


# --- public API -------------------------------------------------------------


def _ref_rows(ref):
    return np.vstack([ref.pos, ref.vel, ref.acc, ref.jerk, ref.snap]).astype(float)


def _check_gains(gains, kind):
    if gains.order != kind.order:
        raise InvalidGains(f"{kind.value} needs {kind.order} gains per axis, got {gains.order}")


def fl3_control(state, ref, gains, params, omega_min=OMEGA_MIN):
    """Input rates ``(domega1, domega2, dalpha)`` for third-derivative linearization.

    The virtual input is the reference jerk plus weighted acceleration,
    velocity and position errors; measured acceleration comes from the
    plant model.  Raises :class:`~tiltsim.linalg2.RankDeficient` if the jerk
    gain loses row rank after flooring the speeds at ``omega_min``.
    """
    _check_gains(gains, ControllerKind.FL3)
    if state.extended:
        raise ValueError("fl3 control expects the base state")
    kx, ky = gains.arrays()
    cmd, floored, singular = _fl3_command(state.to_array(), _ref_rows(ref), kx, ky,
                                          params.packed(), omega_min)
    if singular:
        raise RankDeficient(0.0, "jerk gain is rank deficient (both propeller speeds ~ 0)")
    return ControlCommand(ControllerKind.FL3, cmd, singular=bool(floored))


def gait_alpha(t, params, spec=None, phase_offset=True):
    """Scheduled tilt that keeps the thrust bisector on the center direction.

    With ``phase_offset=False`` the schedule is the bare ``t / (1 - i_t/i_b)``,
    which points at the center only for one circle placement.
    """
    if params.i_t == params.i_b:
        from .dynamics import DegenerateInertia
        raise DegenerateInertia("i_t == i_b")
    spec = spec or CircleSpec()
    phase0 = wrap_angle(spec.phase0 + np.pi)
    return _gait_alpha(float(t), phase0, spec.rate, params.tilt_gain, not phase_offset)


def gait_control(state, ref, gains, params, t, spec=None, omega_sq_max=None, phase_offset=True):
    """Squared propeller speeds from dynamic inversion under the scheduled tilt.

    Negative squared speeds are clamped to zero (and, when
    ``omega_sq_max`` is given, large ones to that bound); the per-channel
    ``saturated`` flags record which bound was hit.
    """
    _check_gains(gains, ControllerKind.GAIT)
    spec = spec or CircleSpec()
    alpha = gait_alpha(t, params, spec, phase_offset)
    kx, ky = gains.arrays()
    x = state.to_array()[:7]
    u, raw, sat = _gait_command(x, _ref_rows(ref), kx, ky, params.packed(), alpha,
                                -1.0 if omega_sq_max is None else float(omega_sq_max))
    return ControlCommand(ControllerKind.GAIT, u, alpha=alpha,
                          saturated=(bool(sat[0]), bool(sat[1])), raw=raw)


def fl4_control(state, ref, gains, params, omega_min=OMEGA_MIN, yaw_coupled=True):
    """Second input derivatives for fourth-derivative linearization.

    Feeds back jerk, acceleration, velocity and position errors; measured
    jerk and acceleration are evaluated from the model at the extended
    state.  The command satisfies ``gain @ cmd + bias = v``.
    """
    _check_gains(gains, ControllerKind.FL4)
    if not state.extended:
        raise ValueError("fl4 control expects the extended state")
    kx, ky = gains.arrays()
    factor = params.tilt_gain if yaw_coupled else 1.0
    cmd, floored, singular = _fl4_command(state.to_array(), _ref_rows(ref), kx, ky,
                                          params.packed(), omega_min, factor)
    if singular:
        raise RankDeficient(0.0, "snap gain is rank deficient (both propeller speeds ~ 0)")
    return ControlCommand(ControllerKind.FL4, cmd, singular=bool(floored))
