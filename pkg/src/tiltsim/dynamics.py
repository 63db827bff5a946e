"""Planar tilt-vehicle plant.

Two propellers sit on a top disc at +/- ``theta`` about the disc's forward
axis.  Tilting the top disc by ``alpha`` counter-rotates the bottom disc
(the body) so that ``psi = -(i_t / i_b) * alpha``; the thrust bisector
therefore points along ``psi + alpha = (1 - i_t / i_b) * alpha``.

The state layout used by all array code is::

    base (7):      x, y, vx, vy, omega1, omega2, alpha
    extended (10): base + domega1, domega2, dalpha

The extended layout carries the first input derivatives needed by the
fourth-derivative controller.
"""

from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from .linalg2 import _rotation, _rotation_derivative

BASE_SIZE = 7
EXTENDED_SIZE = 10


class InvalidParams(ValueError):
    pass


class DegenerateInertia(InvalidParams):
    """Top and bottom discs have equal inertia; the thrust bisector cannot turn."""


class NegativeOmega(ValueError):
    pass


class ExtensionMismatch(ValueError):
    pass


class InvalidState(ValueError):
    pass


@dataclass(frozen=True)
class VehicleParams:
    k_f1: float = 1e-3
    k_f2: float = 1e-3
    i_t: float = 1e-3
    i_b: float = 2e-3
    theta: float = np.pi / 6
    mass: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise InvalidParams(f"{f.name} must be finite, got {value!r}")
        if self.k_f1 <= 0 or self.k_f2 <= 0:
            raise InvalidParams("thrust coefficients must be positive")
        if self.i_t <= 0 or self.i_b <= 0:
            raise InvalidParams("disc inertias must be positive")
        if self.i_t == self.i_b:
            raise DegenerateInertia("i_t == i_b: the tilt no longer turns the thrust bisector")
        if not 0 < self.theta < np.pi / 2:
            raise InvalidParams("theta must lie in (0, pi/2)")
        if self.mass <= 0:
            raise InvalidParams("mass must be positive")

    @property
    def inertia_ratio(self):
        return self.i_t / self.i_b

    @property
    def tilt_gain(self):
        """d(psi + alpha) / d(alpha)."""
        return 1.0 - self.i_t / self.i_b

    def packed(self):
        """Plain float tuple consumed by the compiled kernels."""
        return (float(self.k_f1), float(self.k_f2), float(self.i_t),
                float(self.i_b), float(self.theta), float(self.mass))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SimState:
    x: float = 0.0
    y: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    omega1: float = 200.0
    omega2: float = 200.0
    alpha: float = 0.0
    domega1: Optional[float] = None
    domega2: Optional[float] = None
    dalpha: Optional[float] = None

    def __post_init__(self):
        ext = (self.domega1, self.domega2, self.dalpha)
        if any(v is None for v in ext) and not all(v is None for v in ext):
            raise InvalidState("extension fields must be given together")
        if not np.all(np.isfinite(self.to_array())):
            raise InvalidState("state entries must be finite")
        if self.omega1 < 0 or self.omega2 < 0:
            raise InvalidState("propeller speeds must be nonnegative")

    @property
    def extended(self):
        return self.domega1 is not None

    @property
    def position(self):
        return np.array([self.x, self.y])

    @property
    def velocity(self):
        return np.array([self.vx, self.vy])

    def to_array(self):
        base = [self.x, self.y, self.vx, self.vy, self.omega1, self.omega2, self.alpha]
        if self.extended:
            base += [self.domega1, self.domega2, self.dalpha]
        return np.array(base, dtype=float)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape not in ((BASE_SIZE,), (EXTENDED_SIZE,)):
            raise InvalidState(f"state vector must have 7 or 10 entries, got {arr.shape}")
        return cls(*(float(v) for v in arr))

    def with_extension(self, domega1=0.0, domega2=0.0, dalpha=0.0):
        return SimState(self.x, self.y, self.vx, self.vy, self.omega1, self.omega2,
                        self.alpha, domega1, domega2, dalpha)


class AccelDecomposition(NamedTuple):
    """``d^n p / dt^n = bias + gain @ inputs`` at one state.

    ``order`` is 3 (inputs are first input derivatives) or 4 (second
    derivatives).
    """
    order: int
    bias: np.ndarray
    gain: np.ndarray


# --- compiled kernels -------------------------------------------------------
# p is VehicleParams.packed(): (k_f1, k_f2, i_t, i_b, theta, mass)


@njit(cache=True)
def _j_theta(p):
    c = np.cos(p[4])
    s = np.sin(p[4])
    return np.array([[c * p[0], c * p[1]], [s * p[0], -s * p[1]]])


@njit(cache=True)
def _accel(w1, w2, alpha, p):
    phi = (1.0 - p[2] / p[3]) * alpha
    rj = _rotation(phi) @ _j_theta(p)
    u1 = w1 * w1
    u2 = w2 * w2
    out = np.empty(2)
    out[0] = (rj[0, 0] * u1 + rj[0, 1] * u2) / p[5]
    out[1] = (rj[1, 0] * u1 + rj[1, 1] * u2) / p[5]
    return out


@njit(cache=True)
def _jerk_gain(w1, w2, alpha, p, alpha_factor):
    """Input-rate coefficient matrix; ``alpha_factor`` scales the tilt column."""
    phi = (1.0 - p[2] / p[3]) * alpha
    jt = _j_theta(p)
    rj = _rotation(phi) @ jt
    dj = _rotation_derivative(phi) @ jt
    u1 = w1 * w1
    u2 = w2 * w2
    m = p[5]
    g = np.empty((2, 3))
    for i in range(2):
        g[i, 0] = rj[i, 0] * 2.0 * w1 / m
        g[i, 1] = rj[i, 1] * 2.0 * w2 / m
        g[i, 2] = (dj[i, 0] * u1 + dj[i, 1] * u2) * alpha_factor / m
    return g


@njit(cache=True)
def _snap_bias(w1, w2, alpha, dw1, dw2, dalpha, p):
    """Fourth position derivative with all second input derivatives set to zero."""
    k = 1.0 - p[2] / p[3]
    phi = k * alpha
    dphi = k * dalpha
    jt = _j_theta(p)
    rj = _rotation(phi) @ jt
    dj = _rotation_derivative(phi) @ jt
    u1 = w1 * w1
    u2 = w2 * w2
    du1 = 2.0 * w1 * dw1
    du2 = 2.0 * w2 * dw2
    # d2u/dt2 without the second-derivative part: 2 * domega**2
    dd1 = 2.0 * dw1 * dw1
    dd2 = 2.0 * dw2 * dw2
    out = np.empty(2)
    for i in range(2):
        out[i] = (-dphi * dphi * (rj[i, 0] * u1 + rj[i, 1] * u2)
                  + 2.0 * dphi * (dj[i, 0] * du1 + dj[i, 1] * du2)
                  + rj[i, 0] * dd1 + rj[i, 1] * dd2) / p[5]
    return out


# --- public API -------------------------------------------------------------


def thrust(omega, k_f):
    """Propeller thrust ``k_f * omega**2``."""
    if omega < 0:
        raise NegativeOmega(f"angular velocity must be nonnegative, got {omega}")
    return k_f * omega * omega


def psi_from_alpha(alpha, params):
    """Body yaw implied by the tilt angle (angular momentum balance)."""
    return -(params.i_t / params.i_b) * alpha


def j_theta(params):
    """Map from squared propeller speeds to body-frame force."""
    return _j_theta(params.packed())


def body_accel(state, params):
    """Translational acceleration in the world frame."""
    return _accel(state.omega1, state.omega2, state.alpha, params.packed())


def jerk_decomposition(state, params):
    """Third position derivative as ``gain @ [domega1, domega2, dalpha]``.

    The bias is identically zero.  The gain loses row rank only when both
    propeller speeds vanish; with one speed at zero the remaining speed
    column and the tilt column are orthogonal.
    """
    p = params.packed()
    gain = _jerk_gain(state.omega1, state.omega2, state.alpha, p, params.tilt_gain)
    return AccelDecomposition(3, np.zeros(2), gain)


def snap_decomposition(state, params, yaw_coupled=True):
    """Fourth position derivative as ``bias + gain @ [ddomega1, ddomega2, ddalpha]``.

    With ``yaw_coupled=False`` the tilt column omits the body yaw reaction
    to the tilt acceleration (it is scaled by 1 instead of ``1 - i_t/i_b``).
    That variant does not match the plant; it exists for comparison only.
    """
    if not state.extended:
        raise ExtensionMismatch("snap decomposition needs the extended state (input rates)")
    p = params.packed()
    factor = params.tilt_gain if yaw_coupled else 1.0
    gain = _jerk_gain(state.omega1, state.omega2, state.alpha, p, factor)
    bias = _snap_bias(state.omega1, state.omega2, state.alpha,
                      state.domega1, state.domega2, state.dalpha, p)
    return AccelDecomposition(4, bias, gain)


def state_derivative(state, command, params):
    """ODE right-hand side for one state under a held command.

    Returns an array laid out like ``state.to_array()``.  Which input
    channels integrate depends on the command kind: rates for ``fl3``,
    second derivatives for ``fl4``, nothing for ``gait`` (speeds and tilt
    are set algebraically by the command).
    """
    from .controllers import ControllerKind

    kind = ControllerKind(command.kind)
    if kind is ControllerKind.FL4 and not state.extended:
        raise ExtensionMismatch("fl4 command needs the extended state")
    if kind is not ControllerKind.FL4 and state.extended:
        raise ExtensionMismatch(f"{kind.value} command expects the base state")

    out = np.zeros(EXTENDED_SIZE if state.extended else BASE_SIZE)
    out[0] = state.vx
    out[1] = state.vy
    if kind is ControllerKind.GAIT:
        w1, w2 = np.sqrt(command.values)
        out[2:4] = _accel(w1, w2, command.alpha, params.packed())
        return out
    out[2:4] = body_accel(state, params)
    if kind is ControllerKind.FL3:
        out[4:7] = command.values
    else:
        out[4:7] = (state.domega1, state.domega2, state.dalpha)
        out[7:10] = command.values
    return out
