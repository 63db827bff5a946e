"""Constant-speed circular reference with analytic derivatives."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit


class AtCenter(ValueError):
    pass


def wrap_angle(a):
    """Wrap to the half-open interval (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class CircleSpec:
    radius: float = 10.0
    speed: float = 10.0
    start: tuple = (0.0, 0.0)
    center: tuple = (0.0, 10.0)
    ccw: bool = True

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.speed > 0:
            raise ValueError("speed must be positive")
        dist = np.hypot(self.start[0] - self.center[0], self.start[1] - self.center[1])
        if abs(dist - self.radius) > 1e-9 * max(1.0, self.radius):
            raise ValueError(f"start lies {dist:g} from center, expected radius {self.radius:g}")

    @property
    def rate(self):
        """Signed angular rate of the reference about the center."""
        return (1.0 if self.ccw else -1.0) * self.speed / self.radius

    @property
    def phase0(self):
        """Polar angle of the start point as seen from the center."""
        return float(np.arctan2(self.start[1] - self.center[1], self.start[0] - self.center[0]))

    @property
    def period(self):
        return 2 * np.pi * self.radius / self.speed

    def packed(self):
        return (self.center[0], self.center[1], float(self.radius), self.phase0, self.rate)


class ReferenceSample(NamedTuple):
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    jerk: np.ndarray
    snap: np.ndarray


@njit(cache=True)
def _circle(t, spec):
    """Rows: position, velocity, acceleration, jerk, snap."""
    cx, cy, r, phase0, w = spec
    phi = phase0 + w * t
    c = np.cos(phi)
    s = np.sin(phi)
    out = np.empty((5, 2))
    out[0, 0] = cx + r * c
    out[0, 1] = cy + r * s
    # d/dt (c, s) = w * (-s, c)
    out[1, 0] = -r * w * s
    out[1, 1] = r * w * c
    out[2, 0] = -r * w * w * c
    out[2, 1] = -r * w * w * s
    out[3, 0] = r * w ** 3 * s
    out[3, 1] = -r * w ** 3 * c
    out[4, 0] = r * w ** 4 * c
    out[4, 1] = r * w ** 4 * s
    return out


def circle_sample(spec, t):
    if t < 0:
        raise ValueError("reference time must be nonnegative")
    rows = _circle(float(t), spec.packed())
    return ReferenceSample(*(rows[i].copy() for i in range(5)))


def center_direction(pos, spec):
    """Angle of the ray from ``pos`` to the circle center, in (-pi, pi]."""
    dx = spec.center[0] - pos[0]
    dy = spec.center[1] - pos[1]
    if np.hypot(dx, dy) < 1e-9:
        raise AtCenter("position coincides with the circle center")
    return wrap_angle(np.arctan2(dy, dx))
