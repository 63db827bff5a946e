"""Independent numerical oracles for the model and the solver.

Each check compares an analytic path against something computed another
way: finite differences of the acceleration model, the algebraic identity
of the right inverse, observed convergence order, and an independent
high-accuracy solve of the linear error dynamics.
"""

import time
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .controllers import ControllerKind, default_gains
from .dynamics import SimState, VehicleParams, body_accel, jerk_decomposition, snap_decomposition
from .engine import BOGACKI_SHAMPINE, EventKind, SimConfig, rk3_step, run_simulation
from .linalg2 import pinv_2x3
from .reference import CircleSpec, circle_sample


class CheckResult(NamedTuple):
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""
    seconds: float = 0.0


class SmoothInputs:
    """Random smooth input trajectory with analytic first and second derivatives."""

    def __init__(self, rng):
        self.a = rng.uniform(120, 280, 2)
        self.b = rng.uniform(5, 60, 2)
        self.c = rng.uniform(0.3, 3.0, 2)
        self.d = rng.uniform(0, 2 * np.pi, 2)
        self.e = rng.uniform(0.1, 1.5)
        self.f = rng.uniform(0.3, 3.0)
        self.g = rng.uniform(0, 2 * np.pi)
        self.h = rng.uniform(-0.5, 0.5)

    def omega(self, t):
        return self.a + self.b * np.sin(self.c * t + self.d)

    def domega(self, t):
        return self.b * self.c * np.cos(self.c * t + self.d)

    def ddomega(self, t):
        return -self.b * self.c ** 2 * np.sin(self.c * t + self.d)

    def alpha(self, t):
        return self.e * np.sin(self.f * t + self.g) + self.h * t

    def dalpha(self, t):
        return self.e * self.f * np.cos(self.f * t + self.g) + self.h

    def ddalpha(self, t):
        return -self.e * self.f ** 2 * np.sin(self.f * t + self.g)

    def state(self, t, extended=False):
        w = self.omega(t)
        s = SimState(0.0, 0.0, 0.0, 0.0, w[0], w[1], self.alpha(t))
        if extended:
            dw = self.domega(t)
            s = s.with_extension(dw[0], dw[1], self.dalpha(t))
        return s


def _rel(diffs, refs):
    return float(np.max(np.abs(diffs)) / max(np.max(np.abs(refs)), 1e-300))


def check_jerk_fd(params=None, n_traj=20, points=10, h=1e-5, tol=1e-5, seed=0):
    params = params or VehicleParams()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_traj):
        u = SmoothInputs(rng)
        diffs, refs = [], []
        for t in rng.uniform(0.5, 5.0, points):
            fd = (body_accel(u.state(t + h), params) - body_accel(u.state(t - h), params)) / (2 * h)
            rates = np.r_[u.domega(t), u.dalpha(t)]
            model = jerk_decomposition(u.state(t), params).gain @ rates
            diffs.append(fd - model)
            refs.append(model)
        worst = max(worst, _rel(diffs, refs))
    return CheckResult("jerk decomposition vs finite differences", worst < tol, worst, tol,
                       f"{n_traj} trajectories x {points} points, h={h:g}")


def check_snap_fd(params=None, yaw_coupled=True, n_traj=20, points=10, h=1e-3, tol=1e-4, seed=1):
    """Second derivative of the acceleration (five-point stencil) vs the snap model."""
    params = params or VehicleParams()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_traj):
        u = SmoothInputs(rng)
        diffs, refs = [], []
        for t in rng.uniform(0.5, 5.0, points):
            a = [body_accel(u.state(t + k * h), params) for k in (-2, -1, 0, 1, 2)]
            fd = (-a[0] + 16 * a[1] - 30 * a[2] + 16 * a[3] - a[4]) / (12 * h * h)
            dec = snap_decomposition(u.state(t, extended=True), params, yaw_coupled=yaw_coupled)
            model = dec.bias + dec.gain @ np.r_[u.ddomega(t), u.ddalpha(t)]
            diffs.append(fd - model)
            refs.append(model)
        worst = max(worst, _rel(diffs, refs))
    label = "" if yaw_coupled else " (uncoupled tilt column)"
    return CheckResult("snap decomposition vs finite differences" + label, worst < tol, worst, tol,
                       f"{n_traj} trajectories x {points} points, h={h:g}")


def check_pinv(n=1000, tol=1e-9, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < n:
        d = rng.normal(size=(2, 3)) * 10 ** rng.uniform(-1, 2)
        g = d @ d.T
        if np.linalg.det(g) <= 1e-6 * np.abs(g).max() ** 2:
            continue
        worst = max(worst, float(np.abs(d @ pinv_2x3(d) - np.eye(2)).max()))
        done += 1
    return CheckResult("right-inverse identity", worst < tol, worst, tol, f"{n} random matrices")


def integrator_errors(tableau=BOGACKI_SHAMPINE, dts=(0.1, 0.05, 0.025)):
    errs = []
    for dt in dts:
        y = 1.0
        n = int(round(1.0 / dt))
        for i in range(n):
            y = rk3_step(y, i * dt, dt, lambda t, y: y, tableau)
        errs.append(abs(y - np.e))
    return np.array(errs)


def check_integrator_order(tableau=BOGACKI_SHAMPINE, dts=(0.1, 0.05, 0.025), min_ratio=7.5):
    errs = integrator_errors(tableau, dts)
    ratios = errs[:-1] / errs[1:]
    worst = float(ratios.min())
    return CheckResult("integrator convergence ratio per halving", worst >= min_ratio, worst,
                       min_ratio, "dt=" + ",".join(f"{d:g}" for d in dts))


def linear_error_solution(e0, gains, times):
    """Solve ``e^(n) + k1 e^(n-1) + ... + kn e = 0`` with a high-order adaptive solver."""
    k = np.asarray(gains, dtype=float)
    n = k.size
    a = np.zeros((n, n))
    a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -k[::-1]
    sol = solve_ivp(lambda t, y: a @ y, (times[0], times[-1]), np.asarray(e0, dtype=float),
                    t_eval=times, method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[0]


def initial_error_derivatives(kind, state, params, spec):
    """Per-axis error and its derivatives at t = 0, highest order excluded."""
    ref = circle_sample(spec, 0.0)
    rows = [ref.pos - state.position, ref.vel - state.velocity, ref.acc - body_accel(state, params)]
    if ControllerKind(kind) is ControllerKind.FL4:
        rates = np.r_[state.domega1, state.domega2, state.dalpha]
        rows.append(ref.jerk - jerk_decomposition(state, params).gain @ rates)
    return np.array(rows)


def check_linear_error_ode(kind, params=None, gains=None, spec=None, t_end=5.0, dt=0.01, tol=1e-3):
    """Closed-loop position error vs the independently solved linear error ODE."""
    kind = ControllerKind(kind)
    params = params or VehicleParams()
    spec = spec or CircleSpec()
    gains = gains or default_gains(kind)
    initial = SimState()
    if kind is ControllerKind.FL4:
        initial = initial.with_extension()
    cfg = SimConfig(controller=kind, dt=dt, t_end=t_end, initial=initial, record_stride=1,
                    control_mode="continuous")
    traj, events = run_simulation(cfg, params, gains, spec)
    if events.of_kind(EventKind.SATURATION_ON) or events.of_kind(EventKind.SINGULARITY_FLOOR):
        return CheckResult(f"{kind.value} linear error dynamics", False, float("inf"), tol,
                           "run hit saturation or the speed floor")
    e0 = initial_error_derivatives(kind, initial, params, spec)
    err = traj.error
    diffs, refs = [], []
    for axis, k in ((0, gains.x), (1, gains.y)):
        oracle = linear_error_solution(e0[:, axis], k, traj.t)
        diffs.append(err[:, axis] - oracle)
        refs.append(oracle)
    rel = _rel(diffs, refs)
    return CheckResult(f"{kind.value} linear error dynamics", rel < tol, rel, tol,
                       f"{t_end:g} s, dt={dt:g}, controller evaluated in every stage")


def run_all(params=None, yaw_coupled=True):
    checks = [
        lambda: check_jerk_fd(params),
        lambda: check_snap_fd(params, yaw_coupled=yaw_coupled),
        lambda: check_pinv(),
        lambda: check_integrator_order(),
        lambda: check_linear_error_ode("fl3", params),
        lambda: check_linear_error_ode("fl4", params),
    ]
    results = []
    for check in checks:
        t0 = time.perf_counter()
        r = check()
        results.append(r._replace(seconds=time.perf_counter() - t0))
    return results


def format_table(results):
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        op = ">=" if "ratio" in r.name else "<"
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  "
                     f"{r.value:.3e} {op} {r.limit:.1e}  ({r.detail}; {r.seconds:.2f}s)")
    return "\n".join(lines)
