"""Experiment configuration files.

Configs are INI files (``configparser``) with one section per component.
Every key is optional; ``presets/example.ini`` lists all of them with their
defaults.  Numeric values may use ``pi`` (``theta = pi/6``).  A ``[sweep]``
section maps ``section.key`` to ``|``-separated alternatives; the sweep
runs the Cartesian product.
"""

import ast
import configparser
import itertools
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .controllers import ControllerKind, Gains, InvalidGains
from .dynamics import InvalidParams, InvalidState, SimState, VehicleParams
from .engine import SimConfig
from .metrics import DRIFT_RATIO, DRIFT_SLOPE, DRIFT_TOL, SETTLE_TOL, SETTLE_WINDOW
from .reference import CircleSpec

PRESETS = ("fl3_10s", "fl3_2000s", "gait_10s", "fl4_long")


class ConfigError(ValueError):
    pass


KEYS = {
    "simulation": {"controller", "dt", "t_end", "record_stride", "control_mode", "substeps",
                   "omega_min", "omega_sq_max"},
    "initial": {"x", "y", "vx", "vy", "omega1", "omega2", "alpha", "domega1", "domega2", "dalpha"},
    "vehicle": {"k_f1", "k_f2", "i_t", "i_b", "theta", "mass"},
    "gains": {"x", "y", "pole"},
    "reference": {"radius", "speed", "start", "center", "orientation"},
    "compat": {"gait_phase_offset", "yaw_coupled_alpha_gain"},
    "metrics": {"settle_tol", "settle_window", "drift_slope", "drift_ratio", "drift_tol"},
    "output": {"dir", "plots"},
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg,
        ast.UAdd: operator.pos}


def _eval_number(text):
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return float(np.pi)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError
    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


def _numbers(text):
    return tuple(_eval_number(part) for part in text.split(","))


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class MetricSettings:
    settle_tol: float = SETTLE_TOL
    settle_window: float = SETTLE_WINDOW
    drift_slope: float = DRIFT_SLOPE
    drift_ratio: float = DRIFT_RATIO
    drift_tol: float = DRIFT_TOL


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    sim: SimConfig
    params: VehicleParams
    gains: Gains
    spec: CircleSpec
    metrics: MetricSettings = field(default_factory=MetricSettings)
    out_dir: Optional[str] = None
    plots: bool = True
    sweep: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def cells(self):
        """Expand the sweep grid into ``(config, overrides)`` pairs."""
        if not self.sweep:
            return [(self, {})]
        keys = sorted(self.sweep)
        out = []
        for i, combo in enumerate(itertools.product(*(self.sweep[k] for k in keys))):
            raw = {sec: dict(items) for sec, items in self.raw.items() if sec != "sweep"}
            for key, value in zip(keys, combo):
                sec, opt = key.split(".", 1)
                raw.setdefault(sec, {})[opt] = value
                if sec == "gains":
                    # an override of one gain form replaces the other
                    for other in ({"x", "y"} if opt == "pole" else {"pole"}):
                        raw[sec].pop(other, None)
            out.append((from_mapping(raw, f"{self.name}-{i:03d}"), dict(zip(keys, combo))))
        return out


def from_mapping(raw, name="experiment"):
    """Build and validate an :class:`ExperimentConfig` from section -> key -> text."""
    for sec, items in raw.items():
        if sec == "sweep":
            continue
        if sec not in KEYS:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(items) - KEYS[sec]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")

    def get(sec, key, conv, default):
        text = raw.get(sec, {}).get(key)
        if text is None or text.strip() == "":
            return default
        return conv(text)

    try:
        controller = get("simulation", "controller", lambda s: ControllerKind(s.strip().lower()),
                         ControllerKind.FL3)
        stride = get("simulation", "record_stride",
                     lambda s: None if s.strip() == "auto" else int(s), None)
        omax = get("simulation", "omega_sq_max",
                   lambda s: None if s.strip().lower() == "none" else _eval_number(s), None)
        init = {k: get("initial", k, _eval_number, None) for k in KEYS["initial"]}
        init = {k: v for k, v in init.items() if v is not None}
        initial = SimState(**init)
        if controller is ControllerKind.FL4 and not initial.extended:
            initial = initial.with_extension()
        sim = SimConfig(
            controller=controller,
            dt=get("simulation", "dt", _eval_number, 0.01),
            t_end=get("simulation", "t_end", _eval_number, 10.0),
            initial=initial,
            record_stride=stride,
            control_mode=get("simulation", "control_mode", str.strip, "hold"),
            substeps=get("simulation", "substeps", int, 1),
            omega_min=get("simulation", "omega_min", _eval_number, SimConfig.omega_min),
            omega_sq_max=omax,
            gait_phase_offset=get("compat", "gait_phase_offset", _bool, True),
            yaw_coupled_alpha_gain=get("compat", "yaw_coupled_alpha_gain", _bool, True),
        )
        vk = {k: get("vehicle", k, _eval_number, None) for k in KEYS["vehicle"]}
        params = VehicleParams(**{k: v for k, v in vk.items() if v is not None})
        gx = get("gains", "x", _numbers, None)
        gy = get("gains", "y", _numbers, None)
        pole = get("gains", "pole", _eval_number, None)
        if gx is not None or gy is not None:
            if pole is not None:
                raise ConfigError("[gains]: give either x/y or pole, not both")
            gains = Gains(gx if gx is not None else gy, gy if gy is not None else gx)
        else:
            gains = Gains.from_poles(controller.order, -2.0 if pole is None else pole)
        if gains.order != controller.order:
            raise ConfigError(f"{controller.value} needs {controller.order} gains per axis")
        orient = get("reference", "orientation", lambda s: s.strip().lower(), "ccw")
        if orient not in ("ccw", "cw"):
            raise ConfigError("orientation must be ccw or cw")
        spec = CircleSpec(
            radius=get("reference", "radius", _eval_number, 10.0),
            speed=get("reference", "speed", _eval_number, 10.0),
            start=get("reference", "start", _numbers, (0.0, 0.0)),
            center=get("reference", "center", _numbers, (0.0, 10.0)),
            ccw=orient == "ccw",
        )
        metrics = MetricSettings(**{k: get("metrics", k, _eval_number, getattr(MetricSettings, k))
                                    for k in KEYS["metrics"]})
        out_dir = get("output", "dir", str.strip, None)
        plots = get("output", "plots", _bool, True)
        sweep = {}
        for key, text in raw.get("sweep", {}).items():
            sec, _, opt = key.partition(".")
            if sec not in KEYS or opt not in KEYS[sec]:
                raise ConfigError(f"[sweep]: unknown parameter {key!r}")
            values = [v.strip() for v in text.split("|") if v.strip()]
            if not values:
                raise ConfigError(f"[sweep]: no values for {key!r}")
            sweep[key] = values
    except ConfigError:
        raise
    except (ValueError, TypeError, InvalidGains, InvalidParams, InvalidState) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(name, sim, params, gains, spec, metrics, out_dir, plots, sweep,
                            {sec: dict(items) for sec, items in raw.items()})


def parse_config(text, name="experiment"):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    raw = {sec: dict(parser.items(sec)) for sec in parser.sections()}
    if not raw:
        raise ConfigError("config is empty")
    return from_mapping(raw, name)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.stem)


def preset_text(name):
    if name not in PRESETS and name != "example":
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("tiltsim.presets").joinpath(f"{name}.ini").read_text()


def load_preset(name):
    return parse_config(preset_text(name), name)
