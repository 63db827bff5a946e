"""Planar tilt-rotor vehicle: dynamics, feedback-linearizing controllers, simulation and drift diagnostics."""

from .config import ConfigError, ExperimentConfig, load_config, load_preset, parse_config
from .controllers import ControlCommand, ControllerKind, Gains, default_gains, fl3_control, fl4_control, gait_alpha, gait_control
from .dynamics import (SimState, VehicleParams, body_accel, jerk_decomposition, psi_from_alpha,
                       snap_decomposition, state_derivative)
from .engine import EventKind, EventLog, NonFiniteState, SimConfig, Trajectory, run_simulation
from .linalg2 import RankDeficient, SingularMatrix, pinv_2x3, rotation, rotation_derivative
from .metrics import NeverSettled, detect_saturation, drift_metric, dynamic_error, thrust_direction_band
from .reference import CircleSpec, circle_sample

__version__ = "0.1.0"
