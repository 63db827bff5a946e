"""
Fourth-derivative linearization over 3e4 seconds
================================================

One more differentiation makes the second input derivatives the
controls.  The input drift continues on this loop as well, until one
propeller speed is driven to zero and held there by the nonnegativity
projection.  The run then continues on one propeller and the tilt.

Set COMPARE_UNCOUPLED to drop the yaw coupling from the tilt column of
the gain and watch the linearization break.
"""

import time

import numpy as np

from tiltsim import SimConfig, SimState, detect_saturation, load_preset, run_simulation

COMPARE_UNCOUPLED = True

cfg = load_preset("fl4_long")
t0 = time.perf_counter()
traj, events = run_simulation(cfg.sim, cfg.params, cfg.gains, cfg.spec)
print(f"{cfg.sim.n_steps} steps in {time.perf_counter() - t0:.1f} s")

sat = detect_saturation(events, traj)
print("saturation:", sat.to_dict())
for t in (10, 100, 300, 400, 1000, 10000, 30000):
    i = min(np.searchsorted(traj.t, t), len(traj) - 1)
    w1, w2 = traj.omega[i]
    print(f"t={traj.t[i]:7.0f}  error {traj.error_norm[i]:.2e}  omega=({w1:7.2f}, {w2:7.2f})")

if COMPARE_UNCOUPLED:
    short = SimConfig(controller="fl4", t_end=5.0, initial=SimState().with_extension(),
                      yaw_coupled_alpha_gain=False)
    loose, _ = run_simulation(short)
    print(f"uncoupled tilt column, peak error over 5 s: {loose.error_norm.max():.1f}")
