"""Static SVG figures for one run (matplotlib, Agg backend)."""

import numpy as np

MAX_POINTS = 4000


def _thin(traj):
    step = max(1, int(np.ceil(len(traj) / MAX_POINTS)))
    return np.arange(0, len(traj), step)


def write_plots(traj, out_dir):
    """Write trajectory, error, input-squared and direction figures; return their paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    idx = _thin(traj)
    t = traj.t[idx]
    cols = traj.columns()
    paths = []

    def save(fig, name):
        path = out_dir / name
        fig.savefig(path, format="svg")
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(cols["x_r"][idx], cols["y_r"][idx], "--", label="reference")
    ax.plot(cols["x"][idx], cols["y"][idx], label="vehicle")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend()
    save(fig, "trajectory.svg")

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, cols["err_x"][idx], label="x_r - x")
    ax.plot(t, cols["err_y"][idx], label="y_r - y")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("error")
    ax.legend()
    save(fig, "error.svg")

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, cols["omega1_sq"][idx], label="omega1^2")
    ax.plot(t, cols["omega2_sq"][idx], label="omega2^2")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("input squared")
    ax.legend()
    save(fig, "input_squared.svg")

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, cols["dir_center"][idx], label="to center")
    ax.plot(t, cols["dir_mid"][idx], label="thrust bisector")
    ax.plot(t, cols["dir_upper"][idx], label="upper bound")
    ax.plot(t, cols["dir_lower"][idx], label="lower bound")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("direction [rad]")
    ax.legend()
    save(fig, "direction.svg")
    return paths
