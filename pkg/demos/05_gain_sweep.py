"""
Drift across pole locations
===========================

A sweep over the FL3 error poles.  Faster poles settle sooner, but the
input gap grows at about the same rate in every cell: the drift comes
from the unregulated null-space direction, not from the tracking loop.
Cells run in separate processes.
"""

import sys
import tempfile
from pathlib import Path

from tiltsim import cli

grid = """
[simulation]
controller = fl3
t_end = 300

[output]
plots = no

[sweep]
gains.pole = -1 | -2 | -4
"""

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "poles.ini"
    cfg.write_text(grid)
    out = Path(sys.argv[1] if len(sys.argv) > 1 else tmp) / "pole_sweep"
    cli.main(["sweep", "--config", str(cfg), "--out", str(out), "--jobs", "3"])
    print((out / "sweep.csv").read_text())
