"""
Driving the command-line tool
=============================

Write input documents, run ``sobgeo exp`` and ``sobgeo suite`` in a scratch
directory, and read the outputs back.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from sobgeo import cli, io
from sobgeo.grid import get_grid

n = 33
th = get_grid(n).theta
work = Path(tempfile.mkdtemp(prefix="sobgeo-demo-"))

io.write_field(work / "loop.json", np.column_stack([np.cos(th), 0.8 * np.sin(th)]))
io.write_field(work / "velocity.json", 0.05 * np.column_stack([np.cos(2 * th), np.sin(2 * th)]))
(work / "config.json").write_text(json.dumps({"n": n, "p": 1.5, "dt": 0.02, "t_end": 0.5, "record_every": 5}))

code = cli.main(
    ["exp", "--config", str(work / "config.json"), "--curve", str(work / "loop.json"),
     "--velocity", str(work / "velocity.json"), "--out", str(work / "exp")]
)
print(f"sobgeo exp exited with {code}")
header, rows = io.read_csv(work / "exp" / "energy.csv")
print(header)
print(rows)

code = cli.main(["suite", "--n", str(n), "--out", str(work / "suite")])
report = json.loads((work / "suite" / "suite_report.json").read_text())
print(f"\nsobgeo suite exited with {code}: status {report['status']}")
print(f"outputs in {work}")
