"""Load sweep on the ten-bar truss through the command-line front end.

Equivalent shell commands::

    ddtruss gen-data --d 30 --seed 1 --out d30.csv
    ddtruss sweep ten-bar d30.csv --lambda-list 0:11:1 --out-dir sweep_out
"""

# %%
import csv
import sys
import tempfile
from pathlib import Path

from ddtruss import cli

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
data = out / "d30.csv"
cli.main(["gen-data", "--d", "30", "--seed", "1", "--out", str(data)])

# %% Heuristic only is quick; add "exact" to prove each row (a couple of minutes)
cli.main(["sweep", "ten-bar", str(data), "--lambda-list", "0:11:1",
          "--solvers", "heuristic", "--out-dir", str(out)])

# %% The monitored displacement is the vertical motion of node 2 (negative is down)
with open(out / "path.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        print(f"lambda {float(row['lambda']):4.1f}  u = {float(row['monitor_disp_m']) * 1e3: .3f} mm")
print("results in", out)
