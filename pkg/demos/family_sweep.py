#!/usr/bin/env python3
"""Run the default parameter sweep into a scratch folder and print the table.

Run: python demos/family_sweep.py   (takes roughly twenty seconds)
"""

import csv
import tempfile
from pathlib import Path

from surfwarp.cli import main

with tempfile.TemporaryDirectory() as tmp:
    code = main(["sweep", "--out", tmp, "--set", "sweep.jacobian_check=false"])
    with open(Path(tmp) / "summary_table.csv") as fh:
        rows = list(csv.DictReader(fh))

print(f"sweep exit code {code}\n")
print(f"{'family':<10}{'pairs':>6}{'median dp95':>13}{'bad tiled':>11}{'bad warped':>12}{'coll t/w':>10}")
for r in rows:
    print(f"{r['surface_family']:<10}{r['n_pairs']:>6}{float(r['median_delta_p95']):>13.2f}"
          f"{float(r['bad_rate_tiled']):>11.3f}{float(r['bad_rate_warped']):>12.3f}"
          f"{r['collisions_tiled'] + '/' + r['collisions_warped']:>10}")
