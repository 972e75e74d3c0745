"""Thin-shell rate: mu w^2/pi^2 and |lambda_1(inner) - lambda_1(outer)| as w shrinks.

    python scripts/annulus_rate.py --values 0.2,0.1,0.05,0.025
"""

import argparse
import csv
import math
import tempfile

from dirstab.scenario import bundled_scenario, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--values", default="0.2,0.1,0.05")
    ap.add_argument("--out", default=None, help="directory for sweep_shell_width.csv")
    args = ap.parse_args()
    values = [float(v) for v in args.values.split(",")]
    sc = bundled_scenario("annulus-sweep")
    out = args.out or tempfile.mkdtemp(prefix="annulus_rate_")
    rows = sweep(sc, "shell_width", values, out)
    print(f"{'w':>7} {'mu':>12} {'mu w^2/pi^2':>12} {'|diff|':>10}")
    for r in rows:
        w = float(r["value"])
        mu = float(r["mu"])
        print(f"{w:7.3f} {mu:12.2f} {mu * w * w / math.pi ** 2:12.4f} "
              f"{abs(float(r['total_diff'])):10.4f}")
    with open(f"{out}/sweep_shell_width.csv") as fh:
        n = sum(1 for _ in csv.reader(fh)) - 1
    print(f"{n} rows in {out}/sweep_shell_width.csv")


if __name__ == "__main__":
    main()
