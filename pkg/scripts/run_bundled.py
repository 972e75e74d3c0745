"""Run every bundled scenario (or the named ones) and print a verdict table.

    python scripts/run_bundled.py --out out
    python scripts/run_bundled.py convex-square dumbbell-geometry
"""

import argparse
import json
import sys
from pathlib import Path

from dirstab.cli import main as cli_main
from dirstab.scenario import bundled_names


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*")
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    names = args.names or bundled_names()
    argv = ["run", "--out", args.out]
    for n in names:
        argv += ["--scenario", n]
    code = cli_main(argv)
    for n in names:
        summary = Path(args.out) / n / "summary.json"
        if not summary.exists():
            print(f"{n:28s} error (see {Path(args.out) / n / 'error.json'})")
            continue
        s = json.loads(summary.read_text())
        counts = {}
        for chk in s["checks"].values():
            for v, c in chk.get("verdicts", {}).items():
                counts[v] = counts.get(v, 0) + c
        shown = ", ".join(f"{v}={c}" for v, c in sorted(counts.items()) if c)
        print(f"{n:28s} {'VIOLATED' if s['violated'] else 'ok':8s} {shown}")
    return code


if __name__ == "__main__":
    sys.exit(main())
