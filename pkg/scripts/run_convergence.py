#!/usr/bin/env python3
"""Convergence tables for P1 and P2 on structured and jittered meshes.

Writes one output directory per (order, mesh) combination under
results/convergence/, each containing the weak-BC and strong-BC tables,
a side-by-side comparison CSV, and a manifest.
"""

import sys

from nitschefem import cli

BASE = "results/convergence"

RUNS = [
    ("p1_structured", ["--order", "1", "--mesh", "structured"]),
    ("p1_jittered", ["--order", "1", "--mesh", "jittered"]),
    ("p2_structured", ["--order", "2", "--mesh", "structured"]),
    ("p2_jittered", ["--order", "2", "--mesh", "jittered"]),
]


def main() -> int:
    for name, extra in RUNS:
        args = ["convergence", "--levels", "4", "--n0", "10",
                "--out", f"{BASE}/{name}", *extra]
        print(f"==> nitsche-fem {' '.join(args)}")
        code = cli.main(args)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
