#!/usr/bin/env python3
"""Discrete stability-constant probe on a sequence of coarse meshes.

Solves the generalized eigenvalue problem behind the inf-sup constant of
the penalty-free weak form (P1, jittered meshes) and also records the
constant of the symmetric variant for comparison.  Output lands in
results/infsup/infsup.csv.
"""

import sys

from nitschefem import cli


def main() -> int:
    args = ["infsup", "--n", "8", "12", "16", "--mesh", "jittered",
            "--sym-compare", "--out", "results/infsup"]
    print(f"==> nitsche-fem {' '.join(args)}")
    return cli.main(args)


if __name__ == "__main__":
    sys.exit(main())
