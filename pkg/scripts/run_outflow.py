#!/usr/bin/env python3
"""Convection-dominated boundary-layer experiment (eps = 1e-5, n = 80).

Compares strong Dirichlet enforcement against the penalty-free weak form
for P1, and the unstabilized weak form against streamline-diffusion and
gradient-jump stabilization for P2.  Each run writes a VTK field and a
JSON oscillation report under results/outflow/.
"""

import sys

from nitschefem import cli

RUNS = [
    ("p1_strong", ["--order", "1", "--bc", "strong"]),
    ("p1_nitsche", ["--order", "1", "--bc", "nitsche"]),
    ("p2_none", ["--order", "2", "--stab", "none"]),
    ("p2_sd", ["--order", "2", "--stab", "sd"]),
    ("p2_cip", ["--order", "2", "--stab", "cip"]),
]


def main() -> int:
    for name, extra in RUNS:
        args = ["outflow", "--n", "80", "--eps", "1e-5", "--mesh", "jittered",
                "--out", f"results/outflow/{name}", *extra]
        print(f"==> nitsche-fem {' '.join(args)}")
        code = cli.main(args)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
