#!/usr/bin/env python3
"""Error sensitivity to the boundary penalty weight.

Sweeps gamma in {0, 10, 20, 40, 80} for P1 (n=80) and P2 (n=40) on the
jittered family and writes one sweep table per order under
results/penalty_sweep/.
"""

import sys

from nitschefem import cli

GAMMAS = ["0", "10", "20", "40", "80"]


def main() -> int:
    for order, n in (("1", "80"), ("2", "40")):
        args = ["penalty-sweep", "--order", order, "--n", n,
                "--mesh", "jittered", "--gammas", *GAMMAS,
                "--out", f"results/penalty_sweep/p{order}"]
        print(f"==> nitsche-fem {' '.join(args)}")
        code = cli.main(args)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
