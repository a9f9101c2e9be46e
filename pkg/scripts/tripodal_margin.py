"""Best tripodal-over-symmetric-bipodal margin as a function of sigma.

Prints, for each sigma, the best margin over the A grid, the leading-order
prediction (F - H'') sigma^2 / 2 and their ratio, so the sigma where the
sigma^2 term starts to dominate is visible.
"""
import argparse

import numpy as np

from graphon_entropy.verify import default_a_grid, tripodal_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--e", type=float, default=0.15)
    ap.add_argument("--sigma-max", type=float, default=0.02)
    ap.add_argument("--sigma-min", type=float, default=1e-4)
    ap.add_argument("--points", type=int, default=16)
    ap.add_argument("--a-min", type=float, default=0.01)
    ap.add_argument("--a-max", type=float, default=0.08)
    ap.add_argument("--a-steps", type=int, default=20)
    args = ap.parse_args()

    A_grid = default_a_grid(args.a_min, args.a_max, args.a_steps)
    print("sigma,A,margin,predicted,ratio")
    for s in np.geomspace(args.sigma_max, args.sigma_min, args.points):
        rows, _ = tripodal_sweep(args.e, float(s), A_grid)
        if not rows:
            print(f"{s:.6g},,,,")
            continue
        A, _, margin, fgap = max(rows, key=lambda r: r[2])
        pred = 0.5 * fgap * s * s
        print(f"{s:.6g},{A:.6g},{margin:.6e},{pred:.6e},{margin / pred:.4f}")


if __name__ == "__main__":
    main()
