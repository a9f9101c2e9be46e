"""Exploratory phase scan over an (e, t) grid; writes CSV and a boundary list."""
import argparse
import sys
import time

from graphon_entropy.optimizer import ConstraintProblem
from graphon_entropy.scan import boundary_trace, grid, run_scan, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--e", nargs=3, type=float, default=[0.05, 0.95, 19], metavar=("MIN", "MAX", "STEPS"))
    ap.add_argument("--t", nargs=3, type=float, default=[0.0, 0.9, 19], metavar=("MIN", "MAX", "STEPS"))
    ap.add_argument("--pods", type=int, default=3)
    ap.add_argument("--restarts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="phase_scan.csv")
    args = ap.parse_args()

    es = grid(args.e[0], args.e[1], int(args.e[2]))
    ts = grid(args.t[0], args.t[1], int(args.t[2]))
    tpl = ConstraintProblem(0.5, 0.117, pods=args.pods, restarts=args.restarts, seed=args.seed)
    t0 = time.perf_counter()
    recs = run_scan(es, ts, tpl, threads=args.threads)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(write_csv(recs))
    counts = {}
    for r in recs:
        key = r.classification or r.feasible
        counts[key] = counts.get(key, 0) + 1
    print(f"{len(recs)} cells in {time.perf_counter() - t0:.1f} s -> {args.out}", file=sys.stderr)
    for k in sorted(counts):
        print(f"  {k:24s} {counts[k]}", file=sys.stderr)
    for a, b in boundary_trace(recs):
        print(f"boundary between {a} and {b}")


if __name__ == "__main__":
    main()
