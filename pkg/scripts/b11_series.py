"""Optimize just below t = e^3 for e > 1/2 and compare with the bipodal series."""
import argparse

from graphon_entropy import named
from graphon_entropy.optimizer import ConstraintProblem, maximize_entropy
from graphon_entropy.verify import bipodal_parameters


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--e", type=float, default=0.6)
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.08, 0.04, 0.02, 0.01, 0.005])
    ap.add_argument("--restarts", type=int, default=16)
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    prev = None
    print("sigma,classification,entropy,a,b,c,d,da,db,dc,dd,ratio_a,ratio_b,ratio_c,ratio_d")
    for s in args.sigma:
        r = maximize_entropy(ConstraintProblem(args.e, args.e**3 - s**3, pods=2,
                                               restarts=args.restarts, seed=args.seed))
        if r.graphon.pods != 2:
            print(f"{s:g},{r.classification},{r.entropy:.17g}" + "," * 12)
            prev = None
            continue
        got = bipodal_parameters(r.graphon)
        dev = [abs(x - y) for x, y in zip(got, named.bipodal_series_params(args.e, s))]
        ratios = [f"{p / d:.3f}" if prev and d > 0 else "" for p, d in zip(prev or dev, dev)]
        cells = [f"{s:g}", r.classification, f"{r.entropy:.17g}"] + [f"{x:.10g}" for x in got + tuple(dev)] + ratios
        print(",".join(cells))
        prev = dev


if __name__ == "__main__":
    main()
