"""Exact exponent table next to the measured L^q threshold of |omega_X|.

The first block is pure arithmetic. The second measures the threshold by
shell-mass bisection, which takes a few seconds per family at 10^6 samples.

    python3 scripts/threshold_table.py --samples 1000000
"""
import argparse

from duval.star_lq import detect_qX, exponent_table
from duval.variety import DuValType, defining_poly


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--types", nargs="*", default=["A1", "A2", "A3", "D4", "D5", "E6", "E7", "E8"])
    ap.add_argument("--no-measure", action="store_true")
    args = ap.parse_args()

    table = exponent_table()
    print(f"{'type':5s} {'q bound':>8s} {'p':>6s} {'p_hat':>6s} {'cap':>6s} {'q weights':>10s}")
    for name, row in table.rows.items():
        print(f"{name:5s} {str(row.q):>8s} {str(row.p):>6s} {str(row.p_hat):>6s} "
              f"{str(row.holder_cap):>6s} {str(row.q_quasihomogeneous):>10s}")
    if args.no_measure:
        return

    print(f"\n{'type':5s} {'measured':>9s} {'+-':>7s} {'weights':>9s} {'bound':>7s}")
    for name in args.types:
        t = DuValType.parse(name)
        res = detect_qX(defining_poly(t), args.samples, args.seed)
        row = table[name]
        print(f"{name:5s} {res.estimate:9.4f} {res.uncertainty:7.4f} "
              f"{float(row.q_quasihomogeneous):9.4f} {float(row.q):7.4f}", flush=True)


if __name__ == "__main__":
    main()
