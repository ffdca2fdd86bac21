"""Fit the constant of the third typicality event.

Prints the 99% quantile of ``max |r+ - r-| / sqrt(D ln(1/D))`` over base
paths at shift 2^-8 (grid depth 14), the value frozen in ``bmopt.lowerbound_lab.C4``.
"""

import argparse
from fractions import Fraction

from bmopt.lowerbound_lab import C4, calibrate_c4


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--shift-exponent", type=int, default=8)
    p.add_argument("--depth", type=int, default=14)
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    c = calibrate_c4(a.n, Fraction(1, 1 << a.shift_exponent), a.depth, a.level, a.seed)
    print(f"fitted c4 = {c:.6f}  (frozen C4 = {C4})")


if __name__ == "__main__":
    main()
