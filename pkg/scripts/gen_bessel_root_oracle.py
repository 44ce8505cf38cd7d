#!/usr/bin/env python3
"""Regenerate tests/data/bessel_root_oracle.csv.

The test suite compares the package's root finder against this frozen
table, so the table must come from an independent route: arbitrary-
precision bisection on the ascending power series of J_n, run here with
mpmath at 120 significant digits (the series suffers ~60 digits of
cancellation at the largest roots, leaving plenty).  Each value is
cross-checked against mpmath.besseljzero before being written, and
printed with 25 digits, far beyond float64.  Rerun only when coverage
needs to grow; the file is committed.
"""

import sys
from pathlib import Path

import mpmath

ORDERS = (0, 1, 2, 5, 10, 30)
COUNT = 30


def series_j(n: int, x):
    """Ascending power series of J_n, summed until terms vanish."""
    half = x / 2
    term = half ** n / mpmath.factorial(n)
    total = term
    k = 1
    quarter = -(half * half)
    while True:
        term = term * quarter / (k * (n + k))
        total += term
        if abs(term) < abs(total) * mpmath.mpf(10) ** (-mpmath.mp.dps):
            return total
        k += 1


def bisect_root(n: int, lo, hi):
    flo = series_j(n, lo)
    if flo == 0:
        return lo
    for _ in range(mpmath.mp.dps * 4):
        mid = (lo + hi) / 2
        fmid = series_j(n, mid)
        if fmid == 0:
            return mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return (lo + hi) / 2


def main() -> int:
    mpmath.mp.dps = 120
    out = Path(__file__).resolve().parent.parent / "tests" / "data" / "bessel_root_oracle.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["order,index,root"]
    for n in ORDERS:
        for i in range(1, COUNT + 1):
            # bracket from the reference zero, then refine independently
            ref = mpmath.besseljzero(n, i)
            root = bisect_root(n, ref - mpmath.mpf("0.5"), ref + mpmath.mpf("0.5"))
            if abs(root - ref) > mpmath.mpf(10) ** (-30):
                raise RuntimeError(f"oracle mismatch at n={n} i={i}: {root} vs {ref}")
            lines.append(f"{n},{i},{mpmath.nstr(root, 25)}")
        print(f"order {n}: {COUNT} roots done", flush=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines) - 1} roots to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
