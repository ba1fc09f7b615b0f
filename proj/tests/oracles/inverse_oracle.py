#!/usr/bin/env python3
"""Reference value for the order-separation distinguishability test.

p = 0, h = H = 1: lambda_1 = mu^2 with (mu^2 - 1) sin mu = 2 mu cos mu on
(0, pi), phi_1 = cos(mu x) + sin(mu x) / mu. With a = phi_1 only the first
mode is excited, so the traces are E_alpha(-lambda_1 t^alpha) at x = 0 and
phi_1(1) times that at x = 1. Writes tests/data/distinguish_reference.inc.
"""
import math
import os
import sys

import mpmath as mp

sys.path.insert(0, os.path.dirname(__file__))
from ml_oracle import ml  # noqa: E402


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    mp.mp.dps = 40
    mu = mp.findroot(lambda m: (m * m - 1) * mp.sin(m) - 2 * m * mp.cos(m), 1.3)
    assert 0 < mu < mp.pi
    lam = mu * mu
    end = mp.cos(mu) + mp.sin(mu) / mu
    t_end, count = 2.0, 200
    lo, hi = math.log(1e-3 * t_end), math.log(t_end)
    gap = mp.mpf(0)
    for k in range(count):
        t = mp.mpf(math.exp(lo + (hi - lo) * k / (count - 1)))
        d = abs(ml(0.6, 1.0, -lam * t ** mp.mpf(0.6)) - ml(0.8, 1.0, -lam * t ** mp.mpf(0.8)))
        gap = max(gap, d * max(1, abs(end)))
    with open(os.path.join(out_dir, "distinguish_reference.inc"), "w") as f:
        f.write("// Generated by tests/oracles/inverse_oracle.py (mpmath). Do not edit.\n")
        f.write("// lambda_1, phi_1(1), max gap for alpha 0.6 vs 0.8 on log grid [2e-3, 2] x 200\n")
        f.write("%s, %s, %s\n" % tuple(mp.nstr(v, 20, min_fixed=-1, max_fixed=-1) for v in (lam, end, gap)))
    print("lambda_1", lam, "phi_1(1)", end, "gap", gap)


if __name__ == "__main__":
    main()
