#!/usr/bin/env python3
"""Refinement study behind the frozen resolvent-mismatch bound.

Pushes a constant stress program through the creep form and back through
the resolvent form on successively finer grids and prints the largest
reconstruction error per level. The acceptance bound (2e-4 at 256 points
for alpha=0.5, beta=0.1, lam=0.2 on [0, 4]) was frozen from this table.

Run:
    python3 scripts/resolvent_refinement_study.py
"""

import numpy as np

import viscoident as v


def main():
    kp = v.KernelParams(alpha=0.5, beta=0.1, lam=0.2)
    pl = v.PowerLaw(1.0, 1.0)
    print(f"alpha={kp.alpha} beta={kp.beta} lam={kp.lam}, constant stress on [0, 4]")
    print(f"{'points':>8} {'max mismatch':>14} {'ratio':>8}")
    prev = None
    for n in (32, 64, 128, 256, 512):
        t = np.linspace(0.0, 4.0, n)
        hist = v.ResponseHistory(t, np.ones(n), v.KIND_STRESS_PROGRAM, 1.0)
        err = v.resolvent_mismatch(kp, pl, hist)
        ratio = "" if prev is None else f"{prev / err:8.2f}"
        print(f"{n:>8} {err:14.6e} {ratio:>8}")
        prev = err


if __name__ == "__main__":
    main()
