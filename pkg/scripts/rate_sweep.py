#!/usr/bin/env python3
"""Sweep the closed-form denominator and bound over (kappa, h) grids.

Writes one CSV per numerator kind into results/, the data behind
bound-versus-step-size plots for several curvature ratios.
"""

import csv
import pathlib

from hypopep.core import NumeratorKind, StepSchedule, validate_class
from hypopep.rates import nstep_bound, step_threshold

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"
KAPPAS = [0.0, -0.1, -0.5, -1.0, -2.0, -5.0]
N = 10


def main():
    OUT.mkdir(exist_ok=True)
    for kind in NumeratorKind:
        path = OUT / f"rate_sweep_{kind.value}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kappa", "h", "N", "denominator", "bound"])
            for kappa in KAPPAS:
                cls = validate_class(kappa, 1.0)
                h_bar = step_threshold(kappa)
                for k in range(1, 200):
                    h = k * h_bar / 200
                    res = nstep_bound(cls, StepSchedule.constant(h, N), 1.0, kind)
                    w.writerow([kappa, f"{h:.17g}", N,
                                f"{res.denominator:.17g}", f"{res.bound:.17g}"])
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
