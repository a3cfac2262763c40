"""One-dimensional piecewise-quadratic functions attaining the short-step
worst-case rate exactly.

For step sizes h_i <= 1 the rate bound is tight: the functions built here
make every gradient-method iterate equally bad (constant gradient magnitude
U) while consuming exactly the allowed value gap. Pieces alternate between
the lower curvature mu and the upper curvature L, with quadratic caps of
curvature L closing both tails.
"""

from __future__ import annotations

import bisect
import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CurvatureClass,
    NumeratorKind,
    OracleTriplet,
    StepSchedule,
    TripletSet,
    ValidationError,
)
from .interpolation import check_interpolable
from .rates import one_step_p


class StepAboveOne(ValidationError):
    pass


@dataclass(frozen=True)
class Piece:
    """Quadratic piece f(x) = value + slope (x - center) + c/2 (x - center)^2."""

    lo: float
    hi: float
    curvature: float
    center: float
    slope: float
    value: float

    def eval(self, x: float) -> tuple[float, float]:
        d = x - self.center
        return (
            self.value + self.slope * d + 0.5 * self.curvature * d * d,
            self.slope + self.curvature * d,
        )


@dataclass(frozen=True)
class WorstCaseFunction:
    """A tight worst-case instance with its trajectory data."""

    pieces: tuple[Piece, ...]
    xs: tuple[float, ...]        # iterates x_0 > x_1 > ... > x_N
    x_bars: tuple[float, ...]    # inflection points, one per step
    fs: tuple[float, ...]        # values at the iterates
    U: float                     # common gradient magnitude at the iterates
    kind: NumeratorKind
    cls: CurvatureClass
    sched: StepSchedule
    delta: float

    def eval(self, x: float) -> tuple[float, float]:
        """Value and derivative at x by piece lookup."""
        idx = bisect.bisect_right([p.hi for p in self.pieces], x)
        idx = min(idx, len(self.pieces) - 1)
        return self.pieces[idx].eval(float(x))

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind.value,
                "U": self.U,
                "mu": self.cls.mu,
                "L": self.cls.L,
                "delta": self.delta,
                "steps": list(self.sched.steps),
                "iterates": list(self.xs),
                "inflections": list(self.x_bars),
                "values": list(self.fs),
                "pieces": [
                    {
                        "lo": p.lo,
                        "hi": p.hi,
                        "curvature": p.curvature,
                        "center": p.center,
                        "slope": p.slope,
                        "value": p.value,
                    }
                    for p in self.pieces
                ],
            }
        )

    def sample_csv(self, path: str, num: int = 400, pad: float = 0.5) -> None:
        """Write a (x, f, grad) sample table spanning the breakpoint range."""
        lo = min(self.xs) - pad * (self.xs[0] - self.xs[-1] + 1.0)
        hi = max(self.xs) + pad * (self.xs[0] - self.xs[-1] + 1.0)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "f", "grad"])
            for x in np.linspace(lo, hi, num):
                f, g = self.eval(float(x))
                w.writerow([f"{x:.17g}", f"{f:.17g}", f"{g:.17g}"])


def build_worst_case(
    cls: CurvatureClass, sched: StepSchedule, delta: float, kind: NumeratorKind
) -> WorstCaseFunction:
    """Assemble the tight piecewise-quadratic instance for h_i <= 1.

    The gradient magnitude U is the square root of the rate bound; iterates
    step right-to-left toward the flat tail (gap_to_last) or toward the
    global minimizer pinned at the origin (gap_to_optimal).
    """
    if cls.unbounded_below:
        raise ValidationError("construction requires a finite lower curvature")
    kappa = cls.kappa
    if kappa > 0:
        raise ValidationError(f"construction requires kappa <= 0, got {kappa}")
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    for i, h in enumerate(sched.steps):
        if h > 1.0:
            raise StepAboveOne(f"step h_{i}={h} exceeds 1; no construction is known there")
    mu, L = cls.mu, cls.L
    N = sched.n
    ps = [one_step_p(h, kappa).p for h in sched.steps]
    denom = sum(ps)
    opt = kind == NumeratorKind.gap_to_optimal
    if opt:
        denom += 1.0
    U = math.sqrt(2.0 * L * delta / denom)

    # iterates: x_N is 0 (last) or U/L (optimal, one more step to the minimum)
    base = U / L if opt else 0.0
    xs = [base] * (N + 1)
    for i in range(N - 1, -1, -1):
        xs[i] = xs[i + 1] + (U / L) * sched.steps[i]
    fs = [delta - (U * U / (2.0 * L)) * sum(ps[:i]) for i in range(N + 1)]
    x_bars = [
        xs[i] - (-kappa) / (1.0 - kappa) * (sched.steps[i] / L) * U for i in range(N)
    ]

    pieces = []
    if opt:
        # left cap with minimizer (0, 0)
        pieces.append(Piece(lo=-math.inf, hi=xs[N], curvature=L, center=0.0, slope=0.0, value=0.0))
    else:
        # left cap with minimizer (-U/L, -U^2/(2L)); value 0 and slope U at x_N = 0
        pieces.append(
            Piece(lo=-math.inf, hi=xs[N], curvature=L, center=-U / L, slope=0.0,
                  value=-U * U / (2.0 * L))
        )
    for i in range(N - 1, -1, -1):
        if x_bars[i] > xs[i + 1]:
            pieces.append(
                Piece(lo=xs[i + 1], hi=x_bars[i], curvature=mu, center=xs[i + 1],
                      slope=U, value=fs[i + 1])
            )
        if xs[i] > x_bars[i]:
            pieces.append(
                Piece(lo=x_bars[i], hi=xs[i], curvature=L, center=xs[i], slope=U, value=fs[i])
            )
    pieces.append(Piece(lo=xs[0], hi=math.inf, curvature=L, center=xs[0], slope=U, value=fs[0]))

    return WorstCaseFunction(
        pieces=tuple(pieces),
        xs=tuple(xs),
        x_bars=tuple(x_bars),
        fs=tuple(fs),
        U=U,
        kind=kind,
        cls=cls,
        sched=sched,
        delta=delta,
    )


@dataclass(frozen=True)
class TightnessReport:
    """Residuals of the four bound-attainment checks."""

    passed: bool
    iterate_residual: float
    bound_residual: float
    interpolation_violation: float
    gap_residual: float
    U: float
    tol: float


def verify_tightness(
    cls: CurvatureClass,
    sched: StepSchedule,
    delta: float,
    kind: NumeratorKind,
    tol: float = 1e-9,
) -> TightnessReport:
    """Build the instance, run the method on it and check bound attainment.

    Checks: (a) the run lands exactly on the constructed iterates, (b) the
    minimum squared gradient equals U^2, (c) the sampled triplets satisfy
    the interpolation conditions, (d) the full value gap is consumed.
    """
    from .gmlab import TestProblem, run_gm

    wcf = build_worst_case(cls, sched, delta, kind)
    tp = TestProblem(
        name="worst_case",
        f_eval=lambda x: wcf.eval(float(x[0]))[0],
        grad_eval=lambda x: np.array([wcf.eval(float(x[0]))[1]]),
        cls=cls,
        x0=np.array([wcf.xs[0]]),
    )
    traj = run_gm(tp, sched)
    scale = max(1.0, abs(wcf.xs[0]))
    it_res = max(
        abs(float(t.x[0]) - wx) for t, wx in zip(traj.iterates, wcf.xs)
    ) / scale
    bound_res = abs(traj.min_grad_sq - wcf.U**2) / max(1.0, wcf.U**2)
    trips = list(traj.iterates)
    if kind == NumeratorKind.gap_to_optimal:
        trips.append(OracleTriplet(np.array([0.0]), np.array([0.0]), 0.0))
    report = check_interpolable(TripletSet(tuple(trips)), cls, tol=tol)
    interp_violation = -report.worst_violation
    if kind == NumeratorKind.gap_to_optimal:
        gap_res = abs(traj.iterates[0].f - 0.0 - delta) / max(1.0, delta)
    else:
        gap_res = abs(traj.iterates[0].f - traj.iterates[-1].f - delta) / max(1.0, delta)
    passed = (
        it_res <= tol
        and bound_res <= tol
        and interp_violation <= tol
        and gap_res <= tol
    )
    return TightnessReport(
        passed=passed,
        iterate_residual=it_res,
        bound_residual=bound_res,
        interpolation_violation=interp_violation,
        gap_residual=gap_res,
        U=wcf.U,
        tol=tol,
    )
