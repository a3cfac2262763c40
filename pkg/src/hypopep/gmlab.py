"""Gradient-method runner, per-step certificate checks and testbed problems.

The runner produces oracle-triplet trajectories for any problem exposing
value/gradient handles. Testbed factories cover a Huber-on-norm composite
and an l2-regularized logistic loss with a Lasry-Lions smoothed l0 penalty,
each with honestly declared curvature bounds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    CurvatureClass,
    NumeratorKind,
    OracleTriplet,
    StepSchedule,
    ValidationError,
)
from .rates import nstep_bound, one_step_p, step_threshold


class NonFiniteValue(RuntimeError):
    """NaN or infinity encountered along a trajectory."""


class ZeroMatrix(ValidationError):
    pass


class BadEnvelopeParams(ValidationError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Iterates of one gradient-method run and its performance measure."""

    iterates: tuple[OracleTriplet, ...]
    sched: StepSchedule
    min_grad_sq: float
    min_grad_index: int


@dataclass(frozen=True)
class TestProblem:
    """A differentiable objective with declared curvature bounds."""

    __test__ = False  # not a pytest collection target despite the name

    name: str
    f_eval: Callable[[np.ndarray], float]
    grad_eval: Callable[[np.ndarray], np.ndarray]
    cls: CurvatureClass
    x0: np.ndarray
    f_star_known: float | None = None


def run_gm(tp: TestProblem, sched: StepSchedule) -> Trajectory:
    """Run x_{i+1} = x_i - (h_i / L) g_i and collect oracle triplets."""
    L = tp.cls.L
    x = np.atleast_1d(np.asarray(tp.x0, dtype=float)).copy()
    trips = []
    for i in range(sched.n + 1):
        f = float(tp.f_eval(x))
        g = np.atleast_1d(np.asarray(tp.grad_eval(x), dtype=float))
        if not (np.isfinite(f) and np.isfinite(g).all() and np.isfinite(x).all()):
            raise NonFiniteValue(f"non-finite oracle output at iterate {i}")
        trips.append(OracleTriplet(x.copy(), g, f))
        if i < sched.n:
            x = x - (sched.steps[i] / L) * g
    norms = [float(t.g @ t.g) for t in trips]
    idx = int(np.argmin(norms))
    return Trajectory(
        iterates=tuple(trips),
        sched=sched,
        min_grad_sq=norms[idx],
        min_grad_index=idx,
    )


@dataclass(frozen=True)
class CertificateReport:
    """Slack report for the one-step decrease certificates."""

    passed: bool
    rate_slack: float
    descent_slack: float
    combined_slack: float | None
    tol: float


def one_step_certificate(
    t0: OracleTriplet,
    t1: OracleTriplet,
    h: float,
    cls: CurvatureClass,
    tol: float = 1e-9,
) -> CertificateReport:
    """Check the one-step rate, the descent lemma and the weighted combination.

    The rate check is min{|g_0|^2, |g_1|^2} <= (f_0 - f_1) * 2L / p(h, kappa);
    the combination check (for h >= 1) recomputes the two-coefficient
    inequality whose tightness drives the mid-range branch of p.
    """
    L = cls.L
    kappa = cls.kappa
    g0 = float(t0.g @ t0.g)
    g1 = float(t1.g @ t1.g)
    df = t0.f - t1.f
    p = one_step_p(h, kappa).p
    rate_slack = df * 2.0 * L / p - min(g0, g1)
    descent_slack = df - h * (2.0 - h) / (2.0 * L) * g0
    combined_slack = None
    if h >= 1.0:
        denom = 2.0 * L * (2.0 - h * (1.0 + kappa))
        lhs = (
            h * (kappa * h * h - 2.0 * h * (1.0 + kappa) + 3.0) / denom * g0
            + h / denom * g1
        )
        combined_slack = df - lhs
    passed = rate_slack >= -tol and descent_slack >= -tol
    if combined_slack is not None:
        passed = passed and combined_slack >= -tol
    return CertificateReport(
        passed=passed,
        rate_slack=rate_slack,
        descent_slack=descent_slack,
        combined_slack=combined_slack,
        tol=tol,
    )


@dataclass(frozen=True)
class MonotonicityReport:
    applicable: bool
    passed: bool
    worst_slack: float
    worst_index: int | None


def convex_grad_monotonicity(
    traj: Trajectory, cls: CurvatureClass, tol: float = 1e-10
) -> MonotonicityReport:
    """Quantitative gradient-norm decrease along a convex run.

    For mu = 0 and h in (0, 2) every consecutive pair must satisfy
    |g_i|^2 - |g_{i+1}|^2 >= ((2 - h)/h) |g_i - g_{i+1}|^2. For mu < 0 the
    inequality does not apply and the report says so instead of failing.
    """
    if cls.unbounded_below or cls.mu < 0.0:
        return MonotonicityReport(applicable=False, passed=True, worst_slack=0.0, worst_index=None)
    worst = math.inf
    worst_i = None
    for i, h in enumerate(traj.sched.steps):
        gi = traj.iterates[i].g
        gj = traj.iterates[i + 1].g
        slack = float(gi @ gi) - float(gj @ gj) - (2.0 - h) / h * float((gi - gj) @ (gi - gj))
        if slack < worst:
            worst, worst_i = slack, i
    return MonotonicityReport(
        applicable=True, passed=worst >= -tol, worst_slack=worst, worst_index=worst_i
    )


def spectral_norm(M: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of the symmetric PSD matrix M by power iteration."""
    M = np.asarray(M, dtype=float)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_lam = float(v @ M @ v)
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            return new_lam
        lam = new_lam
    return lam


def make_huber_problem(
    A: np.ndarray,
    b: np.ndarray,
    delta_h: float,
    mu_reg: float = 0.0,
    x0: np.ndarray | None = None,
) -> TestProblem:
    """Huber penalty of the residual norm plus a quadratic regularizer.

    f(x) = H_delta(|Ax - b|) + (mu_reg / 2)|x|^2 with the standard Huber
    function; the declared class is (mu_reg, |A^T A| / delta_h + mu_reg). A
    negative mu_reg makes the problem hypoconvex on purpose.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.any(A):
        raise ZeroMatrix("A must be nonzero")
    if delta_h <= 0:
        raise ValidationError(f"delta_h must be positive, got {delta_h}")
    s = spectral_norm(A.T @ A)
    L_smooth = s / delta_h
    if L_smooth + mu_reg <= 0:
        raise ValidationError("mu_reg cancels the smooth curvature entirely")
    cls = CurvatureClass(mu=mu_reg, L=L_smooth + mu_reg)

    def f_eval(x):
        r = A @ x - b
        nr = float(np.linalg.norm(r))
        if nr <= delta_h:
            hub = nr * nr / (2.0 * delta_h)
        else:
            hub = nr - delta_h / 2.0
        return hub + 0.5 * mu_reg * float(x @ x)

    def grad_eval(x):
        r = A @ x - b
        nr = float(np.linalg.norm(r))
        if nr <= delta_h:
            g = A.T @ r / delta_h
        else:
            g = A.T @ r / nr
        return g + mu_reg * x

    if x0 is None:
        x0 = np.zeros(A.shape[1])
    return TestProblem(
        name="huber", f_eval=f_eval, grad_eval=grad_eval, cls=cls, x0=np.asarray(x0, dtype=float)
    )


def ll_envelope_l0(x: np.ndarray, lam: float, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Lasry-Lions smoothing of the l0 penalty, applied elementwise.

    Three branches: an inner quadratic x^2 / (2(lam - sigma)), a downward
    cap 1 - (|x| - sqrt(2 lam))^2 / (2 sigma), and the constant 1. The
    result lies in the curvature class (-1/sigma, 1/(lam - sigma)).
    """
    if not (0.0 < sigma < lam):
        raise BadEnvelopeParams(f"need 0 < sigma < lambda, got sigma={sigma}, lambda={lam}")
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    t = math.sqrt(2.0 * lam)
    inner = (1.0 - sigma / lam) * t
    val = np.empty_like(ax)
    grad = np.empty_like(ax)
    m1 = ax <= inner
    m3 = ax >= t
    m2 = ~m1 & ~m3
    val[m1] = x[m1] ** 2 / (2.0 * (lam - sigma))
    grad[m1] = x[m1] / (lam - sigma)
    val[m2] = 1.0 - (ax[m2] - t) ** 2 / (2.0 * sigma)
    grad[m2] = -np.sign(x[m2]) * (ax[m2] - t) / sigma
    val[m3] = 1.0
    grad[m3] = 0.0
    return val, grad


def make_logistic_l0_problem(
    A: np.ndarray,
    y: np.ndarray,
    lambda_ll: float,
    sigma_ll: float,
    reg_weight: float = 0.0,
    x0: np.ndarray | None = None,
) -> TestProblem:
    """Mean logistic loss plus a smoothed-l0 sparsity penalty.

    The loss uses the overflow-safe softplus form; the declared class is
    [-reg_weight / sigma, |A^T A| / n_data + reg_weight / (lam - sigma)].
    """
    if not (0.0 < sigma_ll < lambda_ll):
        raise BadEnvelopeParams(
            f"need 0 < sigma < lambda, got sigma={sigma_ll}, lambda={lambda_ll}"
        )
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(A):
        raise ZeroMatrix("A must be nonzero")
    n_data = A.shape[0]
    L_loss = spectral_norm(A.T @ A) / n_data
    mu = -reg_weight / sigma_ll
    L = L_loss + reg_weight / (lambda_ll - sigma_ll)
    cls = CurvatureClass(mu=mu, L=L)

    def softplus(t):
        return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))

    def f_eval(x):
        t = A @ x
        loss = float(np.mean(softplus(t) - y * t))
        if reg_weight == 0.0:
            return loss
        val, _ = ll_envelope_l0(x, lambda_ll, sigma_ll)
        return loss + reg_weight * float(val.sum())

    def grad_eval(x):
        t = A @ x
        sig = 1.0 / (1.0 + np.exp(-t))
        g = A.T @ (sig - y) / n_data
        if reg_weight == 0.0:
            return g
        _, gv = ll_envelope_l0(x, lambda_ll, sigma_ll)
        return g + reg_weight * gv

    if x0 is None:
        x0 = np.zeros(A.shape[1])
    return TestProblem(
        name="logistic_l0",
        f_eval=f_eval,
        grad_eval=grad_eval,
        cls=cls,
        x0=np.asarray(x0, dtype=float),
    )


def estimate_f_star(tp: TestProblem, n_iter: int = 2000) -> float:
    """Lower estimate of the minimum value by a long unit-step run.

    Refines the best observed value with the descent bound
    min_i {f_i - |g_i|^2 / (2L)}, which can only under-estimate, so
    one-sided bound comparisons built on it stay conservative.
    """
    traj = run_gm(tp, StepSchedule.constant(1.0, n_iter))
    return min(t.f - float(t.g @ t.g) / (2.0 * tp.cls.L) for t in traj.iterates)


def load_matrix_csv(path: str) -> np.ndarray:
    """Dense float matrix from a comma-delimited file, header row optional."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    start = 0
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        start = 1
    data = np.array([[float(v) for v in row] for row in rows[start:]], dtype=float)
    return data


def export_trajectory_csv(
    traj: Trajectory, tp: TestProblem, path: str, kind: NumeratorKind = NumeratorKind.gap_to_optimal
) -> None:
    """Trajectory table with the running performance measure and bound.

    The bound column uses the declared class and the steps taken so far;
    the gap is f_0 - f_star_known (gap_to_optimal) or f_0 - f_i
    (gap_to_last). Rows where the bound is undefined leave the cell empty.
    """
    cls = tp.cls
    f0 = traj.iterates[0].f
    running_min = math.inf
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "h", "f", "grad_norm_sq", "min_grad_norm_sq_so_far", "bound_so_far"])
        for i, t in enumerate(traj.iterates):
            gsq = float(t.g @ t.g)
            running_min = min(running_min, gsq)
            h = traj.sched.steps[i] if i < traj.sched.n else ""
            bound = ""
            if kind == NumeratorKind.gap_to_optimal and tp.f_star_known is not None:
                delta = f0 - tp.f_star_known
                if delta > 0:
                    part = StepSchedule(traj.sched.steps[:i]) if i > 0 else None
                    if part is None:
                        bound = f"{2.0 * cls.L * delta:.17g}"
                    else:
                        bound = f"{nstep_bound(cls, part, delta, kind).bound:.17g}"
            elif kind == NumeratorKind.gap_to_last and i > 0:
                delta = f0 - t.f
                if delta > 0:
                    part = StepSchedule(traj.sched.steps[:i])
                    bound = f"{nstep_bound(cls, part, delta, kind).bound:.17g}"
            w.writerow([i, h, f"{t.f:.17g}", f"{gsq:.17g}", f"{running_min:.17g}", bound])
