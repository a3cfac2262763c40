"""Interpolation-condition checking for curvature classes and evaluation of
an explicit interpolating function from a triplet set."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import CurvatureClass, OracleTriplet, TripletSet, ValidationError


class DegenerateClass(ValidationError):
    pass


class NotInterpolable(ValidationError):
    pass


class SolverStall(RuntimeError):
    pass


@dataclass(frozen=True)
class InterpolationReport:
    feasible: bool
    worst_violation: float
    violating_pair: tuple[int, int] | None
    f_star: float
    i_star: int
    x_star: np.ndarray


def pair_slack(ti: OracleTriplet, tj: OracleTriplet, cls: CurvatureClass) -> float:
    """Slack of the pairwise interpolation inequality for ordered pair (i, j).

    Nonnegative slack for all ordered pairs is necessary and sufficient for
    the set to be interpolable by a function with curvature in [mu, L].
    """
    mu, L = cls.mu, cls.L
    kappa = mu / L
    dx = ti.x - tj.x
    dg = ti.g - tj.g
    lhs = ti.f - tj.f - float(tj.g @ dx)
    rhs = (
        float(dg @ dg) / L + mu * float(dx @ dx) - 2.0 * kappa * float(dg @ dx)
    ) / (2.0 * (1.0 - kappa))
    return lhs - rhs


def check_interpolable(
    ts: TripletSet, cls: CurvatureClass, tol: float = 1e-9
) -> InterpolationReport:
    """Evaluate all pairwise interpolation slacks and locate the implied minimum.

    Reports the most negative slack instead of a bare boolean because PEP
    solutions carry solver noise.
    """
    if cls.mu == cls.L:
        raise DegenerateClass("mu = L makes the interpolation inequality degenerate")
    worst = 0.0
    worst_pair = None
    trip = ts.triplets
    for i, j in combinations(range(len(trip)), 2):
        for a, b in ((i, j), (j, i)):
            s = pair_slack(trip[a], trip[b], cls)
            if s < worst:
                worst = s
                worst_pair = (a, b)
    descents = [t.f - float(t.g @ t.g) / (2.0 * cls.L) for t in trip]
    i_star = int(np.argmin(descents))
    return InterpolationReport(
        feasible=worst >= -tol,
        worst_violation=worst,
        violating_pair=worst_pair,
        f_star=descents[i_star],
        i_star=i_star,
        x_star=trip[i_star].x - trip[i_star].g / cls.L,
    )


def shift_triplets(ts: TripletSet, mu: float) -> TripletSet:
    """Curvature-subtraction map: (x, g, f) -> (x, g - mu*x, f - mu/2*|x|^2).

    The original set is (mu, L)-interpolable iff the image is
    (0, L - mu)-interpolable.
    """
    return TripletSet(
        tuple(
            OracleTriplet(t.x, t.g - mu * t.x, t.f - 0.5 * mu * float(t.x @ t.x))
            for t in ts.triplets
        )
    )


def _simplex_qp_kkt_residual(Q: np.ndarray, b: np.ndarray, alpha: np.ndarray) -> float:
    grad = Q @ alpha + b
    support = alpha > 1e-12
    if not support.any():
        return float("inf")
    nu = float(grad[support].mean())
    res = abs(alpha.sum() - 1.0)
    res = max(res, float(np.abs(grad[support] - nu).max()))
    if (~support).any():
        res = max(res, float(np.maximum(nu - grad[~support], 0.0).max()))
    res = max(res, float(-alpha.min()) if alpha.min() < 0 else 0.0)
    return res


def _solve_simplex_qp_enum(Q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact simplex-constrained QP minimizer by active-set enumeration."""
    n = Q.shape[0]
    best_alpha, best_obj = None, np.inf
    indices = list(range(n))
    for mask in range(1, 1 << n):
        sub = [i for i in indices if mask >> i & 1]
        k = len(sub)
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = Q[np.ix_(sub, sub)]
        kkt[:k, k] = 1.0
        kkt[k, :k] = 1.0
        rhs = np.concatenate([-b[sub], [1.0]])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
        a_sub = sol[:k]
        if a_sub.min() < -1e-11:
            continue
        alpha = np.zeros(n)
        alpha[sub] = np.clip(a_sub, 0.0, None)
        alpha /= alpha.sum()
        obj = 0.5 * alpha @ Q @ alpha + b @ alpha
        if obj < best_obj:
            best_obj, best_alpha = obj, alpha
    return best_alpha


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _solve_simplex_qp_pg(Q: np.ndarray, b: np.ndarray, max_iter: int = 200_000) -> np.ndarray:
    n = Q.shape[0]
    alpha = np.full(n, 1.0 / n)
    lam = float(np.linalg.eigvalsh(Q)[-1])
    step = 1.0 / max(lam, 1e-12)
    for _ in range(max_iter):
        new = _project_simplex(alpha - step * (Q @ alpha + b))
        if np.abs(new - alpha).max() < 1e-15:
            return new
        alpha = new
    return alpha


def eval_interpolating(
    ts: TripletSet, cls: CurvatureClass, y: np.ndarray
) -> tuple[float, np.ndarray]:
    """Value at y of an explicit interpolating function for the triplet set.

    The function is a minimum over simplex-weighted combinations of shifted
    quadratics; it reproduces (f_i, g_i) at every x_i and attains the minimum
    value implied by check_interpolable. Returns the value and the minimizing
    simplex weights.
    """
    report = check_interpolable(ts, cls, tol=1e-7)
    if not report.feasible:
        raise NotInterpolable(
            f"worst interpolation violation {report.worst_violation} at pair "
            f"{report.violating_pair}"
        )
    L = cls.L
    kappa = cls.mu / L
    y = np.atleast_1d(np.asarray(y, dtype=float))
    V = np.stack([t.x - t.g / L for t in ts.triplets], axis=1)  # d x n
    c = np.array(
        [
            t.f
            - float(t.g @ t.g) / (2.0 * L)
            - 0.5 * L * kappa / (1.0 - kappa) * float(v @ v)
            for t, v in zip(ts.triplets, V.T)
        ]
    )
    # objective over alpha: L/2 |y - V a|^2 + L/2 * kappa/(1-kappa) |V a|^2 + c.a
    Q = (L / (1.0 - kappa)) * (V.T @ V)
    b = -L * (V.T @ y) + c
    const = 0.5 * L * float(y @ y)
    n = len(ts)
    if n == 1:
        alpha = np.array([1.0])
    elif n <= 12:
        alpha = _solve_simplex_qp_enum(Q, b)
    else:
        alpha = _solve_simplex_qp_pg(Q, b)
    if alpha is None or _simplex_qp_kkt_residual(Q, b, alpha) > 1e-10:
        raise SolverStall("simplex QP did not reach KKT residual 1e-10")
    value = 0.5 * alpha @ Q @ alpha + b @ alpha + const
    return float(value), alpha


def quadratic_bounds_check(
    f_eval,
    grad_eval,
    cls: CurvatureClass,
    sample_pairs: list[tuple[np.ndarray, np.ndarray]],
    tol: float = 1e-9,
) -> bool:
    """True iff the two-sided curvature inequality holds at every sampled pair."""
    for x, y in sample_pairs:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        dx = x - y
        nrm2 = float(dx @ dx)
        r = f_eval(x) - f_eval(y) - float(np.atleast_1d(grad_eval(y)) @ dx)
        if r < 0.5 * cls.mu * nrm2 - tol or r > 0.5 * cls.L * nrm2 + tol:
            return False
    return True
