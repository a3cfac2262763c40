import numpy as np
import pytest

from hypopep.core import NumeratorKind, StepSchedule, validate_class
from hypopep.pep import PepProblem, SdpConstraint, SdpProblem, build_sdp
from hypopep.sdpsolver import (
    SdpSolution,
    SolveOptions,
    SolveStatus,
    smat,
    solve,
    svec,
    verify_solution,
)


def trivial_problem(scale=1.0):
    # maximize l subject to G_00 >= l and G_00 <= 1 (optimum l = 1)
    A1 = np.array([[scale]])
    A2 = np.array([[-scale]])
    return SdpProblem(
        gram_dim=1,
        var_names=("l",),
        constraints=(
            SdpConstraint(A=A1, lin={"l": -scale}, const=0.0, label="epi"),
            SdpConstraint(A=A2, lin={}, const=scale, label="cap"),
        ),
    )


def test_svec_roundtrip_and_inner_product():
    rng = np.random.default_rng(0)
    for n in (1, 2, 5):
        X = rng.standard_normal((n, n))
        X = X + X.T
        Y = rng.standard_normal((n, n))
        Y = Y + Y.T
        assert np.allclose(smat(svec(X), n), X)
        assert abs(svec(X) @ svec(Y) - np.sum(X * Y)) < 1e-12


def test_trivial_problem_solves_to_one():
    sol = solve(trivial_problem())
    assert sol.status == SolveStatus.Optimal
    assert abs(sol.objective - 1.0) < 1e-7
    assert abs(sol.gram[0, 0] - 1.0) < 1e-6


def test_constraint_scale_invariance():
    # multiplying every row by 1000 leaves the feasible set unchanged
    a = solve(trivial_problem(1.0)).objective
    b = solve(trivial_problem(1000.0)).objective
    assert abs(a - b) < 1e-6


def test_duality_gap_within_tolerance():
    cls = validate_class(-1.0, 1.0)
    prob = build_sdp(
        PepProblem(cls, StepSchedule.constant(1.0, 2), 1.0, NumeratorKind.gap_to_optimal)
    )
    opts = SolveOptions(tol=1e-9)
    sol = solve(prob, opts)
    assert sol.status == SolveStatus.Optimal
    assert sol.kkt_residuals["gap"] <= 10 * opts.tol
    report = verify_solution(prob, sol)
    assert report.all_pass
    assert report.duality_gap < 1e-6


def test_determinism_bitwise():
    cls = validate_class(-0.5, 1.0)
    prob = build_sdp(
        PepProblem(cls, StepSchedule.constant(0.7, 3), 1.0, NumeratorKind.gap_to_last)
    )
    s1 = solve(prob)
    s2 = solve(prob)
    assert s1.objective == s2.objective
    assert np.array_equal(s1.gram, s2.gram)
    assert np.array_equal(s1.duals, s2.duals)


def test_delta_scaling_scales_optimum():
    cls = validate_class(-1.0, 1.0)
    sched = StepSchedule.constant(1.0, 1)
    base = solve(build_sdp(PepProblem(cls, sched, 1.0, NumeratorKind.gap_to_optimal)))
    scaled = solve(build_sdp(PepProblem(cls, sched, 1000.0, NumeratorKind.gap_to_optimal)))
    assert abs(scaled.objective - 1000.0 * base.objective) / scaled.objective < 1e-6


def test_verify_solution_negative_control():
    prob = trivial_problem()
    sol = solve(prob)
    tampered = SdpSolution(
        objective=sol.objective + 1.0,
        gram=sol.gram - 2.0,
        linear_values={"l": sol.objective + 1.0},
        duals=sol.duals,
        status=sol.status,
        kkt_residuals=sol.kkt_residuals,
        iterations=sol.iterations,
    )
    report = verify_solution(prob, tampered)
    assert not report.all_pass
    assert report.failures


def test_pep_problem_json_roundtrip():
    cls = validate_class(-1.0, 1.0)
    prob = build_sdp(
        PepProblem(cls, StepSchedule.constant(1.0, 1), 1.0, NumeratorKind.gap_to_last)
    )
    back = SdpProblem.from_json(prob.to_json())
    assert back.gram_dim == prob.gram_dim
    assert back.var_names == prob.var_names
    assert len(back.constraints) == len(prob.constraints)
    for c0, c1 in zip(prob.constraints, back.constraints):
        assert np.allclose(c0.A, c1.A)
        assert c0.lin == c1.lin and c0.const == c1.const and c0.label == c1.label
    assert abs(solve(back).objective - solve(prob).objective) < 1e-9
