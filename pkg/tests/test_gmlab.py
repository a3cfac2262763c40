import math

import numpy as np
import pytest

from hypopep.core import CurvatureClass, NumeratorKind, StepSchedule, validate_class
from hypopep.gmlab import (
    BadEnvelopeParams,
    NonFiniteValue,
    TestProblem,
    ZeroMatrix,
    convex_grad_monotonicity,
    estimate_f_star,
    export_trajectory_csv,
    ll_envelope_l0,
    load_matrix_csv,
    make_huber_problem,
    make_logistic_l0_problem,
    one_step_certificate,
    run_gm,
    spectral_norm,
)
from hypopep.interpolation import quadratic_bounds_check
from hypopep.rates import nstep_bound
from hypopep.worstcase import build_worst_case


def quadratic_problem(L=1.0):
    cls = CurvatureClass(mu=0.0, L=L)
    return TestProblem(
        name="quad",
        f_eval=lambda x: 0.5 * L * float(x @ x),
        grad_eval=lambda x: L * x,
        cls=cls,
        x0=np.array([1.0]),
        f_star_known=0.0,
    )


def test_run_gm_exact_step_on_quadratic():
    traj = run_gm(quadratic_problem(), StepSchedule((1.0,)))
    assert abs(float(traj.iterates[1].x[0])) < 1e-15
    assert traj.min_grad_sq == 0.0
    assert traj.min_grad_index == 1


def test_run_gm_recursion_and_min():
    tp = quadratic_problem(L=2.0)
    sched = StepSchedule((0.5, 0.7, 0.9))
    traj = run_gm(tp, sched)
    for i, h in enumerate(sched.steps):
        expected = traj.iterates[i].x - h / 2.0 * traj.iterates[i].g
        assert np.allclose(traj.iterates[i + 1].x, expected, atol=0.0)
    norms = [float(t.g @ t.g) for t in traj.iterates]
    assert traj.min_grad_sq == min(norms)


def test_run_gm_detects_nonfinite():
    tp = TestProblem(
        name="bad",
        f_eval=lambda x: float("nan"),
        grad_eval=lambda x: x,
        cls=CurvatureClass(mu=0.0, L=1.0),
        x0=np.array([1.0]),
    )
    with pytest.raises(NonFiniteValue):
        run_gm(tp, StepSchedule((1.0,)))


def test_one_step_certificate_quadratic():
    tp = quadratic_problem()
    traj = run_gm(tp, StepSchedule((0.5,)))
    rep = one_step_certificate(
        traj.iterates[0], traj.iterates[1], 0.5, validate_class(0.0, 1.0)
    )
    assert rep.passed
    assert rep.rate_slack > 0 and rep.descent_slack >= 0.0
    assert rep.combined_slack is None  # h < 1


def test_one_step_certificate_tight_on_worst_case():
    cls = validate_class(-1.0, 1.0)
    sched = StepSchedule((1.0, 0.5))
    w = build_worst_case(cls, sched, 1.0, NumeratorKind.gap_to_last)
    tp = TestProblem(
        name="wc",
        f_eval=lambda x: w.eval(float(x[0]))[0],
        grad_eval=lambda x: np.array([w.eval(float(x[0]))[1]]),
        cls=cls,
        x0=np.array([w.xs[0]]),
    )
    traj = run_gm(tp, sched)
    for i, h in enumerate(sched.steps):
        rep = one_step_certificate(traj.iterates[i], traj.iterates[i + 1], h, cls)
        assert rep.passed
        assert abs(rep.rate_slack) <= 1e-9  # tight along the worst case
        if h >= 1.0:
            assert rep.combined_slack is not None


def test_monotonicity_on_convex_quadratic():
    tp = quadratic_problem()
    traj = run_gm(tp, StepSchedule((0.3, 1.0, 1.9)))
    rep = convex_grad_monotonicity(traj, tp.cls)
    assert rep.applicable and rep.passed


def test_monotonicity_skipped_for_hypoconvex():
    cls = validate_class(-1.0, 1.0)
    tp = quadratic_problem()
    traj = run_gm(tp, StepSchedule((0.5,)))
    rep = convex_grad_monotonicity(traj, cls)
    assert not rep.applicable and rep.passed


def test_spectral_norm_matches_eigh():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((8, 5))
    M = A.T @ A
    assert abs(spectral_norm(M) - np.linalg.eigvalsh(M)[-1]) < 1e-8


def test_huber_rejects_zero_matrix():
    with pytest.raises(ZeroMatrix):
        make_huber_problem(np.zeros((3, 2)), np.zeros(3), 1.0)


def test_huber_branch_continuity():
    # residual norm exactly delta_h: both gradient branches coincide
    tp = make_huber_problem(np.eye(3), np.zeros(3), delta_h=1.0)
    x = np.array([0.6, 0.8, 0.0])  # unit norm
    g_smooth = x / 1.0
    g_norm = x / np.linalg.norm(x)
    assert np.allclose(g_smooth, g_norm, atol=1e-15)
    assert np.allclose(tp.grad_eval(x), g_smooth, atol=1e-15)


def test_huber_unit_gradient_branch():
    A = np.eye(3)
    tp = make_huber_problem(A, np.zeros(3), delta_h=1.0)
    x = np.array([3.0, 0.0, 0.0])
    g = tp.grad_eval(x)
    assert np.allclose(g, x / np.linalg.norm(x), atol=1e-14)


def test_huber_fixed_kappa_recovery():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((10, 4))
    s = spectral_norm(A.T @ A)
    kappa = -0.5
    mu_reg = kappa / (1.0 - kappa) * s / 1.0
    tp = make_huber_problem(A, rng.standard_normal(10), delta_h=1.0, mu_reg=mu_reg)
    assert abs(tp.cls.kappa - kappa) < 1e-9


def test_envelope_reference_values():
    val, grad = ll_envelope_l0(np.array([0.0]), 2.0, 1.0)
    assert val[0] == 0.0 and grad[0] == 0.0
    val, grad = ll_envelope_l0(np.array([0.5]), 2.0, 1.0)
    assert abs(val[0] - 0.125) < 1e-15
    assert abs(grad[0] - 0.5) < 1e-15
    val, grad = ll_envelope_l0(np.array([5.0, -5.0]), 2.0, 1.0)
    assert np.all(val == 1.0) and np.all(grad == 0.0)


def test_envelope_continuity_at_breakpoints():
    lam, sig = 2.0, 1.0
    t = math.sqrt(2 * lam)
    inner = (1 - sig / lam) * t
    for b in (inner, t):
        eps = 1e-9
        v0, g0 = ll_envelope_l0(np.array([b - eps]), lam, sig)
        v1, g1 = ll_envelope_l0(np.array([b + eps]), lam, sig)
        assert abs(v0[0] - v1[0]) < 1e-8
        assert abs(g0[0] - g1[0]) < 1e-8


def test_envelope_class_membership():
    lam, sig = 2.0, 1.0
    cls = CurvatureClass(mu=-1.0 / sig, L=1.0 / (lam - sig))
    rng = np.random.default_rng(3)
    pairs = [
        (np.array([a]), np.array([b]))
        for a, b in rng.uniform(-4.0, 4.0, size=(300, 2))
    ]
    ok = quadratic_bounds_check(
        lambda x: float(ll_envelope_l0(x, lam, sig)[0][0]),
        lambda x: ll_envelope_l0(x, lam, sig)[1],
        cls,
        pairs,
        tol=1e-9,
    )
    assert ok


def test_envelope_rejects_bad_params():
    with pytest.raises(BadEnvelopeParams):
        ll_envelope_l0(np.array([0.0]), 1.0, 1.0)
    with pytest.raises(BadEnvelopeParams):
        make_logistic_l0_problem(np.eye(2), np.zeros(2), 1.0, 2.0, 0.1)


def finite_difference_grad(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


@pytest.mark.parametrize("factory", ["huber", "logistic"])
def test_gradients_match_finite_differences(factory):
    rng = np.random.default_rng(4)
    A = rng.standard_normal((12, 5))
    if factory == "huber":
        tp = make_huber_problem(A, rng.standard_normal(12), delta_h=0.8, mu_reg=-0.1)
    else:
        y = (rng.uniform(size=12) < 0.5).astype(float)
        tp = make_logistic_l0_problem(A, y, 2.0, 1.0, reg_weight=0.1)
    for _ in range(20):
        x = rng.standard_normal(5)
        g = tp.grad_eval(x)
        fd = finite_difference_grad(tp.f_eval, x)
        denom = max(1.0, float(np.linalg.norm(g)))
        assert np.linalg.norm(g - fd) / denom < 1e-5


def test_bound_respect_randomized():
    rng = np.random.default_rng(5)
    for trial in range(10):
        A = rng.standard_normal((10, 4))
        tp = make_huber_problem(A, rng.standard_normal(10), delta_h=1.0,
                                x0=rng.standard_normal(4))
        f_star = estimate_f_star(tp, n_iter=300)
        sched = StepSchedule(tuple(rng.uniform(0.2, 1.4, size=5)))
        traj = run_gm(tp, sched)
        delta = traj.iterates[0].f - f_star
        if delta <= 0:
            continue
        bound = nstep_bound(tp.cls, sched, delta, NumeratorKind.gap_to_optimal).bound
        assert traj.min_grad_sq <= bound + 1e-9


def test_csv_io(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("a,b\n1.0,2.0\n3.0,4.0\n")
    M = load_matrix_csv(str(path))
    assert M.shape == (2, 2) and M[1, 1] == 4.0
    tp = quadratic_problem()
    traj = run_gm(tp, StepSchedule((0.5, 0.5)))
    out = tmp_path / "traj.csv"
    export_trajectory_csv(traj, tp, str(out))
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "iter,h,f,grad_norm_sq,min_grad_norm_sq_so_far,bound_so_far"
    assert len(rows) == 4
