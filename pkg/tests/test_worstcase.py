import json
import math

import numpy as np
import pytest

from hypopep.core import NumeratorKind, StepSchedule, validate_class
from hypopep.interpolation import quadratic_bounds_check
from hypopep.worstcase import StepAboveOne, build_worst_case, verify_tightness


def test_reference_U_star():
    w = build_worst_case(
        validate_class(-1.0, 1.0), StepSchedule((1.0,)), 1.0, NumeratorKind.gap_to_optimal
    )
    assert abs(w.U - math.sqrt(0.8)) < 1e-14


def test_optimal_variant_minimizer_at_origin():
    w = build_worst_case(
        validate_class(-2.0, 2.0), StepSchedule((1.0, 0.5)), 2.0, NumeratorKind.gap_to_optimal
    )
    f0, g0 = w.eval(0.0)
    assert f0 == 0.0 and g0 == 0.0
    # values are nonnegative in a neighborhood
    for x in np.linspace(-1.0, 1.0, 41):
        assert w.eval(float(x))[0] >= -1e-12


def test_eval_at_iterates():
    cls = validate_class(-4.0, 2.0)
    sched = StepSchedule((1.0, 0.5, 0.75))
    for kind in NumeratorKind:
        w = build_worst_case(cls, sched, 2.0, kind)
        for x, f in zip(w.xs, w.fs):
            val, grad = w.eval(x)
            assert abs(val - f) < 1e-12
            assert abs(grad - w.U) < 1e-12


def test_gap_consumed_exactly():
    cls = validate_class(-1.0, 1.0)
    sched = StepSchedule((0.5, 1.0, 0.25))
    w_last = build_worst_case(cls, sched, 1.5, NumeratorKind.gap_to_last)
    assert abs(w_last.fs[0] - w_last.fs[-1] - 1.5) < 1e-12
    w_opt = build_worst_case(cls, sched, 1.5, NumeratorKind.gap_to_optimal)
    assert abs(w_opt.fs[0] - 1.5) < 1e-12  # f_* = 0


def test_c1_at_breakpoints():
    # derivative limits from adjacent pieces agree exactly at every breakpoint
    cls = validate_class(-2.0, 1.0)
    w = build_worst_case(
        cls, StepSchedule((0.7, 0.3, 1.0, 0.5)), 1.5, NumeratorKind.gap_to_last
    )
    for left, right in zip(w.pieces, w.pieces[1:]):
        b = left.hi
        fl, gl = left.eval(b)
        fr, gr = right.eval(b)
        assert abs(fl - fr) < 1e-12
        assert abs(gl - gr) < 1e-12


def test_convex_degeneration():
    # kappa = 0 collapses the inflection points onto the iterates and the
    # middle pieces become linear
    w = build_worst_case(
        validate_class(0.0, 1.0), StepSchedule.constant(0.8, 5), 1.0, NumeratorKind.gap_to_optimal
    )
    assert all(abs(a - b) < 1e-14 for a, b in zip(w.x_bars, w.xs))
    middle = [p for p in w.pieces if p.curvature == 0.0]
    assert len(middle) == 5
    assert abs(w.U**2 - 2.0 / 9.0) < 1e-14  # 2 L delta / (1 + sum 2h)


def test_step_above_one_rejected():
    with pytest.raises(StepAboveOne):
        build_worst_case(
            validate_class(-1.0, 1.0), StepSchedule((1.2,)), 1.0, NumeratorKind.gap_to_last
        )


def test_class_membership_dense_pairs():
    cls = validate_class(-2.0, 1.0)
    w = build_worst_case(
        cls, StepSchedule((0.7, 0.3, 1.0, 0.5)), 1.5, NumeratorKind.gap_to_last
    )
    rng = np.random.default_rng(2)
    lo, hi = min(w.xs) - 2.0, max(w.xs) + 2.0
    pairs = [
        (np.array([a]), np.array([b]))
        for a, b in rng.uniform(lo, hi, size=(200, 2))
    ]
    ok = quadratic_bounds_check(
        lambda x: w.eval(float(x[0]))[0],
        lambda x: np.array([w.eval(float(x[0]))[1]]),
        cls,
        pairs,
        tol=1e-9,
    )
    assert ok


def test_nesterov_limit_surrogate():
    # very negative kappa approaches the curvature-unbounded value
    w = build_worst_case(
        validate_class(-1e6, 1.0), StepSchedule((0.5,)), 1.0, NumeratorKind.gap_to_optimal
    )
    limit = 2.0 / (1.0 + 0.75)
    assert abs(w.U**2 - limit) / limit < 1e-4


def test_tightness_grid():
    kinds = list(NumeratorKind)
    schedules = [
        (0.25,),
        (1.0, 0.5),
        (0.75, 0.25, 1.0),
        (0.5, 0.5, 0.5, 0.5),
        (1.0, 0.75, 0.5, 0.25, 1.0),
        (0.25, 1.0, 0.75, 0.5, 0.25, 1.0),
    ]
    for kappa in (0.0, -0.5, -1.0, -2.0, -5.0):
        for steps in schedules:
            for kind in kinds:
                rep = verify_tightness(
                    validate_class(kappa, 1.0), StepSchedule(steps), 1.0, kind, tol=1e-8
                )
                assert rep.passed, (kappa, steps, kind, rep)


def test_json_and_csv_export(tmp_path):
    w = build_worst_case(
        validate_class(-1.0, 1.0), StepSchedule((1.0, 0.5)), 1.0, NumeratorKind.gap_to_optimal
    )
    obj = json.loads(w.to_json())
    assert obj["kind"] == "gap_to_optimal"
    assert len(obj["pieces"]) == len(w.pieces)
    path = tmp_path / "samples.csv"
    w.sample_csv(str(path), num=50)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "x,f,grad"
    assert len(rows) == 51
