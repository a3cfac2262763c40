"""Command-line front end: every computation as a reproducible command.

Exit codes: 0 success, 2 input validation, 3 solver failure, 4 check
failure. Floats are printed with 17 significant digits so output files
round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import NumeratorKind, StepSchedule, ValidationError, validate_class
from .gmlab import (
    NonFiniteValue,
    estimate_f_star,
    export_trajectory_csv,
    load_matrix_csv,
    make_huber_problem,
    make_logistic_l0_problem,
    run_gm,
)
from .pep import PepProblem, build_sdp, extract_triplets
from .rates import (
    conjectured_bound_convex,
    fit_r,
    nstep_bound,
    optimal_step,
    step_threshold,
)
from .sdpsolver import SolveStatus, solve
from .worstcase import build_worst_case, verify_tightness


class SolverFailure(RuntimeError):
    pass


class CheckFailure(RuntimeError):
    pass


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def parse_steps(text: str) -> list[float]:
    """Parse '1,0.5,0.75' or the inclusive range syntax 'a:step:b'."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"--steps range must be a:step:b, got {text!r}")
        a, step, b = (float(p) for p in parts)
        if step <= 0:
            raise ValidationError(f"--steps range step must be positive, got {step}")
        vals = []
        k = 0
        while True:
            v = a + k * step
            if v > b + 1e-12 * max(1.0, abs(b)):
                break
            vals.append(round(v, 12))
            k += 1
        return vals
    return [float(p) for p in text.split(",") if p]


def _schedule_from_args(args) -> StepSchedule:
    if getattr(args, "steps_file", None):
        with open(args.steps_file) as fh:
            steps = [float(line) for line in fh if line.strip()]
    else:
        if args.steps is None:
            raise ValidationError("--steps is required")
        steps = parse_steps(args.steps)
    n = getattr(args, "N", None)
    if n is not None and len(steps) == 1 and n > 1:
        steps = steps * n
    if n is not None and len(steps) != n:
        raise ValidationError(f"--N {n} does not match {len(steps)} steps")
    return StepSchedule(tuple(steps))


def _kind(args) -> NumeratorKind:
    return NumeratorKind.gap_to_last if args.kind == "last" else NumeratorKind.gap_to_optimal


def _cls(args):
    return validate_class(args.kappa * args.L, args.L,
                          unbounded_below=getattr(args, "unbounded_below", False))


def cmd_rate(args) -> int:
    cls = _cls(args)
    sched = _schedule_from_args(args)
    res = nstep_bound(cls, sched, args.delta, _kind(args))
    for i, (h, p) in enumerate(zip(sched.steps, res.per_step_p)):
        print(f"p[{i}] h={_fmt(h)} p={_fmt(p)}")
    print(f"denominator {_fmt(res.denominator)}")
    print(f"bound {_fmt(res.bound)}")
    print(f"regime {res.regime.value} conjectured {res.conjectured}")
    return 0


def cmd_optstep(args) -> int:
    res = optimal_step(args.kappa, args.mode)
    print(f"h_star {_fmt(res.h_star)}")
    print(f"branch {res.branch.value}")
    print(f"h_bar {_fmt(step_threshold(args.kappa))}")
    return 0


def _solve_pep(cls, sched, delta, kind):
    sol = solve(build_sdp(PepProblem(cls, sched, delta, kind)))
    if sol.status != SolveStatus.Optimal:
        raise SolverFailure(f"solver status {sol.status.value}")
    return sol


def _reference_bound(cls, sched, delta, kind):
    """Analytic or conjectured reference for a PEP optimum, if one exists."""
    kappa = cls.kappa
    h_bar = step_threshold(kappa)
    if all(h <= h_bar for h in sched.steps):
        return nstep_bound(cls, sched, delta, kind).bound
    hs = set(sched.steps)
    if kappa == 0.0 and len(hs) == 1:
        h = sched.steps[0]
        if 1.5 < h < 2.0:
            return conjectured_bound_convex(h, sched.n, cls.L, delta, kind).bound
    return None


def cmd_pep(args) -> int:
    cls = _cls(args)
    sched = _schedule_from_args(args)
    kind = _kind(args)
    sol = _solve_pep(cls, sched, args.delta, kind)
    print(f"optimum {_fmt(sol.objective)}")
    print(f"iterations {sol.iterations}")
    ref = _reference_bound(cls, sched, args.delta, kind)
    if ref is not None:
        print(f"reference {_fmt(ref)}")
        print(f"rel_error {_fmt(abs(sol.objective - ref) / ref)}")
    if args.emit_triplets:
        ts = extract_triplets(PepProblem(cls, sched, args.delta, kind), sol)
        with open(args.emit_triplets, "w") as fh:
            fh.write(ts.to_json())
        print(f"triplets {args.emit_triplets}")
    return 0


def cmd_tightness(args) -> int:
    cls = _cls(args)
    sched = _schedule_from_args(args)
    rep = verify_tightness(cls, sched, args.delta, _kind(args), tol=args.tol)
    print(f"U {_fmt(rep.U)}")
    print(f"iterate_residual {_fmt(rep.iterate_residual)}")
    print(f"bound_residual {_fmt(rep.bound_residual)}")
    print(f"interpolation_violation {_fmt(rep.interpolation_violation)}")
    print(f"gap_residual {_fmt(rep.gap_residual)}")
    print("PASS" if rep.passed else "FAIL")
    if not rep.passed:
        raise CheckFailure("tightness verification failed")
    return 0


def cmd_worstcase(args) -> int:
    cls = _cls(args)
    sched = _schedule_from_args(args)
    wcf = build_worst_case(cls, sched, args.delta, _kind(args))
    print(f"U {_fmt(wcf.U)}")
    print("iterates " + ",".join(_fmt(x) for x in wcf.xs))
    print("values " + ",".join(_fmt(f) for f in wcf.fs))
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(wcf.to_json())
        print(f"json {args.json_out}")
    if args.csv_out:
        wcf.sample_csv(args.csv_out, num=args.samples)
        print(f"csv {args.csv_out}")
    return 0


def cmd_experiment(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.data_a:
        A = load_matrix_csv(args.data_a)
    else:
        A = rng.standard_normal((args.rows, args.cols))
    if args.problem == "huber":
        if args.data_b:
            b = load_matrix_csv(args.data_b).ravel()
        else:
            b = A @ rng.standard_normal(A.shape[1]) + 0.1 * rng.standard_normal(A.shape[0])
        tp = make_huber_problem(A, b, args.delta_h, args.mu_reg)
    else:
        if args.data_y:
            y = load_matrix_csv(args.data_y).ravel()
        else:
            logits = A @ rng.standard_normal(A.shape[1])
            y = (rng.uniform(size=A.shape[0]) < 1.0 / (1.0 + np.exp(-logits))).astype(float)
        tp = make_logistic_l0_problem(A, y, args.lambda_ll, args.sigma_ll, args.reg_weight)
    sched = _schedule_from_args(args)
    f_star = estimate_f_star(tp, n_iter=args.fstar_iters)
    tp = type(tp)(name=tp.name, f_eval=tp.f_eval, grad_eval=tp.grad_eval,
                  cls=tp.cls, x0=tp.x0, f_star_known=f_star)
    traj = run_gm(tp, sched)
    print(f"mu {_fmt(tp.cls.mu)}")
    print(f"L {_fmt(tp.cls.L)}")
    print(f"f_star_estimate {_fmt(f_star)}")
    print(f"min_grad_sq {_fmt(traj.min_grad_sq)} at {traj.min_grad_index}")
    if args.out:
        export_trajectory_csv(traj, tp, args.out)
        print(f"csv {args.out}")
    return 0


def _sweep_point(target, kappa, h, n, L, delta, kind):
    row = {"kappa": _fmt(kappa), "h": _fmt(h), "N": str(n)}
    try:
        cls = validate_class(kappa * L, L)
        sched = StepSchedule.constant(h, n)
        if target == "rate":
            res = nstep_bound(cls, sched, delta, kind)
            row.update(bound=_fmt(res.bound), denominator=_fmt(res.denominator), error="")
        else:
            sol = _solve_pep(cls, sched, delta, kind)
            ref = _reference_bound(cls, sched, delta, kind)
            row.update(
                optimum=_fmt(sol.objective),
                reference="" if ref is None else _fmt(ref),
                rel_error="" if ref is None else _fmt(abs(sol.objective - ref) / ref),
                error="",
            )
    except Exception as exc:  # per-point failures go to the error column
        row.setdefault("bound" if target == "rate" else "optimum", "")
        if target == "rate":
            row.setdefault("denominator", "")
        else:
            row.setdefault("reference", "")
            row.setdefault("rel_error", "")
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args) -> int:
    kappas = [float(v) for v in args.kappa.split(",")]
    hs = parse_steps(args.h)
    ns = [int(v) for v in str(args.N).split(",")]
    kind = _kind(args)
    grid = [(k, h, n) for k in kappas for h in hs for n in ns]
    workers = int(os.environ.get("HYPOPEP_THREADS", "0")) or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(
            pool.map(
                lambda g: _sweep_point(args.target, g[0], g[1], g[2], args.L, args.delta, kind),
                grid,
            )
        )
    if args.target == "rate":
        header = ["kappa", "h", "N", "bound", "denominator", "error"]
    else:
        header = ["kappa", "h", "N", "optimum", "reference", "rel_error", "error"]
    if args.format == "json":
        payload = json.dumps(rows, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(payload)
        else:
            print(payload)
    else:
        out = open(args.out, "w", newline="") if args.out else sys.stdout
        try:
            w = csv.writer(out)
            w.writerow(header)
            for row in rows:
                w.writerow([row.get(c, "") for c in header])
        finally:
            if args.out:
                out.close()
    if args.out:
        print(f"rows {len(rows)} -> {args.out}")
    return 0


def cmd_fit_r(args) -> int:
    lo, hi = (int(v) for v in args.N.split(":"))
    cls = validate_class(args.kappa * args.L, args.L)
    kind = _kind(args)
    values = []
    for n in range(lo, hi + 1):
        sol = _solve_pep(cls, StepSchedule.constant(args.h, n), args.delta, kind)
        values.append((n, sol.objective))
        print(f"N={n} optimum {_fmt(sol.objective)}")
    res = fit_r(cls, args.h, values, delta=args.delta)
    print(f"r {_fmt(res.r)}")
    print(f"slope_analytic {_fmt(res.slope_analytic)}")
    print(f"slope_observed {_fmt(res.slope_observed)}")
    print("residuals " + ",".join(_fmt(v) for v in res.residuals))
    print("used_N " + ",".join(str(n) for n in res.used_n))
    return 0


def _add_common(p, steps=True, kind_default="opt"):
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    if steps:
        p.add_argument("--steps", type=str, default=None)
        p.add_argument("--steps-file", type=str, default=None)
        p.add_argument("--N", type=int, default=None)
    p.add_argument("--kind", choices=["last", "opt"], default=kind_default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypopep")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="closed-form worst-case bound for a schedule")
    _add_common(p, kind_default="last")
    p.add_argument("--unbounded-below", action="store_true")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("optstep", help="optimal constant step size")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--mode", choices=["theorem", "asymptotic"], default="theorem")
    p.set_defaults(func=cmd_optstep)

    p = sub.add_parser("pep", help="solve the discretized worst-case SDP")
    _add_common(p)
    p.add_argument("--emit-triplets", type=str, default=None)
    p.set_defaults(func=cmd_pep)

    p = sub.add_parser("tightness", help="verify bound attainment (short steps)")
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_tightness)

    p = sub.add_parser("worstcase", help="build and export the tight instance")
    _add_common(p)
    p.add_argument("--csv-out", type=str, default=None)
    p.add_argument("--json-out", type=str, default=None)
    p.add_argument("--samples", type=int, default=400)
    p.set_defaults(func=cmd_worstcase)

    p = sub.add_parser("experiment", help="run a testbed problem")
    p.add_argument("--problem", choices=["huber", "logistic"], required=True)
    p.add_argument("--data-a", type=str, default=None)
    p.add_argument("--data-b", type=str, default=None)
    p.add_argument("--data-y", type=str, default=None)
    p.add_argument("--rows", type=int, default=40)
    p.add_argument("--cols", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-h", type=float, default=1.0)
    p.add_argument("--mu-reg", type=float, default=0.0)
    p.add_argument("--lambda-ll", type=float, default=2.0)
    p.add_argument("--sigma-ll", type=float, default=1.0)
    p.add_argument("--reg-weight", type=float, default=0.1)
    p.add_argument("--fstar-iters", type=int, default=2000)
    p.add_argument("--steps", type=str, default=None)
    p.add_argument("--steps-file", type=str, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="fan a command across a parameter grid")
    p.add_argument("--target", choices=["rate", "pep"], required=True)
    p.add_argument("--kappa", type=str, required=True)
    p.add_argument("--h", type=str, required=True)
    p.add_argument("--N", type=str, required=True)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--kind", choices=["last", "opt"], default="opt")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit-r", help="fit the third-regime intercept from PEP optima")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--N", type=str, required=True, help="range lo:hi inclusive")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--kind", choices=["last", "opt"], default="opt")
    p.set_defaults(func=cmd_fit_r)
    return ap


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Join '--flag -1,-0.5' into '--flag=-1,-0.5' so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (
            tok.startswith("--")
            and "=" not in tok
            and nxt is not None
            and len(nxt) > 1
            and nxt[0] == "-"
            and (nxt[1].isdigit() or nxt[1] == ".")
        ):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = _merge_negative_values(sys.argv[1:] if argv is None else list(argv))
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (SolverFailure, NonFiniteValue) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
