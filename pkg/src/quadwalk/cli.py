"""Command-line front end.

Every subcommand is a thin adapter over one library call: it parses
arguments, invokes the operation, and serializes the result (JSON by
default, ``--format text`` for a human-readable table where available).

Exit codes: 0 success, 1 hypothesis/validation failure, 2 I/O or schema
error, 3 numerical non-convergence, 4 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harmonic, simulate, walks
from .classify import classify, stationary_measure
from .errors import (
    ConvergenceError,
    HypothesisError,
    NotLeftContinuousError,
    QuadwalkError,
    ReflectionRegimeError,
    SchemaError,
)
from .model import load_law, load_spec, save_spec, validate
from .verify import verify_drift_signs

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(payload, args, text: str | None = None) -> None:
    if getattr(args, "format", "json") == "text" and text is not None:
        out = text if text.endswith("\n") else text + "\n"
    else:
        out = json.dumps(payload, indent=1) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _parse_point(text: str) -> tuple[int, int]:
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise SchemaError(f"expected a lattice point 'x,y', got {text!r}") from exc
    return (x, y)


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise SchemaError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise SchemaError(f"expected comma-separated numbers, got {text!r}") from exc


def _cmd_validate(args) -> int:
    spec = load_spec(args.model)
    report = validate(spec, args.trunc)
    d = report.to_dict()
    lines = [
        f"homogeneity bounds   {'pass' if report.hypothesis_H else 'FAIL'}",
        f"zero interior drift  {'pass' if report.zero_drift_D else 'FAIL'}"
        f"  (drift = ({report.drift_witness.x:.6g}, {report.drift_witness.y:.6g}))",
        f"covariance rank      {'pass' if report.covariance_Sigma else 'FAIL'}"
        f"  (det = {report.sigma_det:.6g})",
        f"irreducibility       {report.irreducibility_I} (box {report.irreducibility_trunc})",
        f"left-continuous      {report.left_continuous}",
        "moment exponents     all infinite (finite support)",
    ]
    _emit(d, args, "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_classify(args) -> int:
    spec = load_spec(args.model)
    report = classify(
        spec,
        method=args.method,
        tol_crit=args.tol_crit,
        trunc_tol=args.tol,
        mc_steps=args.steps,
        seed=args.seed,
    )
    _emit(report.to_dict(), args, report.to_text())
    return EXIT_OK


def _cmd_stationary(args) -> int:
    spec = load_spec(args.model)
    measure = stationary_measure(
        spec,
        side=args.side,
        method=args.method,
        trunc_K=args.K,
        trunc_tol=args.tol,
        mc_steps=args.steps,
        seed=args.seed,
    )
    _emit(measure.to_dict(), args)
    return EXIT_OK


def _cmd_simulate_tail(args) -> int:
    spec = load_spec(args.model)
    cfg = simulate.SimConfig(
        start=_parse_point(args.start),
        radius=args.radius,
        horizon=args.horizon,
        trials=args.trials,
        master_seed=args.seed,
    )
    estimate = simulate.survival_curve(spec, cfg, threads=args.threads)
    csv_text = estimate.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.estimate:
        Path(args.estimate).write_text(json.dumps(estimate.to_dict(), indent=1) + "\n")
    return EXIT_OK


def _cmd_fit(args) -> int:
    try:
        with open(args.curve) as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"cannot read curve file {args.curve}: {exc}") from exc
    if not rows or "n" not in rows[0] or "survival" not in rows[0]:
        raise SchemaError("curve file must be CSV with header n,survival,stderr")
    ns = np.array([int(row["n"]) for row in rows])
    surv = np.array([float(row["survival"]) for row in rows])
    trials = args.trials
    if trials is None:
        trials = _infer_trials(rows)
    result = simulate.fit_curve(ns, surv, trials=trials, seed=args.seed)
    _emit(result, args)
    return EXIT_OK


def _infer_trials(rows) -> int:
    for row in rows:
        s = float(row["survival"])
        se = float(row.get("stderr", 0) or 0)
        if 0.0 < s < 1.0 and se > 0.0:
            return max(1, round(s * (1.0 - s) / (se * se)))
    raise SchemaError(
        "cannot infer the trial count from the curve (no informative stderr); "
        "pass --trials"
    )


def _cmd_verify_drift(args) -> int:
    spec = load_spec(args.model)
    result = verify_drift_signs(
        spec,
        alpha=args.alpha,
        epsilon=args.epsilon,
        samples=args.samples,
        seed=args.seed,
        base_radius=args.base_radius,
        n_sweep=tuple(2**k for k in range(args.n_sweep_max + 1)),
    )
    _emit(result, args)
    return EXIT_OK


def _cmd_stabilize(args) -> int:
    spec = load_spec(args.model)
    steps = _parse_int_list(args.steps)
    start = _parse_point(args.start) if args.start else None
    results = []
    for n in steps:
        point = start
        if point is None:
            dist = 2 * spec.R * n + 8 * spec.R
            point = (dist, 0) if args.side == 1 else (0, dist)
        est = simulate.stabilization_probe(
            spec, side=args.side, n=n, start=point, samples=args.samples, seed=args.seed
        )
        results.append(est.to_dict())
    _emit({"side": args.side, "estimates": results}, args)
    return EXIT_OK


def _cmd_excursion(args) -> int:
    spec = load_spec(args.model)
    result = simulate.excursion_max_probe(
        spec,
        start=_parse_point(args.start),
        r=args.radius,
        s_grid=_parse_float_list(args.levels),
        trials=args.trials,
        horizon=args.horizon,
        seed=args.seed,
    )
    _emit(result, args)
    return EXIT_OK


def _cmd_build(args, builder) -> int:
    zeta = load_law(args.zeta)
    spec = builder(zeta)
    save_spec(spec, args.output)
    report = walks.validate_increment_A(zeta)
    summary = {"written": str(args.output), "R": spec.R, "rho": report.rho}
    if 0.0 < report.rho < 1.0:
        summary["tail_exponent"] = walks.lindley_exponent(report.rho)
    _emit(summary, args)
    return EXIT_OK


def _cmd_report(args) -> int:
    from .report import write_report

    spec = load_spec(args.model)
    index = write_report(
        spec,
        out_dir=Path(args.out_dir),
        start=_parse_point(args.start) if args.start else None,
        radius=args.radius,
        trials=args.trials,
        horizon=args.horizon,
        seed=args.seed,
        threads=args.threads,
    )
    _emit(index, args)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="quadwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, fmt=True, out=True):
        if fmt:
            p.add_argument("--format", choices=["json", "text"], default="json")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if out:
            p.add_argument("--out", type=str, default=None, help="write output to a file")

    p = sub.add_parser("validate", help="check the model hypotheses")
    p.add_argument("model")
    p.add_argument("--trunc", type=int, default=None, help="irreducibility box side")
    common(p, seed=False)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("classify", help="compute the characteristic parameter and verdict")
    p.add_argument("model")
    p.add_argument("--method", choices=["auto", "exact", "truncate", "mc"], default="auto")
    p.add_argument("--tol-crit", type=float, default=1e-9)
    p.add_argument("--tol", type=float, default=1e-10, help="truncated-solver tolerance")
    p.add_argument("--steps", type=int, default=10**7, help="occupation-MC steps")
    common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("stationary", help="stationary boundary-block weights for one side")
    p.add_argument("model")
    p.add_argument("--side", type=int, choices=[1, 2], required=True)
    p.add_argument("--method", choices=["auto", "exact", "truncate", "mc"], default="auto")
    p.add_argument("--K", type=int, default=None, help="initial truncation level")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--steps", type=int, default=10**7)
    common(p)
    p.set_defaults(func=_cmd_stationary)

    p = sub.add_parser("simulate-tail", help="passage-time survival curve (CSV)")
    p.add_argument("model")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--start", type=str, required=True, help="lattice start 'x,y'")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--estimate", type=str, default=None, help="write fit JSON here")
    common(p, fmt=False)
    p.set_defaults(func=_cmd_simulate_tail)

    p = sub.add_parser("fit", help="fit the log-log slope of a survival CSV")
    p.add_argument("curve")
    p.add_argument("--trials", type=int, default=None,
                   help="trial count behind the curve (inferred from stderr when omitted)")
    common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("verify-drift", help="Monte-Carlo sign checks of Lyapunov drifts")
    p.add_argument("model")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--base-radius", type=int, default=None)
    p.add_argument("--n-sweep-max", type=int, default=3,
                   help="sweep compression factors 2**0 .. 2**this")
    common(p)
    p.set_defaults(func=_cmd_verify_drift)

    p = sub.add_parser("stabilize", help="normalized n-step boundary drift estimates")
    p.add_argument("model")
    p.add_argument("--side", type=int, choices=[1, 2], required=True)
    p.add_argument("--steps", type=str, required=True, help="comma list of n values")
    p.add_argument("--start", type=str, default=None, help="lattice start 'x,y'")
    p.add_argument("--samples", type=int, default=10**5)
    common(p)
    p.set_defaults(func=_cmd_stabilize)

    p = sub.add_parser("excursion", help="excursion-maximum tail probe")
    p.add_argument("model")
    p.add_argument("--start", type=str, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--levels", type=str, required=True, help="comma list of levels s")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--horizon", type=int, default=10**5)
    common(p)
    p.set_defaults(func=_cmd_excursion)

    p = sub.add_parser("lindley", help="build the clamp-reflected walk from an increment law")
    p.add_argument("zeta")
    p.add_argument("-o", "--output", required=True)
    common(p, seed=False)
    p.set_defaults(func=lambda a: _cmd_build(a, walks.lindley_spec))

    p = sub.add_parser("mirror", help="build the mirror-reflected walk from an increment law")
    p.add_argument("zeta")
    p.add_argument("-o", "--output", required=True)
    common(p, seed=False)
    p.set_defaults(func=lambda a: _cmd_build(a, walks.mirror_spec))

    p = sub.add_parser("report", help="classification + tail simulation with figures")
    p.add_argument("model")
    p.add_argument("--out-dir", type=str, required=True)
    p.add_argument("--start", type=str, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--horizon", type=int, default=10**5)
    p.add_argument("--threads", type=int, default=1)
    common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (HypothesisError, ReflectionRegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotLeftContinuousError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QuadwalkError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
