"""Command-line front end.

Subcommands: simulate, compare, autonomy-check, equivariance-check, riccati.
Exit codes: 0 success / check passed, 1 check failed or run aborted,
2 invalid input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .invariance import InvariantError, autonomy_check, equivariance_check
from .model import ConstantProfile
from .observers import stabilizing_ekf_gain, stabilizing_iekf_gain
from .riccati import RiccatiDivergenceError
from .run import compare, run_metrics, run_scenario
from .scenario import OBSERVER_KINDS, load_scenario


def _load(path, seed=None, observer=None):
    sc = load_scenario(path)
    if seed is not None:
        sc.seed = seed
        sc.noise_seed = None  # master seed drives the noise again
    if observer is not None:
        sc.observer = observer
    sc.validate()
    return sc


def _cmd_simulate(args) -> int:
    sc = _load(args.scenario, args.seed, args.observer)
    try:
        log = run_scenario(sc)
    except (RiccatiDivergenceError, RuntimeError) as exc:
        print(f"simulate: run aborted: {exc}", file=sys.stderr)
        return 1
    log.write(args.out)
    metrics = run_metrics(log) if log.rows.shape[0] > 1 else {}
    summary = " ".join(f"{k}={v:.6g}" for k, v in metrics.items())
    print(f"simulate {sc.name}: {log.rows.shape[0]} rows -> {args.out} {summary}".rstrip())
    return 0


def _cmd_compare(args) -> int:
    scenarios = [_load(p, args.seed, None) for p in args.scenarios]
    report = compare(scenarios, max_workers=args.workers)
    if args.out:
        report.write(args.out)
    print("metric," + ",".join(report.names))
    for name, values in report.metrics.items():
        print(name + "," + ",".join(f"{v:.6g}" for v in values))
    return 0


def _default_eta0(n: int) -> InvariantError:
    marks = np.array([[0.5 + 0.2 * i, 1.0 - 0.3 * i] for i in range(n)])
    return InvariantError(0.3, np.array([1.0, -0.5]), marks)


def _cmd_autonomy(args) -> int:
    n = args.landmarks
    if args.observer == "prop1":
        gain = np.ones(n)
    elif args.observer == "iekf":
        gain = stabilizing_iekf_gain(n)
    else:
        gain = stabilizing_ekf_gain(n)
    deviation = autonomy_check(
        args.observer,
        gain,
        ConstantProfile(1.0, 0.3),
        ConstantProfile(1.0, 0.0),
        _default_eta0(n),
        horizon=args.horizon,
        dt=args.dt,
    )
    passed = deviation < args.threshold
    line = (
        f"autonomy-check observer={args.observer} deviation={deviation:.6e} "
        f"threshold={args.threshold:.1e} {'PASS' if passed else 'FAIL'}"
    )
    print(line)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "autonomy.csv").write_text(
            "observer,deviation,threshold,pass\n"
            f"{args.observer},{deviation:.17g},{args.threshold:.17g},{int(passed)}\n"
        )
    return 0 if passed else 1


def _cmd_equivariance(args) -> int:
    actions = ["left", "right"] if args.action == "both" else [args.action]
    ok = True
    rows = []
    for action in actions:
        res = equivariance_check(action, n_samples=args.samples, seed=args.seed or 0)
        passed = res.output < args.output_threshold and res.dynamics < args.dynamics_threshold
        ok = ok and passed
        print(
            f"equivariance-check action={action} output={res.output:.6e} "
            f"dynamics={res.dynamics:.6e} {'PASS' if passed else 'FAIL'}"
        )
        rows.append((action, res, passed))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["action,output_residual,dynamics_residual,pass"]
        for action, res, passed in rows:
            lines.append(f"{action},{res.output:.17g},{res.dynamics:.17g},{int(passed)}")
        (out / "equivariance.csv").write_text("\n".join(lines) + "\n")
    return 0 if ok else 1


def _cmd_riccati(args) -> int:
    sc = _load(args.scenario, args.seed, args.observer)
    from .scenario import RiccatiTuning

    if not isinstance(sc.gain, RiccatiTuning):
        print("riccati: scenario does not use a Riccati-driven gain", file=sys.stderr)
        return 2
    try:
        log = run_scenario(sc)
    except (RiccatiDivergenceError, RuntimeError) as exc:
        print(f"riccati: run aborted: {exc}", file=sys.stderr)
        return 1
    keep = [i for i, c in enumerate(log.columns) if c == "t" or c.startswith(("L_", "P_diag_"))]
    lines = [",".join(log.columns[i] for i in keep)]
    for row in log.rows:
        lines.append(",".join(f"{row[i]:.17g}" for i in keep))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "riccati.csv").write_text("\n".join(lines) + "\n")
    metrics = run_metrics(log) if log.rows.shape[0] > 1 else {}
    settle = metrics.get("gain_settle_time", float("nan"))
    print(f"riccati {sc.name}: gain settle time {settle:.6g} s -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slamlab",
        description="Deterministic planar SLAM estimation laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write run.csv + manifest.json")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--observer", choices=OBSERVER_KINDS)
    sim.set_defaults(func=_cmd_simulate)

    cmp_ = sub.add_parser("compare", help="run several scenarios and tabulate metrics")
    cmp_.add_argument("--scenarios", nargs="+", required=True)
    cmp_.add_argument("--out")
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--workers", type=int, default=None)
    cmp_.set_defaults(func=_cmd_compare)

    auto = sub.add_parser(
        "autonomy-check",
        help="check trajectory independence of the invariant-error flow",
    )
    auto.add_argument("--observer", choices=OBSERVER_KINDS, required=True)
    auto.add_argument("--out")
    auto.add_argument("--landmarks", type=int, default=1)
    auto.add_argument("--horizon", type=float, default=20.0)
    auto.add_argument("--dt", type=float, default=0.001)
    auto.add_argument("--threshold", type=float, default=1e-6)
    auto.set_defaults(func=_cmd_autonomy)

    equi = sub.add_parser(
        "equivariance-check", help="check symmetry of the plant and its output"
    )
    equi.add_argument("--action", choices=["left", "right", "both"], default="both")
    equi.add_argument("--out")
    equi.add_argument("--samples", type=int, default=100)
    equi.add_argument("--seed", type=int)
    equi.add_argument("--output-threshold", type=float, default=1e-9)
    equi.add_argument("--dynamics-threshold", type=float, default=1e-6)
    equi.set_defaults(func=_cmd_equivariance)

    ric = sub.add_parser("riccati", help="standalone Riccati run: gain and covariance series")
    ric.add_argument("--scenario", required=True)
    ric.add_argument("--out", required=True)
    ric.add_argument("--seed", type=int)
    ric.add_argument("--observer", choices=OBSERVER_KINDS)
    ric.set_defaults(func=_cmd_riccati)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"slamlab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
