"""Command-line entry point: ``compsim {fk,plan,simulate,evaluate,compare}``.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, formats, metrics, planners
from .kinematics import forward_kinematics, geometric_jacobian
from .limits import clamp_velocity
from .sim import MotionSpec, SimulationError, generate_motion, run_compensation

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
_MOTIONS = {"ud": "UD", "lr": "LR", "fb": "FB", "random3d": "Random3D"}


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _floats(text: str, n: int, what: str) -> np.ndarray:
    try:
        values = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"{what}: could not parse numbers from {text!r}") from None
    if len(values) != n:
        raise InputError(f"{what}: expected {n} {'joint ' if n == 6 else ''}values, got {len(values)}")
    return np.asarray(values)


def _print_json(obj) -> None:
    sys.stdout.write(formats.dumps_json(obj))


def cmd_fk(args) -> int:
    model = formats.load_model(args.model)
    theta = _floats(args.theta, 6, "--theta")
    pose = forward_kinematics(model, theta)
    _print_json({"position": pose.position.tolist(), "orientation_wxyz": pose.orientation.tolist()})
    return EXIT_OK


def cmd_plan(args) -> int:
    config = formats.load_config(args.model)
    theta = _floats(args.theta, 6, "--theta")
    v_B = _floats(args.v_b, 3, "--v-b")
    dp = _floats(args.dp, 3, "--dp")
    deps = _floats(args.deps, 3, "--deps")
    J = geometric_jacobian(config.model, theta)
    svf = None if args.unfiltered else config.svf
    if args.method == "nbm":
        cmd = planners.nbm_step(J[:3], J[3:], v_B, deps, config.gains, svf)
    else:
        J_MR = planners.reconstruct_jacobian(J[:3], J[3:], config.released_axis)
        kept = [i for i in range(3) if i != planners.AXES[config.released_axis]]
        cmd = planners.rjm_step(J_MR, v_B, dp, deps[kept], config.gains, svf, config.released_axis)
    if not np.all(np.isfinite(cmd.theta_dot)):
        raise SimulationError("non-finite joint velocity")
    clamped = clamp_velocity(cmd.theta_dot, config.joint_limits)
    _print_json({"method": cmd.method, "theta_dot": clamped.tolist(),
                 "theta_dot_raw": cmd.theta_dot.tolist(), "sigma_min": cmd.sigma_min,
                 "saturated": bool(np.any(clamped != cmd.theta_dot))})
    return EXIT_OK


def _motion_spec(args) -> MotionSpec:
    seed = args.seed
    if os.environ.get("COMPSIM_SEED"):
        try:
            seed = int(os.environ["COMPSIM_SEED"])
        except ValueError:
            raise InputError("COMPSIM_SEED must be an integer") from None
    return MotionSpec(kind=_MOTIONS[args.motion], amplitude=args.amplitude, period=args.period,
                      duration=args.duration, seed=seed, cross_coupling=args.coupling,
                      rate=args.rate or 60.0, lead_in=args.lead_in, noise_std=args.noise)


def cmd_simulate(args) -> int:
    overrides = {"method": args.method.upper()}
    if args.rate:
        overrides["rate"] = args.rate
    if args.no_compensation:
        overrides["compensate"] = False
    if args.unfiltered:
        overrides["svf"] = None
    config = formats.load_config(args.model, **overrides)
    if args.trace:
        trace = formats.load_trace(args.trace)
        scenario = f"trace:{Path(args.trace).name}"
        scenario_desc = {"trace": str(args.trace), "sha256": formats.file_sha256(args.trace)}
    else:
        spec = _motion_spec(args)
        trace = generate_motion(spec)
        scenario = spec.label if spec.kind != "Random3D" else f"{spec.label}-s{spec.seed}"
        scenario_desc = {"motion": spec.kind, "amplitude": spec.amplitude, "period": spec.period,
                         "duration": spec.duration, "seed": spec.seed,
                         "cross_coupling": spec.cross_coupling, "lead_in": spec.lead_in,
                         "noise_std": spec.noise_std}
    log = run_compensation(config, trace, scenario=scenario)
    formats.write_log(log, args.out)
    manifest = formats.RunManifest(
        config_hash=formats.canonical_hash(formats.config_fingerprint(config)),
        model_path=str(args.model or formats.default_model_path().name),
        scenarios=[scenario_desc],
        outputs={"log": {"path": str(args.out), "sha256": formats.file_sha256(args.out)}},
    )
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    Path(manifest_path).write_text(formats.dumps_json(manifest.to_dict()))
    print(f"wrote {args.out} ({len(log)} ticks, method {log.method}, scenario {scenario})",
          file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    log = formats.load_log(args.log)
    report = metrics.evaluate(log, args.baseline)
    if args.out:
        formats.write_report(report, args.out)
    _print_json(report.to_dict())
    return EXIT_OK


def cmd_compare(args) -> int:
    a = formats.load_log(args.log_a)
    b = formats.load_log(args.log_b)
    report = metrics.compare_report(a, b, args.baseline)
    if args.out:
        formats.write_report(report, args.out)
    _print_json(report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="compsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"compsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fk = sub.add_parser("fk", help="print the EE pose for a joint configuration")
    fk.add_argument("--model", help="model/config YAML (default: bundled model)")
    fk.add_argument("--theta", required=True, help="6 joint angles, comma separated (rad)")
    fk.set_defaults(func=cmd_fk)

    plan = sub.add_parser("plan", help="one planner step from explicit inputs")
    plan.add_argument("--model")
    plan.add_argument("--method", choices=("nbm", "rjm"), default="rjm")
    plan.add_argument("--theta", required=True)
    plan.add_argument("--v-b", default="0,0,0", help="base velocity in the home frame (m/s)")
    plan.add_argument("--dp", default="0,0,0", help="EE position error (m), RJM only")
    plan.add_argument("--deps", default="0,0,0", help="orientation error vector part")
    plan.add_argument("--unfiltered", action="store_true", help=argparse.SUPPRESS)
    plan.set_defaults(func=cmd_plan)

    sim = sub.add_parser("simulate", help="run the closed compensation loop")
    sim.add_argument("--model")
    sim.add_argument("--method", choices=("nbm", "rjm"), default="rjm")
    src = sim.add_mutually_exclusive_group()
    src.add_argument("--motion", choices=tuple(_MOTIONS), default="ud")
    src.add_argument("--trace", help="torso trace CSV instead of a synthetic motion")
    sim.add_argument("--amplitude", type=float, default=0.15)
    sim.add_argument("--period", type=float, default=5.0)
    sim.add_argument("--duration", type=float, default=30.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--coupling", type=float, default=0.1)
    sim.add_argument("--lead-in", type=float, default=3.0)
    sim.add_argument("--noise", type=float, default=0.0, help="position noise std (m)")
    sim.add_argument("--rate", type=float, default=None)
    sim.add_argument("--no-compensation", action="store_true")
    sim.add_argument("--unfiltered", action="store_true", help=argparse.SUPPRESS)
    sim.add_argument("--out", required=True)
    sim.add_argument("--manifest")
    sim.set_defaults(func=cmd_simulate)

    ev = sub.add_parser("evaluate", help="evaluation indices for a trace log")
    ev.add_argument("log")
    ev.add_argument("--baseline", type=float, default=metrics.BASELINE_WINDOW)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_evaluate)

    cmp_ = sub.add_parser("compare", help="compare two logs of the same scenario")
    cmp_.add_argument("log_a")
    cmp_.add_argument("log_b")
    cmp_.add_argument("--baseline", type=float, default=metrics.BASELINE_WINDOW)
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        print(f"compsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SimulationError, np.linalg.LinAlgError) as exc:
        print(f"compsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError, OSError) as exc:
        print(f"compsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
