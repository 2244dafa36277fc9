"""Command-line interface.

Exit codes: 0 success, 1 usage or I/O error, 2 mathematically infeasible
query. Angles are degrees at this boundary and radians internally.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .controller import (
    default_gains,
    load_gains,
    load_pose_trajectory,
    log_csv,
    track_pose_trajectory,
)
from .demos import DEMO_FILES, demo_fixture_text
from .errors import ConfigError, KinematicsError
from .kinematics import forward_kinematics_direct, home_pose, inverse_kinematics
from .mechanism import JointAngles, MechanismParams, Pose, load_params
from .rendering import (
    DEFAULT_K_THETA,
    load_scene,
    load_trajectory,
    parse_trajectory,
    render_steps,
    scene_from_dict,
    trace_csv,
)
from .statics import DIRECTIONS, capacity_csv, capacity_report
from .workspace import DEFAULT_RESOLUTION, reference_comparison, sweep_workspace, workspace_summary

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be {n} comma-separated numbers, got {text!r}") from None
    if len(values) != n or not all(math.isfinite(v) for v in values):
        raise UsageError(f"{what} must be {n} comma-separated finite numbers, got {text!r}")
    return values


def _params(args) -> MechanismParams:
    return MechanismParams() if args.mechanism is None else load_params(args.mechanism)


def _pose_arg(text: str) -> Pose:
    x, y, z, th = _floats(text, 4, "--pose")
    return Pose(x, y, z, math.radians(th))


def _pose_json(pose: Pose) -> dict:
    return {"x_mm": pose.x, "y_mm": pose.y, "z_mm": pose.z, "theta_deg": math.degrees(pose.theta)}


def _emit(data: dict) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def _check_writable(path: Optional[str]) -> None:
    if path is not None and not Path(path).resolve().parent.is_dir():
        raise ConfigError(f"output directory for {path} does not exist")


# subcommands ---------------------------------------------------------------

def cmd_ik(args) -> int:
    params = _params(args)
    sol = inverse_kinematics(params, _pose_arg(args.pose))
    _emit({
        "feasible": sol.feasible,
        "status": sol.status,
        "message": sol.message,
        "q_deg": [math.degrees(v) for v in sol.joints.q] if sol.feasible else None,
        "discriminants": [float(v) for v in sol.discriminants],
    })
    return EXIT_OK if sol.feasible else EXIT_INFEASIBLE


def cmd_fk(args) -> int:
    params = _params(args)
    q = JointAngles.from_array(np.radians(_floats(args.q, 4, "--q")))
    res = forward_kinematics_direct(params, q, theta_hint=math.radians(args.theta_hint))
    out = _pose_json(res.pose)
    out["residual_norm_mm2"] = res.residual_norm
    _emit(out)
    return EXIT_OK


def cmd_workspace(args) -> int:
    params = _params(args)
    if not args.resolution > 0:
        raise UsageError("--resolution must be positive")
    if not args.rotation_step_deg > 0:
        raise UsageError("--rotation-step-deg must be positive")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    _check_writable(args.out)
    grid = sweep_workspace(
        params, args.resolution, math.radians(args.rotation_step_deg), workers=args.workers
    )
    summary = workspace_summary(grid, math.radians(args.rotation_min_deg))
    if args.mechanism is None:
        summary["reference_comparison"] = reference_comparison(summary)
    _write(args.out, grid.to_csv())
    _write(args.summary, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if args.json:
        _emit(summary)
    else:
        ext = summary["extents_mm"]
        box = summary["dexterous_box_mm"]
        print(f"reachable cells: {summary['reachable_cells']}  volume: {summary['volume_cm3']:.3f} cm^3")
        print("half spans (mm): " + ", ".join(f"{a}={ext[a]['half_span']:.2f}" for a in "xyz"))
        th = summary["theta_range_deg"]
        print(f"twist range (deg): +{th['pos']:.1f} / -{th['neg']:.1f}")
        if box is None:
            print(f"no box reaches {args.rotation_min_deg:g} deg of total twist")
        else:
            print("dexterous box edges (mm): " + " x ".join(f"{e:.2f}" for e in box["edges"]))
    return EXIT_OK


def cmd_wrench(args) -> int:
    params = _params(args)
    pose = home_pose(params) if args.pose is None else _pose_arg(args.pose)
    _check_writable(args.out)
    report = capacity_report(params, pose)
    _write(args.out, capacity_csv(report))
    _emit({
        "pose": _pose_json(pose),
        "tau_max_Nmm": params.tau_max,
        "capacity": report,
        "units": {name: ("N*mm" if name.startswith("theta") else "N") for name in DIRECTIONS},
    })
    return EXIT_OK


def cmd_render(args) -> int:
    if args.demo is not None:
        if args.scene or args.trajectory:
            raise UsageError("--demo cannot be combined with --scene/--trajectory")
        scene_text, traj_text = demo_fixture_text(args.demo)
        scene = scene_from_dict(json.loads(scene_text))
        samples = parse_trajectory(traj_text)
    else:
        if not (args.scene and args.trajectory):
            raise UsageError("render needs --scene and --trajectory (or --demo)")
        scene = load_scene(args.scene)
        samples = load_trajectory(args.trajectory)
    k_theta = math.degrees(args.k_theta)
    if not k_theta >= 0:
        raise UsageError("--k-theta must be non-negative")
    _check_writable(args.out)
    steps = render_steps(scene, samples, k_theta)
    trace = [(s.t, s.wrench) for s in steps]
    text = trace_csv(trace)
    _write(args.out, text)
    peaks = np.max(np.abs([w.as_array() for _, w in trace]), axis=0)
    summary = {
        "samples": len(trace),
        "contact_samples": sum(any(st.in_contact for st in s.states) for s in steps),
        "peak_abs": {"fx_N": peaks[0], "fy_N": peaks[1], "fz_N": peaks[2], "tz_Nmm": peaks[3]},
    }
    if args.json:
        _emit({k: (v if not isinstance(v, dict) else {kk: float(vv) for kk, vv in v.items()}) for k, v in summary.items()})
    elif args.out is None:
        sys.stdout.write(text)
    else:
        print(f"{len(trace)} samples written to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _params(args)
    gains = default_gains() if args.gains is None else load_gains(args.gains)
    poses = load_pose_trajectory(args.trajectory)
    if not args.rate > 0:
        raise UsageError("--rate must be positive")
    _check_writable(args.out)
    log = track_pose_trajectory(params, gains, poses, dt=1.0 / args.rate)
    text = log_csv(log)
    _write(args.out, text)
    if log:
        err = max(float(np.linalg.norm(s.actual.position - s.desired.position)) for s in log)
        peak = max(max(abs(v) for v in s.torques) for s in log)
    else:
        err = peak = 0.0
    summary = {
        "samples": len(log),
        "gains": {"kp": gains.kp, "ki": gains.ki, "kd": gains.kd},
        "max_position_error_mm": err,
        "peak_torque_Nmm": peak,
    }
    if args.json:
        _emit(summary)
    elif args.out is None:
        sys.stdout.write(text)
    else:
        print(f"{len(log)} samples written to {args.out}; max position error {err:.4g} mm")
    return EXIT_OK


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="origami-haptics",
        description="Kinematics, workspace, statics, rendering and control simulation "
        "for the 4-DoF origami fingertip device. Lengths in mm, angles in degrees, "
        "forces in N, torques in N*mm.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(p, mechanism=True):
        if mechanism:
            p.add_argument("--mechanism", metavar="JSON",
                           help="mechanism parameter file (lengths mm, angles deg); defaults built in")
        p.add_argument("--json", action="store_true", help="print a machine-readable JSON summary")

    p = sub.add_parser("ik", help="inverse kinematics of one pose",
                       description="Solve the four joint angles for a tactor pose. Prints JSON with "
                       "q_deg (degrees) and per-leg discriminants (mm^4). Exit 2 when unreachable.")
    common(p)
    p.add_argument("--pose", required=True, metavar="X,Y,Z,THETA",
                   help="tactor pose: x, y, z in mm and twist theta in degrees "
                   "(write --pose=-1,... when the first value is negative)")
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("fk", help="direct forward kinematics",
                       description="Tactor pose (mm, degrees) for four joint angles in degrees. "
                       "Exit 2 when no pose closes the legs or a joint limit is violated.")
    common(p)
    p.add_argument("--q", required=True, metavar="Q1,Q2,Q3,Q4", help="joint angles in degrees (write --q=-20,... when the first value is negative)")
    p.add_argument("--theta-hint", type=float, default=0.0, metavar="DEG",
                   help="preferred twist in degrees when several poses close (default 0)")
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("workspace", help="sweep the reachable workspace",
                       description="Voxel sweep of reachable tactor positions (mm) with twist "
                       "capability (degrees), plus the largest dexterous box.")
    common(p)
    p.add_argument("--resolution", type=float, default=DEFAULT_RESOLUTION, metavar="MM",
                   help=f"grid spacing in mm (default {DEFAULT_RESOLUTION})")
    p.add_argument("--rotation-min-deg", type=float, default=60.0, metavar="DEG",
                   help="total twist range in degrees a dexterous cell must reach (default 60)")
    p.add_argument("--rotation-step-deg", type=float, default=1.0, metavar="DEG",
                   help="twist scan step in degrees (default 1)")
    p.add_argument("--workers", type=int, default=1, help="worker threads (result is identical)")
    p.add_argument("--out", metavar="CSV", help="grid CSV (x_mm, y_mm, z_mm, reachable, rot_pos_deg, rot_neg_deg)")
    p.add_argument("--summary", metavar="JSON", help="also write the summary JSON here")
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("wrench", help="force and torque capacity",
                       description="Largest force (N) along x, y, z and torque (N*mm) about the "
                       "pad normal the motors can hold at a pose, from tau = J^T w.")
    common(p)
    p.add_argument("--pose", metavar="X,Y,Z,THETA", help="pose in mm and degrees (default: home)")
    p.add_argument("--out", metavar="CSV", help="capacity CSV (direction, capacity in N or N*mm)")
    p.set_defaults(func=cmd_wrench)

    p = sub.add_parser("render", help="render a finger trajectory against a scene",
                       description="Stream finger samples (t_s, x_mm, y_mm, z_mm, twist_deg) through the "
                       "proxy renderer. Output trace columns: t_s, fx_N, fy_N, fz_N, tz_Nmm.")
    common(p, mechanism=False)
    p.add_argument("--scene", metavar="JSON", help="scene file (mm, N/m, dimensionless friction)")
    p.add_argument("--trajectory", metavar="CSV", help="finger trajectory CSV")
    p.add_argument("--demo", type=int, choices=sorted(DEMO_FILES), help="use a bundled demo fixture")
    p.add_argument("--k-theta", type=float, default=math.radians(DEFAULT_K_THETA), metavar="NMM_PER_DEG",
                   help="torsional stiffness in N*mm per degree (default 0.5)")
    p.add_argument("--out", metavar="CSV", help="trace CSV (default: standard output)")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", help="simulate the 1900 Hz PID loop",
                       description="Track a pose trajectory (t_s, x_mm, y_mm, z_mm, theta_deg) with "
                       "per-motor PID. Gains JSON: kp in N*mm/rad, ki in N*mm/(rad*s), kd in N*mm*s/rad. "
                       "Log columns use mm, degrees and N*mm.")
    common(p)
    p.add_argument("--trajectory", required=True, metavar="CSV", help="desired pose trajectory")
    p.add_argument("--gains", metavar="JSON", help="PID gains (default: tuned for the built-in plant)")
    p.add_argument("--rate", type=float, default=1900.0, metavar="HZ", help="control loop rate in Hz")
    p.add_argument("--out", metavar="CSV", help="log CSV (default: standard output)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KinematicsError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
