"""Per-motor PID position control of the four actuated legs.

Each motor is a rigid inertia with viscous damping. With the default plant
the mechanical time constant (J/b = 0.1 ms) is shorter than the 1900 Hz
control period, so the damping term is integrated implicitly; the position
update then uses the new velocity (semi-implicit Euler).

Units: angles rad, torques N*mm, inertia kg*mm^2, damping N*mm*s/rad.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, Infeasible, KinematicsError, NonMonotoneTime
from .kinematics import (
    _newton_refine,
    forward_kinematics_direct,
    home_pose,
    inverse_kinematics,
    inverse_kinematics_batch,
    jacobian,
)
from .mechanism import JointAngles, MechanismParams, Pose
from .statics import Wrench

LOOP_RATE_HZ = 1900.0
DT = 1.0 / LOOP_RATE_HZ
NMM_TO_KGMM2_PER_S2 = 1000.0  # 1 N*mm = 1000 kg*mm^2/s^2
BANDWIDTH_HZ = 20.0

POSE_TRAJECTORY_HEADER = ("t_s", "x_mm", "y_mm", "z_mm", "theta_deg")
LOG_HEADER = (
    "t_s", "x_des", "y_des", "z_des", "th_des", "x_act", "y_act", "z_act", "th_act",
    "q1", "q2", "q3", "q4", "tau1", "tau2", "tau3", "tau4",
)


@dataclass(frozen=True)
class MotorPlant:
    inertia: float = 1e-3  # kg*mm^2
    damping: float = 0.01  # N*mm*s/rad

    def __post_init__(self) -> None:
        if not (self.inertia > 0 and self.damping >= 0):
            raise ConfigError("motor inertia must be positive and damping non-negative")


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"gain {name} must be finite and non-negative, got {v!r}")

    def integral_clamp(self, tau_max: float) -> float:
        return tau_max / self.ki if self.ki > 0 else math.inf


def default_gains(plant: MotorPlant = MotorPlant(), bandwidth_hz: float = BANDWIDTH_HZ) -> PidGains:
    """PI gains for the damping-dominated plant.

    With J negligible the loop reduces to ``b s^2 + kp s + ki``. ``kp`` puts
    the proportional crossover at the bandwidth and ``ki = kp^2 / (4 b)``
    makes that polynomial critically damped. The plant is already heavily
    overdamped, so no derivative action is added.
    """
    omega = 2.0 * math.pi * bandwidth_hz
    kp = plant.damping * omega
    return PidGains(kp=kp, ki=kp * kp / (4.0 * plant.damping), kd=0.0)


@dataclass(frozen=True)
class Transmission:
    """Monotone linear motor-to-leg angle map ``q = offset + ratio * motor``."""

    ratio: float = 1.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.ratio) and self.ratio != 0):
            raise ConfigError("transmission ratio must be finite and nonzero")

    def leg(self, motor):
        return self.offset + self.ratio * np.asarray(motor, dtype=float)

    def motor(self, leg):
        return (np.asarray(leg, dtype=float) - self.offset) / self.ratio

    def motor_torque(self, leg_torque):
        # power balance: tau_m * dm = tau_q * dq
        return self.ratio * np.asarray(leg_torque, dtype=float)


IDENTITY = Transmission()


@dataclass(frozen=True)
class MotorState:
    angle: float
    velocity: float = 0.0
    integral_error: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.angle, self.velocity, self.integral_error)):
            raise ValueError("motor state must be finite")


class _Loop:
    """Array form of the control law shared by the step and tracking APIs."""

    def __init__(self, params, gains, plant, dt):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.tau_max = params.tau_max
        self.gains = gains
        self.clamp = gains.integral_clamp(params.tau_max)
        self.dt = dt
        scale = NMM_TO_KGMM2_PER_S2 / plant.inertia
        self.accel = dt * scale
        self.denominator = 1.0 + dt * plant.damping * scale

    def torque(self, angle, velocity, integral, target, feedforward):
        error = target - angle
        integral = np.clip(integral + error * self.dt, -self.clamp, self.clamp)
        g = self.gains
        raw = g.kp * error + g.ki * integral - g.kd * velocity + feedforward
        return np.clip(raw, -self.tau_max, self.tau_max), integral

    def step(self, angle, velocity, integral, target, feedforward):
        tau, integral = self.torque(angle, velocity, integral, target, feedforward)
        velocity = (velocity + self.accel * tau) / self.denominator
        return angle + self.dt * velocity, velocity, integral, tau


def step_control(
    params: MechanismParams,
    gains: PidGains,
    motors: Sequence[MotorState],
    q_desired: JointAngles,
    wrench_ff: Optional[Wrench] = None,
    dt: float = DT,
    plant: MotorPlant = MotorPlant(),
    transmission: Transmission = IDENTITY,
    pose: Optional[Pose] = None,
) -> tuple[tuple[MotorState, ...], np.ndarray]:
    """One control period: PID plus ``J.T @ w`` feedforward, saturated at tau_max.

    ``pose`` is the current tactor pose used for the feedforward Jacobian;
    when omitted it is recovered by forward kinematics.
    """
    if len(motors) != 4:
        raise ValueError("expected four motor states")
    loop = _Loop(params, gains, plant, dt)
    angle = np.array([m.angle for m in motors])
    velocity = np.array([m.velocity for m in motors])
    integral = np.array([m.integral_error for m in motors])
    ff = np.zeros(4)
    if wrench_ff is not None and np.any(wrench_ff.as_array() != 0):
        q = JointAngles.from_array(transmission.leg(angle))
        if pose is None:
            pose = forward_kinematics_direct(params, q).pose
        ff = transmission.motor_torque(jacobian(params, pose, q).T @ wrench_ff.as_array())
    target = transmission.motor(q_desired.as_array())
    angle, velocity, integral, tau = loop.step(angle, velocity, integral, target, ff)
    states = tuple(MotorState(float(a), float(v), float(i)) for a, v, i in zip(angle, velocity, integral))
    return states, tau


@dataclass(frozen=True)
class TrackSample:
    t: float
    desired: Pose
    actual: Pose
    q: JointAngles
    torques: tuple[float, float, float, float]


def _actual_pose(params, q: np.ndarray, previous: Optional[np.ndarray]) -> np.ndarray:
    if previous is not None:
        try:
            return _newton_refine(params, previous, q)[0]
        except KinematicsError:
            pass
    hint = 0.0 if previous is None else float(previous[3])
    return forward_kinematics_direct(params, JointAngles.from_array(q), theta_hint=hint).pose.as_array()


def track_pose_trajectory(
    params: MechanismParams,
    gains: PidGains,
    poses: Sequence[tuple[float, Pose]],
    dt: float = DT,
    plant: MotorPlant = MotorPlant(),
    transmission: Transmission = IDENTITY,
    initial_pose: Optional[Pose] = None,
) -> list[TrackSample]:
    """Drive the simulated loop through desired poses (zero-order hold).

    Motors start at rest at ``initial_pose`` (default: home). Each log row
    holds the state at the sample time and the first torque applied while
    that sample is the target.
    """
    if not poses:
        return []
    times = [float(t) for t, _ in poses]
    for a, b in zip(times, times[1:]):
        if not b > a:
            raise NonMonotoneTime(f"time {b} does not follow {a}")
    q_all, feasible = inverse_kinematics_batch(params, [p.as_array() for _, p in poses])
    if not feasible.all():
        k = int(np.flatnonzero(~feasible)[0])
        t, pose = poses[k]
        sol = inverse_kinematics(params, pose)
        raise Infeasible(f"desired pose at t = {t:g} s is not reachable: {sol.message}")
    targets = transmission.motor(q_all)

    start = home_pose(params) if initial_pose is None else initial_pose
    sol0 = inverse_kinematics(params, start)
    if not sol0.feasible:
        raise Infeasible(f"initial pose is not reachable: {sol0.message}")
    loop = _Loop(params, gains, plant, dt)
    angle = transmission.motor(sol0.joints.as_array())
    velocity = np.zeros(4)
    integral = np.zeros(4)
    zero = np.zeros(4)
    previous = start.as_array()

    log = []
    for k, (t, desired) in enumerate(poses):
        q = transmission.leg(angle)
        previous = _actual_pose(params, q, previous)
        first_tau, _ = loop.torque(angle, velocity, integral, targets[k], zero)
        log.append(TrackSample(
            t, desired, Pose.from_array(previous), JointAngles.from_array(q),
            tuple(float(v) for v in first_tau),
        ))
        if k + 1 < len(poses):
            steps = max(1, int(round((times[k + 1] - t) / dt)))
            for _ in range(steps):
                angle, velocity, integral, _ = loop.step(angle, velocity, integral, targets[k], zero)
    return log


# I/O -----------------------------------------------------------------------

def load_gains(path: str | Path) -> PidGains:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read gains {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict) or set(data) - {"kp", "ki", "kd"} or "kp" not in data:
        raise ConfigError("gains must be an object with kp and optional ki, kd")
    try:
        return PidGains(**{k: float(v) for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid gains: {exc}") from exc


def parse_pose_trajectory(text: str) -> list[tuple[float, Pose]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("pose trajectory CSV is empty") from None
    if tuple(h.strip() for h in header) != POSE_TRAJECTORY_HEADER:
        raise ConfigError(f"pose trajectory header must be {','.join(POSE_TRAJECTORY_HEADER)}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t, x, y, z, th = (float(c) for c in row)
            out.append((t, Pose(x, y, z, math.radians(th))))
        except ValueError as exc:
            raise ConfigError(f"pose trajectory line {lineno}: {exc}") from exc
    for (a, _), (b, _) in zip(out, out[1:]):
        if not b > a:
            raise NonMonotoneTime(f"time {b} does not follow {a}")
    return out


def load_pose_trajectory(path: str | Path) -> list[tuple[float, Pose]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {path}: {exc}") from exc
    return parse_pose_trajectory(text)


def pose_trajectory_csv(poses: Sequence[tuple[float, Pose]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(POSE_TRAJECTORY_HEADER)
    for t, p in poses:
        writer.writerow((f"{t:.6f}", f"{p.x:.6f}", f"{p.y:.6f}", f"{p.z:.6f}", f"{math.degrees(p.theta):.6f}"))
    return buf.getvalue()


def log_csv(log: Sequence[TrackSample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for s in log:
        d, a = s.desired, s.actual
        row = [s.t, d.x, d.y, d.z, math.degrees(d.theta), a.x, a.y, a.z, math.degrees(a.theta)]
        row += [math.degrees(v) for v in s.q.q] + list(s.torques)
        writer.writerow([f"{v:.6f}" for v in row])
    return buf.getvalue()
