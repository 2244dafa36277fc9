"""Jacobian-transpose statics and force/torque capacity at the tactor.

Wrench components are (fx, fy, fz) in newtons and tz in newton-millimeters.
The Jacobian's translational rows are in mm/rad and its rotational row in
rad/rad, so ``tau = J.T @ w`` comes out in N*mm for every joint.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FreeDirection
from .kinematics import home_pose, inverse_kinematics, jacobian
from .mechanism import JointAngles, MechanismParams, Pose

# Measured hardware capacities (N, N*mm); theta- stored as a magnitude.
REFERENCE_CAPACITY = {
    "x+": 1.05, "x-": 1.06, "y+": 1.25, "y-": 1.61, "z+": 1.39,
    "theta+": 5.6, "theta-": 8.2,
}
CALIBRATION_TARGET_Z = 1.39  # N

DIRECTIONS = {
    "x+": (1.0, 0.0, 0.0, 0.0),
    "x-": (-1.0, 0.0, 0.0, 0.0),
    "y+": (0.0, 1.0, 0.0, 0.0),
    "y-": (0.0, -1.0, 0.0, 0.0),
    "z+": (0.0, 0.0, 1.0, 0.0),
    "z-": (0.0, 0.0, -1.0, 0.0),
    "theta+": (0.0, 0.0, 0.0, 1.0),
    "theta-": (0.0, 0.0, 0.0, -1.0),
}


@dataclass(frozen=True)
class Wrench:
    fx: float = 0.0
    fy: float = 0.0
    fz: float = 0.0
    tz: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.fx, self.fy, self.fz, self.tz)):
            raise ValueError(f"wrench components must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.fz, self.tz])

    @classmethod
    def from_array(cls, values) -> "Wrench":
        fx, fy, fz, tz = (float(v) for v in values)
        return cls(fx, fy, fz, tz)

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench.from_array(self.as_array() + other.as_array())

    def __mul__(self, k: float) -> "Wrench":
        return Wrench.from_array(self.as_array() * k)

    __rmul__ = __mul__


ZERO_WRENCH = Wrench()


def joint_torques_for_wrench(
    params: MechanismParams, pose: Pose, q: JointAngles, wrench: Wrench
) -> np.ndarray:
    """Joint torques (N*mm) that hold ``wrench`` at the tactor: ``J.T @ w``."""
    return jacobian(params, pose, q).T @ wrench.as_array()


def wrench_from_torques(
    params: MechanismParams, pose: Pose, q: JointAngles, torques
) -> Wrench:
    """Tactor wrench balanced by the given joint torques (inverse statics)."""
    J = jacobian(params, pose, q)
    return Wrench.from_array(np.linalg.solve(J.T, np.asarray(torques, dtype=float)))


def max_wrench(
    params: MechanismParams, pose: Pose, q: JointAngles, direction
) -> float:
    """Largest multiple of ``direction`` the motors can hold.

    Returns ``min_i tau_max / |tau_i|`` for the torques of the unit
    direction, in N for force directions and N*mm for pure torque.
    """
    d = np.asarray(direction.as_array() if isinstance(direction, Wrench) else direction, dtype=float)
    norm = float(np.linalg.norm(d))
    if norm == 0 or not math.isfinite(norm):
        raise ValueError("direction must be a nonzero finite 4-vector")
    d = d / norm
    tau = jacobian(params, pose, q).T @ d
    peak = float(np.max(np.abs(tau)))
    if peak <= 1e-12 * (1.0 + float(np.max(np.abs(d)))):
        raise FreeDirection(f"direction {d} needs no joint torque")
    return params.tau_max / peak


def _state(params: MechanismParams, pose: Optional[Pose]):
    pose = home_pose(params) if pose is None else pose
    q = inverse_kinematics(params, pose).raise_for_status().joints
    return pose, q


def capacity_report(params: MechanismParams, pose: Optional[Pose] = None) -> dict[str, float]:
    """Capacity along the eight signed axis directions (default: home pose)."""
    pose, q = _state(params, pose)
    return {name: max_wrench(params, pose, q, d) for name, d in DIRECTIONS.items()}


def capacity_csv(report: dict[str, float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("direction", "capacity"))
    for name in DIRECTIONS:
        writer.writerow((name, f"{report[name]:.6f}"))
    return buf.getvalue()


def calibrated_tau_max(params: MechanismParams, target_z: float = CALIBRATION_TARGET_Z) -> float:
    """Motor torque limit that gives ``target_z`` newtons of +z force at home."""
    pose, q = _state(params, None)
    tau = jacobian(params, pose, q).T @ np.array(DIRECTIONS["z+"])
    return target_z * float(np.max(np.abs(tau)))


def calibrate(params: MechanismParams, target_z: float = CALIBRATION_TARGET_Z) -> MechanismParams:
    return params.with_(tau_max=calibrated_tau_max(params, target_z))
