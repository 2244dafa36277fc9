"""Geometry of the four-legged origami parallel mechanism.

Conventions: lengths in millimeters, angles in radians, forces in newtons
and torques in newton-millimeters. Legs are indexed 1..4 at the public
surface and 0..3 internally.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError

LEG_AZIMUTHS = (math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4)

# Sign pattern of the plate offset vectors per leg: (sign of the constant x
# offset, sign of the y offset and of the twist terms).
_DB_SIGNS = ((+1, +1), (-1, +1), (-1, -1), (+1, -1))


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass(frozen=True)
class MechanismParams:
    """Geometric and actuation description of the mechanism.

    ``q_limits`` holds one ``(q_min, q_max)`` pair per leg. ``theta_limit``
    is the largest plate twist the traveling-plate parallelogram allows.
    """

    L: float = 17.5
    l: float = 15.0
    d1: float = 12.15
    h1: float = 4.97
    d: float = 7.5
    h: float = 17.5
    base_radius: float = 14.0
    base_z: float = 0.0
    phi: tuple[float, float, float, float] = LEG_AZIMUTHS
    q_limits: tuple[tuple[float, float], ...] = ((-1.05, 0.05),) * 4
    tau_max: float = 6.08125
    theta_limit: float = math.radians(30.0)

    def __post_init__(self) -> None:
        for name in ("L", "l", "d1", "h1", "d", "h", "tau_max", "theta_limit"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if not (math.isfinite(self.base_radius) and self.base_radius >= 0):
            raise ConfigError(f"base_radius must be non-negative, got {self.base_radius!r}")
        if not math.isfinite(self.base_z):
            raise ConfigError("base_z must be finite")
        if len(self.phi) != 4:
            raise ConfigError("phi must hold exactly four leg azimuths")
        if len(self.q_limits) != 4:
            raise ConfigError("q_limits must hold one interval per leg")
        for i, (lo, hi) in enumerate(self.q_limits, start=1):
            if not lo < hi:
                raise ConfigError(f"leg {i}: q_min must be below q_max, got [{lo}, {hi}]")

    @cached_property
    def q_lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.q_limits])

    @cached_property
    def q_upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.q_limits])

    @cached_property
    def base_points(self) -> np.ndarray:
        """Actuated-joint centers of all legs, shape (4, 3)."""
        phi = np.asarray(self.phi)
        return np.stack([
            self.base_radius * np.cos(phi),
            self.base_radius * np.sin(phi),
            np.full(4, self.base_z),
        ], axis=1)

    def scaled(self, factor: float) -> "MechanismParams":
        """Copy with every length multiplied by ``factor``."""
        return MechanismParams(
            L=self.L * factor,
            l=self.l * factor,
            d1=self.d1 * factor,
            h1=self.h1 * factor,
            d=self.d * factor,
            h=self.h * factor,
            base_radius=self.base_radius * factor,
            base_z=self.base_z * factor,
            phi=self.phi,
            q_limits=self.q_limits,
            tau_max=self.tau_max,
            theta_limit=self.theta_limit,
        )

    def with_(self, **changes) -> "MechanismParams":
        return replace(self, **changes)


_CONFIG_KEYS = {
    "L", "l", "d1", "h1", "d", "h", "base_radius", "base_z",
    "q_limits", "tau_max", "theta_limit",
}


def params_from_dict(data: dict) -> MechanismParams:
    """Build parameters from a config mapping (angles in degrees).

    ``q_limits`` may be a single ``[min, max]`` pair shared by all legs or a
    list of four pairs. Keys left out fall back to the defaults.
    """
    if not isinstance(data, dict):
        raise ConfigError("mechanism config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = {}
    for key in ("L", "l", "d1", "h1", "d", "h", "base_radius", "base_z", "tau_max"):
        if key in data:
            kwargs[key] = _number(data[key], key)
    if "theta_limit" in data:
        kwargs["theta_limit"] = math.radians(_number(data["theta_limit"], "theta_limit"))
    if "q_limits" in data:
        kwargs["q_limits"] = _parse_q_limits(data["q_limits"])
    return MechanismParams(**kwargs)


def params_to_dict(params: MechanismParams) -> dict:
    """Inverse of :func:`params_from_dict`."""
    limits = [[math.degrees(lo), math.degrees(hi)] for lo, hi in params.q_limits]
    if all(pair == limits[0] for pair in limits):
        limits = limits[0]
    return {
        "L": params.L,
        "l": params.l,
        "d1": params.d1,
        "h1": params.h1,
        "d": params.d,
        "h": params.h,
        "base_radius": params.base_radius,
        "base_z": params.base_z,
        "q_limits": limits,
        "tau_max": params.tau_max,
        "theta_limit": math.degrees(params.theta_limit),
    }


def load_params(path: str | Path) -> MechanismParams:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read mechanism config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return params_from_dict(data)


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def _parse_q_limits(value) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError("q_limits must be [min, max] or four such pairs")
    if all(not isinstance(v, list) for v in value):
        if len(value) != 2:
            raise ConfigError("q_limits must be [min, max] or four such pairs")
        lo, hi = (math.radians(_number(v, "q_limits")) for v in value)
        return ((lo, hi),) * 4
    if len(value) != 4 or any(not isinstance(v, list) or len(v) != 2 for v in value):
        raise ConfigError("q_limits must be [min, max] or four such pairs")
    return tuple(
        (math.radians(_number(lo, "q_limits")), math.radians(_number(hi, "q_limits")))
        for lo, hi in value
    )


@dataclass(frozen=True)
class Pose:
    """Tactor coordinate: position of the plate center and twist about z."""

    x: float
    y: float
    z: float
    theta: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z, self.theta)):
            raise ValueError(f"pose components must be finite: {self}")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.theta])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Pose":
        x, y, z, theta = (float(v) for v in values)
        return cls(x, y, z, theta)


@dataclass(frozen=True)
class JointAngles:
    """Actuated angles of the four legs plus the IK root used for each."""

    q: tuple[float, float, float, float]
    branch: tuple[int, int, int, int] = field(default=(0, 0, 0, 0))

    def __post_init__(self) -> None:
        q = tuple(float(v) for v in self.q)
        if len(q) != 4:
            raise ValueError("exactly four joint angles are required")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "branch", tuple(int(b) for b in self.branch))

    def as_array(self) -> np.ndarray:
        return np.array(self.q)

    @classmethod
    def from_array(cls, values: Sequence[float], branch=(0, 0, 0, 0)) -> "JointAngles":
        return cls(tuple(float(v) for v in values), tuple(branch))


def _leg(leg_index: int) -> int:
    if leg_index not in (1, 2, 3, 4):
        raise ValueError(f"leg_index must be 1..4, got {leg_index!r}")
    return leg_index - 1


def db_vector(params: MechanismParams, leg_index: int, theta: float) -> np.ndarray:
    """Offset from the plate center D to the plate joint B of a leg."""
    sx, sy = _DB_SIGNS[_leg(leg_index)]
    s, c = math.sin(theta), math.cos(theta)
    half_h = 0.5 * params.h
    return np.array([
        -sy * half_h * s + sx * (params.d1 + 0.5 * params.d),
        sy * (half_h * c + params.h1),
        0.0,
    ])


def db_vectors(params: MechanismParams, theta) -> np.ndarray:
    """All four plate offsets, shape ``(4, 2) + shape(theta)`` (x, y only)."""
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    half_h = 0.5 * params.h
    a = params.d1 + 0.5 * params.d
    out = np.empty((4, 2) + theta.shape)
    for i, (sx, sy) in enumerate(_DB_SIGNS):
        out[i, 0] = -sy * half_h * s + sx * a
        out[i, 1] = sy * (half_h * c + params.h1)
    return out


def db_vectors_dtheta(params: MechanismParams, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    half_h = 0.5 * params.h
    out = np.empty((4, 2) + theta.shape)
    for i, (_, sy) in enumerate(_DB_SIGNS):
        out[i, 0] = -sy * half_h * c
        out[i, 1] = -sy * half_h * s
    return out


def base_point(params: MechanismParams, leg_index: int) -> np.ndarray:
    """Center of the actuated joint of a leg."""
    phi = params.phi[_leg(leg_index)]
    return np.array([
        params.base_radius * math.cos(phi),
        params.base_radius * math.sin(phi),
        params.base_z,
    ])


def base_points(params: MechanismParams) -> np.ndarray:
    return params.base_points


def upper_link_vector(params: MechanismParams, leg_index: int, q_i: float) -> np.ndarray:
    """Vector from the actuated joint P to the elbow A of a leg."""
    phi = params.phi[_leg(leg_index)]
    return np.array([
        params.L * math.cos(phi) * math.cos(q_i),
        params.L * math.sin(phi) * math.cos(q_i),
        -params.L * math.sin(q_i),
    ])


def link_vectors(params: MechanismParams, pose, q) -> np.ndarray:
    """Lower-link vectors A->B for all legs, shape (4, 3).

    ``pose`` is a :class:`Pose` or a length-4 array, ``q`` a
    :class:`JointAngles` or a length-4 array.
    """
    p = pose.as_array() if isinstance(pose, Pose) else np.asarray(pose, dtype=float)
    qa = q.as_array() if isinstance(q, JointAngles) else np.asarray(q, dtype=float)
    phi = np.asarray(params.phi)
    db = db_vectors(params, p[3])
    base = base_points(params)
    u = np.empty((4, 3))
    u[:, 0] = p[0] + db[:, 0] - base[:, 0] - params.L * np.cos(phi) * np.cos(qa)
    u[:, 1] = p[1] + db[:, 1] - base[:, 1] - params.L * np.sin(phi) * np.cos(qa)
    u[:, 2] = p[2] - base[:, 2] + params.L * np.sin(qa)
    return u


def constraint_residual(params: MechanismParams, pose, q) -> np.ndarray:
    """Loop-closure residual per leg: squared link length minus l**2 (mm^2)."""
    u = link_vectors(params, pose, q)
    return np.einsum("ij,ij->i", u, u) - params.l ** 2
