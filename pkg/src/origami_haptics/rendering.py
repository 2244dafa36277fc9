"""Soft-finger haptic rendering against box-shaped objects.

The finger is tracked as a point plus a twist angle about the pad normal.
Each box keeps a god-object proxy that never enters the box; the spring
between proxy and finger is the rendered force. Tangential proxy motion is
gated by a static/dynamic friction cone and the twist is resisted by a
torsional spring anchored at contact onset (no torsional slip).

Units: positions mm, stiffness N/m (so a 1 mm offset at 500 N/m is 0.5 N),
torques N*mm, angles radians. World z is the pad normal of the device.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError, NonMonotoneTime
from .statics import Wrench

MM_PER_M = 1000.0

# Device output limits.
MAX_NORMAL_FORCE = 2.0  # N
MAX_SHEAR_FORCE = 1.5  # N
MAX_TORQUE = 5.0  # N*mm
DEFAULT_K_THETA = math.degrees(0.5)  # 0.5 N*mm/deg expressed per radian

TRAJECTORY_HEADER = ("t_s", "x_mm", "y_mm", "z_mm", "twist_deg")
TRACE_HEADER = ("t_s", "fx_N", "fy_N", "fz_N", "tz_Nmm")


@dataclass(frozen=True)
class FingerSample:
    t: float
    position: tuple[float, float, float]
    twist: float = 0.0

    @property
    def pos(self) -> np.ndarray:
        return np.asarray(self.position, dtype=float)


@dataclass(frozen=True)
class SceneBox:
    """Box with optional scripted motion (keyframes of t, x, y, z, yaw)."""

    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    stiffness: float = 500.0
    mu_static: float = 2.0
    mu_dynamic: float = 1.8
    grounded: bool = True
    motion: tuple[tuple[float, float, float, float, float], ...] = ()

    def __post_init__(self) -> None:
        if not self.stiffness > 0:
            raise ConfigError("box stiffness must be positive")
        if not (self.mu_static >= self.mu_dynamic >= 0):
            raise ConfigError("friction must satisfy mu_static >= mu_dynamic >= 0")
        if any(not h > 0 for h in self.half_extents):
            raise ConfigError("box half extents must be positive")
        if self.grounded and self.motion:
            raise ConfigError("a grounded box cannot carry a motion script")
        times = [k[0] for k in self.motion]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("box motion keyframes must be strictly increasing in time")

    @property
    def k_n_per_mm(self) -> float:
        return self.stiffness / MM_PER_M

    def pose_at(self, t: float) -> tuple[np.ndarray, float]:
        """Center and yaw at time ``t`` (held constant outside the keyframes)."""
        if not self.motion:
            return np.asarray(self.center, dtype=float), 0.0
        keys = np.asarray(self.motion, dtype=float)
        values = [np.interp(t, keys[:, 0], keys[:, j]) for j in range(1, 5)]
        return np.array(values[:3]), float(values[3])

    def to_local(self, t: float, point) -> np.ndarray:
        center, yaw = self.pose_at(t)
        return _rot_z(-yaw) @ (np.asarray(point, dtype=float) - center)

    def to_world(self, t: float, local, direction: bool = False) -> np.ndarray:
        center, yaw = self.pose_at(t)
        v = _rot_z(yaw) @ np.asarray(local, dtype=float)
        return v if direction else v + center

    def signed_distance(self, t: float, point) -> float:
        """Distance outside the box (negative inside)."""
        local = np.abs(self.to_local(t, point)) - np.asarray(self.half_extents)
        outside = np.linalg.norm(np.maximum(local, 0.0))
        inside = min(float(np.max(local)), 0.0)
        return float(outside + inside)


@dataclass(frozen=True)
class Scene:
    boxes: tuple[SceneBox, ...]
    workspace_lower: tuple[float, float, float] = (-3.5, -4.5, -3.5)
    workspace_upper: tuple[float, float, float] = (3.5, 4.5, 3.5)

    def __post_init__(self) -> None:
        if any(not lo < hi for lo, hi in zip(self.workspace_lower, self.workspace_upper)):
            raise ConfigError("workspace_limits min must be below max on every axis")

    def clamp(self, position) -> np.ndarray:
        return np.clip(np.asarray(position, dtype=float), self.workspace_lower, self.workspace_upper)


def _tup(v) -> tuple[float, float, float]:
    return tuple(float(c) for c in v)


def _rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class ContactState:
    """Proxy state for one box.

    ``local_proxy`` and ``twist_anchor`` live in the box frame so a pinned
    proxy rides along with a scripted box. ``face`` is ``(axis, sign)`` of
    the constraining face.
    """

    proxy_position: tuple[float, float, float]
    proxy_twist: float = 0.0
    in_contact: bool = False
    contact_normal: tuple[float, float, float] = (0.0, 0.0, 0.0)
    box_index: int = -1
    face: tuple[int, int] = (2, 1)
    local_proxy: tuple[float, float, float] = (0.0, 0.0, 0.0)
    twist_anchor: float = 0.0
    slipping: bool = False

    @classmethod
    def free(cls, finger: FingerSample) -> "ContactState":
        return cls(_tup(finger.pos), float(finger.twist))


def _free(finger: FingerSample) -> ContactState:
    return ContactState.free(finger)


def _blocked(others: Sequence[SceneBox], t: float, point) -> bool:
    return any(o.signed_distance(t, point) < -1e-12 for o in others)


def update_box_proxy(
    box: SceneBox,
    index: int,
    state: ContactState,
    finger: FingerSample,
    others: Sequence[SceneBox] = (),
) -> ContactState:
    """God-object update against a single box.

    ``others`` are the remaining scene boxes; the proxy never moves to a
    point inside any of them.
    """
    t = finger.t
    local = box.to_local(t, finger.pos)
    half = np.asarray(box.half_extents, dtype=float)
    inside = bool(np.all(np.abs(local) < half))
    if not inside:
        return _free(finger)

    def goal_on(axis, sign):
        g = np.clip(local, -half, half)
        g[axis] = sign * half[axis]
        return g

    if state.in_contact and state.box_index == index:
        axis, sign = state.face
        prev_proxy = np.asarray(state.local_proxy, dtype=float)
        slipping = state.slipping
        twist_anchor = state.twist_anchor
    else:
        # onset: the face of least penetration whose goal is not inside another box
        faces = sorted(
            ((half[a] - s * local[a], a, s) for a in range(3) for s in (1, -1)),
            key=lambda f: (f[0], f[1], -f[2]),
        )
        for _, axis, sign in faces:
            if not _blocked(others, t, box.to_world(t, goal_on(axis, sign))):
                break
        else:
            return _free(finger)
        prev_proxy = None
        slipping = False
        _, yaw = box.pose_at(t)
        twist_anchor = float(finger.twist - yaw)

    depth = half[axis] - sign * local[axis]
    if depth <= 0:
        return _free(finger)

    goal = goal_on(axis, sign)
    if prev_proxy is None:
        proxy = goal
    else:
        proxy = prev_proxy.copy()
        proxy[axis] = sign * half[axis]
        k = box.k_n_per_mm
        fn = k * depth
        offset = goal - proxy
        offset[axis] = 0.0
        ft = k * float(np.linalg.norm(offset))
        mu = box.mu_dynamic if slipping else box.mu_static
        if ft <= mu * fn:
            slipping = False
        else:
            # drag the proxy until the spring sits on the dynamic cone
            reach = box.mu_dynamic * fn / k
            proxy = goal - offset / np.linalg.norm(offset) * reach
            slipping = True
        tangential = [a for a in range(3) if a != axis]
        proxy[tangential] = np.clip(proxy[tangential], -half[tangential], half[tangential])
        if _blocked(others, t, box.to_world(t, proxy)):
            # another box is in the way: the proxy stays where it was
            proxy = prev_proxy
            if _blocked(others, t, box.to_world(t, proxy)):
                return _free(finger)

    normal_local = np.zeros(3)
    normal_local[axis] = float(sign)
    _, yaw = box.pose_at(finger.t)
    return ContactState(
        proxy_position=_tup(box.to_world(finger.t, proxy)),
        proxy_twist=float(twist_anchor + yaw),
        in_contact=True,
        contact_normal=_tup(box.to_world(finger.t, normal_local, direction=True)),
        box_index=index,
        face=(axis, sign),
        local_proxy=_tup(proxy),
        twist_anchor=twist_anchor,
        slipping=slipping,
    )


def update_proxy(scene: Scene, state: ContactState, finger: FingerSample) -> ContactState:
    """Single-proxy god-object step over the whole scene.

    An ongoing contact stays with its box; otherwise the box with the
    deepest penetration captures the proxy.
    """
    if state.in_contact and 0 <= state.box_index < len(scene.boxes):
        box = scene.boxes[state.box_index]
        others = scene.boxes[:state.box_index] + scene.boxes[state.box_index + 1:]
        nxt = update_box_proxy(box, state.box_index, state, finger, others)
        if nxt.in_contact:
            return nxt
    best, best_depth = _free(finger), 0.0
    for i, box in enumerate(scene.boxes):
        depth = -box.signed_distance(finger.t, finger.pos)
        if depth > best_depth:
            cand = update_box_proxy(box, i, _free(finger), finger, scene.boxes[:i] + scene.boxes[i + 1:])
            if cand.in_contact:
                best, best_depth = cand, depth
    return best


def contact_force(scene: Scene, state: ContactState, finger: FingerSample) -> Wrench:
    """Spring force on the finger, tangential part capped by the friction cone."""
    if not state.in_contact:
        return Wrench()
    box = scene.boxes[state.box_index]
    k = box.k_n_per_mm
    n = np.asarray(state.contact_normal, dtype=float)
    spring = k * (np.asarray(state.proxy_position, dtype=float) - finger.pos)
    f_n = float(spring @ n)
    f_t = spring - f_n * n
    mu = box.mu_dynamic if state.slipping else box.mu_static
    cap = mu * abs(f_n)
    mag = float(np.linalg.norm(f_t))
    if mag > cap:
        f_t = f_t * (cap / mag)
    f = f_n * n + f_t
    return Wrench(float(f[0]), float(f[1]), float(f[2]), 0.0)


def torsion_update(
    state: ContactState, finger: FingerSample, k_theta: float = DEFAULT_K_THETA, fn: float = 1.0
) -> float:
    """Torsional spring torque (N*mm) about the pad normal; no slip."""
    if not state.in_contact or fn <= 0:
        return 0.0
    return k_theta * (finger.twist - state.proxy_twist)


def clamp_to_device(w: Wrench) -> Wrench:
    return Wrench(
        float(np.clip(w.fx, -MAX_SHEAR_FORCE, MAX_SHEAR_FORCE)),
        float(np.clip(w.fy, -MAX_SHEAR_FORCE, MAX_SHEAR_FORCE)),
        float(np.clip(w.fz, -MAX_NORMAL_FORCE, MAX_NORMAL_FORCE)),
        float(np.clip(w.tz, -MAX_TORQUE, MAX_TORQUE)),
    )


@dataclass
class RenderStep:
    t: float
    finger: FingerSample
    states: tuple[ContactState, ...]
    raw: Wrench
    wrench: Wrench
    normal_force: float
    tangential_force: float
    friction_limit: float
    pinned: bool


class Renderer:
    """Stateful rendering stream: one instance per trajectory."""

    def __init__(self, scene: Scene, k_theta: float = DEFAULT_K_THETA):
        self.scene = scene
        self.k_theta = k_theta
        self.states: Optional[list[ContactState]] = None
        self.last_t: Optional[float] = None

    def step(self, sample: FingerSample) -> RenderStep:
        if self.last_t is not None and not sample.t > self.last_t:
            raise NonMonotoneTime(f"sample time {sample.t} does not follow {self.last_t}")
        self.last_t = sample.t
        finger = replace(sample, position=_tup(self.scene.clamp(sample.position)))
        if self.states is None:
            self.states = [ContactState.free(finger) for _ in self.scene.boxes]
        total = np.zeros(4)
        fn_total = ft_total = limit_total = 0.0
        pinned = True
        for i, box in enumerate(self.scene.boxes):
            others = self.scene.boxes[:i] + self.scene.boxes[i + 1:]
            st = update_box_proxy(box, i, self.states[i], finger, others)
            self.states[i] = st
            if not st.in_contact:
                continue
            f = contact_force(self.scene, st, finger).as_array()
            n = np.asarray(st.contact_normal)
            fn = float(f[:3] @ n)
            torque = torsion_update(st, finger, self.k_theta, fn)
            total += f + np.array([0.0, 0.0, 0.0, torque])
            fn_total += fn
            ft_total += float(np.linalg.norm(f[:3] - fn * n))
            limit_total += (box.mu_dynamic if st.slipping else box.mu_static) * fn
            pinned &= not st.slipping
        raw = Wrench.from_array(total)
        return RenderStep(
            sample.t, finger, tuple(self.states), raw, clamp_to_device(raw),
            fn_total, ft_total, limit_total, pinned,
        )


def render_steps(scene: Scene, trajectory: Sequence[FingerSample], k_theta=DEFAULT_K_THETA):
    if not trajectory:
        raise ConfigError("trajectory is empty")
    renderer = Renderer(scene, k_theta)
    return [renderer.step(s) for s in trajectory]


def render_trajectory(
    scene: Scene, trajectory: Sequence[FingerSample], k_theta: float = DEFAULT_K_THETA
) -> list[tuple[float, Wrench]]:
    """Device-clamped wrench for every finger sample."""
    return [(s.t, s.wrench) for s in render_steps(scene, trajectory, k_theta)]


# I/O -----------------------------------------------------------------------

def _vec3(value, what: str) -> tuple[float, float, float]:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"{what} must be a list of three numbers")
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what} must be a list of three numbers") from exc


_BOX_KEYS = {"center", "half_extents", "stiffness", "mu_static", "mu_dynamic", "grounded", "motion"}


def scene_from_dict(data: dict) -> Scene:
    """Scene from its JSON form; motion keyframes give yaw in degrees."""
    if not isinstance(data, dict) or "boxes" not in data:
        raise ConfigError("scene must be an object with a 'boxes' list")
    unknown = set(data) - {"boxes", "workspace_limits"}
    if unknown:
        raise ConfigError(f"unknown scene keys: {', '.join(sorted(unknown))}")
    boxes = []
    for i, b in enumerate(data["boxes"]):
        if not isinstance(b, dict):
            raise ConfigError(f"box {i} must be an object")
        extra = set(b) - _BOX_KEYS
        if extra:
            raise ConfigError(f"box {i}: unknown keys {', '.join(sorted(extra))}")
        motion = tuple(
            (float(k[0]), float(k[1]), float(k[2]), float(k[3]), math.radians(float(k[4])))
            for k in b.get("motion", [])
        )
        boxes.append(SceneBox(
            center=_vec3(b.get("center"), f"box {i} center"),
            half_extents=_vec3(b.get("half_extents"), f"box {i} half_extents"),
            stiffness=float(b.get("stiffness", 500.0)),
            mu_static=float(b.get("mu_static", 2.0)),
            mu_dynamic=float(b.get("mu_dynamic", 1.8)),
            grounded=bool(b.get("grounded", True)),
            motion=motion,
        ))
    limits = data.get("workspace_limits")
    if limits is None:
        return Scene(tuple(boxes))
    return Scene(
        tuple(boxes),
        _vec3(limits.get("min"), "workspace_limits.min"),
        _vec3(limits.get("max"), "workspace_limits.max"),
    )


def scene_to_dict(scene: Scene) -> dict:
    boxes = []
    for b in scene.boxes:
        entry = {
            "center": list(b.center),
            "half_extents": list(b.half_extents),
            "stiffness": b.stiffness,
            "mu_static": b.mu_static,
            "mu_dynamic": b.mu_dynamic,
            "grounded": b.grounded,
        }
        if b.motion:
            entry["motion"] = [[t, x, y, z, round(math.degrees(yaw), 9)] for t, x, y, z, yaw in b.motion]
        boxes.append(entry)
    return {
        "boxes": boxes,
        "workspace_limits": {"min": list(scene.workspace_lower), "max": list(scene.workspace_upper)},
    }


def load_scene(path: str | Path) -> Scene:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return scene_from_dict(data)


def parse_trajectory(text: str) -> list[FingerSample]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("trajectory CSV is empty") from None
    if tuple(h.strip() for h in header) != TRAJECTORY_HEADER:
        raise ConfigError(f"trajectory header must be {','.join(TRAJECTORY_HEADER)}")
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            t, x, y, z, tw = (float(c) for c in row)
        except ValueError as exc:
            raise ConfigError(f"trajectory line {lineno}: {exc}") from exc
        samples.append(FingerSample(t, (x, y, z), math.radians(tw)))
    if not samples:
        raise ConfigError("trajectory has no samples")
    check_monotone(samples)
    return samples


def check_monotone(samples: Iterable[FingerSample]) -> None:
    prev = None
    for s in samples:
        if prev is not None and not s.t > prev:
            raise NonMonotoneTime(f"time {s.t} does not follow {prev}")
        prev = s.t


def load_trajectory(path: str | Path) -> list[FingerSample]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {path}: {exc}") from exc
    return parse_trajectory(text)


def trajectory_csv(samples: Sequence[FingerSample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for s in samples:
        x, y, z = s.position
        writer.writerow((f"{s.t:.4f}", f"{x:.4f}", f"{y:.4f}", f"{z:.4f}", f"{math.degrees(s.twist):.4f}"))
    return buf.getvalue()


def trace_csv(trace: Sequence[tuple[float, Wrench]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t, w in trace:
        writer.writerow((f"{t:.4f}", f"{w.fx:.6f}", f"{w.fy:.6f}", f"{w.fz:.6f}", f"{w.tz:.6f}"))
    return buf.getvalue()
