"""Scripted demonstration scenes and finger trajectories.

Demo 1 presses on a grounded block, slides to create shear (1-4 s), lifts
off, presses again and twists back and forth (6-10 s). Demo 2 presses on a
free block that is then carried and rotated by a scripted second finger
until the grasp is released.
"""
from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .rendering import (
    MAX_NORMAL_FORCE,
    MAX_SHEAR_FORCE,
    MAX_TORQUE,
    FingerSample,
    Scene,
    SceneBox,
)
from .statics import Wrench

SAMPLE_RATE = 100.0  # Hz
PRESS_DEPTH = 1.6  # mm, 0.8 N at 500 N/m
HOVER = 2.0  # mm above the surface

DEMO_FILES = {
    1: ("demo1_scene.json", "demo1_trajectory.csv"),
    2: ("demo2_scene.json", "demo2_trajectory.csv"),
}


def _smooth(t, t0, t1):
    """C1 ramp from 0 at t0 to 1 at t1."""
    s = np.clip((np.asarray(t, dtype=float) - t0) / (t1 - t0), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _times(duration: float) -> np.ndarray:
    n = int(round(duration * SAMPLE_RATE))
    return np.arange(n + 1) / SAMPLE_RATE


def _samples(t, x, y, z, twist) -> list[FingerSample]:
    return [
        FingerSample(float(ti), (float(xi), float(yi), float(zi)), float(wi))
        for ti, xi, yi, zi, wi in zip(t, x, y, z, twist)
    ]


def demo1_scene() -> Scene:
    return Scene((SceneBox(center=(0.0, 0.0, -5.0), half_extents=(20.0, 20.0, 5.0)),))


def demo1_trajectory() -> list[FingerSample]:
    t = _times(10.0)
    press = _smooth(t, 0.5, 1.0) - _smooth(t, 4.2, 4.6) + _smooth(t, 5.2, 5.8)
    z = HOVER - (HOVER + PRESS_DEPTH) * press
    shear = (t >= 1.0) & (t <= 4.0)
    phase = 2.0 * math.pi * 0.5 * (t - 1.0)
    y = np.where(shear, 3.0 * np.sin(phase), 0.0)
    x = np.where(shear, 1.0 * np.sin(2.0 * phase), 0.0)
    twist = np.where(shear, math.radians(1.0) * np.sin(phase), 0.0)
    turning = (t >= 6.0) & (t <= 10.0)
    twist = twist + np.where(turning, math.radians(9.0) * np.sin(2.0 * math.pi * 0.5 * (t - 6.0)), 0.0)
    x = x + np.where(turning, 0.2 * np.sin(2.0 * math.pi * 0.25 * (t - 6.0)), 0.0)
    return _samples(t, x, y, z, twist)


def demo2_scene() -> Scene:
    table = SceneBox(center=(0.0, 0.0, -30.0), half_extents=(30.0, 30.0, 10.0))
    yaw = 8.0
    motion = (
        (0.0, 0.0, 0.0, -5.0, 0.0),
        (2.5, 0.0, 0.0, -5.0, 0.0),
        (4.0, 0.0, 1.0, -5.0, math.radians(yaw)),
    )
    block = SceneBox(
        center=(0.0, 0.0, -5.0), half_extents=(6.0, 6.0, 5.0), grounded=False, motion=motion
    )
    return Scene((table, block))


def demo2_trajectory() -> list[FingerSample]:
    t = _times(9.0)
    press = _smooth(t, 1.5, 2.2) - _smooth(t, 7.0, 7.4)
    z = HOVER - (HOVER + PRESS_DEPTH) * press
    y = 2.0 * _smooth(t, 2.5, 4.0)
    x = np.zeros_like(t)
    twist = np.zeros_like(t)
    return _samples(t, x, y, z, twist)


DEMOS = {1: (demo1_scene, demo1_trajectory), 2: (demo2_scene, demo2_trajectory)}


def demo_fixture_text(demo: int) -> tuple[str, str]:
    """Shipped (scene JSON, trajectory CSV) text of a demo."""
    scene_name, traj_name = DEMO_FILES[demo]
    root = resources.files("origami_haptics") / "data"
    return (root / scene_name).read_text(), (root / traj_name).read_text()


def _normalized(trace: list[tuple[float, Wrench]], t0: float, t1: float) -> dict[str, float]:
    rows = np.array([w.as_array() for t, w in trace if t0 <= t <= t1])
    if rows.size == 0:
        return {"normal": 0.0, "shear": 0.0, "torsion": 0.0}
    rms = lambda v: float(np.sqrt(np.mean(v ** 2)))
    return {
        "normal": rms(rows[:, 2]) / MAX_NORMAL_FORCE,
        "shear": rms(np.hypot(rows[:, 0], rows[:, 1])) / MAX_SHEAR_FORCE,
        "torsion": rms(rows[:, 3]) / MAX_TORQUE,
    }


def dominant_component(trace: list[tuple[float, Wrench]], t0: float, t1: float) -> str:
    """Component with the largest RMS over [t0, t1], each scaled by its device limit."""
    levels = _normalized(trace, t0, t1)
    return max(levels, key=levels.get)
