"""Independent reference computations used by the tests.

These rebuild the leg geometry from points and use scipy root finders, so
they share no code with the package solvers.
"""
import math

import numpy as np
from scipy.optimize import brentq, fsolve

from origami_haptics import MechanismParams, Pose
from origami_haptics.kinematics import ik_feasible_batch

SIGNS = ((1, 1), (-1, 1), (-1, -1), (1, -1))


def plate_joint(params, pose, i):
    x, y, z, th = pose
    sx, sy = SIGNS[i]
    return np.array([
        x - sy * (params.h / 2) * math.sin(th) + sx * (params.d1 + params.d / 2),
        y + sy * (params.h / 2 * math.cos(th) + params.h1),
        z,
    ])


def elbow(params, q, i):
    phi = params.phi[i]
    r = params.base_radius + params.L * math.cos(q)
    return np.array([r * math.cos(phi), r * math.sin(phi), params.base_z - params.L * math.sin(q)])


def residuals(params, pose, q):
    return np.array([
        np.sum((plate_joint(params, pose, i) - elbow(params, q[i], i)) ** 2) - params.l ** 2
        for i in range(4)
    ])


def leg_roots_bruteforce(params, pose, i, n=3601):
    f = lambda q: np.sum((plate_joint(params, pose, i) - elbow(params, q, i)) ** 2) - params.l ** 2
    grid = np.linspace(-math.pi, math.pi, n)
    vals = [f(g) for g in grid]
    return [
        brentq(f, grid[k], grid[k + 1], xtol=1e-15)
        for k in range(n - 1)
        if vals[k] * vals[k + 1] < 0
    ]


def fk_fsolve(params, q, guess):
    sol = fsolve(lambda p: residuals(params, p, q), guess, xtol=1e-12)
    return sol, residuals(params, sol, q)


def sample_feasible_poses(params: MechanismParams, rng, n: int) -> list[Pose]:
    """Uniform rejection sampling over a box that covers the workspace."""
    out = []
    while len(out) < n:
        m = 4 * n
        x = rng.uniform(-16, 16, m)
        y = rng.uniform(-14, 14, m)
        z = rng.uniform(params.base_z, params.base_z + 30, m)
        th = rng.uniform(-params.theta_limit, params.theta_limit, m)
        ok = ik_feasible_batch(params, x, y, z, th)
        out += [Pose(*v) for v in zip(x[ok], y[ok], z[ok], th[ok])]
    return out[:n]
