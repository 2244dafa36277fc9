"""Inverse kinematics, the two forward-kinematics solvers and the Jacobian.

Every leg obeys one closure equation,

    || p + DB_i(theta) - P_i - PA_i(q_i) ||^2 = l^2,

which is linear in ``sin q_i`` and ``cos q_i`` for a fixed pose (the inverse
problem) and becomes linear in ``(x, y, z)`` once leg 1 is subtracted from
the other three (the direct forward problem).

The mechanism is operated in a single assembly mode: every lower link
points upward from its elbow (``u_z > 0`` for the link vector ``u = B - A``).
Both solvers only return configurations in that mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import (
    DegenerateLinearSystem,
    Infeasible,
    JointLimit,
    NoConvergence,
    NoRealRoot,
    Singular,
    SingularConfiguration,
)
from .mechanism import (
    JointAngles,
    MechanismParams,
    Pose,
    base_points,
    constraint_residual,
    db_vectors,
    db_vectors_dtheta,
    link_vectors,
    wrap_angle,
)
from .mechanism import _DB_SIGNS

CLOSURE_TOL = 1e-9  # mm^2
NEWTON_MAX_ITER = 50
THETA_GRID_POINTS = 721
BISECTION_ITERS = 60
ROOT_TOL = 1e-12  # rad
SINGULAR_RATIO = 1e-12


@dataclass(frozen=True)
class IJKCoefficients:
    """Per-leg coefficients of ``I sin q + J cos q + K = 0`` (mm^2)."""

    I: np.ndarray
    J: np.ndarray
    K: np.ndarray

    @property
    def discriminants(self) -> np.ndarray:
        return self.I ** 2 + self.J ** 2 - self.K ** 2


@dataclass(frozen=True)
class IkSolution:
    joints: JointAngles
    feasible: bool
    discriminants: np.ndarray
    status: Literal["ok", "infeasible", "joint_limit"] = "ok"
    message: str = ""

    def raise_for_status(self) -> "IkSolution":
        if self.status == "infeasible":
            raise Infeasible(self.message)
        if self.status == "joint_limit":
            raise JointLimit(self.message)
        return self


@dataclass(frozen=True)
class FkResult:
    pose: Pose
    residual_norm: float
    method: Literal["iterative", "direct"]
    iterations: int = 0


def shifted_coordinates(params: MechanismParams, pose: Pose) -> np.ndarray:
    """Plate-joint positions relative to each actuated joint, shape (4, 3)."""
    db = db_vectors(params, pose.theta)
    base = base_points(params)
    out = np.empty((4, 3))
    out[:, 0] = pose.x + db[:, 0] - base[:, 0]
    out[:, 1] = pose.y + db[:, 1] - base[:, 1]
    out[:, 2] = pose.z - base[:, 2]
    return out


def ijk_coefficients(params: MechanismParams, shifted: np.ndarray) -> IJKCoefficients:
    """Coefficients of the per-leg closure equation in ``q``.

    ``shifted`` holds the (X, Y, Z) of each plate joint measured from the
    leg's actuated joint, as returned by :func:`shifted_coordinates`.
    """
    shifted = np.asarray(shifted, dtype=float)
    X, Y, Z = shifted[..., 0], shifted[..., 1], shifted[..., 2]
    phi = np.asarray(params.phi)
    L = params.L
    I = 2.0 * Z * L
    J = -2.0 * X * L * np.cos(phi) - 2.0 * Y * L * np.sin(phi)
    K = L ** 2 - params.l ** 2 + X ** 2 + Y ** 2 + Z ** 2
    return IJKCoefficients(I, J, K)


def leg_roots(I, J, K):
    """Both roots of ``I sin q + J cos q + K = 0`` per leg.

    Returns ``(q_plus, q_minus, disc)`` where ``q_plus`` is the root of the
    ``+sqrt`` branch. Roots are NaN where the discriminant is negative.
    Written with ``atan2`` and Vieta's product so that ``K = J`` (vanishing
    quadratic coefficient in the half-angle tangent) needs no special case.
    """
    I = np.asarray(I, dtype=float)
    J = np.asarray(J, dtype=float)
    K = np.asarray(K, dtype=float)
    disc = I * I + J * J - K * K
    root = np.sqrt(np.where(disc >= 0, disc, np.nan))
    sign = np.where(I >= 0, 1.0, -1.0)
    # numerator of the half-angle tangent that avoids cancellation
    big = -I - sign * root
    with np.errstate(invalid="ignore"):
        q_far = 2.0 * np.arctan2(big, K - J)
        q_near = 2.0 * np.arctan2(K + J, big)
        # both arguments vanish only when the far root sits at t = infinity
        degenerate = (np.abs(big) == 0) & (np.abs(K - J) == 0)
    q_far = np.where(degenerate, math.pi, q_far)
    q_far = _wrap(q_far)
    q_near = _wrap(q_near)
    # q_far uses -I - sign*root: the minus branch when I >= 0
    q_plus = np.where(sign > 0, q_near, q_far)
    q_minus = np.where(sign > 0, q_far, q_near)
    return q_plus, q_minus, disc


def _wrap(q):
    q = np.asarray(q, dtype=float)
    w = np.remainder(q + math.pi, 2 * math.pi) - math.pi
    return np.where(w == -math.pi, math.pi, w)


def _angle_diff(a, b):
    return np.abs(_wrap(np.asarray(a) - np.asarray(b)))


def inverse_kinematics(
    params: MechanismParams,
    pose: Pose,
    branch_hint: Optional[JointAngles] = None,
) -> IkSolution:
    """Closed-form inverse kinematics.

    A root qualifies when it lies inside the leg's joint limits and keeps
    the lower link pointing upward. Among qualifying roots the one with the
    smaller ``|q|`` wins (ties go to the minus branch); with ``branch_hint``
    the root nearest the hinted angle wins instead.
    """
    shifted = shifted_coordinates(params, pose)
    coeffs = ijk_coefficients(params, shifted)
    if np.any((coeffs.I == 0) & (coeffs.J == 0) & (coeffs.K == 0)):
        raise Singular(f"closure equation vanishes identically at {pose}")
    q_plus, q_minus, disc = leg_roots(coeffs.I, coeffs.J, coeffs.K)

    q = np.full(4, np.nan)
    branch = [0, 0, 0, 0]
    if np.any(disc < 0):
        legs = [str(i + 1) for i in np.flatnonzero(disc < 0)]
        return IkSolution(
            JointAngles(tuple(q), tuple(branch)), False, disc, "infeasible",
            f"pose {pose} is out of reach of leg(s) {', '.join(legs)}",
        )

    lo, hi = params.q_lower, params.q_upper
    Z = shifted[:, 2]
    bad_legs = []
    for i in range(4):
        candidates = []
        for b, qi in ((-1, q_minus[i]), (+1, q_plus[i])):
            in_limits = lo[i] <= qi <= hi[i]
            upward = Z[i] + params.L * math.sin(qi) > 0
            if in_limits and upward:
                candidates.append((b, qi))
        if not candidates:
            bad_legs.append(i)
            continue
        if branch_hint is not None:
            target = branch_hint.q[i]
            key = lambda c: (float(_angle_diff(c[1], target)), c[0])
        else:
            key = lambda c: (abs(c[1]), c[0])
        b, qi = min(candidates, key=key)
        q[i] = qi
        branch[i] = b

    joints = JointAngles(tuple(q), tuple(branch))
    if bad_legs:
        legs = ", ".join(str(i + 1) for i in bad_legs)
        return IkSolution(
            joints, False, disc, "joint_limit",
            f"no root of leg(s) {legs} respects the joint limits at {pose}",
        )
    return IkSolution(joints, True, disc)


def ik_feasible_batch(params: MechanismParams, x, y, z, theta) -> np.ndarray:
    """Vectorized feasibility test; agrees with :func:`inverse_kinematics`."""
    x, y, z, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z, theta)))
    db = db_vectors(params, theta)
    base = base_points(params)
    phi = np.asarray(params.phi)
    lo, hi = params.q_lower, params.q_upper
    ok = np.ones(x.shape, dtype=bool)
    for i in range(4):
        X = x + db[i, 0] - base[i, 0]
        Y = y + db[i, 1] - base[i, 1]
        Z = z - base[i, 2]
        I = 2.0 * Z * params.L
        J = -2.0 * params.L * (X * math.cos(phi[i]) + Y * math.sin(phi[i]))
        K = params.L ** 2 - params.l ** 2 + X * X + Y * Y + Z * Z
        q_plus, q_minus, disc = leg_roots(I, J, K)
        leg_ok = np.zeros(x.shape, dtype=bool)
        for qi in (q_plus, q_minus):
            with np.errstate(invalid="ignore"):
                leg_ok |= (qi >= lo[i]) & (qi <= hi[i]) & (Z + params.L * np.sin(qi) > 0)
        ok &= leg_ok & (disc >= 0)
    return ok


def inverse_kinematics_batch(params: MechanismParams, poses) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`inverse_kinematics` without a branch hint.

    ``poses`` has shape (n, 4). Returns joint angles (n, 4), NaN for legs
    without a valid root, and the per-pose feasibility mask.
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    x, y, z, theta = poses.T
    db = db_vectors(params, theta)
    base = base_points(params)
    lo, hi = params.q_lower, params.q_upper
    q = np.full((len(poses), 4), np.nan)
    for i in range(4):
        phi = params.phi[i]
        X = x + db[i, 0] - base[i, 0]
        Y = y + db[i, 1] - base[i, 1]
        Z = z - base[i, 2]
        I = 2.0 * Z * params.L
        J = -2.0 * params.L * (X * math.cos(phi) + Y * math.sin(phi))
        K = params.L ** 2 - params.l ** 2 + X * X + Y * Y + Z * Z
        q_plus, q_minus, disc = leg_roots(I, J, K)
        with np.errstate(invalid="ignore"):
            ok_p = (disc >= 0) & (q_plus >= lo[i]) & (q_plus <= hi[i]) & (Z + params.L * np.sin(q_plus) > 0)
            ok_m = (disc >= 0) & (q_minus >= lo[i]) & (q_minus <= hi[i]) & (Z + params.L * np.sin(q_minus) > 0)
            take_plus = ok_p & (~ok_m | (np.abs(q_plus) < np.abs(q_minus)))
        q[:, i] = np.where(take_plus, q_plus, np.where(ok_m, q_minus, np.nan))
    return q, ~np.any(np.isnan(q), axis=1)


def home_pose(params: MechanismParams) -> Pose:
    """Centered pose reached with all actuated angles at zero."""
    # with q = 0 every elbow sits at base height, (base_radius + L) out along phi
    u = link_vectors(params, Pose(0.0, 0.0, params.base_z, 0.0), np.zeros(4))
    horizontal = float(u[0, 0] ** 2 + u[0, 1] ** 2)
    if horizontal > params.l ** 2:
        raise Infeasible("no centered pose closes the legs with q = 0")
    return Pose(0.0, 0.0, params.base_z + math.sqrt(params.l ** 2 - horizontal), 0.0)


# Jacobian -------------------------------------------------------------------

def closure_derivatives(params: MechanismParams, pose, q):
    """Partial derivatives of the residuals: ``(dr/dp, dr/dq)``.

    ``dr/dp`` is 4x4 (rows legs, columns x, y, z, theta). ``dr/dq`` is
    diagonal and returned as a length-4 vector.
    """
    p = pose.as_array() if isinstance(pose, Pose) else np.asarray(pose, dtype=float)
    qa = q.as_array() if isinstance(q, JointAngles) else np.asarray(q, dtype=float)
    u = link_vectors(params, p, qa)
    ddb = db_vectors_dtheta(params, p[3])
    phi = np.asarray(params.phi)
    dr_dp = np.empty((4, 4))
    dr_dp[:, :3] = 2.0 * u
    dr_dp[:, 3] = 2.0 * (u[:, 0] * ddb[:, 0] + u[:, 1] * ddb[:, 1])
    # d(PA)/dq = L(-cos(phi) sin q, -sin(phi) sin q, -cos q)
    dpa = params.L * np.stack(
        [-np.cos(phi) * np.sin(qa), -np.sin(phi) * np.sin(qa), -np.cos(qa)], axis=1
    )
    dr_dq = -2.0 * np.einsum("ij,ij->i", u, dpa)
    return dr_dp, dr_dq


def _check_conditioning(dr_dp: np.ndarray) -> None:
    scale = float(np.prod(np.linalg.norm(dr_dp, axis=1)))
    det = float(np.linalg.det(dr_dp))
    if scale == 0.0 or abs(det) < SINGULAR_RATIO * scale:
        raise SingularConfiguration(
            f"closure Jacobian is singular (|det| = {abs(det):.3e}, scale {scale:.3e})"
        )


def jacobian(params: MechanismParams, pose, q) -> np.ndarray:
    """Task-space Jacobian ``J`` with ``pdot = J @ qdot``.

    Rows are (x mm, y mm, z mm, theta rad), columns the four actuated
    angles. Obtained by differentiating the four closure equations.
    """
    dr_dp, dr_dq = closure_derivatives(params, pose, q)
    _check_conditioning(dr_dp)
    return np.linalg.solve(dr_dp, -np.diag(dr_dq))


# forward kinematics ----------------------------------------------------------

def _closure_system(params: MechanismParams, p, q):
    """Residuals and ``dr/dp`` in plain float arithmetic.

    Same quantities as :func:`constraint_residual` and
    :func:`closure_derivatives`; written out per leg because the Newton
    loops call it at the control rate on 4x4 systems.
    """
    x, y, z, th = (float(v) for v in p)
    s, c = math.sin(th), math.cos(th)
    hh = 0.5 * params.h
    a = params.d1 + 0.5 * params.d
    L, l2 = params.L, params.l ** 2
    base = params.base_points
    r = [0.0] * 4
    jac = [[0.0] * 4 for _ in range(4)]
    for i, (sx, sy) in enumerate(_DB_SIGNS):
        phi = params.phi[i]
        cq = math.cos(q[i])
        ux = x - sy * hh * s + sx * a - base[i, 0] - L * math.cos(phi) * cq
        uy = y + sy * (hh * c + params.h1) - base[i, 1] - L * math.sin(phi) * cq
        uz = z - base[i, 2] + L * math.sin(q[i])
        r[i] = ux * ux + uy * uy + uz * uz - l2
        jac[i] = [2.0 * ux, 2.0 * uy, 2.0 * uz, 2.0 * (ux * (-sy * hh * c) + uy * (-sy * hh * s))]
    return np.array(r), np.array(jac)


def _newton_refine(params, p, q, max_iter=NEWTON_MAX_ITER, tol=CLOSURE_TOL):
    """Newton iterations on the closure residuals with ``q`` held fixed."""
    p = np.array(p, dtype=float)
    q = [float(v) for v in q]
    for it in range(max_iter + 1):
        r, dr_dp = _closure_system(params, p, q)
        if np.max(np.abs(r)) < tol:
            return p, r, it
        if it == max_iter:
            break
        try:
            step = np.linalg.solve(dr_dp, r)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        p = p - step
    raise NoConvergence(
        f"Newton refinement stalled after {max_iter} iterations "
        f"(max residual {np.max(np.abs(r)):.3e} mm^2)"
    )


def forward_kinematics_iterative(
    params: MechanismParams,
    q_prev: JointAngles,
    q_now: JointAngles,
    pose_prev: Pose,
    dt: float,
) -> FkResult:
    """One integration step of the Jacobian update followed by Newton polish."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    qp, qn = q_prev.as_array(), q_now.as_array()
    qdot = (qn - qp) / dt
    p = pose_prev.as_array()
    if np.any(qdot != 0):
        p = p + jacobian(params, pose_prev, qp) @ qdot * dt
    p, r, iterations = _newton_refine(params, p, qn)
    return FkResult(Pose.from_array(p), float(np.linalg.norm(r)), "iterative", iterations)


def predict_step(params: MechanismParams, q_prev, q_now, pose_prev: Pose) -> np.ndarray:
    """Jacobian-only pose prediction, before any Newton refinement."""
    qp = np.asarray(q_prev.as_array() if isinstance(q_prev, JointAngles) else q_prev)
    qn = np.asarray(q_now.as_array() if isinstance(q_now, JointAngles) else q_now)
    return pose_prev.as_array() + jacobian(params, pose_prev, qp) @ (qn - qp)


class _ThetaFunction:
    """Consistency function of the plate twist for fixed joint angles.

    For a given theta the three leg-difference equations are linear in
    (x, y, z). Their x-y part is solved as an affine function of z; leg 1
    then fixes z (two roots: upper and lower) and the one remaining scalar,
    ``n . (m_z z - b)`` with ``n`` the unit normal of the x and y columns,
    must vanish. ``|n| (n . m_z)`` is the Cramer determinant of the 3x3
    system, so wherever that determinant is nonzero a root is exactly a twist
    at which the Cramer solution satisfies leg 1. At symmetric joint angles
    the determinant is identically zero and this form still works.
    """

    def __init__(self, params: MechanismParams, q: np.ndarray):
        self.params = params
        phi = np.asarray(params.phi)
        base = base_points(params)
        self.sx = -base[:, 0] - params.L * np.cos(phi) * np.cos(q)
        self.sy = -base[:, 1] - params.L * np.sin(phi) * np.cos(q)
        self.sz = -base[:, 2] + params.L * np.sin(q)

    def solve(self, theta) -> dict:
        theta = np.asarray(theta, dtype=float)
        db = db_vectors(self.params, theta)
        cx = [db[i, 0] + self.sx[i] for i in range(4)]
        cy = [db[i, 1] + self.sy[i] for i in range(4)]
        cz = self.sz
        sq = [cx[i] * cx[i] + cy[i] * cy[i] + cz[i] * cz[i] for i in range(4)]
        mx = [2.0 * (cx[k] - cx[0]) for k in (1, 2, 3)]
        my = [2.0 * (cy[k] - cy[0]) for k in (1, 2, 3)]
        mz = [2.0 * (cz[k] - cz[0]) for k in (1, 2, 3)]
        b = [sq[0] - sq[k] for k in (1, 2, 3)]
        nx = mx[1] * my[2] - mx[2] * my[1]
        ny = mx[2] * my[0] - mx[0] * my[2]
        nz = mx[0] * my[1] - mx[1] * my[0]
        n_norm = np.sqrt(nx * nx + ny * ny + nz * nz)
        gxx = mx[0] * mx[0] + mx[1] * mx[1] + mx[2] * mx[2]
        gxy = mx[0] * my[0] + mx[1] * my[1] + mx[2] * my[2]
        gyy = my[0] * my[0] + my[1] * my[1] + my[2] * my[2]
        bx = mx[0] * b[0] + mx[1] * b[1] + mx[2] * b[2]
        by = my[0] * b[0] + my[1] * b[1] + my[2] * b[2]
        zx = -(mx[0] * mz[0] + mx[1] * mz[1] + mx[2] * mz[2])
        zy = -(my[0] * mz[0] + my[1] * mz[1] + my[2] * mz[2])
        with np.errstate(invalid="ignore", divide="ignore"):
            det = gxx * gyy - gxy * gxy
            x0 = (gyy * bx - gxy * by) / det
            y0 = (gxx * by - gxy * bx) / det
            x1 = (gyy * zx - gxy * zy) / det
            y1 = (gxx * zy - gxy * zx) / det
            ex = x0 + cx[0]
            ey = y0 + cy[0]
            qa = x1 * x1 + y1 * y1 + 1.0
            qb = 2.0 * (ex * x1 + ey * y1 + cz[0])
            qc = ex * ex + ey * ey + cz[0] * cz[0] - self.params.l ** 2
            disc = qb * qb - 4.0 * qa * qc
            root = np.sqrt(np.where(disc >= 0, disc, np.nan))
            z_up = (-qb + root) / (2.0 * qa)
            z_dn = (-qb - root) / (2.0 * qa)
            alpha = (nx * mz[0] + ny * mz[1] + nz * mz[2]) / n_norm
            beta = (nx * b[0] + ny * b[1] + nz * b[2]) / n_norm
        return {
            "x0": x0, "x1": x1, "y0": y0, "y1": y1, "z_up": z_up, "z_dn": z_dn,
            "f_up": alpha * z_up - beta, "f_dn": alpha * z_dn - beta,
            "n_norm": n_norm,
        }

    def value(self, theta, upper) -> np.ndarray:
        s = self.solve(theta)
        return np.where(upper, s["f_up"], s["f_dn"])

    def pose(self, theta: float, upper: bool) -> np.ndarray:
        s = self.solve(np.asarray(theta, dtype=float))
        z = float(s["z_up"] if upper else s["z_dn"])
        return np.array([
            float(s["x0"] + s["x1"] * z), float(s["y0"] + s["y1"] * z), z, float(theta),
        ])


def _sign_changes(grid: np.ndarray, values: np.ndarray):
    """Indices ``k`` with a root in ``[grid[k], grid[k+1]]``, plus touching minima."""
    finite = np.isfinite(values)
    both = finite[:-1] & finite[1:]
    with np.errstate(invalid="ignore"):
        change = both & ((values[:-1] * values[1:] < 0) | (values[:-1] == 0))
    brackets = list(np.flatnonzero(change))
    # a double root never changes sign; keep near-zero local minima of |F|
    absval = np.where(finite, np.abs(values), np.inf)
    scale = np.max(absval[finite]) if finite.any() else 0.0
    mid = absval[1:-1]
    touch = np.flatnonzero(
        (mid < 1e-3 * scale) & (mid <= absval[:-2]) & (mid <= absval[2:])
    ) + 1
    near = set(brackets) | {k + 1 for k in brackets}
    return brackets, [k for k in touch if k not in near]


def _hybrid_roots(func: _ThetaFunction, a, b, upper, max_iter=BISECTION_ITERS, tol=ROOT_TOL):
    """Safeguarded Newton-bisection on many brackets at once.

    Each iteration tries a Newton step (central-difference slope) from the
    current iterate and falls back to bisection whenever the step would
    leave the bracket. Stops once every step or bracket is below ``tol``.
    """
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    upper = np.asarray(upper, dtype=bool)
    if a.size == 0:
        return a
    fa = func.value(a, upper)
    x = 0.5 * (a + b)
    h = 1e-7
    done = np.zeros(a.shape, dtype=bool)
    for _ in range(max_iter):
        probe = func.value(np.concatenate([x, x + h, x - h]), np.tile(upper, 3))
        n = a.size
        fx, fp, fm = probe[:n], probe[n:2 * n], probe[2 * n:]
        exact = fx == 0
        left = np.sign(fx) == np.sign(fa)
        a = np.where(left & ~exact, x, a)
        fa = np.where(left & ~exact, fx, fa)
        b = np.where(left | exact, b, x)
        slope = (fp - fm) / (2 * h)
        with np.errstate(invalid="ignore", divide="ignore"):
            newton = x - fx / slope
        inside = np.isfinite(newton) & (newton > a) & (newton < b)
        x_new = np.where(inside, newton, 0.5 * (a + b))
        x_new = np.where(exact | done, x, x_new)
        done |= exact | (np.abs(x_new - x) < tol) | (b - a < tol)
        x = x_new
        if np.all(done):
            break
    return x


def forward_kinematics_candidates(params: MechanismParams, q: JointAngles) -> list[np.ndarray]:
    """Every consistent pose (x, y, z, theta) in the working assembly mode."""
    qa = q.as_array()
    func = _ThetaFunction(params, qa)
    grid = np.linspace(-math.pi, math.pi, THETA_GRID_POINTS)
    sampled = func.solve(grid)
    if np.all(sampled["n_norm"] < 1e-12 * (1.0 + params.L ** 2)):
        raise DegenerateLinearSystem("leg-difference equations are rank deficient at every theta")

    lo, hi, up, starts = [], [], [], []
    for upper, key in ((True, "f_up"), (False, "f_dn")):
        brackets, touch = _sign_changes(grid, sampled[key])
        for k in brackets:
            lo.append(grid[k]); hi.append(grid[k + 1]); up.append(upper)
        for k in touch:
            starts.append((grid[k], upper))
    thetas = list(zip(_hybrid_roots(func, lo, hi, up), up))
    thetas.extend(starts)

    found: list[np.ndarray] = []
    for theta, upper in thetas:
        p = func.pose(theta, upper)
        if not np.all(np.isfinite(p)):
            continue
        try:
            p, _, _ = _newton_refine(params, p, qa, max_iter=6)
        except NoConvergence:
            continue
        p[3] = wrap_angle(float(p[3]))
        if np.any(link_vectors(params, p, qa)[:, 2] <= 0):
            continue
        if any(np.allclose(p, other, atol=1e-7) for other in found):
            continue
        found.append(p)
    return found


def forward_kinematics_direct(
    params: MechanismParams,
    q: JointAngles,
    theta_hint: float = 0.0,
) -> FkResult:
    """Direct forward kinematics by root-finding on the plate twist.

    Among all consistent poses the one whose twist is nearest ``theta_hint``
    is returned; equal distances prefer the higher tactor.
    """
    qa = q.as_array()
    lo, hi = params.q_lower, params.q_upper
    if np.any(~np.isfinite(qa)):
        raise ValueError("joint angles must be finite")
    if np.any((qa < lo - 1e-12) | (qa > hi + 1e-12)):
        raise JointLimit(f"joint angles {np.round(np.degrees(qa), 6)} deg outside the limits")
    found = forward_kinematics_candidates(params, q)
    if not found:
        raise NoRealRoot(f"no pose closes all four legs at q = {np.round(np.degrees(qa), 6)} deg")
    best = min(found, key=lambda p: (round(float(_angle_diff(p[3], theta_hint)), 9), -p[2]))
    r = constraint_residual(params, best, qa)
    return FkResult(Pose.from_array(best), float(np.linalg.norm(r)), "direct")
