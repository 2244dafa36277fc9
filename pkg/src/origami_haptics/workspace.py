"""Reachable and dexterous workspace sweeps on a regular grid.

A cell is reachable when the inverse kinematics of its center at zero
twist is feasible. For reachable cells the twist is then stepped outward in
both directions until a step fails or the plate twist limit is hit.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import Infeasible, NoSuchRegion
from .kinematics import home_pose, ik_feasible_batch
from .mechanism import MechanismParams

DEFAULT_RESOLUTION = 0.5  # mm
DEFAULT_ROTATION_STEP = math.radians(1.0)
GRID_HEADER = ("x_mm", "y_mm", "z_mm", "reachable", "rot_pos_deg", "rot_neg_deg")

# Published workspace figures: the text values and a differing caption.
REFERENCE_EXTENTS_TEXT_MM = (13.0, 12.0, 9.0)
REFERENCE_EXTENTS_CAPTION_MM = (24.0, 26.0, 18.0)
REFERENCE_THETA_RANGE_DEG = 30.0
REFERENCE_DEXTEROUS_BOX_MM = (8.0, 10.0, 8.0)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box between two cell centers (mm)."""

    lower: tuple[float, float, float]
    upper: tuple[float, float, float]

    @property
    def edges(self) -> tuple[float, float, float]:
        return tuple(u - l for l, u in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        ex, ey, ez = self.edges
        return ex * ey * ez

    def contains(self, point) -> bool:
        return all(l - 1e-9 <= p <= u + 1e-9 for l, p, u in zip(self.lower, point, self.upper))


@dataclass
class WorkspaceGrid:
    """Regular grid of cells. Arrays are indexed ``[iz, iy, ix]``.

    Rotation fields are in radians: ``max_rotation_pos`` is the largest
    positive twist reached and ``max_rotation_neg`` the magnitude of the
    largest negative one; both are zero on unreachable cells.
    """

    resolution: float
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    reachable: np.ndarray
    max_rotation_pos: np.ndarray
    max_rotation_neg: np.ndarray

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.reachable.shape

    def centers(self) -> np.ndarray:
        """Cell centers in (z, y, x) lexicographic order, shape (N, 3) as (x, y, z)."""
        Z, Y, X = np.meshgrid(self.zs, self.ys, self.xs, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def cells(self):
        """Iterate cells as dictionaries, in (z, y, x) lexicographic order."""
        centers = self.centers()
        reach = self.reachable.ravel()
        pos = self.max_rotation_pos.ravel()
        neg = self.max_rotation_neg.ravel()
        for k in range(len(reach)):
            yield {
                "center": centers[k],
                "reachable": bool(reach[k]),
                "max_rotation_pos": float(pos[k]),
                "max_rotation_neg": float(neg[k]),
            }

    @property
    def total_rotation(self) -> np.ndarray:
        return self.max_rotation_pos + self.max_rotation_neg

    def reachable_count(self) -> int:
        return int(self.reachable.sum())

    def volume_cm3(self) -> float:
        return self.reachable_count() * self.resolution ** 3 / 1000.0

    def extents(self) -> Optional[dict]:
        """Half-spans of the reachable cell centers per axis and the twist range."""
        if not self.reachable.any():
            return None
        iz, iy, ix = np.nonzero(self.reachable)
        out = {}
        for name, axis, idx in (("x", self.xs, ix), ("y", self.ys, iy), ("z", self.zs, iz)):
            lo, hi = float(axis[idx.min()]), float(axis[idx.max()])
            out[name] = {"min": lo, "max": hi, "half_span": 0.5 * (hi - lo), "center": 0.5 * (hi + lo)}
        out["theta_pos_deg"] = math.degrees(float(self.max_rotation_pos.max()))
        out["theta_neg_deg"] = math.degrees(float(self.max_rotation_neg.max()))
        return out

    def reachable_bounding_box(self) -> Optional[Box]:
        if not self.reachable.any():
            return None
        iz, iy, ix = np.nonzero(self.reachable)
        return Box(
            (float(self.xs[ix.min()]), float(self.ys[iy.min()]), float(self.zs[iz.min()])),
            (float(self.xs[ix.max()]), float(self.ys[iy.max()]), float(self.zs[iz.max()])),
        )

    def to_csv(self) -> str:
        """Grid export, rows in (z, y, x) lexicographic order.

        The twist capability columns are in degrees; positive and negative
        twist are both reported as non-negative magnitudes.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(GRID_HEADER)
        centers = self.centers()
        reach = self.reachable.ravel()
        pos = np.degrees(self.max_rotation_pos.ravel())
        neg = np.degrees(self.max_rotation_neg.ravel())
        for (x, y, z), r, rp, rn in zip(centers, reach, pos, neg):
            writer.writerow((f"{x:.4f}", f"{y:.4f}", f"{z:.4f}", int(r), f"{rp:.4f}", f"{rn:.4f}"))
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def _axis(center: float, half_cells: int, resolution: float) -> np.ndarray:
    return center + resolution * np.arange(-half_cells, half_cells + 1)


def _scan_rotation(params, x, y, z, step, sign) -> np.ndarray:
    """Largest twist magnitude reachable by stepping from zero, per point."""
    best = np.zeros(x.shape)
    alive = np.ones(x.shape, dtype=bool)
    n_steps = int(math.floor(params.theta_limit / step + 1e-9))
    for k in range(1, n_steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        ok = ik_feasible_batch(params, x[idx], y[idx], z[idx], sign * k * step)
        alive[idx[~ok]] = False
        best[idx[ok]] = k * step
    return best


def _evaluate_chunk(params, x, y, z, step):
    reach = ik_feasible_batch(params, x, y, z, 0.0)
    pos = np.zeros(x.shape)
    neg = np.zeros(x.shape)
    idx = np.flatnonzero(reach)
    if idx.size:
        pos[idx] = _scan_rotation(params, x[idx], y[idx], z[idx], step, +1.0)
        neg[idx] = _scan_rotation(params, x[idx], y[idx], z[idx], step, -1.0)
    return reach, pos, neg


def _seed_center(params: MechanismParams) -> tuple[float, float, float]:
    try:
        home = home_pose(params)
        return (0.0, 0.0, home.z)
    except Infeasible:
        return (0.0, 0.0, params.base_z + 0.5 * params.l)


def sweep_workspace(
    params: MechanismParams,
    resolution: float = DEFAULT_RESOLUTION,
    rotation_step: float = DEFAULT_ROTATION_STEP,
    initial_half_width: float = 8.0,
    workers: int = 1,
    max_half_width: float = 200.0,
) -> WorkspaceGrid:
    """Sweep the grid, growing it until its outer shell holds no reachable cell.

    Cells are evaluated in independent chunks (optionally on a thread pool);
    results are placed by cell index so the output never depends on the
    order in which chunks finish.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if not rotation_step > 0:
        raise ValueError("rotation_step must be positive")
    cx, cy, cz = _seed_center(params)
    half = max(1, int(math.ceil(initial_half_width / resolution)))
    while True:
        xs = _axis(cx, half, resolution)
        ys = _axis(cy, half, resolution)
        zs = _axis(cz, half, resolution)
        grid = _evaluate_grid(params, xs, ys, zs, resolution, rotation_step, workers)
        r = grid.reachable
        shell = (
            r[0].any() or r[-1].any() or r[:, 0].any() or r[:, -1].any()
            or r[:, :, 0].any() or r[:, :, -1].any()
        )
        if not shell or half * resolution >= max_half_width:
            return grid
        half = int(math.ceil(half * 1.5))


def _evaluate_grid(params, xs, ys, zs, resolution, rotation_step, workers) -> WorkspaceGrid:
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    x, y, z = X.ravel(), Y.ravel(), Z.ravel()
    n = x.size
    chunk = 50_000
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    reach = np.zeros(n, dtype=bool)
    pos = np.zeros(n)
    neg = np.zeros(n)

    def run(bound):
        a, b = bound
        return bound, _evaluate_chunk(params, x[a:b], y[a:b], z[a:b], rotation_step)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, bounds))
    else:
        results = [run(b) for b in bounds]
    for (a, b), (r, p, q) in results:
        reach[a:b] = r
        pos[a:b] = p
        neg[a:b] = q
    shape = Z.shape
    return WorkspaceGrid(
        resolution, xs, ys, zs,
        reach.reshape(shape), pos.reshape(shape), neg.reshape(shape),
    )


def _longest_run(row: np.ndarray) -> tuple[int, int]:
    """Length and start of the longest run of True values."""
    best_len, best_start, cur, start = 0, 0, 0, 0
    for k, v in enumerate(row):
        if v:
            if cur == 0:
                start = k
            cur += 1
            if cur > best_len:
                best_len, best_start = cur, start
        else:
            cur = 0
    return best_len, best_start


def max_volume_box(mask: np.ndarray) -> Optional[tuple[slice, slice, slice]]:
    """Largest-volume all-True axis-aligned sub-box of a 3D mask ``[iz, iy, ix]``.

    Volume counts cell-center spans, ``(nz-1)(ny-1)(nx-1)``, with the cell
    count as tie-breaker so degenerate (flat) boxes still compare sensibly.
    Exhaustive over x and y ranges; the z range is the longest run left
    after intersecting the chosen x-y columns.
    """
    if not mask.any():
        return None
    iz, iy, ix = np.nonzero(mask)
    z0, y0, x0 = iz.min(), iy.min(), ix.min()
    sub = mask[z0:iz.max() + 1, y0:iy.max() + 1, x0:ix.max() + 1]
    nz, ny, nx = sub.shape
    best_key = (-1, -1)
    best = None
    for xa in range(nx):
        acc_x = np.ones((nz, ny), dtype=bool)
        for xb in range(xa, nx):
            acc_x &= sub[:, :, xb]
            if not acc_x.any():
                break
            wx = xb - xa
            for ya in range(ny):
                acc_y = np.ones(nz, dtype=bool)
                for yb in range(ya, ny):
                    acc_y &= acc_x[:, yb]
                    if not acc_y.any():
                        break
                    run, start = _longest_run(acc_y)
                    wy = yb - ya
                    key = (wx * wy * (run - 1), (wx + 1) * (wy + 1) * run)
                    if key > best_key:
                        best_key = key
                        best = (
                            slice(z0 + start, z0 + start + run),
                            slice(y0 + ya, y0 + yb + 1),
                            slice(x0 + xa, x0 + xb + 1),
                        )
    return best


def dexterous_cube(grid: WorkspaceGrid, total_rotation_min: float) -> Box:
    """Largest box in which every cell reaches ``total_rotation_min`` of twist.

    A non-positive threshold is vacuous and yields the bounding box of the
    reachable set.
    """
    if total_rotation_min <= 0:
        box = grid.reachable_bounding_box()
        if box is None:
            raise NoSuchRegion("the workspace is empty")
        return box
    qualifies = grid.reachable & (grid.total_rotation >= total_rotation_min - 1e-9)
    found = max_volume_box(qualifies)
    if found is None:
        raise NoSuchRegion(
            f"no cell reaches {math.degrees(total_rotation_min):.1f} deg of total twist"
        )
    zs, ys, xs = found
    return Box(
        (float(grid.xs[xs.start]), float(grid.ys[ys.start]), float(grid.zs[zs.start])),
        (float(grid.xs[xs.stop - 1]), float(grid.ys[ys.stop - 1]), float(grid.zs[zs.stop - 1])),
    )


def workspace_summary(grid: WorkspaceGrid, total_rotation_min: float) -> dict:
    """Summary record with the reachable extents, dexterous box and volume."""
    ext = grid.extents()
    summary = {
        "resolution_mm": grid.resolution,
        "reachable_cells": grid.reachable_count(),
        "volume_cm3": grid.volume_cm3(),
        "extents_mm": None,
        "theta_range_deg": None,
        "dexterous_rotation_min_deg": math.degrees(total_rotation_min),
        "dexterous_box_mm": None,
    }
    if ext is None:
        zero = {"min": 0.0, "max": 0.0, "half_span": 0.0, "center": 0.0}
        summary["extents_mm"] = {k: dict(zero) for k in ("x", "y", "z")}
        summary["theta_range_deg"] = {"pos": 0.0, "neg": 0.0}
        summary["dexterous_box_mm"] = {"lower": None, "upper": None, "edges": [0.0, 0.0, 0.0], "volume_cm3": 0.0}
    else:
        summary["extents_mm"] = {k: ext[k] for k in ("x", "y", "z")}
        summary["theta_range_deg"] = {"pos": ext["theta_pos_deg"], "neg": ext["theta_neg_deg"]}
        try:
            box = dexterous_cube(grid, total_rotation_min)
        except NoSuchRegion:
            box = None
        if box is not None:
            summary["dexterous_box_mm"] = {
                "lower": list(box.lower),
                "upper": list(box.upper),
                "edges": list(box.edges),
                "volume_cm3": box.volume / 1000.0,
            }
    return summary


def reference_comparison(summary: dict) -> dict:
    """Side-by-side of the simulated extents against both published sets."""
    ext = summary.get("extents_mm") or {}
    sim = [ext[a]["half_span"] if a in ext else 0.0 for a in ("x", "y", "z")]
    box = summary.get("dexterous_box_mm")
    return {
        "simulated_half_span_mm": sim,
        "reference_text_half_span_mm": list(REFERENCE_EXTENTS_TEXT_MM),
        "reference_caption_half_span_mm": list(REFERENCE_EXTENTS_CAPTION_MM),
        "simulated_theta_deg": summary.get("theta_range_deg"),
        "reference_theta_deg": REFERENCE_THETA_RANGE_DEG,
        "simulated_dexterous_edges_mm": box["edges"] if box else None,
        "reference_dexterous_edges_mm": list(REFERENCE_DEXTEROUS_BOX_MM),
    }
