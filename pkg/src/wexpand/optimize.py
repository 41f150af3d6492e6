"""Recover the beam-splitter reflectivities of the expansion gate.

The search maximizes post-selection success probability over
``(eta_h, eta_v)`` subject to a hard constraint that the kept branch is the
target W state. For ``n_from >= 2`` the unit-fidelity set is a single point,
so the fidelity threshold is tightened geometrically while an 11x11 lattice
is re-centered on the incumbent with a halving window.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidN, NoFeasiblePoint
from .optics import Reflectivity
from .protocols import build_w, expand_once

STAGE1_TOLERANCE = 1e-4
STAGE1_CAP = 0.1
CONVERGED_TOLERANCE = 1e-9
# The constrained argmax sits on the tolerance boundary, so its offset from
# the unit-fidelity point scales with sqrt(tolerance).
FINAL_TOLERANCE = 1e-24
REFINE_POINTS = 11


@dataclass(frozen=True)
class OptimizationResult:
    eta_h: float
    eta_v: float
    probability: float
    fidelity: float
    iterations: int
    converged: bool


def evaluate(r: Reflectivity, n_from: int = 2) -> tuple[float, float]:
    """(success probability, fidelity with W_{n_from+1}) of one expansion of W_{n_from}."""
    if not isinstance(r, Reflectivity):
        r = Reflectivity(*r)
    if n_from < 1:
        raise InvalidN(f"n_from must be >= 1, got {n_from}")
    rep = expand_once(build_w(n_from), n_from - 1, r)
    return rep.success_probability, rep.fidelity_with_target


def solve_closed_form(n_from: int = 2) -> OptimizationResult:
    """Match the three post-selected coefficients exactly.

    Equal HV and VH coefficients force ``eta_h + eta_v = 1``; equating the
    HH coefficient ``1 - 2 eta_h`` with them gives
    ``5 eta_h^2 - 5 eta_h + 1 = 0``. The root below 1/2 keeps all three
    coefficients positive.
    """
    eta_h = (5 - math.sqrt(5)) / 10
    eta_v = 1 - eta_h
    prob, fid = evaluate(Reflectivity(eta_h, eta_v), n_from)
    return OptimizationResult(eta_h, eta_v, prob, fid, 0, fid >= 1 - CONVERGED_TOLERANCE)


def quadratic_residual(eta_h: float) -> float:
    return 5 * eta_h**2 - 5 * eta_h + 1


def _evaluate_points(points: list[tuple[float, float]], n_from: int, workers: int) -> list[tuple[float, float, float]]:
    if workers > 1 and len(points) > 1000:
        chunk = max(1, len(points) // (4 * workers))
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_evaluate_pair, points, [n_from] * len(points), chunksize=chunk))
    return [_evaluate_pair(p, n_from) for p in points]


def _evaluate_pair(point: tuple[float, float], n_from: int) -> tuple[float, float, float]:
    """(probability, fidelity, infidelity); infidelity is the cancellation-free deficit."""
    rep = expand_once(build_w(n_from), n_from - 1, Reflectivity(*point))
    return rep.success_probability, rep.fidelity_with_target, rep.infidelity


def _select(points, values, tolerance):
    """Best feasible point by (probability, -eta_h); None if nothing is feasible."""
    best = None
    for (h, v), (p, f, loss) in zip(points, values):
        if loss > tolerance:
            continue
        key = (p, -h)
        if best is None or key > best[0]:
            best = (key, (h, v), (p, f, loss))
    return best


def _closest_to_feasible(points, values):
    return min(zip(points, values), key=lambda pv: (pv[1][2], -pv[1][0], pv[0][0]))


def optimize_numeric(
    n_from: int = 2,
    grid: int = 201,
    refine_rounds: int = 40,
    *,
    final_tolerance: float = FINAL_TOLERANCE,
    workers: int = 1,
) -> OptimizationResult:
    """Lattice search then windowed refinement; fully deterministic.

    Stage 1 scans a ``grid x grid`` lattice over [0, 1]^2 and keeps the most
    probable point with infidelity at most 1e-4. Coarse lattices may have no
    such point; the bound is then relaxed by factors of four, only as far as
    needed. Each refinement round lays an 11x11 lattice
    over a window centered on the incumbent, halves the window and divides
    the tolerance by four, down to ``final_tolerance``.
    """
    if n_from < 1:
        raise InvalidN(f"n_from must be >= 1, got {n_from}")
    if grid < 11:
        raise ValueError(f"grid must be >= 11, got {grid}")

    axis = np.linspace(0.0, 1.0, grid)
    spacing = 1.0 / (grid - 1)
    points = [(float(h), float(v)) for h in axis for v in axis]
    values = _evaluate_points(points, n_from, workers)
    tolerance = STAGE1_TOLERANCE
    best = _select(points, values, tolerance)
    while best is None and tolerance * 4 <= STAGE1_CAP:
        tolerance *= 4
        best = _select(points, values, tolerance)
    if best is None:
        raise NoFeasiblePoint(f"no lattice point reaches fidelity 1 - {tolerance:g}")
    _, center, (prob, fid, loss) = best

    half_width = 2 * spacing
    iterations = 0
    for _ in range(refine_rounds):
        iterations += 1
        tolerance = max(final_tolerance, tolerance / 4)
        hs = np.clip(np.linspace(center[0] - half_width, center[0] + half_width, REFINE_POINTS), 0.0, 1.0)
        vs = np.clip(np.linspace(center[1] - half_width, center[1] + half_width, REFINE_POINTS), 0.0, 1.0)
        points = sorted({(float(h), float(v)) for h in hs for v in vs} | {center})
        values = _evaluate_points(points, n_from, workers)
        best = _select(points, values, tolerance)
        if best is not None:
            _, center, (prob, fid, loss) = best
        else:
            center, (prob, fid, loss) = _closest_to_feasible(points, values)
        half_width /= 2

    converged = loss <= CONVERGED_TOLERANCE and 0 <= center[0] <= 1 and 0 <= center[1] <= 1
    return OptimizationResult(center[0], center[1], prob, fid, iterations, converged)
