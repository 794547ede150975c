"""Nehari-constrained preconditioned descent and multi-start orchestration."""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import (
    NehariPoint,
    dual_norm,
    gradient,
    phi_seed,
    precondition,
    project_nehari,
)
from .grid import SystemParams, TorusGrid, lp_norm_eps
from .ground_state import RadialProfile

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    COLLAPSED = "Collapsed"
    FAILED = "Failed"


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 500
    grad_tol: float = 1e-8
    step0: float = 1.0
    backtrack: float = 0.5
    seed_id: int = 0
    armijo_c: float = 1e-4
    psi_tol: float = 1e-11

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass
class SolveResult:
    point: NehariPoint | None
    iterations: int
    grad_norm_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)
    status: Status = Status.MAX_ITERS
    seed_id: int = 0
    rho0: float = float("nan")
    error: str | None = None

    @property
    def grad_norm(self) -> float:
        return self.grad_norm_history[-1] if self.grad_norm_history else float("nan")


def _renormalize(grid, u, params):
    return u / lp_norm_eps(grid, u, params.p, params.eps, positive_part=True)


def minimize(seed: NehariPoint, params: SystemParams, opts: SolveOptions, grid: TorusGrid,
             rho0: float | None = None) -> SolveResult:
    """Armijo descent along the H_eps-preconditioned gradient, re-projected every step.

    Stops when the H_eps norm of the free preconditioned gradient drops below
    ``opts.grad_tol``.  ``rho0`` is the Nehari floor; by default half the
    seed's squared norm.
    """
    if rho0 is None:
        rho0 = 0.5 * seed.norm_sq
    point = seed
    result = SolveResult(point=point, iterations=0, seed_id=opts.seed_id, rho0=rho0)
    slack = 1e-12
    for it in range(opts.max_iters + 1):
        res = gradient(grid, point.u, point.psi, params)
        direction = precondition(grid, res, params)
        gnorm = dual_norm(grid, res, direction, params)
        result.grad_norm_history.append(gnorm)
        result.energy_history.append(point.energy)
        result.point, result.iterations = point, it
        if gnorm <= opts.grad_tol:
            result.status = Status.CONVERGED
            return result
        if it == opts.max_iters:
            break
        step = opts.step0
        e0 = point.energy
        while True:
            cand = _renormalize(grid, point.u - step * direction, params)
            new = project_nehari(grid, cand, params, opts.psi_tol)
            if new.energy <= e0 - opts.armijo_c * step * gnorm**2 + slack * (1 + abs(e0)):
                break
            step *= opts.backtrack
            if step < 1e-10:
                result.error = "line search failed"
                return result
        point = new
        log.info("%d %.15g %.6e %.12g %.6g", it + 1, point.energy, gnorm, point.t, step)
        if point.norm_sq < 0.5 * rho0:
            result.point, result.iterations = point, it + 1
            result.status = Status.COLLAPSED
            return result
    return result


def _solve_one(args):
    xi, params, profile, grid, opts, rho0 = args
    try:
        seed = phi_seed(xi, params, profile, grid, opts.psi_tol)
        return minimize(seed, params, opts, grid, rho0)
    except Exception as exc:  # recorded per seed; the batch goes on
        return SolveResult(point=None, iterations=0, status=Status.FAILED, seed_id=opts.seed_id,
                           error=f"{type(exc).__name__}: {exc}")


def calibrate_rho0(xis, params: SystemParams, profile: RadialProfile, grid: TorusGrid) -> float:
    """Half the smallest squared norm over the projected seeds."""
    norms = []
    for xi in xis:
        try:
            norms.append(phi_seed(xi, params, profile, grid).norm_sq)
        except Exception:
            continue
    return 0.5 * min(norms) if norms else 0.0


def multi_start(xis, params: SystemParams, opts: SolveOptions, grid: TorusGrid,
                profile: RadialProfile, workers: int = 1, rho0: float | None = None) -> list[SolveResult]:
    """Minimize from the projected bump at each ``xi``; output order follows ``xis``."""
    xis = [tuple(float(c) for c in xi) for xi in xis]
    if not xis:
        return []
    if rho0 is None:
        rho0 = calibrate_rho0(xis, params, profile, grid)
    jobs = [
        (xi, params, profile, grid, _with_seed(opts, opts.seed_id + i), rho0)
        for i, xi in enumerate(xis)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_solve_one, jobs))
    return [_solve_one(job) for job in jobs]


def _with_seed(opts: SolveOptions, seed_id: int) -> SolveOptions:
    return replace(opts, seed_id=seed_id)


def lattice_points(m: int, length: float) -> list[tuple[float, float, float]]:
    """m^3 regular seed points ``(i, j, k) L / m``."""
    if m < 1:
        raise ValueError("lattice size must be >= 1")
    c = np.arange(m) * length / m
    return [(float(x), float(y), float(z)) for x in c for y in c for z in c]
