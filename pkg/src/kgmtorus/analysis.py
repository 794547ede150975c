"""Post-solve diagnostics: barycenter, peaks, maximum-value margin, profile residual, clustering."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import ZeroPositivePart, positive_power
from .grid import SystemParams, TorusGrid, torus_distance
from .ground_state import RadialProfile, bump_field


class DegenerateMean(ValueError):
    pass


@dataclass
class SolutionRecord:
    energy: float
    barycenter: tuple
    peak_point: tuple
    peak_value: float
    num_peaks: int
    maxval_margin: float
    profile_sup_error: float
    t_at_projection: float
    grad_norm: float
    nehari_residual: float = float("nan")
    min_value: float = float("nan")
    cluster_id: int = -1
    extra: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.num_peaks == 1 and self.maxval_margin > 0 and np.isfinite(self.profile_sup_error)


def barycenter(grid: TorusGrid, u: np.ndarray, p: float) -> tuple[float, float, float]:
    """Per-axis circular mean of the weight (u+)^p, in [0, L)."""
    w = positive_power(u, p)
    total = float(np.sum(w))
    if total == 0.0:
        raise ZeroPositivePart("u has no positive part")
    L = grid.length
    phase = np.exp(2j * np.pi * grid.coords / L)
    out = []
    for axis in range(3):
        other = tuple(a for a in range(3) if a != axis)
        marginal = np.sum(w, axis=other)
        z = np.sum(marginal * phase) / total
        if abs(z) < 1e-12:
            raise DegenerateMean(f"circular mean undefined along axis {axis}")
        c = float(np.angle(z) * L / (2 * np.pi) % L)
        out.append(0.0 if c >= L else c)  # -tiny % L rounds up to L
    return tuple(out)


def find_peaks(grid: TorusGrid, u: np.ndarray, rel_threshold: float = 0.5):
    """Strict 26-neighbour periodic local maxima above ``rel_threshold * max(u)``.

    Returns ``[(point, value), ...]`` sorted by value, largest first.
    """
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    is_max = np.ones(u.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                if di == dj == dk == 0:
                    continue
                is_max &= u > np.roll(u, (di, dj, dk), axis=(0, 1, 2))
    is_max &= u >= rel_threshold * u.max()
    idx = np.argwhere(is_max)
    vals = u[is_max]
    order = np.argsort(-vals, kind="stable")
    return [(tuple(float(c) for c in grid.node(idx[i])), float(vals[i])) for i in order]


def maxval_certificate(u: np.ndarray, params: SystemParams) -> float:
    """u(P)^(p-2) - c0 at the global maximum P; positive for genuine solutions."""
    top = float(u.max())
    return float(np.sign(top) * abs(top) ** (params.p - 2)) - params.c0


def profile_residual(grid: TorusGrid, u: np.ndarray, profile: RadialProfile,
                     params: SystemParams, peak) -> float:
    return float(np.max(np.abs(u - bump_field(peak, params, profile, grid))))


def concentration_mass(grid: TorusGrid, u: np.ndarray, params: SystemParams, center,
                       radius: float) -> float:
    """eps^-3 times the integral of (u+)^p over the geodesic ball B(center, radius)."""
    inside = grid.distance_field(center) < radius
    return grid.integrate(np.where(inside, positive_power(u, params.p), 0.0)) / params.eps**3


def analyze(grid: TorusGrid, point, params: SystemParams, profile: RadialProfile,
            grad_norm: float = float("nan"), rel_threshold: float = 0.5) -> SolutionRecord:
    u = point.u
    peaks = find_peaks(grid, u, rel_threshold)
    if peaks:
        peak_pt, peak_val = peaks[0]
    else:
        peak_pt = tuple(float(c) for c in grid.node(np.unravel_index(np.argmax(u), u.shape)))
        peak_val = float(u.max())
    try:
        bary = barycenter(grid, u, params.p)
    except (DegenerateMean, ZeroPositivePart):
        bary = (float("nan"),) * 3
    return SolutionRecord(
        energy=point.energy,
        barycenter=bary,
        peak_point=peak_pt,
        peak_value=peak_val,
        num_peaks=len(peaks),
        maxval_margin=maxval_certificate(u, params),
        profile_sup_error=profile_residual(grid, u, profile, params, peak_pt),
        t_at_projection=point.t,
        grad_norm=grad_norm,
        nehari_residual=point.nehari_residual,
        min_value=float(u.min()),
    )


def cluster_solutions(records, dist_tol: float, energy_tol: float, length: float):
    """Single-linkage clusters under barycenter torus distance and energy gap.

    Assigns dense ``cluster_id`` values in order of first appearance and
    returns the records.
    """
    n = len(records)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            a, b = records[i], records[j]
            if not (np.all(np.isfinite(a.barycenter)) and np.all(np.isfinite(b.barycenter))):
                continue
            close = torus_distance(a.barycenter, b.barycenter, length) <= dist_tol
            if close and abs(a.energy - b.energy) <= energy_tol:
                parent[find(j)] = find(i)
    labels: dict[int, int] = {}
    for i, rec in enumerate(records):
        root = find(i)
        rec.cluster_id = labels.setdefault(root, len(labels))
    return records
