"""Reduced energy functional, its first variation and the Nehari projection.

KGM:  I(u) = 1/2 ||u||^2 + (omega^2 q / 2 eps^3) int u^2 psi - (1/p) |u+|_p^p
SM:   I(u) = 1/2 ||u||^2 + (omega / 4 eps^3) int u^2 psi - (1/p) |u+|_p^p

with ``||.||`` the eps-weighted H^1 norm using ``c0``.  The SM coupling
coefficient is the one whose first variation gives the ``omega u psi`` term:
``int u^2 V_u(h) = 2 int psi u h`` doubles the explicit part.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    System,
    SystemParams,
    TorusGrid,
    h_eps_norm_sq,
    laplacian,
    lp_norm_eps,
    solve_helmholtz,
)
from .ground_state import RadialProfile, bump_field
from .psi import DEFAULT_TOL, solve_psi, solve_V


class ZeroPositivePart(ValueError):
    pass


class NoRoot(RuntimeError):
    pass


@dataclass
class NehariPoint:
    u: np.ndarray
    psi: np.ndarray
    t: float
    energy: float
    nehari_residual: float
    h_second: float
    norm_sq: float

    def residual_ok(self, rtol: float = 1e-8) -> bool:
        return abs(self.nehari_residual) <= rtol * max(1.0, self.norm_sq)


def positive_power(u: np.ndarray, e: float) -> np.ndarray:
    return np.maximum(u, 0.0) ** e


def coupling_integrals(grid: TorusGrid, u: np.ndarray, psi: np.ndarray, params: SystemParams):
    """``(q/eps^3) int u^2 psi`` and ``(q^2/eps^3) int u^2 psi^2``."""
    e3 = params.eps**3
    u2 = u * u
    return params.q * grid.inner(u2, psi) / e3, params.q**2 * grid.inner(u2, psi * psi) / e3


def energy(grid: TorusGrid, u: np.ndarray, psi: np.ndarray, params: SystemParams) -> float:
    g_eps, _ = coupling_integrals(grid, u, psi, params)
    if params.system is System.KGM:
        coupling = 0.5 * params.omega**2 * g_eps
    else:
        coupling = 0.25 * params.omega * g_eps / params.q
    power = grid.integrate(positive_power(u, params.p)) / params.eps**3
    return 0.5 * h_eps_norm_sq(grid, u, params) + coupling - power / params.p


def nehari_energy_forms(grid: TorusGrid, u: np.ndarray, psi: np.ndarray, params: SystemParams):
    """The two equivalent KGM energy expressions valid on the Nehari manifold."""
    p, w2 = params.p, params.omega**2
    s1, s2 = coupling_integrals(grid, u, psi, params)
    norm = h_eps_norm_sq(grid, u, params)
    power = grid.integrate(positive_power(u, p)) / params.eps**3
    first = (0.5 - 1 / p) * norm + (0.5 - 2 / p) * w2 * s1 + w2 * s2 / p
    second = (0.5 - 1 / p) * power + 0.5 * w2 * s2 - 0.5 * w2 * s1
    return first, second


def gradient(grid: TorusGrid, u: np.ndarray, psi: np.ndarray, params: SystemParams) -> np.ndarray:
    """Strong-form residual R with I'(u)[phi] = eps^-3 int R phi."""
    eps, p = params.eps, params.p
    lin = -eps**2 * laplacian(grid, u)
    if params.system is System.KGM:
        return lin + params.a * u - positive_power(u, p - 1) - params.omega**2 * (1 - params.q * psi) ** 2 * u
    return lin + u + params.omega * psi * u - positive_power(u, p - 1)


def precondition(grid: TorusGrid, residual: np.ndarray, params: SystemParams) -> np.ndarray:
    """H_eps Riesz representative: solve (eps^2 (-Lap) + c0) g = R."""
    return solve_helmholtz(grid, residual, params.eps**2, params.c0)


def dual_norm(grid: TorusGrid, residual: np.ndarray, direction: np.ndarray, params: SystemParams) -> float:
    """H_eps norm of the preconditioned gradient (= dual norm of I'(u))."""
    return float(np.sqrt(max(grid.inner(direction, residual), 0.0) / params.eps**3))


def nehari_residual(grid: TorusGrid, u: np.ndarray, psi: np.ndarray, params: SystemParams) -> float:
    """N(u) = I'(u)[u], assembled from norms."""
    e3 = params.eps**3
    norm = h_eps_norm_sq(grid, u, params)
    power = grid.integrate(positive_power(u, params.p)) / e3
    if params.system is System.KGM:
        q = params.q
        extra = q * params.omega**2 * grid.inner((2 - q * psi) * psi, u * u) / e3
    else:
        extra = params.omega * grid.inner(psi, u * u) / e3
    return norm - power + extra


class _Fiber:
    """g(t) = t^(p-2) |u+|_p^p - ||u||^2 - C(t) whose positive root puts t u on N."""

    def __init__(self, grid, u, params, tol):
        self.grid, self.u, self.params, self.tol = grid, u, params, tol
        self.norm = h_eps_norm_sq(grid, u, params)
        self.power = grid.integrate(positive_power(u, params.p)) / params.eps**3
        self.u2 = u * u
        self._psi_cache: dict[float, np.ndarray] = {}
        self._last_psi = None
        if params.system is System.SM:
            self._psi1 = solve_psi(grid, u, params)
            self._b = params.omega * grid.inner(self._psi1, self.u2) / params.eps**3

    def psi(self, t):
        if t not in self._psi_cache:
            if self.params.system is System.SM:
                self._psi_cache[t] = t * t * self._psi1
            else:
                x0 = None
                if self._last_psi is not None:
                    s, ps = self._last_psi
                    x0 = ps * (t / s) ** 2
                self._psi_cache[t] = solve_psi(self.grid, t * self.u, self.params, self.tol, x0=x0)
                self._last_psi = (t, self._psi_cache[t])
        return self._psi_cache[t]

    def coupling(self, t):
        par = self.params
        if par.system is System.SM:
            return self._b * t * t
        q = par.q
        ps = self.psi(t)
        return q * par.omega**2 * self.grid.inner((2 - q * ps) * ps, self.u2) / par.eps**3

    def coupling_slope(self, t):
        par = self.params
        if par.system is System.SM:
            return 2 * self._b * t
        q = par.q
        ps = self.psi(t)
        v = solve_V(self.grid, t * self.u, self.u, ps, par, self.tol)
        return 2 * q * par.omega**2 * self.grid.inner((1 - q * ps) * v, self.u2) / par.eps**3

    def g(self, t):
        if self.params.omega == 0:
            return t ** (self.params.p - 2) * self.power - self.norm
        return t ** (self.params.p - 2) * self.power - self.norm - self.coupling(t)

    def dg(self, t):
        p = self.params.p
        d = (p - 2) * t ** (p - 3) * self.power
        if self.params.omega == 0:
            return d
        return d - self.coupling_slope(t)


def project_nehari(grid: TorusGrid, u: np.ndarray, params: SystemParams,
                   tol: float = DEFAULT_TOL, t_rtol: float = 1e-12) -> NehariPoint:
    """Scale ``u`` onto the Nehari manifold along its ray.

    Works for any ``u`` with a nonzero positive part; the returned ``t`` is the
    factor applied to the given ``u``.
    """
    if not np.any(u > 0):
        raise ZeroPositivePart("u has no positive part")
    fib = _Fiber(grid, u, params, tol)
    p = params.p
    t = (fib.norm / fib.power) ** (1.0 / (p - 2))
    if params.omega != 0:
        # g(t0) = -C(t0) <= 0, so t0 is a lower bracket
        lo, hi = t, None
        g_lo = fib.g(lo)
        if g_lo > 0:
            lo = 1e-3 * t
            g_lo = fib.g(lo)
        step = 2 * t
        for _ in range(80):
            if fib.g(step) > 0:
                hi = step
                break
            lo = step
            step *= 2
        if hi is None:
            raise NoRoot(f"fiber derivative has no sign change up to t={step:.3g}")
        t = _safeguarded_newton(fib, lo, hi, t_rtol)
    psi = fib.psi(t) if params.omega != 0 else solve_psi(grid, t * u, params, tol)
    v = t * u
    h_second = -fib.g(t) - t * fib.dg(t)
    return NehariPoint(
        u=v, psi=psi, t=float(t), energy=energy(grid, v, psi, params),
        nehari_residual=nehari_residual(grid, v, psi, params), h_second=float(h_second),
        norm_sq=h_eps_norm_sq(grid, v, params),
    )


def _safeguarded_newton(fib: _Fiber, lo: float, hi: float, rtol: float, maxiter: int = 100) -> float:
    t = 0.5 * (lo + hi)
    for _ in range(maxiter):
        gt = fib.g(t)
        if gt > 0:
            hi = t
        else:
            lo = t
        if hi - lo <= rtol * hi:
            return 0.5 * (lo + hi)
        slope = fib.dg(t)
        nxt = t - gt / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - t) <= rtol * t:
            return nxt
        t = nxt
    raise NoRoot("projection root-finder did not converge")


def phi_seed(xi, params: SystemParams, profile: RadialProfile, grid: TorusGrid,
             tol: float = DEFAULT_TOL) -> NehariPoint:
    """Projected bump t_eps(W) W centred at ``xi``; ``t`` is reported relative to W."""
    w = bump_field(xi, params, profile, grid)
    scale = lp_norm_eps(grid, w, params.p, params.eps, positive_part=True)
    point = project_nehari(grid, w / scale, params, tol)
    point.t /= scale
    return point
