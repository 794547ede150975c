"""Radial ground state of -Lap U + c0 U = U^(p-1) in R^3 and the cut-off bumps.

The profile is found by shooting on U(0).  A trajectory started too high
overshoots and crosses zero; one started too low turns back up (U' > 0)
without reaching zero.  The ground state separates the two behaviours.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import PchipInterpolator

from .grid import SystemParams, TorusGrid


class BracketNotFound(RuntimeError):
    pass


class ResolutionError(RuntimeError):
    pass


class ProfileRangeError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialProfile:
    r_samples: np.ndarray
    u_samples: np.ndarray
    du_samples: np.ndarray
    c0: float
    p: float
    u0: float
    decay_rate: float
    tail_amplitude: float
    r_shoot: float  # radius up to which u_samples come from the ODE

    @property
    def r_max(self) -> float:
        return float(self.r_samples[-1])

    @property
    def kappa(self) -> float:
        return np.sqrt(self.c0)

    def _integrals(self):
        r, u, du = self.r_samples, self.u_samples, self.du_samples
        w = 4 * np.pi * r**2
        grad = simpson(w * du**2, x=r)
        mass = simpson(w * u**2, x=r)
        power = simpson(w * u**self.p, x=r)
        return float(grad), float(mass), float(power)

    @property
    def norm_sq(self) -> float:
        """Integral of |grad U|^2 + c0 U^2 over R^3."""
        grad, mass, _ = self._integrals()
        return grad + self.c0 * mass

    def lt_integral(self, t: float) -> float:
        r, u = self.r_samples, self.u_samples
        return float(simpson(4 * np.pi * r**2 * u**t, x=r))

    @property
    def power_integral(self) -> float:
        return self.lt_integral(self.p)

    @property
    def nehari_defect(self) -> float:
        """Relative violation of the Nehari identity ||U||^2 = int U^p."""
        grad, mass, power = self._integrals()
        return abs(grad + self.c0 * mass - power) / power

    @property
    def m_inf(self) -> float:
        return m_infinity(self)

    def __call__(self, s) -> np.ndarray:
        """Evaluate U at radii ``s`` (any shape), with the exponential tail past r_max."""
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        inside = s <= self.r_shoot
        out[inside] = self._interp(s[inside])
        far = ~inside
        if np.any(far):
            sf = s[far]
            out[far] = self.tail_amplitude * np.exp(-self.kappa * sf) / sf
        if not np.all(np.isfinite(out)):
            raise ProfileRangeError("profile evaluation produced non-finite values")
        return out

    @property
    def _interp(self):
        interp = getattr(self, "_pchip", None)
        if interp is None:
            m = self.r_samples <= self.r_shoot
            interp = PchipInterpolator(self.r_samples[m], self.u_samples[m])
            object.__setattr__(self, "_pchip", interp)
        return interp

    def mass_radius(self, fraction: float = 0.95) -> float:
        """Radius of the ball holding ``fraction`` of the integral of U^p."""
        r, u = self.r_samples, self.u_samples
        f = 4 * np.pi * r**2 * u**self.p
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(r))])
        return float(np.interp(fraction * cum[-1], cum, r))

    def dump(self, path) -> None:
        """Text dump: columns ``r U(r) U'(r)``; '#' header lines carry the metadata."""
        meta = {
            "c0": self.c0, "p": self.p, "m_inf": self.m_inf, "u0": self.u0,
            "decay_rate": self.decay_rate, "tail_amplitude": self.tail_amplitude, "r_shoot": self.r_shoot,
        }
        header = "\n".join(f"{k} = {float(v)!r}" for k, v in meta.items()) + "\nr U(r) dU/dr"
        np.savetxt(path, np.column_stack([self.r_samples, self.u_samples, self.du_samples]),
                   header=header, fmt="%.17g")


def load_profile(path) -> RadialProfile:
    meta = {}
    for line in Path(path).read_text().splitlines():
        if not line.startswith("#"):
            break
        key, _, val = line[1:].partition("=")
        if val:
            meta[key.strip()] = float(val)
    cols = np.loadtxt(path, ndmin=2)
    r, u = cols[:, 0], cols[:, 1]
    if cols.shape[1] < 3 or "r_shoot" not in meta:
        return _assemble(r, u, meta["c0"], meta["p"])
    return RadialProfile(
        r_samples=r, u_samples=u, du_samples=cols[:, 2], c0=meta["c0"], p=meta["p"], u0=meta["u0"],
        decay_rate=meta["decay_rate"], tail_amplitude=meta["tail_amplitude"], r_shoot=meta["r_shoot"],
    )


def _rhs(c0, p):
    def f(r, y):
        u, v = y
        # U'' = c0 U - U^(p-1) - 2 U'/r; the singular term is handled by starting at r > 0
        return [v, c0 * u - np.abs(u) ** (p - 2) * u - 2.0 * v / r]

    return f


def _start(u0, c0, p, r_start):
    curv = (c0 * u0 - u0 ** (p - 1)) / 6.0
    return [u0 + curv * r_start**2, 2 * curv * r_start]


def _crosses_zero(r, y):
    return y[0]


_crosses_zero.terminal = True
_crosses_zero.direction = -1


def _turns_up(r, y):
    return y[1]


_turns_up.terminal = True
_turns_up.direction = 1


def _shoot(u0, c0, p, r_max, rtol, dense=False):
    """Classify a trajectory: +1 overshoots (crosses zero), -1 turns back up, 0 neither."""
    r_start = 1e-6 / np.sqrt(c0)
    sol = solve_ivp(
        _rhs(c0, p), (r_start, r_max), _start(u0, c0, p, r_start), method="RK45",
        rtol=rtol, atol=1e-14 * u0, events=(_crosses_zero, _turns_up), dense_output=dense,
    )
    if sol.status == -1:
        raise ResolutionError(f"ODE integration failed at U(0)={u0}: {sol.message}")
    if sol.t_events[0].size:
        return 1, sol.t_events[0][0], sol
    if sol.t_events[1].size:
        return -1, sol.t_events[1][0], sol
    return 0, r_max, sol


def shoot_ground_state(
    c0: float, p: float, tol: float = 1e-10, r_max: float | None = None,
    samples: int = 16001, rtol: float = 1e-11,
) -> RadialProfile:
    """Shooting solve for the positive radial ground state.

    ``samples`` and ``rtol`` set the resolution of the returned profile; the
    returned mesh reaches ``r_max`` where U(r_max) < tol * U(0).
    """
    if not (c0 > 0 and 4 <= p < 6 and tol > 0):
        raise ValueError("need c0 > 0, 4 <= p < 6, tol > 0")
    kappa = np.sqrt(c0)
    if r_max is None:
        r_max = 40.0 / kappa
    horizon = r_max + 20.0 / kappa

    lo = c0 ** (1.0 / (p - 2))
    hi = 2 * lo
    for _ in range(60):
        kind, _, _ = _shoot(hi, c0, p, horizon, rtol)
        if kind == 1:
            break
        hi *= 2
    else:
        raise BracketNotFound(f"no overshooting U(0) found up to {hi}")
    kind, _, _ = _shoot(lo * (1 + 1e-9), c0, p, horizon, rtol)
    if kind != -1:
        raise BracketNotFound("lower bracket does not turn back up")

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        kind, _, _ = _shoot(mid, c0, p, horizon, rtol)
        if kind == 1:
            hi = mid
        else:
            lo = mid

    # Both bracketing trajectories track the ground state until they separate.
    _, r_lo, sol_lo = _shoot(lo, c0, p, horizon, rtol, dense=True)
    _, r_hi, sol_hi = _shoot(hi, c0, p, horizon, rtol, dense=True)
    r_sep = min(r_lo, r_hi)
    rr = np.linspace(sol_lo.t[0], r_sep, 20001)
    ulo, uhi = sol_lo.sol(rr)[0], sol_hi.sol(rr)[0]
    gap = np.abs(ulo - uhi) / np.maximum(np.abs(ulo), 1e-300)
    bad = np.nonzero(gap > 1e-6)[0]
    r_trust = rr[bad[0]] if bad.size else r_sep
    # keep only the part where the decay is already exponential and still reliable
    r_shoot = min(0.8 * r_trust, r_max)
    if r_shoot < 6.0 / kappa:
        raise ResolutionError(f"shooting resolved the profile only up to r={r_trust:.3g}")

    n_in = max(int(samples * r_shoot / r_max), 101)
    r_in = np.linspace(0.0, r_shoot, n_in)
    mid_sol = 0.5 * (sol_lo.sol(np.maximum(r_in, sol_lo.t[0])) + sol_hi.sol(np.maximum(r_in, sol_hi.t[0])))
    u_in = mid_sol[0]
    u_in[0] = 0.5 * (lo + hi)
    profile_r = r_in
    profile_u = u_in
    if r_shoot < r_max:
        n_out = max(samples - n_in, 2)
        r_out = np.linspace(r_shoot, r_max, n_out + 1)[1:]
        profile_r = np.concatenate([r_in, r_out])
        # placeholder; the tail is attached in _assemble
        profile_u = np.concatenate([u_in, np.zeros(n_out)])
    prof = _assemble(profile_r, profile_u, c0, p, r_shoot=r_shoot, du_in=mid_sol[1])
    if not prof.u_samples[-1] < tol * prof.u0:
        raise ResolutionError(f"U(r_max)={prof.u_samples[-1]:.3g} not below tol*U(0); raise r_max")
    return prof


def _assemble(r, u, c0, p, r_shoot=None, du_in=None) -> RadialProfile:
    kappa = np.sqrt(c0)
    if r_shoot is None:
        r_shoot = float(r[-1])
    inside = r <= r_shoot
    ri, ui = r[inside], u[inside]
    # tail A exp(-kappa r)/r fitted on the outer quarter of the shot region
    fit = ri >= 0.75 * r_shoot
    slope, icpt = np.polyfit(ri[fit], np.log(ri[fit] * ui[fit]), 1)
    decay_rate = -slope
    amp = float(np.exp(np.mean(np.log(ri[fit] * ui[fit]) + kappa * ri[fit])))
    u = u.astype(float).copy()
    out = ~inside
    u[out] = amp * np.exp(-kappa * r[out]) / r[out]
    if du_in is None:
        du = np.gradient(u, r, edge_order=2)
    else:
        du = np.empty_like(u)
        du[inside] = du_in
        du[0] = 0.0
        du[out] = -amp * np.exp(-kappa * r[out]) * (kappa * r[out] + 1) / r[out] ** 2
    if np.any(np.diff(u) >= 0) or np.any(u <= 0):
        raise ResolutionError("profile is not strictly positive and decreasing")
    return RadialProfile(
        r_samples=r, u_samples=u, du_samples=du, c0=c0, p=p, u0=float(u[0]),
        decay_rate=float(decay_rate), tail_amplitude=amp, r_shoot=float(r_shoot),
    )


def m_infinity(profile: RadialProfile) -> float:
    return (0.5 - 1.0 / profile.p) * profile.norm_sq


def cutoff(s, r: float) -> np.ndarray:
    """C^1 cut-off: 1 on [0, r/2], cosine ramp on [r/2, r], 0 beyond."""
    s = np.asarray(s, dtype=float)
    ramp = 0.5 * (1 + np.cos(2 * np.pi * (s - r / 2) / r))
    return np.where(s <= r / 2, 1.0, np.where(s >= r, 0.0, ramp))


def bump_field(xi, params: SystemParams, profile: RadialProfile, grid: TorusGrid) -> np.ndarray:
    """W_{eps,xi}(x) = U(d(x, xi)/eps) chi_r(d(x, xi)) with r the injectivity radius."""
    if not np.all(np.isfinite(xi)):
        raise ValueError(f"bump center must be finite, got {xi}")
    r = grid.injectivity_radius
    d = grid.distance_field(xi)
    out = np.zeros(grid.shape)
    inside = d < r
    out[inside] = profile(d[inside] / params.eps) * cutoff(d[inside], r)
    return out
