"""Electrostatic potential map u -> psi(u) and its derivative h -> V_u(h).

KGM:  -Lap psi + (1 + q^2 u^2) psi = q u^2
SM:   -Lap psi + psi = q u^2

Both share the operator of the psi equation; the derivative has right-hand
side ``2 q u (1 - q psi) h`` (KGM) or ``2 q u h`` (SM).
"""
from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .grid import System, SystemParams, TorusGrid, laplacian, solve_helmholtz

DEFAULT_TOL = 1e-10


class NoConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(f"CG stalled after {iterations} iterations, relative residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


def _kgm_operator(grid: TorusGrid, u: np.ndarray, q: float):
    coef = 1.0 + q**2 * u * u
    ksq = grid.ksq
    n3 = grid.n**3

    def apply(x):
        x = x.reshape(grid.shape)
        return (grid.ifft(ksq * grid.fft(x)) + coef * x).ravel()

    shift = 1.0 + q**2 * float(np.mean(u * u))

    def precond(x):
        return grid.ifft(grid.fft(x.reshape(grid.shape)) / (ksq + shift)).ravel()

    A = LinearOperator((n3, n3), matvec=apply, dtype=float)
    M = LinearOperator((n3, n3), matvec=precond, dtype=float)
    return A, M, apply


def _kgm_solve(grid, u, rhs, q, tol, x0=None, maxiter=500):
    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return grid.zeros()
    A, M, apply = _kgm_operator(grid, u, q)
    if x0 is None:
        x0 = solve_helmholtz(grid, rhs, 1.0, 1.0 + q**2 * float(np.mean(u * u)))
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x, info = cg(A, rhs.ravel(), x0=np.ravel(x0), rtol=tol, atol=0.0, M=M, maxiter=maxiter, callback=count)
    res = float(np.linalg.norm(apply(x) - rhs.ravel())) / bnorm
    if info != 0 and res > tol:
        raise NoConvergence(iters, res)
    return x.reshape(grid.shape)


def solve_psi(grid: TorusGrid, u: np.ndarray, params: SystemParams, tol: float = DEFAULT_TOL,
              x0: np.ndarray | None = None) -> np.ndarray:
    grid.check(u)
    rhs = params.q * u * u
    if params.system is System.SM:
        return solve_helmholtz(grid, rhs, 1.0, 1.0)
    return _kgm_solve(grid, u, rhs, params.q, tol, x0)


def solve_V(grid: TorusGrid, u: np.ndarray, h: np.ndarray, psi: np.ndarray, params: SystemParams,
            tol: float = DEFAULT_TOL) -> np.ndarray:
    """Directional derivative of the psi-map at ``u`` along ``h``."""
    q = params.q
    if params.system is System.SM:
        return solve_helmholtz(grid, 2 * q * u * h, 1.0, 1.0)
    return _kgm_solve(grid, u, 2 * q * u * (1 - q * psi) * h, q, tol)


def psi_residual(grid: TorusGrid, u: np.ndarray, psi: np.ndarray, params: SystemParams) -> float:
    """Relative L2 residual of the psi equation."""
    q = params.q
    coef = 1.0 + (q**2 * u * u if params.system is System.KGM else 0.0)
    rhs = q * u * u
    res = -laplacian(grid, psi) + coef * psi - rhs
    return float(np.linalg.norm(res) / max(np.linalg.norm(rhs), 1e-300))
