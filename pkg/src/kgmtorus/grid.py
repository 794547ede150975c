"""Periodic 3-torus discretization, system parameters and eps-weighted norms.

Fields are plain ``float64`` arrays of shape ``(n, n, n)`` indexed ``[i, j, k]``
with sample ``(i h, j h, k h)``.  Derivatives are spectral.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import fft as sfft


class System(str, enum.Enum):
    KGM = "KGM"
    SM = "SM"


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of a Klein-Gordon-Maxwell or Schroedinger-Maxwell system.

    ``c0`` is the linear coefficient of the limit problem: ``a - omega**2`` for
    KGM and ``1`` for SM (where ``a`` is unused).
    """

    system: System
    eps: float
    q: float
    omega: float
    p: float
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "system", System(self.system))
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if not self.q > 0:
            raise ParameterError(f"q must be positive, got {self.q}")
        if self.system is System.KGM:
            if not self.a > 0:
                raise ParameterError(f"a must be positive, got {self.a}")
            if not self.omega**2 < self.a:
                raise ParameterError("KGM requires omega**2 < a")
            if not 4 <= self.p < 6:
                raise ParameterError(f"KGM requires 4 <= p < 6, got {self.p}")
        else:
            if not self.omega > 0:
                raise ParameterError("SM requires omega > 0")
            if not 4 < self.p < 6:
                raise ParameterError(f"SM requires 4 < p < 6, got {self.p}")

    @property
    def c0(self) -> float:
        if self.system is System.KGM:
            return self.a - self.omega**2
        return 1.0

    def with_eps(self, eps: float) -> "SystemParams":
        return SystemParams(self.system, eps, self.q, self.omega, self.p, self.a)


@dataclass(frozen=True)
class TorusGrid:
    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise ParameterError(f"n must be an even integer >= 16, got {self.n}")
        if not self.length > 0:
            raise ParameterError("length must be positive")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def injectivity_radius(self) -> float:
        return self.length / 2

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @cached_property
    def coords(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @cached_property
    def ksq(self) -> np.ndarray:
        """|2 pi k / L|^2 on the rfft half-spectrum, shape (n, n, n//2 + 1)."""
        k = 2 * np.pi * sfft.fftfreq(self.n, d=self.h)
        kr = 2 * np.pi * sfft.rfftfreq(self.n, d=self.h)
        return k[:, None, None] ** 2 + k[None, :, None] ** 2 + kr[None, None, :] ** 2

    @cached_property
    def _rfft_weights(self) -> np.ndarray:
        # multiplicity of each half-spectrum coefficient in the full spectrum
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def constant(self, c: float) -> np.ndarray:
        return np.full(self.shape, float(c))

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(self.coords, self.coords, self.coords, indexing="ij")

    def check(self, u: np.ndarray) -> np.ndarray:
        if u.shape != self.shape:
            raise ValueError(f"field shape {u.shape} does not match grid {self.shape}")
        return u

    def fft(self, u: np.ndarray) -> np.ndarray:
        return sfft.rfftn(self.check(u))

    def ifft(self, uh: np.ndarray) -> np.ndarray:
        return sfft.irfftn(uh, s=self.shape)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f)) * self.cell_volume

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(u * v)) * self.cell_volume

    def wrap_displacement(self, x, xi) -> np.ndarray:
        return wrap_displacement(x, xi, self.length)

    def distance_field(self, xi) -> np.ndarray:
        """Geodesic distance from ``xi`` to every grid node.

        Displacements are formed in grid units, with ``xi`` snapped to a node
        when it lies within 1e-9 cells of one, so whole-cell translates of
        ``xi`` give bit-identical (rolled) distance fields.
        """
        s = np.asarray(xi, dtype=float) / self.h
        snapped = np.rint(s)
        s = np.where(np.abs(s - snapped) < 1e-9, snapped, s)
        idx = np.arange(self.n)
        sq = self.zeros()
        for axis in range(3):
            d = _wrap(idx - s[axis], self.n) * self.h
            shape = [1, 1, 1]
            shape[axis] = self.n
            sq = sq + (d**2).reshape(shape)
        return np.sqrt(sq)

    def node(self, index) -> np.ndarray:
        return np.asarray(index, dtype=float) * self.h

    def nearest_node(self, x) -> tuple[int, int, int]:
        idx = np.rint(np.asarray(x, dtype=float) / self.h).astype(int) % self.n
        return tuple(int(i) for i in idx)


def _wrap(d, length):
    # representative in [-L/2, L/2)
    return (np.asarray(d, dtype=float) + length / 2) % length - length / 2


def wrap_displacement(x, xi, length: float) -> np.ndarray:
    """Componentwise representative of ``x - xi`` in ``[-L/2, L/2)^3``."""
    return _wrap(np.asarray(x, dtype=float) - np.asarray(xi, dtype=float), length)


def torus_distance(x, y, length: float) -> float:
    return float(np.linalg.norm(wrap_displacement(x, y, length)))


def laplacian(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    return grid.ifft(-grid.ksq * grid.fft(u))


def gradient_sq_integral(grid: TorusGrid, u: np.ndarray) -> float:
    """Spectral value of the integral of |grad u|^2 over the torus (Parseval)."""
    uh = grid.fft(u)
    s = np.sum(grid._rfft_weights * np.sum(grid.ksq * np.abs(uh) ** 2, axis=(0, 1)))
    return float(s) * grid.cell_volume / grid.n**3


def h_eps_norm_sq(grid: TorusGrid, u: np.ndarray, params: SystemParams) -> float:
    eps = params.eps
    grad = gradient_sq_integral(grid, u)
    return (eps**2 * grad + params.c0 * grid.integrate(u * u)) / eps**3


def lp_norm_eps(
    grid: TorusGrid, u: np.ndarray, p: float, eps: float, positive_part: bool = False
) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    w = np.maximum(u, 0.0) if positive_part else np.abs(u)
    return (grid.integrate(w**p) / eps**3) ** (1.0 / p)


def solve_helmholtz(grid: TorusGrid, f: np.ndarray, diffusion: float, mass: float) -> np.ndarray:
    """Solve ``-diffusion * Lap(u) + mass * u = f`` spectrally (``mass > 0``)."""
    return grid.ifft(grid.fft(f) / (diffusion * grid.ksq + mass))


def translate(grid: TorusGrid, u: np.ndarray, shift) -> np.ndarray:
    """Translate by whole cells: ``out(x) = u(x - shift * h)``."""
    return np.roll(u, tuple(int(s) for s in shift), axis=(0, 1, 2))


# ---------------------------------------------------------------------------
# KGMF snapshots

MAGIC = b"KGMF"
VERSION = 1
_HEADER = struct.Struct("<4sBIdd")


class FormatError(ValueError):
    pass


def save_field(path, u: np.ndarray, grid: TorusGrid, eps: float) -> None:
    grid.check(u)
    header = _HEADER.pack(MAGIC, VERSION, grid.n, grid.length, eps)
    data = np.ascontiguousarray(u, dtype="<f8").tobytes()
    Path(path).write_bytes(header + data)


def load_field(path, expected_n: int | None = None):
    """Read a snapshot. Returns ``(values, grid, eps)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, length, eps = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if expected_n is not None and n != expected_n:
        raise FormatError(f"{path}: grid size n={n} does not match expected n={expected_n}")
    nbytes = 8 * n**3
    body = raw[_HEADER.size:]
    if len(body) != nbytes:
        raise FormatError(f"{path}: expected {nbytes} data bytes for n={n}, found {len(body)}")
    values = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, n, n)
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{path}: non-finite values")
    return values, TorusGrid(n, length), eps
