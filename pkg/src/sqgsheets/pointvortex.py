"""Point-vortex reduction of the sheet pair: m signed points on a line.

v_i = sum_{k != i} sigma_k G'(|z_i - z_k|) (z_i - z_k)^perp / |z_i - z_k|

with the SQG profile G(rho) = -kappa / rho.  A pair of opposite strengths
(+1, -1) at distance 2d translates rigidly at speed kappa / (2d)^2 along +e2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .numfmt import fmt

KERNEL_SCALE = 1.0


@dataclass(frozen=True)
class PowerKernel:
    """G(rho) = -scale / rho, so G'(rho) = scale / rho^2."""

    scale: float = KERNEL_SCALE

    def G(self, rho: NDArray[np.float64]) -> NDArray[np.float64]:
        return -self.scale / rho

    def dG(self, rho: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.scale / rho**2


def alternating(m: int) -> NDArray[np.float64]:
    return np.where(np.arange(m) % 2 == 0, 1.0, -1.0)


@dataclass(frozen=True)
class PointSystem:
    positions: NDArray[np.float64]  # (m, 2)
    d: float = 1.0
    strengths: NDArray[np.float64] | None = None
    kernel: PowerKernel = field(default_factory=PowerKernel)

    def __post_init__(self) -> None:
        z = np.array(self.positions, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != 2:
            raise ValueError("positions must have shape (m, 2)")
        if z.shape[0] < 2:
            raise ValueError("a point system needs m >= 2 points")
        sig = alternating(z.shape[0]) if self.strengths is None else np.array(self.strengths, dtype=np.float64)
        if sig.shape != (z.shape[0],):
            raise ValueError("one strength per point")
        object.__setattr__(self, "positions", z)
        object.__setattr__(self, "strengths", sig)
        _check_distinct(z)

    @property
    def m(self) -> int:
        return int(self.positions.shape[0])

    @classmethod
    def lattice(cls, m: int, d: float = 1.0, origin: ArrayLike = (0.0, 0.0), **kw) -> PointSystem:
        """z_i = z_0 + 2 d i e1."""
        z = np.zeros((m, 2))
        z[:, 0] = 2.0 * d * np.arange(m)
        return cls(z + np.asarray(origin, dtype=float), d=d, **kw)

    def moved(self, positions: NDArray[np.float64]) -> PointSystem:
        return PointSystem(positions, self.d, self.strengths, self.kernel)


def _check_distinct(z: NDArray[np.float64]) -> None:
    diff = z[:, None, :] - z[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    if np.min(dist) == 0.0:
        i, k = np.unravel_index(np.argmin(dist), dist.shape)
        raise ValueError(f"points {i} and {k} coincide")


def _velocities(z: NDArray, sig: NDArray, kernel: PowerKernel) -> NDArray[np.float64]:
    diff = z[:, None, :] - z[None, :, :]
    rho = np.hypot(diff[..., 0], diff[..., 1])
    m = z.shape[0]
    off = ~np.eye(m, dtype=bool)
    if np.any(rho[off] == 0.0):
        raise ValueError("coincident points")
    rho_safe = np.where(off, rho, 1.0)
    w = np.where(off, sig[None, :] * kernel.dG(rho_safe) / rho_safe, 0.0)
    perp = np.stack([-diff[..., 1], diff[..., 0]], axis=-1)
    return (w[..., None] * perp).sum(axis=1)


def rhs(sys: PointSystem) -> NDArray[np.float64]:
    return _velocities(sys.positions, sys.strengths, sys.kernel)


def wstar(m: int, d: float, kernel: PowerKernel | None = None, form: str = "derivation") -> float:
    """Translation speed of the lattice.

    form="derivation": sum_{k=1}^{m-1} G'(2 d k), the default
    form="displayed": (1/(2d)^2) sum_{k=1}^{m-1} G'(k)
    For the homogeneous default kernel both coincide.
    """
    if m < 2:
        raise ValueError("wstar needs m >= 2")
    kernel = kernel or PowerKernel()
    k = np.arange(1, m, dtype=np.float64)
    if form == "displayed":
        return float(kernel.dG(k).sum() / (2.0 * d) ** 2)
    if form == "derivation":
        return float(kernel.dG(2.0 * d * k).sum())
    raise ValueError(f"unknown form {form!r}")


@dataclass(frozen=True)
class Trajectory:
    t: NDArray[np.float64]  # (n,)
    z: NDArray[np.float64]  # (n, m, 2)


def integrate_rk4(sys: PointSystem, t_end: float, h: float) -> Trajectory:
    """Classical RK4 with fixed step h; the last step is shortened to land on t_end."""
    if not h > 0:
        raise ValueError("step h must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    n = int(np.ceil(t_end / h - 1e-9))
    sig, ker = sys.strengths, sys.kernel
    f = lambda z: _velocities(z, sig, ker)  # noqa: E731
    ts = np.empty(n + 1)
    zs = np.empty((n + 1, sys.m, 2))
    z = sys.positions.copy()
    ts[0], zs[0] = 0.0, z
    for k in range(n):
        t = k * h
        dt = min(h, t_end - t)
        k1 = f(z)
        k2 = f(z + 0.5 * dt * k1)
        k3 = f(z + 0.5 * dt * k2)
        k4 = f(z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"point positions blew up at t={t + dt!r}")
        ts[k + 1] = t + dt
        zs[k + 1] = z
    ts[-1] = t_end if n else 0.0
    return Trajectory(ts, zs)


def write_trajectory_csv(traj: Trajectory, path: str | Path, stride: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "i", "z1", "z2"])
        idx = list(range(0, traj.t.size, stride))
        if idx[-1] != traj.t.size - 1:
            idx.append(traj.t.size - 1)
        for n in idx:
            for i in range(traj.z.shape[1]):
                w.writerow([fmt(traj.t[n]), i, fmt(traj.z[n, i, 0]), fmt(traj.z[n, i, 1])])
