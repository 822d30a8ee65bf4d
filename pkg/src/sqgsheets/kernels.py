"""Singular kernels on the staggered stencil.

Target node x_i = 2 pi i / M sees source nodes x_i + delta_k with
delta_k = (2k+1) pi / M, k = 0..M-1.  Source k for target i is the staggered
node (i + k) mod M.  Trigonometric tables of delta are built for k < M/2 and
mirrored, so kernels odd in delta cancel exactly in pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .numfmt import fmt
from .trig import EvenSeries, Grid, analyze, synth


@dataclass(frozen=True)
class Stencil:
    M: int
    sin_d: NDArray[np.float64]  # sin(delta_k), exactly antisymmetric under k -> M-1-k
    cos_d: NDArray[np.float64]
    sin_half: NDArray[np.float64]  # |sin(delta_k / 2)|, exactly symmetric
    gather: NDArray[np.intp]  # gather[i, k] = (i + k) mod M

    @property
    def chord_sq(self) -> NDArray[np.float64]:
        """Squared unit-circle chord 4 sin^2(delta/2)."""
        return 4.0 * self.sin_half**2

    @property
    def c_M(self) -> float:
        """Staggered mean of 1/(4|sin(delta/2)|), the discrete finite-part constant."""
        return float(np.mean(1.0 / (4.0 * self.sin_half)))


@lru_cache(maxsize=16)
def stencil(M: int) -> Stencil:
    if M < 4 or M % 2:
        raise ValueError(f"staggered stencil needs an even M >= 4, got {M}")
    half = M // 2
    dk = (2.0 * np.arange(half) + 1.0) * np.pi / M
    sd = np.concatenate([np.sin(dk), -np.sin(dk)[::-1]])
    cd = np.concatenate([np.cos(dk), np.cos(dk)[::-1]])
    sh = np.concatenate([np.sin(dk / 2.0), np.sin(dk / 2.0)[::-1]])
    idx = (np.arange(M)[:, None] + np.arange(M)[None, :]) % M
    for a in (sd, cd, sh, idx):
        a.setflags(write=False)
    return Stencil(M, sd, cd, sh, idx)


@dataclass(frozen=True)
class KernelDenominators:
    """Squared distances entering the near (self) and far (mirror) kernels."""

    near: NDArray[np.float64]
    far: NDArray[np.float64]


def kernel_denominators(
    eps: float, d: float, p: EvenSeries, grid: Grid
) -> KernelDenominators:
    """Near: |r(x) e^{ix} - r(xb) e^{i xb}|^2 on the staggered stencil (no eps scaling).
    Far: |eps z(x) + eps z(xb) - 2d|^2 on the plain grid."""
    st = stencil(grid.M)
    e2 = eps * eps
    r = 1.0 + e2 * synth(p, grid)
    rs = (1.0 + e2 * synth(p, grid.staggered()))[st.gather]
    R = r[:, None]
    near = (R - rs) ** 2 + R * rs * st.chord_sq
    z = r * np.exp(1j * grid.nodes)
    far = np.abs(eps * z[:, None] + eps * z[None, :] - 2.0 * d) ** 2
    return KernelDenominators(near, far)


def pv_mean_integral(f: Callable[[NDArray[np.float64]], NDArray[np.float64]], x: float, grid: Grid) -> float:
    """(1/M) sum_k f(x + (2k+1) pi / M).

    Odd singularities about xb = x cancel in symmetric pairs (principal value);
    even 1/|u| singularities are cut off at scale pi/M (finite part).
    """
    # offsets built from the mirrored half so that the node set is symmetric about x
    half = grid.M // 2
    dk = (2.0 * np.arange(half) + 1.0) * np.pi / grid.M
    offsets = np.concatenate([dk, -dk[::-1]])
    vals = np.asarray(f(x + offsets), dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        k = int(bad[0])
        raise FloatingPointError(f"integrand not finite at node k={k} (xb={x + offsets[k]!r})")
    # mirror pairs are added first so odd integrands cancel before the tree sum
    paired = vals[:half] + vals[::-1][:half]
    return float(np.sum(paired) / grid.M)


def _staggered_values(h: EvenSeries, grid: Grid) -> NDArray[np.float64]:
    return synth(h, grid.staggered())[stencil(grid.M).gather]


def sine_kernel_apply(h: EvenSeries, grid: Grid) -> NDArray[np.float64]:
    """x -> mean_xb h(xb) sin(x - xb) / (4 |sin((x - xb)/2)|^3)."""
    st = stencil(grid.M)
    w = -st.sin_d / (4.0 * st.sin_half**3)
    return np.mean(w * _staggered_values(h, grid), axis=1)


def even_kernel_apply(h: EvenSeries, grid: Grid) -> NDArray[np.float64]:
    """x -> mean_xb (h(x) - h(xb)) / (4 |sin((x - xb)/2)|^3), the finite-part integral."""
    st = stencil(grid.M)
    w = 1.0 / (4.0 * st.sin_half**3)
    hx = synth(h, grid)[:, None]
    return np.mean(w * (hx - _staggered_values(h, grid)), axis=1)


def chord_kernel_apply(h: EvenSeries, grid: Grid) -> NDArray[np.float64]:
    """x -> mean_xb h(xb) / (4 |sin((x - xb)/2)|); log-singular, cut off at pi/M."""
    st = stencil(grid.M)
    w = 1.0 / (4.0 * st.sin_half)
    return np.mean(w * _staggered_values(h, grid), axis=1)


def constant_C(j: int, grid: Grid) -> float:
    """Staggered mean of sin(j xb) ln tan(xb / 4) over (0, 2 pi)."""
    if j < 1:
        raise ValueError("constant_C needs j >= 1")
    xs = grid.staggered().nodes
    return float(np.mean(np.sin(j * xs) * np.log(np.tan(xs / 4.0))))


@dataclass(frozen=True)
class MultiplierTable:
    """Measured diagonal actions on cos(j x), j = 1..N, at grid size M.

    lam: sine kernel, cos(jx) -> lam_j sin(jx)
    mu: even-difference kernel, cos(jx) -> mu_j cos(jx)
    rho: chord kernel, cos(jx) -> rho_j cos(jx)
    C: constant_C(j)
    c_M: chord-kernel action on constants
    """

    M: int
    lam: NDArray[np.float64]
    mu: NDArray[np.float64]
    rho: NDArray[np.float64]
    C: NDArray[np.float64]
    c_M: float

    @property
    def N(self) -> int:
        return int(self.lam.size)

    @property
    def j(self) -> NDArray[np.float64]:
        return np.arange(1, self.N + 1, dtype=np.float64)

    @property
    def lambda_paper(self) -> NDArray[np.float64]:
        return self.C * self.j**2 / 2.0

    @property
    def mu_paper(self) -> NDArray[np.float64]:
        return self.j**2 / 2.0


def measure_multipliers(N: int, grid: Grid) -> MultiplierTable:
    if N > grid.M // 4:
        raise ValueError(f"measure_multipliers needs N <= M/4, got N={N}, M={grid.M}")
    lam = np.empty(N)
    mu = np.empty(N)
    rho = np.empty(N)
    for j in range(1, N + 1):
        h = EvenSeries.mode(j, N)
        lam[j - 1] = analyze(sine_kernel_apply(h, grid), "odd", N)[0].coeffs[j - 1]
        mu[j - 1] = analyze(even_kernel_apply(h, grid), "even", N)[0].coeffs[j - 1]
        rho[j - 1] = analyze(chord_kernel_apply(h, grid), "even", N)[0].coeffs[j - 1]
    C = np.array([constant_C(j, grid) for j in range(1, N + 1)])
    return MultiplierTable(grid.M, lam, mu, rho, C, stencil(grid.M).c_M)


def write_multipliers_csv(table: MultiplierTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "lambda_j", "mu_j", "C_j", "lambda_paper", "mu_paper"])
        for i in range(table.N):
            w.writerow(
                [
                    i + 1,
                    fmt(table.lam[i]),
                    fmt(table.mu[i]),
                    fmt(table.C[i]),
                    fmt(table.lambda_paper[i]),
                    fmt(table.mu_paper[i]),
                ]
            )
