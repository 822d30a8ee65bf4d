"""Parity Fourier series on uniform periodic grids.

Series carry modes j = 1..N only.  The mean of a grid function is returned
separately by :func:`analyze`, so projecting it away is a structural property
of the representation rather than an extra step.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

Parity = Literal["even", "odd"]


def _as_coeffs(coeffs: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(coeffs, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("a series needs at least one mode")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series coefficients must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EvenSeries:
    """Cosine series sum_{j=1}^N a_j cos(j x)."""

    coeffs: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))

    @property
    def N(self) -> int:
        return int(self.coeffs.size)

    @classmethod
    def zeros(cls, N: int) -> EvenSeries:
        return cls(np.zeros(N))

    @classmethod
    def mode(cls, j: int, N: int, amplitude: float = 1.0) -> EvenSeries:
        c = np.zeros(N)
        c[j - 1] = amplitude
        return cls(c)


@dataclass(frozen=True)
class OddSeries:
    """Sine series sum_{j=1}^N c_j sin(j x)."""

    coeffs: NDArray[np.float64]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _as_coeffs(self.coeffs))

    @property
    def N(self) -> int:
        return int(self.coeffs.size)

    @classmethod
    def zeros(cls, N: int) -> OddSeries:
        return cls(np.zeros(N))

    @classmethod
    def mode(cls, j: int, N: int, amplitude: float = 1.0) -> OddSeries:
        c = np.zeros(N)
        c[j - 1] = amplitude
        return cls(c)


Series = Union[EvenSeries, OddSeries]


@dataclass(frozen=True)
class Grid:
    """M equispaced nodes x_i = 2 pi i / M on [0, 2 pi).

    With ``stagger=True`` the nodes are the midpoints x_i + pi/M, which is where
    inner integration variables live.
    """

    M: int
    stagger: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.M, (int, np.integer)) or self.M < 4:
            raise ValueError(f"grid needs M >= 4 nodes, got {self.M!r}")

    @cached_property
    def nodes(self) -> NDArray[np.float64]:
        i = np.arange(self.M, dtype=np.float64)
        x = 2.0 * np.pi * i / self.M
        if self.stagger:
            x = (2.0 * i + 1.0) * np.pi / self.M
        x.setflags(write=False)
        return x

    def staggered(self) -> Grid:
        return Grid(self.M, stagger=True)

    def refined(self, factor: int) -> Grid:
        return Grid(self.M * factor, stagger=self.stagger)


def _basis(series: Series, x: NDArray[np.float64]) -> NDArray[np.float64]:
    j = np.arange(1, series.N + 1, dtype=np.float64)
    arg = np.multiply.outer(x, j)
    return np.cos(arg) if isinstance(series, EvenSeries) else np.sin(arg)


def evaluate(series: Series, x: ArrayLike) -> NDArray[np.float64]:
    """Evaluate a series at arbitrary angles (no Nyquist restriction)."""
    xa = np.asarray(x, dtype=np.float64)
    # elementwise product + pairwise sum keeps results independent of BLAS threading
    return (_basis(series, xa) * series.coeffs).sum(axis=-1)


def synth(series: Series, grid: Grid) -> NDArray[np.float64]:
    """Values of the series at the grid nodes."""
    if series.N > grid.M // 2:
        raise ValueError(f"truncation N={series.N} exceeds the Nyquist limit M/2={grid.M // 2}")
    return evaluate(series, grid.nodes)


def analyze(values: ArrayLike, parity: Parity, N: int) -> tuple[Series, float]:
    """Project plain-grid values onto modes 1..N of the given parity.

    Returns ``(series, mean)``.  Coefficient j is (2/M) sum_i v_i cos(j x_i)
    (resp. sin).
    """
    v = np.asarray(values, dtype=np.float64)
    M = v.size
    if M < 2 * N:
        raise ValueError(f"need at least 2N={2 * N} samples, got {M}")
    vh = np.fft.rfft(v)
    mean = float(vh[0].real / M)
    if parity == "even":
        return EvenSeries(vh[1 : N + 1].real * (2.0 / M)), mean
    if parity == "odd":
        return OddSeries(-vh[1 : N + 1].imag * (2.0 / M)), mean
    raise ValueError(f"unknown parity {parity!r}")


def differentiate(series: Series) -> Series:
    j = np.arange(1, series.N + 1, dtype=np.float64)
    if isinstance(series, EvenSeries):
        return OddSeries(-j * series.coeffs)
    return EvenSeries(j * series.coeffs)


def weighted_norm(series: Series, k: float = 0.0, a: float = 0.0) -> float:
    """sqrt(sum_j (1 + j^{2k}) cosh(2 a j) c_j^2), a discrete analytic-strip norm."""
    if k < 0 or a < 0:
        raise ValueError("weighted_norm needs k >= 0 and a >= 0")
    j = np.arange(1, series.N + 1, dtype=np.float64)
    with np.errstate(over="raise", invalid="raise"):
        try:
            w = (1.0 + j ** (2.0 * k)) * np.cosh(2.0 * a * j)
            total = (w * series.coeffs**2).sum()
        except FloatingPointError as exc:
            raise OverflowError(f"weighted_norm overflowed for k={k}, a={a}, N={series.N}") from exc
    if not np.isfinite(total):
        raise OverflowError(f"weighted_norm overflowed for k={k}, a={a}, N={series.N}")
    return float(np.sqrt(total))
