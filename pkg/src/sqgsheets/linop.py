"""Linearization of (F, G) at eps = 0, p = q = 0 as 2x2 blocks per cosine mode.

Two block sources are kept side by side:

* closed-form: [[-j/2, C_j j^2/2], [(2 + j^2)/2, -1/2]], built from the closed
  multiplier identities lambda_j = C j^2/2 and mu_j = j^2/2;
* measured: the exact derivative of the discrete residual map, obtained by
  projecting the discrete directional derivative onto each mode.

Only the measured blocks are consistent with the residuals the solver drives to
zero.  Derivation of the discrete directional derivative (S sine kernel,
K even-difference kernel, R chord kernel, c_M = R[1]):

    dF = -c_M h1' + S[h1]/4 - S[h2]/2
    dG = (I - P0)(K[h1]/2 - 5/2 c_M h1 - R[h1]/2 + R[h2] + c_M h2)
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .contour import ResidualPair
from .errors import SingularBlockError
from .kernels import (
    MultiplierTable,
    chord_kernel_apply,
    even_kernel_apply,
    sine_kernel_apply,
    stencil,
)
from .numfmt import fmt
from .trig import EvenSeries, Grid, analyze, differentiate, synth

Form = Literal["closed-form", "discrete"]
Source = Literal["paper-form", "measured"]

SINGULAR_DET = 1e-12


@dataclass(frozen=True)
class BlockOperator:
    blocks: NDArray[np.float64]  # (N, 2, 2), blocks[j-1] acts on (a_j, b_j)
    source: Source

    @property
    def N(self) -> int:
        return int(self.blocks.shape[0])

    def det(self) -> NDArray[np.float64]:
        Q = self.blocks
        return Q[:, 0, 0] * Q[:, 1, 1] - Q[:, 0, 1] * Q[:, 1, 0]

    def apply(self, a: NDArray[np.float64], b: NDArray[np.float64]) -> tuple[NDArray, NDArray]:
        Q = self.blocks
        return Q[:, 0, 0] * a + Q[:, 0, 1] * b, Q[:, 1, 0] * a + Q[:, 1, 1] * b


def gateaux_origin(
    h1: EvenSeries, h2: EvenSeries, grid: Grid, form: Form = "discrete"
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Directional derivative of (F, G) at the origin along (p, q) = (h1, h2)."""
    if form == "closed-form":
        dF = 0.5 * synth(differentiate(h1), grid) + sine_kernel_apply(h2, grid)
        dG = synth(h1, grid) - even_kernel_apply(h1, grid) - 0.5 * synth(h2, grid)
    elif form == "discrete":
        c = stencil(grid.M).c_M
        dF = (
            -c * synth(differentiate(h1), grid)
            + 0.25 * sine_kernel_apply(h1, grid)
            - 0.5 * sine_kernel_apply(h2, grid)
        )
        dG = (
            0.5 * even_kernel_apply(h1, grid)
            - 2.5 * c * synth(h1, grid)
            - 0.5 * chord_kernel_apply(h1, grid)
            + chord_kernel_apply(h2, grid)
            + c * synth(h2, grid)
        )
    else:
        raise ValueError(f"unknown form {form!r}")
    return dF, dG - np.mean(dG)


def assemble_blocks(table: MultiplierTable, source: Source) -> BlockOperator:
    N = table.N
    j = table.j
    Q = np.empty((N, 2, 2))
    if source == "paper-form":
        Q[:, 0, 0] = -j / 2.0
        Q[:, 0, 1] = table.C * j**2 / 2.0
        Q[:, 1, 0] = (2.0 + j**2) / 2.0
        Q[:, 1, 1] = -0.5
    elif source == "measured":
        if np.any(table.lam == 0.0) or np.any(table.mu == 0.0):
            raise ValueError("degenerate (zero) measured multipliers")
        grid = Grid(table.M)
        zero = EvenSeries.zeros(N)
        for k in range(1, N + 1):
            unit = EvenSeries.mode(k, N)
            for col, (h1, h2) in enumerate(((unit, zero), (zero, unit))):
                dF, dG = gateaux_origin(h1, h2, grid, "discrete")
                Q[k - 1, 0, col] = analyze(dF, "odd", N)[0].coeffs[k - 1]
                Q[k - 1, 1, col] = analyze(dG, "even", N)[0].coeffs[k - 1]
    else:
        raise ValueError(f"unknown block source {source!r}")
    Q.setflags(write=False)
    return BlockOperator(Q, source)


def invert_block(Q: NDArray[np.float64], j: int | None = None) -> NDArray[np.float64]:
    Q = np.asarray(Q, dtype=np.float64)
    det = Q[0, 0] * Q[1, 1] - Q[0, 1] * Q[1, 0]
    if abs(det) < SINGULAR_DET:
        raise SingularBlockError(-1 if j is None else j, det)
    return np.array([[Q[1, 1], -Q[0, 1]], [-Q[1, 0], Q[0, 0]]]) / det


def linear_predict(res: ResidualPair, op: BlockOperator) -> tuple[EvenSeries, EvenSeries]:
    """Blockwise step -Q_j^{-1} (f_j, g_j)."""
    N = min(op.N, res.f.N)
    da = np.zeros(res.f.N)
    db = np.zeros(res.f.N)
    for k in range(N):
        inv = invert_block(op.blocks[k], k + 1)
        rhs = np.array([res.f.coeffs[k], res.g.coeffs[k]])
        da[k], db[k] = -(inv @ rhs)
    return EvenSeries(da), EvenSeries(db)


def write_blocks_csv(ops: list[BlockOperator], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "q11", "q12", "q21", "q22", "det", "source"])
        for op in ops:
            det = op.det()
            for k in range(op.N):
                Q = op.blocks[k]
                w.writerow(
                    [k + 1, fmt(Q[0, 0]), fmt(Q[0, 1]), fmt(Q[1, 0]), fmt(Q[1, 1]), fmt(det[k]), op.source]
                )


def gauge_predict(
    res: ResidualPair, op: BlockOperator, w_column: tuple[float, float] = (-1.0, -1.0)
) -> tuple[EvenSeries, EvenSeries, float]:
    """Like :func:`linear_predict`, but mode 1 is solved for (b_1, W) under a_1 = -b_1.

    At the origin the mode-1 block is singular (translation of the circle), so
    the first mode is closed with the speed instead; ``w_column`` holds the
    derivatives (df_1/dW, dg_1/dW).
    """
    da, db = np.zeros(res.f.N), np.zeros(res.f.N)
    Q1 = op.blocks[0]
    A = np.array([[Q1[0, 1] - Q1[0, 0], w_column[0]], [Q1[1, 1] - Q1[1, 0], w_column[1]]])
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(det) < SINGULAR_DET:
        raise SingularBlockError(1, det)
    b1, dW = -np.linalg.solve(A, np.array([res.f.coeffs[0], res.g.coeffs[0]]))
    da[0], db[0] = -b1, b1
    for k in range(1, min(op.N, res.f.N)):
        inv = invert_block(op.blocks[k], k + 1)
        da[k], db[k] = -(inv @ np.array([res.f.coeffs[k], res.g.coeffs[k]]))
    return EvenSeries(da), EvenSeries(db), float(dW)
