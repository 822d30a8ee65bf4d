"""Post-solve checks: curvature, mirror symmetry, speed asymptotics, file writers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np
from numpy.typing import NDArray

from .contour import SheetState
from .numfmt import fmt, to_json
from .trig import EvenSeries, Grid, differentiate, evaluate, synth

if TYPE_CHECKING:
    from .solver import ContinuationRecord


@dataclass(frozen=True)
class CurveSample:
    x: NDArray[np.float64]
    z: NDArray[np.float64]  # (M, 2)
    s: NDArray[np.float64]  # unit tangent, counterclockwise
    n: NDArray[np.float64]  # s^perp
    kappa: NDArray[np.float64]


def _radius_derivs(state: SheetState, x: NDArray[np.float64]):
    e = state.eps**2
    dp = differentiate(state.p)
    r = 1.0 + e * evaluate(state.p, x)
    r1 = e * evaluate(dp, x)
    r2 = e * evaluate(differentiate(dp), x)
    return r, r1, r2


def curvature_at(state: SheetState, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """(r^2 + 2 r'^2 - r r'') / (r^2 + r'^2)^{3/2} with spectral derivatives."""
    r, r1, r2 = _radius_derivs(state, x)
    if not np.all(r > 0):
        raise ValueError("curvature needs r > 0")
    return (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1) ** 1.5


def curvature(state: SheetState, grid: Grid) -> NDArray[np.float64]:
    return curvature_at(state, grid.nodes)


def curvature_parametric(state: SheetState, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """(z1' z2'' - z2' z1'') / (z1'^2 + z2'^2)^{3/2} from z = r (cos x, sin x)."""
    r, r1, r2 = _radius_derivs(state, x)
    c, s = np.cos(x), np.sin(x)
    z1p = r1 * c - r * s
    z2p = r1 * s + r * c
    z1pp = r2 * c - 2.0 * r1 * s - r * c
    z2pp = r2 * s + 2.0 * r1 * c - r * s
    return (z1p * z2pp - z2p * z1pp) / (z1p**2 + z2p**2) ** 1.5


def min_curvature(state: SheetState, grid: Grid, oversample: int = 4) -> float:
    """Minimum over the grid nodes and a 4x finer grid."""
    return float(min(curvature(state, grid).min(), curvature(state, grid.refined(oversample)).min()))


def curve_sample(state: SheetState, grid: Grid) -> CurveSample:
    x = grid.nodes
    r, r1, _ = _radius_derivs(state, x)
    c, s = np.cos(x), np.sin(x)
    tx = np.stack([r1 * c - r * s, r1 * s + r * c], axis=1)
    t = tx / np.linalg.norm(tx, axis=1)[:, None]
    n = np.stack([-t[:, 1], t[:, 0]], axis=1)
    return CurveSample(x, np.stack([r * c, r * s], axis=1), t, n, curvature_at(state, x))


# mirror symmetry ---------------------------------------------------------------


@dataclass(frozen=True)
class MirrorReport:
    passed: bool
    coeff_gap: float
    W_gap: float
    worst_field: str
    worst_mode: int
    coeff_tol: float
    W_tol: float


def mirror_check(
    rec_plus: ContinuationRecord,
    rec_minus: ContinuationRecord,
    coeff_tol: float = 1e-9,
    W_tol: float = 1e-10,
) -> MirrorReport:
    """Compare solutions at +eps and -eps; with even p, q the reflected shapes are the same series."""
    if abs(abs(rec_plus.eps) - abs(rec_minus.eps)) > 1e-15:
        raise ValueError(f"records at |eps| {abs(rec_plus.eps)} and {abs(rec_minus.eps)} are not mirrors")
    gp = np.abs(np.subtract(rec_plus.p_coeffs, rec_minus.p_coeffs))
    gq = np.abs(np.subtract(rec_plus.q_coeffs, rec_minus.q_coeffs))
    if gp.max() >= gq.max():
        fieldname, mode, gap = "p", int(np.argmax(gp)) + 1, float(gp.max())
    else:
        fieldname, mode, gap = "q", int(np.argmax(gq)) + 1, float(gq.max())
    dW = abs(rec_plus.W - rec_minus.W)
    return MirrorReport(gap < coeff_tol and dW < W_tol, gap, dW, fieldname, mode, coeff_tol, W_tol)


# speed asymptotics -------------------------------------------------------------


@dataclass(frozen=True)
class WSlope:
    W0: float
    slope: float  # prefactor c in |W - W0| ~ c |eps|^k
    exponent: float


def wslope_fit(
    eps: Sequence[float] | Sequence[ContinuationRecord],
    W: Sequence[float] | None = None,
    W0: float | None = None,
) -> WSlope:
    """Least-squares fit of log|W - W0| against log|eps| over the nonzero eps.

    Accepts either records or parallel (eps, W) sequences.  W0 defaults to the
    eps = 0 entry.  All-equal W yields a NaN exponent.
    """
    if W is None:
        recs = list(eps)
        e = np.array([r.eps for r in recs], dtype=float)
        w = np.array([r.W for r in recs], dtype=float)
    else:
        e = np.asarray(eps, dtype=float)
        w = np.asarray(W, dtype=float)
    if W0 is None:
        zero = np.flatnonzero(e == 0.0)
        if zero.size == 0:
            raise ValueError("W0 not given and no eps = 0 entry to take it from")
        W0 = float(w[zero[0]])
    mask = e != 0.0
    e, w = np.abs(e[mask]), w[mask]
    if e.size < 4:
        raise ValueError("need at least 4 nonzero-eps points")
    if e.max() < 10.0 * e.min() * (1.0 - 1e-12):
        raise ValueError("fit points must span a decade in eps")
    dev = np.abs(w - W0)
    if np.all(dev == 0.0):
        return WSlope(W0, float("nan"), float("nan"))
    keep = dev > 0.0
    A = np.stack([np.ones(keep.sum()), np.log(e[keep])], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(dev[keep]), rcond=None)
    return WSlope(float(W0), float(np.exp(coef[0])), float(coef[1]))


# writers -----------------------------------------------------------------------


def write_records_json(records: Sequence[ContinuationRecord], path: str | Path, timings: bool = False) -> None:
    """records.json; wall_ms is null unless ``timings`` (keeps the file deterministic)."""
    Path(path).write_text(to_json([r.to_dict(timings) for r in records]) + "\n")


def write_records_csv(records: Sequence[ContinuationRecord], path: str | Path, timings: bool = False) -> None:
    cols = ["eps", "d", "W", "p_coeffs", "q_coeffs", "residual_sup", "iterations", "min_curvature", "K", "wall_ms"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = r.to_dict(timings)
            out = []
            for c in cols:
                v = row[c]
                if isinstance(v, list):
                    out.append(" ".join(fmt(x) for x in v))
                elif v is None:
                    out.append("")
                elif isinstance(v, int):
                    out.append(str(v))
                else:
                    out.append(fmt(v))
            w.writerow(out)


def curve_filename(eps: float) -> str:
    return f"curve_{format(float(eps), '.6g')}.csv"


def write_curve_csv(state: SheetState, grid: Grid, path: str | Path) -> None:
    cs = curve_sample(state, grid)
    r = 1.0 + state.eps**2 * synth(state.p, grid)
    gam = 1.0 + state.eps**2 * synth(state.q, grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "z1", "z2", "r", "gamma", "kappa"])
        for i in range(grid.M):
            w.writerow([fmt(cs.x[i]), fmt(cs.z[i, 0]), fmt(cs.z[i, 1]), fmt(r[i]), fmt(gam[i]), fmt(cs.kappa[i])])


def write_wtable_csv(records: Sequence[ContinuationRecord], path: str | Path) -> None:
    """eps, W and the two candidate leading speeds 1/(2d)^2 and 1/(2d^2)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "W", "W_paper_116", "W_paper_224"])
        for r in records:
            w.writerow([fmt(r.eps), fmt(r.W), fmt(1.0 / (2.0 * r.d) ** 2), fmt(1.0 / (2.0 * r.d**2))])
