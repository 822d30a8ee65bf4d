"""Newton continuation in eps for the translating sheet pair.

Unknowns are u = (b_1, a_2..a_N, b_2..b_N, W) with the first-harmonic gauge
a_1 = -b_1, matched against the 2N equations (sine modes of F, cosine modes of
G).  The Jacobian is rebuilt by forward differences every iteration; its W
column is exact because F and G are affine in W.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .contour import EPS_SWITCH, SheetState, fields, residual, tables, verify_strength
from .errors import AdmissibilityError, NonConvergenceError, SingularJacobianError
from .kernels import measure_multipliers
from .linop import BlockOperator, assemble_blocks, gauge_predict
from .trig import EvenSeries, Grid, analyze

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    N: int = 32
    M: int = 256
    tol: float = 1e-9
    max_iter: int = 25
    eps_switch: float = EPS_SWITCH
    fd_step: float = 1e-7  # scaled by max(1, |coeffs|_inf)
    max_halvings: int = 5
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.N < 2 or self.N > self.M // 4:
            raise ValueError(f"need 2 <= N <= M/4, got N={self.N}, M={self.M}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    @property
    def grid(self) -> Grid:
        return Grid(self.M)


@dataclass(frozen=True)
class Solution:
    state: SheetState
    iterations: int
    residual_sup: float
    history: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class ContinuationRecord:
    eps: float
    d: float
    W: float
    p_coeffs: tuple[float, ...]
    q_coeffs: tuple[float, ...]
    residual_sup: float
    iterations: int
    min_curvature: float
    K: float | None
    wall_ms: float | None

    def state(self) -> SheetState:
        return SheetState(self.eps, self.d, self.W, EvenSeries(self.p_coeffs), EvenSeries(self.q_coeffs))

    def to_dict(self, timings: bool = True) -> dict:
        return {
            "eps": self.eps,
            "d": self.d,
            "W": self.W,
            "p_coeffs": list(self.p_coeffs),
            "q_coeffs": list(self.q_coeffs),
            "residual_sup": self.residual_sup,
            "iterations": self.iterations,
            "min_curvature": self.min_curvature,
            "K": self.K,
            "wall_ms": self.wall_ms if timings else None,
        }


# unknown vector <-> coefficients ---------------------------------------------


def pack(a: NDArray[np.float64], b: NDArray[np.float64], W: float) -> NDArray[np.float64]:
    return np.concatenate([[b[0]], a[1:], b[1:], [W]])


def unpack(u: NDArray[np.float64], N: int) -> tuple[NDArray, NDArray, float]:
    b1 = u[0]
    a = np.concatenate([[0.0 - b1], u[1:N]])
    b = np.concatenate([[b1], u[N : 2 * N - 1]])
    return a, b, float(u[-1])


def _modes(F: NDArray, G: NDArray, N: int) -> NDArray[np.float64]:
    f, _ = analyze(F, "odd", N)
    g, _ = analyze(G, "even", N)
    return np.concatenate([f.coeffs, g.coeffs])


class _System:
    def __init__(self, eps: float, d: float, cfg: SolverConfig):
        self.eps, self.d, self.cfg = eps, d, cfg
        self.tb = tables(cfg.M, cfg.N)

    def split(self, u: NDArray) -> tuple[NDArray, NDArray]:
        """Residual with W = 0, and the exact W column."""
        a, b, _ = unpack(u, self.cfg.N)
        fl = fields(self.eps, self.d, a, b, self.tb, "auto", self.cfg.eps_switch)
        return _modes(fl.F0, fl.G0, self.cfg.N), _modes(fl.FW, fl.GW, self.cfg.N)

    def residual(self, u: NDArray) -> NDArray:
        r0, rw = self.split(u)
        return r0 + u[-1] * rw

    def jacobian(self, u: NDArray, r0: NDArray, rw: NDArray, pool: ThreadPoolExecutor | None) -> NDArray:
        n = u.size
        h = self.cfg.fd_step * max(1.0, float(np.max(np.abs(u[:-1]))))
        base = r0 + u[-1] * rw

        def column(c: int) -> NDArray:
            v = u.copy()
            v[c] += h
            return (self.residual(v) - base) / h

        cols = list(pool.map(column, range(n - 1))) if pool else [column(c) for c in range(n - 1)]
        J = np.empty((n, n))
        for c, col in enumerate(cols):
            J[:, c] = col
        J[:, -1] = rw
        return J


def closure_W(eps: float, d: float, p: EvenSeries, q: EvenSeries, grid: Grid, eps_switch: float = EPS_SWITCH) -> float:
    """Speed making the first sine mode of F equal minus the first cosine mode of G."""
    fl = fields(eps, d, p.coeffs, q.coeffs, tables(grid.M, p.N), "auto", eps_switch)
    f0 = analyze(fl.F0, "odd", 1)[0].coeffs[0]
    g0 = analyze(fl.G0, "even", 1)[0].coeffs[0]
    fw = analyze(fl.FW, "odd", 1)[0].coeffs[0]
    gw = analyze(fl.GW, "even", 1)[0].coeffs[0]
    den = fw + gw
    if abs(den) < 1e-14:
        raise ValueError(f"degenerate speed closure: W coefficient {den:.3e}")
    return float(-(f0 + g0) / den)


@lru_cache(maxsize=4)
def origin_blocks(N: int, M: int) -> BlockOperator:
    return assemble_blocks(measure_multipliers(N, Grid(M)), "measured")


def predictor(eps: float, d: float, cfg: SolverConfig) -> SheetState:
    """One origin-linearized step from the circle pair with the closure speed."""
    grid = cfg.grid
    zero = EvenSeries.zeros(cfg.N)
    W = closure_W(eps, d, zero, zero, grid, cfg.eps_switch)
    circle = SheetState(eps, d, W, zero, zero)
    res = residual(circle, grid, "auto", cfg.eps_switch)
    if res.sup() <= cfg.tol:
        return circle
    dp, dq, dW = gauge_predict(res, origin_blocks(cfg.N, cfg.M))
    return SheetState(eps, d, W + dW, dp, dq)


Init = Union[SheetState, tuple[EvenSeries, EvenSeries, float], None]


def newton_solve(eps: float, d: float, init: Init = None, cfg: SolverConfig | None = None) -> Solution:
    """Damped Newton on the 2N x 2N gauge-fixed system; ``init=None`` uses :func:`predictor`."""
    cfg = cfg or SolverConfig()
    if init is None:
        init = predictor(eps, d, cfg)
    if isinstance(init, SheetState):
        p0, q0, W0 = init.p, init.q, init.W
    else:
        p0, q0, W0 = init
    if p0.N != cfg.N or q0.N != cfg.N:
        raise ValueError(f"initial guess has {p0.N} modes, config expects {cfg.N}")
    SheetState(eps, d, W0, p0, q0)  # validates eps and d
    a0 = p0.coeffs.copy()
    b0 = q0.coeffs.copy()
    # enforce the gauge on the initial guess
    b1 = 0.5 * (b0[0] - a0[0])
    a0[0], b0[0] = -b1, b1
    u = pack(a0, b0, W0)

    sysm = _System(eps, d, cfg)
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        r0, rw = sysm.split(u)
        R = r0 + u[-1] * rw
        history = [float(np.max(np.abs(R)))]
        it = 0
        while history[-1] > cfg.tol:
            if it >= cfg.max_iter:
                raise NonConvergenceError(eps, history)
            J = sysm.jacobian(u, r0, rw, pool)
            try:
                step = np.linalg.solve(J, -R)
            except np.linalg.LinAlgError:
                raise SingularJacobianError(float(np.linalg.cond(J))) from None
            if not np.all(np.isfinite(step)):
                raise SingularJacobianError(float(np.linalg.cond(J)))
            u, r0, rw, R = _damped_update(sysm, u, step, history[-1], cfg.max_halvings)
            history.append(float(np.max(np.abs(R))))
            it += 1
    finally:
        if pool:
            pool.shutdown()

    a, b, W = unpack(u, cfg.N)
    state = SheetState(eps, d, W, EvenSeries(a), EvenSeries(b))
    return Solution(state, it, history[-1], tuple(history))


def _damped_update(sysm: _System, u: NDArray, step: NDArray, current: float, max_halvings: int):
    t = 1.0
    best = None
    for _ in range(max_halvings + 1):
        v = u + t * step
        try:
            r0, rw = sysm.split(v)
        except AdmissibilityError:
            t *= 0.5
            continue
        R = r0 + v[-1] * rw
        best = (v, r0, rw, R)
        if np.max(np.abs(R)) < current:
            return best
        t *= 0.5
    if best is None:
        raise AdmissibilityError("every damped Newton step left the admissible set")
    return best


def make_record(sol: Solution, cfg: SolverConfig, wall_ms: float | None = None) -> ContinuationRecord:
    from .diagnostics import min_curvature

    st = sol.state
    K = None
    if st.eps != 0.0:
        _, K = verify_strength(st, cfg.grid)
    return ContinuationRecord(
        eps=float(st.eps),
        d=float(st.d),
        W=float(st.W),
        p_coeffs=tuple(float(v) for v in st.p.coeffs),
        q_coeffs=tuple(float(v) for v in st.q.coeffs),
        residual_sup=float(sol.residual_sup),
        iterations=int(sol.iterations),
        min_curvature=float(min_curvature(st, cfg.grid)),
        K=K,
        wall_ms=wall_ms,
    )


def continuation(eps_values: Sequence[float], d: float, cfg: SolverConfig | None = None) -> list[ContinuationRecord]:
    """Warm-started sweep.  Stops at the first failure after the first step; the
    last accepted eps is the empirical end of the branch."""
    cfg = cfg or SolverConfig()
    records: list[ContinuationRecord] = []
    prev: SheetState | None = None
    for k, eps in enumerate(eps_values):
        t0 = time.perf_counter()
        init = None if prev is None else (prev.p, prev.q, prev.W)
        try:
            sol = newton_solve(float(eps), d, init, cfg)
        except (NonConvergenceError, SingularJacobianError, AdmissibilityError) as exc:
            if k == 0:
                raise
            log.warning("continuation stopped at eps=%r: %s", eps, exc)
            break
        wall = (time.perf_counter() - t0) * 1e3
        rec = make_record(sol, cfg, wall)
        records.append(rec)
        prev = sol.state
    return records


def eps_grid(eps_start: float, eps_max: float, eps_step: float) -> list[float]:
    """eps_start, eps_start + step, ... up to eps_max inclusive, computed as start + k*step."""
    if eps_step <= 0:
        raise ValueError("eps_step must be positive")
    n = int(np.floor((eps_max - eps_start) / eps_step + 1e-9))
    return [round(eps_start + k * eps_step, 15) for k in range(n + 1)]


def max_threads() -> int:
    return os.cpu_count() or 1
