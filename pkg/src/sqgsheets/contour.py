"""Residual functionals F, G for the translating sheet pair, and the velocity path.

Geometry: sheet 1 is eps * z(x) with z = r e^{ix}, r = 1 + eps^2 p, strength
gamma = 1 + eps^2 q.  Sheet 2 is its point reflection through (d, 0) carrying
the opposite strength.  Planar vectors are complex numbers, a^perp = i a and
a . b = Re(a conj(b)).  The rescaled velocity on sheet 1 is

    u(x) = (1/eps^2) mean_xb (z - zb)^perp gb / |z - zb|^3
           - mean_xb (eps z + eps zb - 2d)^perp gb / |eps z + eps zb - 2d|^3

with the self term on the staggered stencil and the mirror term on the plain
grid.  The functionals are

    F  = -(u - W e2) . z_x^perp
    Gt = (u - W e2) . z_x * gamma / |z_x|^2,      G = Gt - mean(Gt).

The self term is O(1/eps^2).  Its 1/eps^2 part is the constant c_M gamma/|z_x|^2
* (r^2 + r'^2) / eps^2 = c_M / eps^2 in Gt, which the projection removes, so
"Gt" below always means that constant subtracted (the finite part).

Two evaluation paths share this model:

* direct: the formula as written, with the 1/eps^2 division; used for
  |eps| >= eps_switch.
* regularized: the eps^2 factors are extracted algebraically (no division by
  eps), exact for every eps and well defined at eps = 0; used below eps_switch.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .errors import AdmissibilityError
from .kernels import even_kernel_apply, sine_kernel_apply, stencil
from .trig import EvenSeries, Grid, OddSeries, analyze, differentiate, evaluate, synth

Path = Literal["auto", "direct", "regularized"]

EPS_SWITCH = 0.02


@dataclass(frozen=True)
class SheetState:
    eps: float
    d: float
    W: float
    p: EvenSeries
    q: EvenSeries

    def __post_init__(self) -> None:
        if not abs(self.eps) < 0.5:
            raise AdmissibilityError(f"|eps| must be below 1/2, got {self.eps!r}")
        if not self.d >= 1.0:
            raise AdmissibilityError(f"half-distance d must be at least 1, got {self.d!r}")
        if not np.isfinite(self.W):
            raise AdmissibilityError("W must be finite")
        if self.p.N != self.q.N:
            raise ValueError(f"p and q truncations differ ({self.p.N} vs {self.q.N})")
        e = self.eps**2
        for name, c in (("radius r", self.p.coeffs), ("strength factor gamma", self.q.coeffs)):
            # |eps^2 c|_1 < 1 already guarantees positivity; otherwise sample finely
            if e * np.abs(c).sum() >= 1.0:
                x = np.linspace(0.0, np.pi, 16 * c.size + 1)
                low = float((1.0 + e * evaluate(EvenSeries(c), x)).min())
                if not low > 0.0:
                    raise AdmissibilityError(f"{name} is not positive (min {low:.3e})")

    @property
    def N(self) -> int:
        return self.p.N

    @classmethod
    def circle(cls, eps: float, d: float, W: float, N: int) -> SheetState:
        return cls(eps, d, W, EvenSeries.zeros(N), EvenSeries.zeros(N))

    def with_W(self, W: float) -> SheetState:
        return SheetState(self.eps, self.d, W, self.p, self.q)


@dataclass(frozen=True)
class ResidualPair:
    f: OddSeries
    g: EvenSeries
    g_mean_removed: float

    def vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.f.coeffs, self.g.coeffs])

    def sup(self) -> float:
        return float(np.max(np.abs(self.vector())))


@dataclass(frozen=True)
class Tables:
    """Grid-dependent arrays shared by all evaluations at fixed (M, N)."""

    M: int
    N: int
    x: NDArray[np.float64]
    eix: NDArray[np.complex128]
    cos_x: NDArray[np.float64]  # (M, N) cos(j x_i)
    sin_x: NDArray[np.float64]
    cos_s: NDArray[np.float64]  # (M, N) cos(j xs_m) on staggered nodes
    jj: NDArray[np.float64]
    gather: NDArray[np.intp]
    sin_d: NDArray[np.float64]
    cos_d: NDArray[np.float64]
    chord_sq: NDArray[np.float64]  # D0 = 4 sin^2(delta/2)
    chord_m3: NDArray[np.float64]  # D0^{-3/2}
    c_M: float


@lru_cache(maxsize=8)
def tables(M: int, N: int) -> Tables:
    if N > M // 2:
        raise ValueError(f"N={N} exceeds the Nyquist limit of M={M}")
    st = stencil(M)
    x = Grid(M).nodes
    xs = Grid(M, stagger=True).nodes
    jj = np.arange(1, N + 1, dtype=np.float64)
    D0 = st.chord_sq
    out = Tables(
        M=M,
        N=N,
        x=x,
        eix=np.exp(1j * x),
        cos_x=np.cos(np.multiply.outer(x, jj)),
        sin_x=np.sin(np.multiply.outer(x, jj)),
        cos_s=np.cos(np.multiply.outer(xs, jj)),
        jj=jj,
        gather=st.gather,
        sin_d=st.sin_d,
        cos_d=st.cos_d,
        chord_sq=D0,
        chord_m3=D0**-1.5,
        c_M=st.c_M,
    )
    for v in vars(out).values():
        if isinstance(v, np.ndarray):
            v.setflags(write=False)
    return out


def _phi(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    """(b^{-3/2} - a^{-3/2}) / (b - a), cancellation-free, limit -3/2 a^{-5/2}."""
    sa = np.sqrt(a)
    sb = np.sqrt(b)
    return -(a + sa * sb + b) / ((sa + sb) * (a * b) ** 1.5)


@dataclass(frozen=True)
class Fields:
    """Nodal F and finite-part Gt split as X = X0 + W * XW."""

    F0: NDArray[np.float64]
    FW: NDArray[np.float64]
    G0: NDArray[np.float64]
    GW: NDArray[np.float64]

    def F(self, W: float) -> NDArray[np.float64]:
        return self.F0 + W * self.FW

    def Gt(self, W: float) -> NDArray[np.float64]:
        return self.G0 + W * self.GW


def _check_admissible(
    eps: float, d: float, r: NDArray[np.float64], rs: NDArray[np.float64], g: NDArray[np.float64], gs: NDArray[np.float64]
) -> None:
    rmin = min(float(r.min()), float(rs.min()))
    if not rmin > 0.0:
        raise AdmissibilityError(f"non-positive radius r = {rmin:.3e}")
    gmin = min(float(g.min()), float(gs.min()))
    if not gmin > 0.0:
        raise AdmissibilityError(f"non-positive strength factor gamma = {gmin:.3e}")
    reach = abs(eps) * max(float(r.max()), float(rs.max()))
    if not reach < d - 0.5:
        raise AdmissibilityError(
            f"sheets too close: eps * max r = {reach:.6g} is not below d - 1/2 = {d - 0.5:.6g}"
        )


def _select(eps: float, path: Path, eps_switch: float) -> str:
    if path == "auto":
        return "regularized" if abs(eps) < eps_switch else "direct"
    if path not in ("direct", "regularized"):
        raise ValueError(f"unknown evaluation path {path!r}")
    if path == "direct" and eps == 0.0:
        raise ValueError("the direct path divides by eps^2 and is undefined at eps = 0")
    return path


def fields(
    eps: float,
    d: float,
    a: NDArray[np.float64],
    b: NDArray[np.float64],
    tb: Tables,
    path: Path = "auto",
    eps_switch: float = EPS_SWITCH,
) -> Fields:
    """Core evaluator on raw cosine coefficients a (of p) and b (of q)."""
    which = _select(eps, path, eps_switch)
    e = eps * eps
    # elementwise products with pairwise sums: no BLAS, results independent of threading
    p = (tb.cos_x * a).sum(axis=1)
    dp = -(tb.sin_x * (tb.jj * a)).sum(axis=1)
    q = (tb.cos_x * b).sum(axis=1)
    ps = (tb.cos_s * a).sum(axis=1)
    qs = (tb.cos_s * b).sum(axis=1)
    r = 1.0 + e * p
    rs_nodes = 1.0 + e * ps
    _check_admissible(eps, d, r, rs_nodes, 1.0 + e * q, 1.0 + e * qs)

    pb = ps[tb.gather]
    qb = qs[tb.gather]
    P = p[:, None]
    DP = dp[:, None]
    sd = tb.sin_d
    cd = tb.cos_d
    D0 = tb.chord_sq
    D0m = tb.chord_m3

    # with zb = (1 + e pb) e^{i(x + delta)}: normal and tangential numerators
    # N = N0 + e N1, T = T0 + e T1 and |z - zb|^2 = D0 + e B
    N1 = DP * (1.0 + e * P) - DP * (1.0 + e * pb) * cd - (P + pb + e * P * pb) * sd
    T1 = 2.0 * P + e * P**2 - (P + pb + e * P * pb) * cd + (1.0 + e * pb) * DP * sd
    B = e * (P - pb) ** 2 + D0 * (P + pb + e * P * pb)
    D = D0 + e * B
    gb = 1.0 + e * qb

    rp = e * dp
    g = 1.0 + e * q
    zx2 = r * r + rp * rp

    if which == "direct":
        Dm = D**-1.5
        Fs = np.mean((-sd + e * N1) * Dm * gb, axis=1) * (-1.0 / e)
        Gs = (g / zx2) * np.mean((0.5 * D0 + e * T1) * Dm * gb, axis=1) / e - tb.c_M / e
    else:
        bph = B * _phi(D0, D)
        Pm = D0m + e * bph
        Fs = -np.mean(-sd * (bph * gb + D0m * qb) + N1 * Pm * gb, axis=1)
        Gs = (g / zx2) * np.mean(0.5 * D0 * (bph * gb + D0m * qb) + T1 * Pm * gb, axis=1)
        Gs = Gs + tb.c_M * (q - 2.0 * p - e * (p * p + dp * dp)) / zx2

    z = r * tb.eix
    zx = tb.eix * (rp + 1j * r)
    Y = eps * z[:, None] + eps * z[None, :] - 2.0 * d
    Yam = np.abs(Y) ** -3
    gk = g[None, :]
    ZX = np.conj(zx)[:, None]
    Ff = np.mean((Y * ZX).real * gk * Yam, axis=1)
    Gf = -(g / zx2) * np.mean((1j * Y * ZX).real * gk * Yam, axis=1)

    s, c = np.sin(tb.x), np.cos(tb.x)
    FW = -(r * s - rp * c)
    GW = -g * (rp * s + r * c) / zx2
    return Fields(Fs + Ff, FW, Gs + Gf, GW)


def _state_fields(state: SheetState, grid: Grid, path: Path, eps_switch: float) -> Fields:
    tb = tables(grid.M, state.N)
    return fields(state.eps, state.d, state.p.coeffs, state.q.coeffs, tb, path, eps_switch)


def eval_F(state: SheetState, grid: Grid, path: Path = "auto", eps_switch: float = EPS_SWITCH) -> NDArray[np.float64]:
    """F at the plain grid nodes."""
    return _state_fields(state, grid, path, eps_switch).F(state.W)


def eval_G(
    state: SheetState, grid: Grid, path: Path = "auto", eps_switch: float = EPS_SWITCH
) -> tuple[NDArray[np.float64], float]:
    """(I - P0) Gt at the nodes, and the removed mean (finite part, c_M/eps^2 excluded)."""
    Gt = _state_fields(state, grid, path, eps_switch).Gt(state.W)
    m = float(np.mean(Gt))
    return Gt - m, m


def residual(
    state: SheetState, grid: Grid, path: Path = "auto", eps_switch: float = EPS_SWITCH
) -> ResidualPair:
    fl = _state_fields(state, grid, path, eps_switch)
    f, _ = analyze(fl.F(state.W), "odd", state.N)
    g, m = analyze(fl.Gt(state.W), "even", state.N)
    return ResidualPair(f, g, m)


# velocity path ---------------------------------------------------------------


def _curve(state: SheetState, t: NDArray[np.float64]) -> tuple[NDArray, NDArray, NDArray]:
    """z, z_x and gamma at angles t (any shape)."""
    e = state.eps**2
    r = 1.0 + e * evaluate(state.p, t)
    rp = e * evaluate(differentiate(state.p), t)
    gam = 1.0 + e * evaluate(state.q, t)
    eit = np.exp(1j * t)
    return r * eit, eit * (rp + 1j * r), gam


def _velocity(
    state: SheetState, t: NDArray[np.float64], grid: Grid, at_nodes: bool = False
) -> NDArray[np.complex128]:
    if state.eps == 0.0:
        raise ValueError(
            "the rescaled velocity is singular at eps = 0; use the regularized residuals (eval_F/eval_G)"
        )
    # the 1/eps^2 self term cancels ~ (M/pi)^2/eps^2-sized contributions in pairs,
    # so it is accumulated in extended precision
    ld = np.longdouble
    e = ld(state.eps) ** 2
    off = _offsets_ld(grid.M)
    tl = np.asarray(t, dtype=ld)
    if at_nodes:
        # x_i + delta_k is staggered node (i + k) mod M
        xs = (2 * np.arange(grid.M, dtype=ld) + 1) * _PI_LD / grid.M
        gather = stencil(grid.M).gather
        p_src = _evaluate_ld(state.p, xs)[gather]
        q_src = _evaluate_ld(state.q, xs)[gather]
        tl = 2 * np.arange(grid.M, dtype=ld) * _PI_LD / grid.M
    else:
        src = tl[:, None] + off[None, :]
        p_src = _evaluate_ld(state.p, src)
        q_src = _evaluate_ld(state.q, src)
    dr = e * (_evaluate_ld(state.p, tl)[:, None] - p_src)
    rs = 1 + e * p_src
    gs = 1 + e * q_src
    zt, _, gt = _curve(state, t)
    _check_admissible(state.eps, state.d, np.abs(zt), rs.astype(np.float64), gt, gs.astype(np.float64))
    # z(t) - z(t + delta) = e^{it} [(r_t - r_s) - 2i r_s sin(delta/2) e^{i delta/2}] without cancellation
    chord = -2j * np.sin(off / 2) * np.exp(1j * off / 2)
    diff = np.exp(1j * tl)[:, None] * (dr + rs * chord[None, :])
    self_term = (np.mean(1j * diff * gs / np.abs(diff) ** 3, axis=1) / e).astype(np.complex128)
    zg, _, gg = _curve(state, grid.nodes)
    Y = state.eps * zt[:, None] + state.eps * zg[None, :] - 2.0 * state.d
    far = np.mean(1j * Y * gg[None, :] / np.abs(Y) ** 3, axis=1)
    return self_term - far


def _offsets_ld(M: int) -> NDArray[np.longdouble]:
    # pi in extended precision: float64 pi carries a 1e-16 error that would bias the pairing
    dk = (2 * np.arange(M // 2, dtype=np.longdouble) + 1) * _PI_LD / M
    return np.concatenate([dk, (2 * _PI_LD - dk)[::-1]])


_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


def _evaluate_ld(series: EvenSeries, t: NDArray[np.longdouble]) -> NDArray[np.longdouble]:
    j = np.arange(1, series.N + 1, dtype=np.longdouble)
    return (np.cos(np.multiply.outer(t, j)) * series.coeffs.astype(np.longdouble)).sum(axis=-1)


def eval_velocity(state: SheetState, x: float, grid: Grid) -> NDArray[np.float64]:
    """Rescaled velocity (u1, u2) at the point z(x) of sheet 1."""
    u = _velocity(state, np.array([float(x)]), grid)[0]
    return np.array([u.real, u.imag])


def velocity_at_nodes(state: SheetState, grid: Grid) -> NDArray[np.complex128]:
    return _velocity(state, grid.nodes, grid, at_nodes=True)


def verify_tangency(state: SheetState, grid: Grid) -> NDArray[np.float64]:
    """(u - W e2) . n at the nodes, n = s^perp with s the unit counterclockwise tangent."""
    u = velocity_at_nodes(state, grid)
    _, zx, _ = _curve(state, grid.nodes)
    n = 1j * zx / np.abs(zx)
    return ((u - 1j * state.W) * np.conj(n)).real


def verify_strength(state: SheetState, grid: Grid) -> tuple[NDArray[np.float64], float]:
    """Nodal (u - W e2) . s gamma / |z_x| and K with the quantity's mean equal to -K."""
    u = velocity_at_nodes(state, grid)
    _, zx, gam = _curve(state, grid.nodes)
    s = zx / np.abs(zx)
    vals = ((u - 1j * state.W) * np.conj(s)).real * gam / np.abs(zx)
    return vals, -float(np.mean(vals))


def F_from_velocity(state: SheetState, grid: Grid) -> NDArray[np.float64]:
    """-(u - W e2) . z_x^perp assembled from the velocity path."""
    u = velocity_at_nodes(state, grid)
    _, zx, _ = _curve(state, grid.nodes)
    return -((u - 1j * state.W) * np.conj(1j * zx)).real


# comparison-only transcriptions ----------------------------------------------


def stagger_offsets(grid: Grid) -> NDArray[np.float64]:
    """delta_k = (2k+1) pi / M, k = 0..M-1."""
    M = grid.M
    dk = (2.0 * np.arange(M // 2) + 1.0) * np.pi / M
    return np.concatenate([dk, (2.0 * np.pi - dk)[::-1]])


@dataclass(frozen=True)
class _LiteralParts:
    x: NDArray[np.float64]
    R: NDArray[np.float64]  # r(x), column
    Rp: NDArray[np.float64]  # r'(x), column
    near_rb: NDArray[np.float64]  # r'(xb) on the staggered stencil
    near_gb: NDArray[np.float64]
    near_dx: NDArray[np.float64]  # x - xb
    far_rb: NDArray[np.float64]  # r'(xb) on the plain grid
    far_gb: NDArray[np.float64]
    far_dx: NDArray[np.float64]
    far_m3: NDArray[np.float64]  # far distance^{-3}


def _literal_parts(state: SheetState, grid: Grid) -> _LiteralParts:
    if state.eps == 0.0:
        raise ValueError("the literal transcription divides by eps^2 and is undefined at eps = 0")
    e = state.eps**2
    dps = differentiate(state.p)
    x = grid.nodes
    R = (1.0 + e * evaluate(state.p, x))[:, None]
    Rp = (e * evaluate(dps, x))[:, None]
    xb = x[:, None] + stagger_offsets(grid)[None, :]
    xg = x[None, :]
    far_rb = e * evaluate(dps, xg)
    X = state.eps * R * np.cos(x)[:, None] + state.eps * far_rb * np.cos(xg) - 2.0 * state.d
    Yy = state.eps * R * np.sin(x)[:, None] + state.eps * far_rb * np.sin(xg)
    return _LiteralParts(
        x=x,
        R=R,
        Rp=Rp,
        near_rb=e * evaluate(dps, xb),
        near_gb=1.0 + e * evaluate(state.q, xb),
        near_dx=x[:, None] - xb,
        far_rb=far_rb,
        far_gb=1.0 + e * evaluate(state.q, xg),
        far_dx=x[:, None] - xg,
        far_m3=(X**2 + Yy**2) ** -1.5,
    )


def eval_F_literal(state: SheetState, grid: Grid) -> NDArray[np.float64]:
    """F transcribed with r'(xb) wherever the chord formula would use r(xb).

    Kept only to quantify how far that reading is from the consistent model.
    """
    L = _literal_parts(state, grid)
    R, Rp, d = L.R, L.Rp, state.d
    c, s = np.cos(L.near_dx), np.sin(L.near_dx)
    num = R * Rp - Rp * L.near_rb * c + R * L.near_rb * s
    den = ((R - L.near_rb) ** 2 + 4.0 * R * L.near_rb * np.sin(0.5 * L.near_dx) ** 2) ** 1.5
    cf, sf = np.cos(L.far_dx), np.sin(L.far_dx)
    num2 = R * Rp + Rp * L.far_rb * cf - R * L.far_rb * sf
    num3 = 2.0 * d * R * np.sin(L.x)[:, None] - 2.0 * d * Rp * np.cos(L.x)[:, None]
    F = -state.W * (R[:, 0] * np.sin(L.x) - Rp[:, 0] * np.cos(L.x))
    F = F + np.mean(num * L.near_gb / den, axis=1) / state.eps**2
    F = F - np.mean(num2 * L.far_gb * L.far_m3, axis=1)
    return F + np.mean(num3 * L.far_gb * L.far_m3, axis=1)


def eval_G_literal(state: SheetState, grid: Grid) -> tuple[NDArray[np.float64], float]:
    """Companion of :func:`eval_F_literal` for (I - P0) Gt; returns (values, removed mean)."""
    L = _literal_parts(state, grid)
    R, Rp, d = L.R, L.Rp, state.d
    gam = 1.0 + state.eps**2 * evaluate(state.q, L.x)
    pref = gam / (Rp[:, 0] ** 2 + R[:, 0] ** 2)
    c, s = np.cos(L.near_dx), np.sin(L.near_dx)
    num = -(R**2) + R * L.near_rb * c + Rp * L.near_rb * s
    den = ((R - L.near_rb) ** 2 + 4.0 * R * L.near_rb * np.sin(0.5 * L.near_dx) ** 2) ** 1.5
    cf, sf = np.cos(L.far_dx), np.sin(L.far_dx)
    num2 = R**2 + R * L.far_rb * cf + Rp * L.far_rb * sf
    num3 = 2.0 * d * R * np.cos(L.x)[:, None] + 2.0 * d * Rp * np.sin(L.x)[:, None]
    G = -pref * state.W * (Rp[:, 0] * np.sin(L.x) + R[:, 0] * np.cos(L.x))
    G = G + pref * np.mean(num * L.near_gb / den, axis=1) / state.eps**2
    G = G + pref * np.mean((num2 + num3) * L.far_gb * L.far_m3, axis=1)
    m = float(np.mean(G))
    return G - m, m


def closed_form_leading_F(state: SheetState, grid: Grid) -> NDArray[np.float64]:
    """Closed-form eps = 0 leading terms with unit p' weight 1/2 and far coefficient 1/(2d^2):

        F = -W sin x + p'/2 + S[q] - sin(x) / (2 d^2)

    S is the sine kernel.  Comparison only; the discrete model differs.
    """
    x = grid.nodes
    return (
        -state.W * np.sin(x)
        + 0.5 * synth(differentiate(state.p), grid)
        + sine_kernel_apply(state.q, grid)
        - np.sin(x) / (2.0 * state.d**2)
    )


def closed_form_leading_G(state: SheetState, grid: Grid) -> NDArray[np.float64]:
    """(I - P0)[-W cos x + p - K[p] - q/2 - cos(x) / (2 d^2)], K the even-difference kernel."""
    x = grid.nodes
    G = (
        -state.W * np.cos(x)
        + synth(state.p, grid)
        - even_kernel_apply(state.p, grid)
        - 0.5 * synth(state.q, grid)
        - np.cos(x) / (2.0 * state.d**2)
    )
    return G - np.mean(G)
