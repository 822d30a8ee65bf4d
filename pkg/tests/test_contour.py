from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqgsheets.contour import (
    F_from_velocity,
    SheetState,
    closed_form_leading_F,
    closed_form_leading_G,
    eval_F,
    eval_F_literal,
    eval_G,
    eval_G_literal,
    eval_velocity,
    residual,
    verify_strength,
    verify_tangency,
)
from sqgsheets.errors import AdmissibilityError
from sqgsheets.trig import EvenSeries, Grid, analyze

G256 = Grid(256)


def random_state(rng, eps, N=32, scale=0.5, W=0.25):
    decay = np.exp(-np.arange(N) / 3.0)
    a = rng.normal(size=N) * decay * scale
    b = rng.normal(size=N) * decay * scale
    return SheetState(eps, 1.0, W, EvenSeries(a), EvenSeries(b))


def test_circle_at_zero_eps_is_pure_first_harmonic():
    x = G256.nodes
    for W in (0.0, 0.25, 0.3):
        s = SheetState.circle(0.0, 1.0, W, 32)
        np.testing.assert_allclose(eval_F(s, G256), (0.25 - W) * np.sin(x), atol=1e-15)
        G, _ = eval_G(s, G256)
        np.testing.assert_allclose(G, (0.25 - W) * np.cos(x), atol=1e-15)


def test_far_field_scales_with_separation():
    s = SheetState.circle(0.0, 2.0, 0.0, 32)
    f, _ = analyze(eval_F(s, G256), "odd", 2)
    assert f.coeffs[0] == pytest.approx(1.0 / 16.0, rel=1e-14)


def test_closed_form_leading_terms():
    x = G256.nodes
    W = 0.1
    s = SheetState.circle(0.0, 1.0, W, 8)
    np.testing.assert_allclose(closed_form_leading_F(s, G256), (-W - 0.5) * np.sin(x), atol=1e-15)
    np.testing.assert_allclose(closed_form_leading_G(s, G256), (-W - 0.5) * np.cos(x), atol=1e-15)
    p1 = SheetState(0.0, 1.0, 0.0, EvenSeries.mode(1, 8), EvenSeries.zeros(8))
    np.testing.assert_allclose(closed_form_leading_F(p1, G256), -np.sin(x), atol=1e-15)
    q1 = SheetState(0.0, 1.0, 0.0, EvenSeries.zeros(8), EvenSeries.mode(1, 8))
    base = SheetState.circle(0.0, 1.0, 0.0, 8)
    dG = closed_form_leading_G(q1, G256) - closed_form_leading_G(base, G256)
    np.testing.assert_allclose(dG, -0.5 * np.cos(x), atol=1e-15)


def test_residual_is_affine_in_W(rng):
    s = random_state(rng, 0.05)
    r = [residual(s.with_W(W), G256).vector() for W in (0.0, 1.0, 2.5)]
    np.testing.assert_allclose(r[2] - r[0], 2.5 * (r[1] - r[0]), atol=1e-12)


def test_G_mean_is_removed(rng):
    for eps in (0.0, 0.01, 0.05, 0.2):
        s = random_state(rng, eps)
        for path in ("direct", "regularized"):
            if eps == 0.0 and path == "direct":
                continue
            G, _ = eval_G(s, G256, path)
            assert abs(np.mean(G)) < 1e-15


def test_dual_paths_agree(rng):
    for eps in (0.02, 0.05, 0.1):
        s = random_state(rng, eps)
        gap = np.max(np.abs(eval_F(s, G256, "direct") - eval_F(s, G256, "regularized")))
        terms = np.max(np.abs(eval_F(s, G256)))
        assert gap <= 10 * eps**2 * terms
        # frozen: the paths differ by roundoff only
        assert gap < 1e-9 * max(1.0, terms)
        Gd, Gr = eval_G(s, G256, "direct")[0], eval_G(s, G256, "regularized")[0]
        assert np.max(np.abs(Gd - Gr)) < 1e-9 * max(1.0, np.max(np.abs(Gd)))


def test_direct_path_rejects_zero_eps():
    with pytest.raises((ValueError, ZeroDivisionError)):
        eval_F(SheetState.circle(0.0, 1.0, 0.0, 4), Grid(16), "direct")


def test_unsolved_circle_residual_is_small_but_nonzero():
    s = SheetState.circle(0.05, 1.0, 0.25, 32)
    r = residual(s, G256).sup()
    assert 1e-4 < r < 0.05


def test_admissibility():
    z = EvenSeries.zeros(4)
    with pytest.raises(AdmissibilityError):
        SheetState(0.5, 1.0, 0.0, z, z)
    with pytest.raises(AdmissibilityError):
        SheetState(0.1, 0.9, 0.0, z, z)
    with pytest.raises(AdmissibilityError):
        eval_F(SheetState(0.45, 1.0, 0.0, EvenSeries([40.0]), EvenSeries.zeros(1)), Grid(16))
    # a vanishing strength factor gamma = 0 everywhere is not representable
    with pytest.raises(AdmissibilityError):
        eval_F(SheetState(0.1, 1.0, 0.0, EvenSeries.zeros(1), EvenSeries([-1e4])), Grid(16))


def test_velocity_reflection_symmetry(rng):
    s = random_state(rng, 0.05)
    for x in (0.3, 1.1, 2.7):
        u, v = eval_velocity(s, x, G256), eval_velocity(s, -x, G256)
        scale = np.max(np.abs(u))
        assert abs(u[0] + v[0]) < 1e-12 * scale
        assert abs(u[1] - v[1]) < 1e-12 * scale
    with pytest.raises(ValueError):
        eval_velocity(SheetState.circle(0.0, 1.0, 0.0, 4), 0.0, Grid(16))


def test_velocity_path_matches_formula_path(rng):
    for eps in (0.02, 0.05, 0.1):
        s = random_state(rng, eps)
        F = eval_F(s, G256)
        assert np.max(np.abs(F_from_velocity(s, G256) - F)) < 1e-8 * np.max(np.abs(F))


def test_circle_strength_nearly_constant():
    vals, K = verify_strength(SheetState.circle(0.02, 1.0, 0.25, 32), G256)
    assert np.std(vals) / abs(np.mean(vals)) < 1e-4
    assert K == pytest.approx(-np.mean(vals))


def test_converged_solution_checks(sweep):
    rec = sweep[5]  # eps = 0.05
    s = rec.state()
    assert np.max(np.abs(verify_tangency(s, G256))) < 1e-7
    vals, _ = verify_strength(s, G256)
    stds = [np.std(vals) / abs(np.mean(vals))]
    assert stds[0] < 1e-6
    for dW in (1e-4, 1e-3, 1e-2):
        v, _ = verify_strength(s.with_W(s.W + dW), G256)
        stds.append(np.std(v) / abs(np.mean(v)))
    assert all(b > a for a, b in zip(stds, stds[1:]))


def test_literal_transcription_is_comparison_only():
    s = SheetState.circle(0.05, 1.0, 0.25, 32)
    gap = np.max(np.abs(eval_F_literal(s, G256) - eval_F(s, G256)))
    assert 0 < gap < 1e-3
    Gl, _ = eval_G_literal(s, G256)
    # the literal terms carry 1/eps^2-sized parts, so the mean is zero at that roundoff level
    assert abs(np.mean(Gl)) < 1e-15 / s.eps**2


@settings(max_examples=20, deadline=None)
@given(eps=st.floats(0.001, 0.2), seed=st.integers(0, 2**31))
def test_F_is_odd_and_G_even_for_even_shapes(eps, seed):
    s = random_state(np.random.default_rng(seed), eps, N=8, scale=0.3)
    g = Grid(64)
    F, G = eval_F(s, g), eval_G(s, g)[0]
    rev = (-np.arange(64)) % 64
    assert np.max(np.abs(F + F[rev])) < 1e-11 * max(1.0, np.max(np.abs(F)))
    assert np.max(np.abs(G - G[rev])) < 1e-11 * max(1.0, np.max(np.abs(G)))
