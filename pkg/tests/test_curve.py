from dataclasses import dataclass, field

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.stats import spearmanr

from ican.curve import (BumpCurve, CurveModel, fit_curve, fit_parametric_l2,
                        isomap_embed_1d, principal_curve_fit, project_points,
                        project_to_curve)
from ican.data import gen_dataset1, gen_section3, normalize


@dataclass
class LineCurve:
    grid: np.ndarray = field(default_factory=lambda: np.linspace(-0.5, 1.5, 2000))

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return t, np.zeros_like(t)


def test_isomap_line_is_monotone():
    pos = np.linspace(0, 1, 20)
    P = np.column_stack([2 * pos + 1, -pos])
    t = isomap_embed_1d(P, k=3)
    d = np.diff(t)
    assert np.all(d > 0) or np.all(d < 0)


def test_isomap_quarter_circle_keeps_arc_order():
    a = np.linspace(0, np.pi / 2, 100)
    order = np.random.default_rng(0).permutation(100)
    P = np.column_stack([np.cos(a), np.sin(a)])[order]
    t = isomap_embed_1d(P, k=10)
    assert abs(spearmanr(t, a[order]).correlation) == pytest.approx(1.0)


def test_isomap_escalates_k_for_clusters():
    rng = np.random.default_rng(1)
    P = np.vstack([rng.normal(0, 0.1, (15, 2)), rng.normal(10, 0.1, (15, 2))])
    t = isomap_embed_1d(P, k=2)
    assert t.shape == (30,)
    assert np.all(np.isfinite(t))
    # the two clusters end up on opposite sides
    assert np.sign(t[:15].mean()) != np.sign(t[15:].mean())


def test_isomap_rigid_motion_equivariance():
    rng = np.random.default_rng(2)
    s = np.sort(rng.uniform(0, 3, 60))
    P = np.column_stack([s, np.sin(s)]) + rng.normal(0, 0.02, (60, 2))
    th = 0.7
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    t1 = isomap_embed_1d(P)
    t2 = isomap_embed_1d(P @ R.T + [5.0, -3.0])
    assert abs(spearmanr(t1, t2).correlation) == pytest.approx(1.0)


def test_isomap_too_few_points():
    with pytest.raises(ValueError):
        isomap_embed_1d(np.zeros((5, 2)), k=10)


def test_projection_onto_line():
    t, d = project_to_curve(LineCurve(), (0.3, 1.0))
    assert t == pytest.approx(0.3, abs=1e-7)
    assert d == pytest.approx(1.0, abs=1e-12)


def test_point_on_curve_at_grid_node():
    curve = BumpCurve(np.array([[4.0, 4.0], [1.0, -1.0]]))
    t0 = curve.grid[700]
    u, v = curve.evaluate(t0)
    t, d = project_to_curve(curve, (float(u), float(v)))
    assert t == pytest.approx(t0, abs=1e-7)
    assert d < 1e-9


def _brute(curve, x, y, m=100_000, refine=False):
    g = np.linspace(curve.grid[0], curve.grid[-1], m)
    gu, gv = curve.evaluate(g)
    out = np.empty(x.size)
    for i in range(x.size):
        d2 = (x[i] - gu) ** 2 + (y[i] - gv) ** 2
        j = int(np.argmin(d2))
        out[i] = d2[j]
        if refine:
            a, b = g[max(j - 1, 0)], g[min(j + 1, m - 1)]
            f = lambda s: float(np.sum((np.array(curve.evaluate(s)).ravel() - [x[i], y[i]]) ** 2))
            r = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-13})
            out[i] = min(out[i], r.fun)
    return np.sqrt(out)


def test_projection_matches_dense_brute_force():
    rng = np.random.default_rng(3)
    bump = BumpCurve(np.array([[4.0, 3.5], [1.2, -0.8]]))
    t = rng.uniform(0, 1, 40)
    gp = fit_curve(np.sin(3 * t), np.cos(2 * t), t)
    for curve in (bump, gp):
        u, v = curve.evaluate(rng.uniform(0, 1, 50))
        x, y = u + rng.normal(0, 0.2, 50), v + rng.normal(0, 0.2, 50)
        _, d = project_points(curve, x, y)
        # the plain grid carries its own spacing error on fast stretches of
        # the curve, so it only bounds the distance from above
        assert np.all(d <= _brute(curve, x, y) + 1e-6)
        np.testing.assert_allclose(d, _brute(curve, x, y, refine=True), atol=1e-6)


def test_projection_keeps_current_when_closer():
    curve = LineCurve()
    t, d = project_points(curve, [0.3], [1.0], t_current=[0.3 + 1e-14])
    assert t[0] == 0.3 + 1e-14


def test_principal_curve_on_noiseless_line():
    s = np.linspace(0, 1, 60)
    x, y = s, 0.5 * s
    fit = principal_curve_fit((x - x.mean()) / x.std(), (y - y.mean()) / y.std())
    assert fit.l2 < 1e-3 * 60
    assert abs(spearmanr(fit.t, s).correlation) == pytest.approx(1.0)


def test_principal_curve_log_is_monotone():
    d = normalize(gen_dataset1(120, seed=4))
    fit = principal_curve_fit(d.x, d.y)
    accepted = [h["after"] for h in fit.history if h["accepted"]]
    assert all(b <= a for a, b in zip(accepted, accepted[1:]))
    assert all(h["after"] <= h["before"] + 1e-12 for h in fit.history)
    assert fit.l2 == pytest.approx(accepted[-1])
    assert isinstance(fit.curve, CurveModel)
    lo, hi = fit.curve.t_range
    assert fit.curve.grid[0] < lo and fit.curve.grid[-1] > hi


def test_principal_curve_rejects_degenerate():
    with pytest.raises(ValueError):
        principal_curve_fit(np.ones(20), np.arange(20.0))


def test_parametric_fit_noise_free_recovers_truth():
    s = gen_section3(200, seed=0)
    x, y = s.truth.curve(s.truth.t)
    fit = fit_parametric_l2(x, y)
    c = fit.curve.coef
    if c[1, 0] < c[1, 1]:
        c = c[:, ::-1]
    np.testing.assert_allclose(c.ravel(), [4, 4, 1, -1], atol=0.05)


def test_parametric_fit_zero_y_gives_zero_coefficients():
    rng = np.random.default_rng(5)
    t = rng.uniform(0, 1, 100)
    x = 4 * BumpCurve(np.array([[1.0, 1.0], [0.0, 0.0]])).evaluate(t)[0] + rng.uniform(-0.1, 0.1, 100)
    fit = fit_parametric_l2(x, np.zeros(100), t0=t)
    np.testing.assert_array_equal(fit.curve.coef[1], 0.0)


def test_parametric_fit_log_monotone():
    s = gen_section3(200, seed=1)
    fit = fit_parametric_l2(s.x, s.y, polish_budget=300)
    accepted = [h["after"] for h in fit.history if h["accepted"]]
    assert all(b <= a + 1e-12 for a, b in zip(accepted, accepted[1:]))
