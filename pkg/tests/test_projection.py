import copy

import numpy as np
import pytest
from scipy.stats import gamma

from ican.curve import BumpCurve, fit_curve
from ican.data import gen_section3
from ican.dependence import DegenerateSampleError, gamma_null_params, gram_matrix
from ican.projection import (dependence_objective, dependence_reports, optimize_projection,
                             residuals, simplex_minimize)


def rosenbrock(p):
    return (1 - p[0]) ** 2 + 100 * (p[1] - p[0] ** 2) ** 2


def test_simplex_convex_quadratic():
    res = simplex_minimize(lambda x: np.sum((x - 1) ** 2), np.zeros(5), 2000)
    assert np.max(np.abs(res.x - 1)) < 1e-3
    assert res.nfev <= 2000


def test_simplex_rosenbrock():
    res = simplex_minimize(rosenbrock, np.array([-1.2, 1.0]), 5000)
    assert res.fun < 1e-4


def test_simplex_budget_exhausted_returns_best_so_far():
    calls = []

    def f(x):
        calls.append(rosenbrock(x))
        return calls[-1]

    res = simplex_minimize(f, np.array([-1.2, 1.0]), 20)
    assert res.budget_exhausted
    assert res.nfev == len(calls) <= 20
    assert res.fun == min(calls)
    assert res.fun == rosenbrock(res.x)


def test_simplex_converged_not_flagged():
    res = simplex_minimize(lambda x: float(x @ x), np.ones(2), 5000)
    assert not res.budget_exhausted


def test_simplex_nonfinite_values_rejected():
    f = lambda x: np.nan if x[0] > 0.5 else float((x[0] - 0.3) ** 2)
    res = simplex_minimize(f, np.array([0.0]), 500)
    assert res.x[0] == pytest.approx(0.3, abs=1e-5)


def test_simplex_deterministic():
    a = simplex_minimize(rosenbrock, np.array([-1.2, 1.0]), 300)
    b = simplex_minimize(rosenbrock, np.array([-1.2, 1.0]), 300)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.fun == b.fun and a.nfev == b.nfev


def test_simplex_budget_too_small():
    with pytest.raises(ValueError):
        simplex_minimize(rosenbrock, np.zeros(2), 2)


def _true_model(n=100, seed=0):
    s = gen_section3(n, seed=seed)
    return BumpCurve(np.array([[4.0, 4.0], [1.0, -1.0]])), s


def _n_hsic_and_null(a, b):
    K, _ = gram_matrix(a)
    L, _ = gram_matrix(b)
    shape, scale = gamma_null_params(K, L)
    Kc = K - K.mean(0) - K.mean(1)[:, None] + K.mean()
    return np.sum(Kc * L) / a.size, gamma.ppf(0.95, shape, scale=scale)


def test_objective_at_truth_below_null_quantiles():
    # each term exceeds its 95% quantile with probability about 0.05, so
    # look at the exceedance rate over many seeds
    exceed = []
    for seed in range(30):
        curve, s = _true_model(200, seed=seed)
        t = s.truth.t
        nx, ny = residuals(t, curve, s.x, s.y)
        for a, b in ((nx, ny), (nx, t), (ny, t)):
            stat, q95 = _n_hsic_and_null(a, b)
            exceed.append(stat > q95)
        assert dependence_objective(t, curve, s.x, s.y) >= 0
    assert np.mean(exceed) <= 0.12


def test_objective_clamps_latents():
    curve, s = _true_model(30)
    t = s.truth.t.copy()
    t2 = t.copy()
    t2[0] = 7.0
    t3 = t.copy()
    t3[0] = 1.5
    assert dependence_objective(t2, curve, s.x, s.y) == dependence_objective(t3, curve, s.x, s.y)


def test_objective_degenerate_residuals():
    curve, s = _true_model(30)
    u, v = curve.evaluate(s.truth.t)
    with pytest.raises(DegenerateSampleError):
        dependence_objective(s.truth.t, curve, u + 1.0, s.y)


def test_optimize_from_independent_start_stays_independent():
    curve, s = _true_model(60, seed=3)
    res = optimize_projection(curve, s.x, s.y, s.truth.t, budget=1500)
    assert res.objective <= res.initial_objective
    assert min(res.pvalues) >= 0.05


@pytest.mark.xfail(strict=True, reason="with n free latent values the simplex also fits away "
                   "the chance dependence of a finite sample, typically 25-60% of the objective")
def test_optimize_from_independent_start_changes_little():
    curve, s = _true_model(200, seed=0)
    res = optimize_projection(curve, s.x, s.y, s.truth.t, budget=5000)
    assert res.objective > 0.9 * res.initial_objective


def test_optimize_never_worse_and_curve_untouched():
    rng = np.random.default_rng(4)
    t = rng.uniform(0, 1, 50)
    x, y = np.sin(3 * t) + 0.1 * rng.normal(size=50), t**2 + 0.1 * rng.normal(size=50)
    curve = fit_curve(x, y, t)
    before = copy.deepcopy((curve.u_model, curve.v_model, curve.grid))
    t0 = np.clip(t + 0.1 * rng.normal(size=50), 0, 1)
    res = optimize_projection(curve, x, y, t0, budget=400)
    assert res.objective <= res.initial_objective
    assert res.objective == pytest.approx(dependence_objective(res.t, curve, x, y), rel=1e-10)
    assert res.nfev <= 400 and res.budget_exhausted
    for a, b in zip(before[:2], (curve.u_model, curve.v_model)):
        assert (a.lengthscale, a.signal_std, a.noise_std) == (b.lengthscale, b.signal_std, b.noise_std)
        np.testing.assert_array_equal(a.alpha, b.alpha)
    np.testing.assert_array_equal(before[2], curve.grid)
    reps = dependence_reports(res.t, curve, x, y)
    assert [r.p_gamma for r in reps] == list(res.pvalues)


def test_optimize_length_mismatch():
    curve, s = _true_model(30)
    with pytest.raises(ValueError):
        optimize_projection(curve, s.x, s.y[:-1], s.truth.t)
