"""Dependence-minimizing projection onto a fixed curve.

The latent values of all points are moved jointly to minimize

    HSIC(N_X, N_Y) + HSIC(N_X, T) + HSIC(N_Y, T),
    (N_X, N_Y) = (X, Y) - curve(T),

with a derivative-free Nelder-Mead simplex under a fixed budget of
objective evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dependence import DependenceReport, PairwiseHsic, hsic_biased, hsic_pvalue

T_LOWER = -0.5
T_UPPER = 1.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int
    budget_exhausted: bool


def simplex_minimize(f, x0, budget: int, xtol: float = 1e-6, rho: float = 1.0,
                     chi: float = 2.0, gamma: float = 0.5, sigma: float = 0.5) -> SimplexResult:
    """Nelder-Mead minimization with a budget of function evaluations.

    The initial simplex perturbs coordinate i of ``x0`` by
    ``max(0.05 * |x0_i|, 0.00025)``.  Iteration stops when ``budget``
    evaluations are spent or the simplex diameter (largest vertex distance
    from the best vertex, sup norm) drops below ``xtol``.  Non-finite
    function values count as +inf.  The best vertex seen is returned.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    if budget < n + 1:
        raise ValueError(f"budget {budget} is smaller than n + 1 = {n + 1}")

    nfev = 0

    def fe(x):
        nonlocal nfev
        nfev += 1
        v = f(x)
        return float(v) if np.isfinite(v) else np.inf

    sim = np.empty((n + 1, n))
    sim[0] = x0
    step = np.maximum(0.05 * np.abs(x0), 0.00025)
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += step[i]
    fs = np.array([fe(v) for v in sim])

    order = np.argsort(fs, kind="stable")
    sim, fs = sim[order], fs[order]
    total = sim[:-1].sum(axis=0)
    nit = 0
    while nfev < budget:
        if np.max(np.abs(sim[1:] - sim[0])) < xtol:
            break
        nit += 1
        if nit % 256 == 0:
            total = sim[:-1].sum(axis=0)
        centroid = total / n
        worst = sim[-1]
        xr = centroid + rho * (centroid - worst)
        fr = fe(xr)
        shrink = False
        if fr < fs[0]:
            if nfev < budget:
                xe = centroid + chi * (xr - centroid)
                fe_ = fe(xe)
                new, fnew = (xe, fe_) if fe_ < fr else (xr, fr)
            else:
                new, fnew = xr, fr
        elif fr < fs[-2]:
            new, fnew = xr, fr
        elif nfev >= budget:
            break
        elif fr < fs[-1]:
            xc = centroid + gamma * (xr - centroid)
            fc = fe(xc)
            if fc <= fr:
                new, fnew = xc, fc
            else:
                shrink = True
        else:
            xcc = centroid + gamma * (worst - centroid)
            fcc = fe(xcc)
            if fcc < fs[-1]:
                new, fnew = xcc, fcc
            else:
                shrink = True

        if shrink:
            for j in range(1, n + 1):
                if nfev >= budget:
                    break
                sim[j] = sim[0] + sigma * (sim[j] - sim[0])
                fs[j] = fe(sim[j])
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            total = sim[:-1].sum(axis=0)
            continue

        # insert the new vertex in sorted position, dropping the worst
        pos = int(np.searchsorted(fs[:-1], fnew, side="right"))
        if pos < n:
            total += new - sim[n - 1]
        sim[pos + 1:] = sim[pos:-1].copy()
        fs[pos + 1:] = fs[pos:-1].copy()
        sim[pos] = new
        fs[pos] = fnew

    return SimplexResult(sim[0].copy(), float(fs[0]), nfev, nit, nfev >= budget)


def residuals(t, curve, x, y) -> tuple[np.ndarray, np.ndarray]:
    u, v = curve.evaluate(t)
    return np.asarray(x) - u, np.asarray(y) - v


def dependence_objective(t, curve, x, y, hsic: PairwiseHsic | None = None) -> float:
    """HSIC(N_X, N_Y) + HSIC(N_X, T) + HSIC(N_Y, T) at latent values ``t``.

    Latent values outside [-0.5, 1.5] are clamped before evaluation.
    """
    t = np.clip(np.asarray(t, dtype=float), T_LOWER, T_UPPER)
    nx, ny = residuals(t, curve, x, y)
    if hsic is None:
        return hsic_biased(nx, ny) + hsic_biased(nx, t) + hsic_biased(ny, t)
    return hsic.triple(nx, ny, t)


def dependence_reports(t, curve, x, y) -> tuple[DependenceReport, DependenceReport, DependenceReport]:
    """Gamma-approximation reports for (N_X, N_Y), (N_X, T), (N_Y, T)."""
    t = np.clip(np.asarray(t, dtype=float), T_LOWER, T_UPPER)
    nx, ny = residuals(t, curve, x, y)
    return hsic_pvalue(nx, ny), hsic_pvalue(nx, t), hsic_pvalue(ny, t)


@dataclass
class ProjectionResult:
    t: np.ndarray
    reports: tuple[DependenceReport, DependenceReport, DependenceReport]
    objective: float
    initial_objective: float
    nfev: int
    budget_exhausted: bool

    @property
    def pvalues(self) -> tuple[float, float, float]:
        return tuple(r.p_gamma for r in self.reports)


def optimize_projection(curve, x, y, t0, budget: int = 5000) -> ProjectionResult:
    """Move all latent values jointly to minimize the dependence objective."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t0 = np.clip(np.asarray(t0, dtype=float), T_LOWER, T_UPPER)
    if not (x.size == y.size == t0.size):
        raise ValueError("x, y and t0 must have equal length")
    hsic = PairwiseHsic(x.size)

    def f(t):
        return dependence_objective(t, curve, x, y, hsic)

    f0 = f(t0)
    res = simplex_minimize(f, t0, budget)
    t = np.clip(res.x, T_LOWER, T_UPPER)
    return ProjectionResult(t, dependence_reports(t, curve, x, y), res.fun, f0,
                            res.nfev, res.budget_exhausted)
