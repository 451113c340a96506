"""Curves in the plane parameterized by a scalar latent value.

Initial dimensionality reduction: an Isomap embedding supplies starting
latent values, then regression of each coordinate on the latent values
alternates with nearest-point projection onto the fitted curve until the
summed Euclidean distance stops improving.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Protocol

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .gp import GPModel, fit_gp, predict_mean
from .projection import simplex_minimize

GRID_SIZE = 2000
GRID_MARGIN = 0.05
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class Curve(Protocol):
    grid: np.ndarray

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray]: ...


def latent_grid(t_lo: float, t_hi: float, size: int = GRID_SIZE,
                margin: float = GRID_MARGIN) -> np.ndarray:
    span = t_hi - t_lo
    if not span > 0:
        span = 1.0
    return np.linspace(t_lo - margin * span, t_hi + margin * span, size)


@dataclass(frozen=True)
class CurveModel:
    """Curve t -> (u(t), v(t)) given by two GP posterior means."""

    u_model: GPModel
    v_model: GPModel
    t_range: tuple[float, float]
    grid: np.ndarray = field(repr=False)

    @classmethod
    def from_latents(cls, u_model: GPModel, v_model: GPModel, t) -> "CurveModel":
        t = np.asarray(t, dtype=float)
        lo, hi = float(t.min()), float(t.max())
        return cls(u_model, v_model, (lo, hi), latent_grid(lo, hi))

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray]:
        return predict_mean(self.u_model, t), predict_mean(self.v_model, t)

    @cached_property
    def grid_values(self) -> tuple[np.ndarray, np.ndarray]:
        return self.evaluate(self.grid)


def bump(t, center: float, width: float = 0.1) -> np.ndarray:
    """Density of N(center, width^2) evaluated at t."""
    # closed form: scipy.stats' argument handling dominates inside the projection loop
    z = (np.asarray(t, dtype=float) - center) / width
    return np.exp(-0.5 * z * z) / (width * np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class BumpCurve:
    """Curve whose coordinates are linear combinations of Gaussian bumps.

    ``coef[i, j]`` multiplies bump ``j`` in coordinate ``i`` (0 = x, 1 = y).
    """

    coef: np.ndarray
    centers: tuple[float, ...] = (-0.1, 1.1)
    width: float = 0.1
    t_range: tuple[float, float] = (0.0, 1.0)

    @cached_property
    def grid(self) -> np.ndarray:
        return np.linspace(self.t_range[0], self.t_range[1], GRID_SIZE)

    def basis(self, t) -> np.ndarray:
        return np.stack([bump(t, c, self.width) for c in self.centers], axis=-1)

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray]:
        B = self.basis(t)
        return B @ self.coef[0], B @ self.coef[1]

    @cached_property
    def grid_values(self) -> tuple[np.ndarray, np.ndarray]:
        return self.evaluate(self.grid)


def _grid_values(curve) -> tuple[np.ndarray, np.ndarray]:
    gv = getattr(curve, "grid_values", None)
    return gv if gv is not None else curve.evaluate(curve.grid)


def isomap_embed_1d(points, k: int = 10) -> np.ndarray:
    """One-dimensional Isomap coordinates of 2-D points.

    A symmetric k-nearest-neighbour graph with Euclidean edge weights is
    built; if it is disconnected, k grows by 2 until it is not.  Classical
    MDS on the geodesic distances gives the leading coordinate, signed so
    that its largest-magnitude entry is positive.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    n = P.shape[0]
    if n < k + 1:
        raise ValueError(f"need at least k + 1 = {k + 1} points, got {n}")

    tree = cKDTree(P)
    while True:
        kk = min(k, n - 1)
        dist, idx = tree.query(P, k=kk + 1)
        rows = np.repeat(np.arange(n), kk)
        G = sparse.csr_matrix((dist[:, 1:].ravel(), (rows, idx[:, 1:].ravel())), shape=(n, n))
        G = G.maximum(G.T)
        ncomp, _ = csgraph.connected_components(G, directed=False)
        if ncomp == 1 or kk == n - 1:
            break
        k += 2

    D = csgraph.shortest_path(G, method="D", directed=False)
    H = np.eye(n) - 1.0 / n
    B = -0.5 * H @ (D**2) @ H
    evals, evecs = np.linalg.eigh(B)
    t = evecs[:, -1] * np.sqrt(max(evals[-1], 0.0))
    if t[np.argmax(np.abs(t))] < 0:
        t = -t
    return t


def rescale_unit(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    span = np.ptp(t)
    if not span > 0:
        raise ValueError("latent values have no spread")
    return (t - t.min()) / span


def _golden(curve, px, py, a, b, iters: int = 60):
    """Vectorized golden-section minimization of squared distance on [a, b]."""
    def f(t):
        u, v = curve.evaluate(t)
        return (u - px) ** 2 + (v - py) ** 2

    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INVPHI * (b - a)
        new_d = a + _INVPHI * (b - a)
        # one of the two interior points carries over
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        f_new = f(np.where(left, new_c, new_d))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = c_next, d_next
        if np.all(b - a < 1e-13):
            break
    t = 0.5 * (a + b)
    return t, f(t)


def project_points(curve, x, y, t_current=None) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-point projection of many points onto ``curve``.

    The nearest grid node is refined by golden-section search over its two
    adjacent grid cells.  With ``t_current`` given, a point keeps its
    current latent value whenever that is at least as close.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    g = curve.grid
    gu, gv = _grid_values(curve)
    # (n, m) distance table in chunks to bound memory
    best = np.empty(x.size, dtype=int)
    step = max(1, 2_000_000 // g.size)
    for s in range(0, x.size, step):
        d2 = (x[s:s + step, None] - gu) ** 2 + (y[s:s + step, None] - gv) ** 2
        best[s:s + step] = np.argmin(d2, axis=1)
    lo = g[np.maximum(best - 1, 0)]
    hi = g[np.minimum(best + 1, g.size - 1)]
    t, d2 = _golden(curve, x, y, lo, hi)

    g_d2 = (x - gu[best]) ** 2 + (y - gv[best]) ** 2
    use_grid = g_d2 < d2
    t = np.where(use_grid, g[best], t)
    d2 = np.where(use_grid, g_d2, d2)

    if t_current is not None:
        tc = np.asarray(t_current, dtype=float)
        uc, vc = curve.evaluate(tc)
        dc = (x - uc) ** 2 + (y - vc) ** 2
        keep = dc <= d2
        t = np.where(keep, tc, t)
        d2 = np.where(keep, dc, d2)
    return t, np.sqrt(d2)


def project_to_curve(curve, point) -> tuple[float, float]:
    """Latent value of the point on ``curve`` nearest to ``point`` and the distance."""
    px, py = point
    t, d = project_points(curve, [px], [py])
    return float(t[0]), float(d[0])


def l2_objective(curve, x, y, t) -> float:
    """Summed Euclidean distance between the points and ``curve(t)``."""
    u, v = curve.evaluate(t)
    return float(np.sqrt((np.asarray(x) - u) ** 2 + (np.asarray(y) - v) ** 2).sum())


@dataclass
class CurveFit:
    curve: object
    t: np.ndarray
    l2: float
    history: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.curve, self.t, self.l2))


def fit_curve(x, y, t, seed: int = 0) -> CurveModel:
    """Regress x and y separately on the latent values."""
    u = fit_gp(t, x, seed=seed)
    v = fit_gp(t, y, seed=seed + 1)
    return CurveModel.from_latents(u, v, t)


def principal_curve_fit(x, y, max_alternations: int = 10, k: int = 10, tol: float = 1e-4,
                        seed: int = 0) -> CurveFit:
    """Fit an l2-optimal curve by alternating GP regression and projection.

    Latent values start from a 1-D Isomap embedding rescaled to [0, 1].
    Each alternation refits the curve on the current latent values and
    projects every point onto it.  The loop stops once the summed distance
    improves by less than ``tol`` (relative) or after ``max_alternations``.
    A refit that makes the objective worse is discarded and ends the loop,
    so the accepted objectives never increase.

    ``history`` holds one dict per alternation with the objective before
    projection (old latents on the new curve), after projection, and
    whether the alternation was accepted.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y differ in length")
    if x.size < 10:
        raise ValueError("principal_curve_fit needs at least 10 points")
    if np.var(x) == 0 or np.var(y) == 0:
        raise ValueError("degenerate data: zero variance")

    t = rescale_unit(isomap_embed_1d(np.column_stack([x, y]), k=k))
    curve = fit_curve(x, y, t, seed=seed)
    before = l2_objective(curve, x, y, t)
    t, dist = project_points(curve, x, y, t_current=t)
    l2 = float(dist.sum())
    history = [dict(alternation=0, before=before, after=l2, accepted=True)]

    for it in range(1, max_alternations):
        cand_curve = fit_curve(x, y, t, seed=seed)
        before = l2_objective(cand_curve, x, y, t)
        cand_t, dist = project_points(cand_curve, x, y, t_current=t)
        cand_l2 = float(dist.sum())
        accepted = cand_l2 <= l2
        history.append(dict(alternation=it, before=before, after=cand_l2, accepted=accepted))
        if not accepted:
            break
        gain = (l2 - cand_l2) / l2 if l2 > 0 else 0.0
        curve, t, l2 = cand_curve, cand_t, cand_l2
        if gain < tol:
            break
    return CurveFit(curve, t, l2, history)


def fit_parametric_l2(x, y, centers=(-0.1, 1.1), width: float = 0.1, t0=None,
                      max_iter: int = 200, tol: float = 1e-10, k: int = 10,
                      polish_budget: int = 6000) -> CurveFit:
    """Minimize summed distance over bump-basis curves and projections.

    Each coordinate is ``a_1 * phi_{c_1}(t) + a_2 * phi_{c_2}(t) + ...``
    with ``phi_c`` the N(c, width^2) density and t restricted to [0, 1].
    Coefficients and projections are alternated: given the latent values
    the coefficients solve a reweighted least-squares problem (weights
    1/distance, which never increases the summed distance), and given the
    coefficients every point is projected onto the curve.

    The optimum sits in a long shallow valley (scaling a bump's
    coefficients trades off against shifting t), where the alternation
    creeps.  A simplex search over the profile objective
    ``sum_i min_t dist(point_i, s(t))`` finishes the job.  It is
    parameterized per bump by log magnitude and angle of the coefficient
    pair, which aligns the valley with a coordinate axis.  A coordinate
    whose coefficients come out exactly zero is held there.  Set
    ``polish_budget=0`` to skip it.

    Returns a :class:`CurveFit` whose ``curve`` is a :class:`BumpCurve`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t0 is None:
        P = np.column_stack([(x - x.mean()) / x.std(), (y - y.mean()) / y.std()])
        t0 = rescale_unit(isomap_embed_1d(P, k=k))
    t = np.clip(np.asarray(t0, dtype=float), 0.0, 1.0)
    Yt = np.column_stack([x, y])
    w = np.ones(x.size)
    shell = BumpCurve(np.zeros((2, len(centers))), tuple(centers), width)
    curve = None
    l2 = np.inf
    history = []
    for it in range(max_iter):
        B = shell.basis(t)
        sw = np.sqrt(w)[:, None]
        Bw = B * sw
        if np.linalg.cond(Bw) > 1e12:
            raise np.linalg.LinAlgError("singular least-squares system for bump coefficients")
        coef, *_ = np.linalg.lstsq(Bw, Yt * sw, rcond=None)
        cand = BumpCurve(coef.T.copy(), tuple(centers), width)
        before = l2_objective(cand, x, y, t)
        t_new, dist = project_points(cand, x, y, t_current=t)
        cand_l2 = float(dist.sum())
        accepted = cand_l2 <= l2
        history.append(dict(alternation=it, before=before, after=cand_l2, accepted=accepted))
        if not accepted:
            break
        improved = l2 - cand_l2
        curve, t, l2 = cand, t_new, cand_l2
        w = 1.0 / np.maximum(dist, 1e-12)
        if improved <= tol * l2:
            break
    c = curve.coef if curve is not None else np.zeros((2, 1))
    zero_rows = np.all(c == 0, axis=1)
    if polish_budget > 0 and curve is not None and not zero_rows.all():
        m = len(centers)
        if zero_rows.any():
            # a coordinate with identically zero targets stays exactly zero
            live = int(np.flatnonzero(~zero_rows)[0])
            p0 = c[live].copy()

            def unpack(p):
                out = np.zeros((2, m))
                out[live] = p
                return out
        else:
            p0 = np.concatenate([np.log(np.maximum(np.hypot(c[0], c[1]), 1e-12)),
                                 np.arctan2(c[1], c[0])])

            def unpack(p):
                r = np.exp(p[:m])
                return np.array([r * np.cos(p[m:]), r * np.sin(p[m:])])

        def profile(p):
            return float(project_points(BumpCurve(unpack(p), tuple(centers), width), x, y)[1].sum())

        # restarting the simplex from its best vertex frees it from the
        # collapsed shape it ends up in along the valley
        p, best, left = p0, profile(p0), polish_budget
        while left > 0:
            res = simplex_minimize(profile, p, min(left, 1500), xtol=1e-10)
            left -= res.nfev
            if not res.fun < best * (1 - 1e-9):
                break
            p, best = res.x, res.fun
        cand = BumpCurve(unpack(p), tuple(centers), width)
        before = l2_objective(cand, x, y, t)
        cand_t, dist = project_points(cand, x, y, t_current=t)
        # a negligible gain is not worth giving up an exact least-squares solution
        accepted = float(dist.sum()) < l2 * (1 - 1e-9)
        history.append(dict(alternation="polish", before=before, after=float(dist.sum()),
                            accepted=accepted))
        if accepted:
            curve, t, l2 = cand, cand_t, float(dist.sum())
    return CurveFit(curve, t, l2, history)
