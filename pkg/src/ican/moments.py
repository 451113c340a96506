"""Noise moments from conditional moments in the low-noise limit.

With u(t) = t and an invertible v with inverse w, the conditional law of
X given Y = y is approximately w(y) + beta_y N_Y + N_X, where
beta_y = -w'(y).  Centered conditional moments at several y with
different beta_y therefore give linear equations in the products
E(N_X^{n-k}) E(N_Y^k), from which the noise moments are solved.  The
approximation error vanishes when the curve is scaled up while the noise
stays fixed; ``scaling_study`` and ``epsilon_probe`` measure that.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.special import comb

COND_LIMIT = 1e12
MIN_LOCAL_POINTS = 30
MIN_BETA_SPREAD = 1e-3


@dataclass(frozen=True)
class MomentProblem:
    """n-th moments of Z + c_j W observed for n + 1 distinct values c_j."""

    order: int
    c_values: np.ndarray
    observed_moments: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c_values, dtype=float).ravel()
        b = np.asarray(self.observed_moments, dtype=float).ravel()
        if self.order < 1:
            raise ValueError("order must be positive")
        if c.size != self.order + 1 or b.size != self.order + 1:
            raise ValueError(f"order {self.order} needs {self.order + 1} c values and moments")
        object.__setattr__(self, "c_values", c)
        object.__setattr__(self, "observed_moments", b)


@dataclass
class MomentEstimate:
    """Moments of N_X (the Z role) and N_Y (the W role), index k - 1 for order k."""

    moments_nx: np.ndarray
    moments_ny: np.ndarray
    q: dict = field(default_factory=dict)
    ill_conditioned: bool = False
    errors_nx: np.ndarray | None = None
    errors_ny: np.ndarray | None = None

    def with_truth(self, true_nx, true_ny) -> "MomentEstimate":
        k = self.moments_nx.size
        self.errors_nx = self.moments_nx - np.asarray(true_nx, dtype=float)[:k]
        self.errors_ny = self.moments_ny - np.asarray(true_ny, dtype=float)[:k]
        return self


def moment_matrix(c, order: int) -> np.ndarray:
    """M with m_jk = c_j^k binom(order, k): a column-scaled Vandermonde matrix."""
    c = np.asarray(c, dtype=float)
    k = np.arange(order + 1)
    return c[:, None] ** k * comb(order, k)


def _solve(c, b, order: int) -> tuple[np.ndarray, bool]:
    c = np.asarray(c, dtype=float)
    if np.unique(c).size != c.size:
        raise ValueError("singular system: c values must be distinct")
    M = moment_matrix(c, order)
    cond = np.linalg.cond(M)
    bad = not cond < COND_LIMIT
    if bad:
        warnings.warn(f"moment system condition number {cond:.3g} exceeds {COND_LIMIT:.0e}",
                      RuntimeWarning, stacklevel=3)
    return np.linalg.solve(M, b), bad


def reconstruct_moments(problems: Sequence[MomentProblem]) -> MomentEstimate:
    """Recover E(Z^k), E(W^k) for k = 1..n from one problem per order.

    For order n the solution of M q = b has q_k = E(Z^{n-k}) E(W^k), so
    E(Z^n) = q_0 and E(W^n) = q_n.  ``problems`` must cover the orders
    1..n exactly once each (in any order).
    """
    by_order = {p.order: p for p in problems}
    if len(by_order) != len(problems):
        raise ValueError("duplicate orders")
    n = max(by_order) if by_order else 0
    if sorted(by_order) != list(range(1, n + 1)):
        raise ValueError("problems must cover orders 1..n")
    mz, mw = np.empty(n), np.empty(n)
    qs, flag = {}, False
    for m in range(1, n + 1):
        p = by_order[m]
        q, bad = _solve(p.c_values, p.observed_moments, m)
        qs[m] = q
        flag |= bad
        mz[m - 1], mw[m - 1] = q[0], q[m]
    return MomentEstimate(mz, mw, qs, flag)


def _kernel_weights(y, y0: float, bandwidth: float) -> np.ndarray:
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    y = np.asarray(y, dtype=float)
    if np.count_nonzero(np.abs(y - y0) <= bandwidth) < MIN_LOCAL_POINTS:
        raise ValueError(f"insufficient local data near y = {y0:g} (bandwidth {bandwidth:g})")
    return np.exp(-0.5 * ((y - y0) / bandwidth) ** 2)


def rule_of_thumb_bandwidth(y) -> float:
    y = np.asarray(y, dtype=float)
    return 1.06 * float(np.std(y)) * y.size ** (-0.2)


def conditional_moment(x, y, y0: float, m: int, bandwidth: float | None = None,
                       center: float = 0.0) -> float:
    """Nadaraya-Watson estimate of E((X - center)^m | Y = y0), Gaussian kernel.

    Requires at least 30 points with |y - y0| <= bandwidth.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("x and y differ in length")
    h = rule_of_thumb_bandwidth(y) if bandwidth is None else bandwidth
    k = _kernel_weights(y, y0, h)
    return float(k @ (x - center) ** m / k.sum())


def _centered_local_moments(x, y, y0: float, orders, bandwidth: float) -> np.ndarray:
    """Kernel-weighted moments of X about a local-linear fit of E(X | Y) at y0.

    Subtracting a + b (y_k - y0) instead of the constant conditional mean
    removes the spread the slope of w contributes within the window.
    """
    k = _kernel_weights(y, y0, bandwidth)
    d = y - y0
    s0, s1, s2 = k.sum(), k @ d, k @ d**2
    t0, t1 = k @ x, k @ (x * d)
    det = s0 * s2 - s1 * s1
    a = (s2 * t0 - s1 * t1) / det
    b = (s0 * t1 - s1 * t0) / det
    r = x - a - b * d
    return np.array([k @ r**m / s0 for m in orders])


def finite_difference_slope(w: Callable, y: np.ndarray, step: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return (np.asarray(w(y + step)) - np.asarray(w(y - step))) / (2.0 * step)


def estimate_noise_moments(x, y, w_hat: Callable, y_points, n: int,
                           bandwidth: float | None = None) -> MomentEstimate:
    """Moments of N_X and N_Y up to order ``n`` under X = T + N_X, Y = v(T) + N_Y.

    beta_j = -w_hat'(y_j) by central differences (step 1e-3 * range(y)).
    For order m the first m + 1 of the ``y_points`` are used; the centered
    conditional moments b_j form the right-hand side of M q = b with
    M_jk = beta_j^k binom(m, k).  Even-order estimates are clipped at
    zero, since a negative even moment is pure estimation error.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    yp = np.asarray(y_points, dtype=float).ravel()
    if n < 1:
        raise ValueError("n must be positive")
    if yp.size < n + 1:
        raise ValueError(f"order {n} needs {n + 1} y points")
    yp = yp[: n + 1]
    h = rule_of_thumb_bandwidth(y) if bandwidth is None else bandwidth
    step = 1e-3 * float(np.ptp(y))
    beta = -finite_difference_slope(w_hat, yp, step)
    if not np.all(np.isfinite(beta)):
        raise ValueError("w_hat is not finite around the y points")
    if np.ptp(beta) < MIN_BETA_SPREAD or np.min(np.diff(np.sort(beta))) < MIN_BETA_SPREAD:
        raise ValueError("moment system ill-posed: beta values (nearly) coincide")

    local = np.array([_centered_local_moments(x, y, y0, range(1, n + 1), h) for y0 in yp])
    problems = [MomentProblem(m, beta[: m + 1], local[: m + 1, m - 1]) for m in range(1, n + 1)]
    est = reconstruct_moments(problems)
    even = np.arange(1, n + 1) % 2 == 0
    est.moments_nx[even] = np.maximum(est.moments_nx[even], 0.0)
    est.moments_ny[even] = np.maximum(est.moments_ny[even], 0.0)
    return est


@dataclass(frozen=True)
class ScalingStudy:
    """A CAN instance X = T + N_X, Y = v(T) + N_Y and the scales ell to probe.

    ``q``, ``r``, ``s`` are frozen ``scipy.stats`` distributions for N_X,
    N_Y and T; noise laws must be centered.  ``y_points`` are given for
    ell = 1 and scaled to ell * y_j.
    """

    v: Callable
    w: Callable
    q: object
    r: object
    s: object
    ell_values: tuple
    y_points: tuple

    def __post_init__(self):
        ell = np.asarray(self.ell_values, dtype=float)
        if ell.size < 1 or np.any(ell <= 0) or np.any(np.diff(ell) <= 0):
            raise ValueError("ell_values must be positive and increasing")
        beta = self.beta()
        if beta.size > 1 and np.min(np.diff(np.sort(beta))) < MIN_BETA_SPREAD:
            raise ValueError("y_points must give pairwise distinct beta values")
        for name in ("q", "r"):
            if abs(getattr(self, name).mean()) > 1e-12:
                raise ValueError(f"noise law {name} must be centered")

    def beta(self) -> np.ndarray:
        y = np.asarray(self.y_points, dtype=float)
        return -finite_difference_slope(self.w, y, 1e-6)

    def true_moments(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        k = range(1, n + 1)
        return (np.array([self.q.moment(m) for m in k]),
                np.array([self.r.moment(m) for m in k]))

    def sample(self, ell: float, size: int, rng: np.random.Generator):
        """Draw (ell T + N_X, ell v(T) + N_Y)."""
        t = self.s.rvs(size=size, random_state=rng)
        nx = self.q.rvs(size=size, random_state=rng)
        ny = self.r.rvs(size=size, random_state=rng)
        return ell * t + nx, ell * self.v(t) + ny


@dataclass
class ScalingTable:
    """Absolute moment errors indexed by (ell, order); order k sits in column k - 1."""

    ell_values: np.ndarray
    errors_nx: np.ndarray
    errors_ny: np.ndarray

    @property
    def errors(self) -> np.ndarray:
        """|error in E(N_X^k)| + |error in E(N_Y^k)|."""
        return self.errors_nx + self.errors_ny

    def rows(self):
        for i, ell in enumerate(self.ell_values):
            for k in range(self.errors_nx.shape[1]):
                yield dict(ell=float(ell), order=k + 1, error_nx=float(self.errors_nx[i, k]),
                           error_ny=float(self.errors_ny[i, k]), error=float(self.errors[i, k]))


def scaling_study(study: ScalingStudy, samples_per_ell: int, n: int = 2, seed: int = 0,
                  bandwidth: float | None = None) -> ScalingTable:
    """Moment errors as the curve is scaled by each ell.

    In the scaled coordinates the inverse curve is ell * w(y / ell) and
    the evaluation points are ell * y_j, which leaves every beta_j
    unchanged.  ``bandwidth`` is an absolute length in the scaled
    coordinates; the default is a quarter of the N_Y standard deviation,
    which stays at the noise scale instead of growing with the curve.
    """
    rng = np.random.default_rng(seed)
    h = 0.25 * float(study.r.std()) if bandwidth is None else bandwidth
    tx, ty = study.true_moments(n)
    ex = np.empty((len(study.ell_values), n))
    ey = np.empty_like(ex)
    for i, ell in enumerate(study.ell_values):
        x, y = study.sample(ell, samples_per_ell, rng)
        w_ell = (lambda e: (lambda yy: e * study.w(np.asarray(yy) / e)))(ell)
        est = estimate_noise_moments(x, y, w_ell, ell * np.asarray(study.y_points), n, bandwidth=h)
        ex[i] = np.abs(est.moments_nx - tx)
        ey[i] = np.abs(est.moments_ny - ty)
    return ScalingTable(np.asarray(study.ell_values, dtype=float), ex, ey)


def _window(dist, width: float = 8.0) -> tuple[float, float]:
    lo, hi = dist.support()
    m, sd = dist.mean(), dist.std()
    return max(lo, m - width * sd), min(hi, m + width * sd)


def epsilon_probe(study: ScalingStudy, n: int, y: float, ell: float = 1.0,
                  tol: float = 1e-10) -> float:
    """eps_n(y) = E_y((T - w(y))^n) - beta_y^n E(N_Y^n) by quadrature.

    Evaluated for the curve scaled by ``ell`` at the point ell * y, in the
    scaled latent coordinate ell * t; beta_y is scale invariant.  The
    integration window covers 8 standard deviations of T and of N_Y.

    Raises
    ------
    RuntimeError
        If the quadrature does not reach ``tol``.
    """
    a, b = _window(study.s)
    n_lo, n_hi = _window(study.r)
    wy = float(study.w(y))
    if not a < wy < b:
        raise ValueError(f"w({y:g}) lies outside the window of T")
    # mass concentrates where ell * (y - v(T)) falls in the N_Y window
    with np.errstate(invalid="ignore", divide="ignore"):
        ends = np.asarray(study.w(np.array([y - n_hi / ell, y - n_lo / ell])), dtype=float)
    finite = ends[np.isfinite(ends)]
    if finite.size == 2:
        a, b = max(a, float(finite.min())), min(b, float(finite.max()))
    breaks = [float(e) for e in finite if a < e < b] + [wy]

    def dens(t):
        return study.r.pdf(ell * (y - study.v(t))) * study.s.pdf(t)

    p = _quad(dens, a, b, tol * 1e-2, breaks)
    mom = _quad(lambda t: (ell * (t - wy)) ** n * dens(t), a, b, tol * p, breaks)
    beta = float(-finite_difference_slope(study.w, np.array([y]), 1e-6)[0])
    return mom / p - beta**n * float(study.r.moment(n))


def _quad(f, a: float, b: float, tol: float, points=None) -> float:
    out = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=1000, points=points,
                         full_output=1)
    val, err = out[0], out[1]
    if len(out) > 3 or not err <= tol:
        raise RuntimeError(f"quadrature did not converge: achieved error {err:.3g}, "
                           f"requested {tol:.3g}")
    return float(val)


def default_scaling_study(ell_values=(1, 2, 4, 8), noise_std: float = 0.1) -> ScalingStudy:
    """Smooth instance: v(t) = exp(4 (t - 1/2)) / 4, T ~ N(1/2, 0.2^2), Gaussian noises.

    The y points sit at v(1/4), v(1/2), v(3/4), where beta = -w'(y) takes
    the well-separated values -e, -1, -1/e.
    """
    from scipy import stats

    def v(t):
        return np.exp(4.0 * (np.asarray(t, dtype=float) - 0.5)) / 4.0

    def w(y):
        return np.log(4.0 * np.asarray(y, dtype=float)) / 4.0 + 0.5

    noise = stats.norm(0.0, noise_std)
    return ScalingStudy(v, w, noise, noise, stats.norm(0.5, 0.2), tuple(ell_values),
                        tuple(float(a) for a in v(np.array([0.25, 0.5, 0.75]))))
