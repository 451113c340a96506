"""Scalar Gaussian-process regression with a squared-exponential kernel.

Hyperparameters (lengthscale, signal std, noise std) are fitted by
maximizing the log marginal likelihood with L-BFGS-B from several
starting points.  Targets are centered before fitting and the offset is
added back to predictions, so the prior mean is the sample mean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

_LOG_2PI = np.log(2.0 * np.pi)
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def se_kernel(a, b, lengthscale: float, signal_std: float) -> np.ndarray:
    d = np.subtract.outer(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return signal_std**2 * np.exp(-0.5 * (d / lengthscale) ** 2)


def _cholesky(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter on failure."""
    scale = max(float(np.mean(np.diag(A))), 1e-300)
    for j in _JITTERS:
        try:
            M = A if j == 0.0 else A + (j * scale) * np.eye(A.shape[0])
            return linalg.cholesky(M, lower=True, check_finite=False), j * scale
        except linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError("kernel matrix not positive definite after jitter 1e-4")


def log_marginal_likelihood(t, y, lengthscale: float, signal_std: float, noise_std: float):
    """Log marginal likelihood and its gradient in log-hyperparameters.

    Returns
    -------
    lml : float
    grad : ndarray, shape (3,)
        Derivatives with respect to (log lengthscale, log signal_std,
        log noise_std).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = t.size
    if n < 2 or y.size != n:
        raise ValueError("need at least two matching inputs and targets")
    if min(lengthscale, signal_std, noise_std) <= 0:
        raise ValueError("hyperparameters must be positive")

    d2 = np.subtract.outer(t, t) ** 2
    K = signal_std**2 * np.exp(-0.5 * d2 / lengthscale**2)
    Ky = K + noise_std**2 * np.eye(n)
    L, _ = _cholesky(Ky)
    alpha = linalg.cho_solve((L, True), y, check_finite=False)
    lml = -0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * _LOG_2PI

    # dL/dtheta = 1/2 tr((alpha alpha^T - Ky^-1) dKy/dtheta)
    W = np.outer(alpha, alpha) - linalg.cho_solve((L, True), np.eye(n), check_finite=False)
    g_len = 0.5 * np.vdot(W, K * d2 / lengthscale**2)
    g_sig = np.vdot(W, K)
    g_noise = noise_std**2 * np.trace(W)
    return float(lml), np.array([g_len, g_sig, g_noise])


@dataclass(frozen=True)
class GPModel:
    train_inputs: np.ndarray
    train_targets: np.ndarray
    lengthscale: float
    signal_std: float
    noise_std: float
    offset: float
    alpha: np.ndarray = field(repr=False)
    log_likelihood: float = float("nan")
    converged: bool = True

    def __call__(self, tq) -> np.ndarray:
        return predict_mean(self, tq)


def condition_gp(t, y, lengthscale: float, signal_std: float, noise_std: float) -> GPModel:
    """Posterior for fixed hyperparameters (targets are centered internally)."""
    t = np.asarray(t, dtype=float).copy()
    y = np.asarray(y, dtype=float).copy()
    offset = float(y.mean())
    yc = y - offset
    Ky = se_kernel(t, t, lengthscale, signal_std) + noise_std**2 * np.eye(t.size)
    L, _ = _cholesky(Ky)
    alpha = linalg.cho_solve((L, True), yc, check_finite=False)
    lml = -0.5 * yc @ alpha - np.log(np.diag(L)).sum() - 0.5 * t.size * _LOG_2PI
    t.flags.writeable = False
    y.flags.writeable = False
    alpha.flags.writeable = False
    return GPModel(t, y, float(lengthscale), float(signal_std), float(noise_std),
                   offset, alpha, float(lml))


def predict_mean(model: GPModel, tq) -> np.ndarray:
    """Posterior mean k(tq, t) (K + noise^2 I)^-1 y, plus the centering offset."""
    tq = np.asarray(tq, dtype=float)
    k = se_kernel(tq, model.train_inputs, model.lengthscale, model.signal_std)
    return model.offset + k @ model.alpha


def _initial_guess(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(t.size, k=1)
    span = float(np.median(np.abs(np.subtract.outer(t, t))[iu]))
    if not span > 0:
        span = 1.0
    sd = float(y.std())
    if not sd > 0:
        sd = 1.0
    return np.log([span, sd, 0.1 * sd])


def fit_gp(t, y, restarts: int = 5, seed: int = 0) -> GPModel:
    """Fit hyperparameters by maximizing the marginal likelihood.

    The first restart starts at data-driven guesses (median input distance,
    target std, a tenth of the target std); the others perturb those guesses
    in log space.  The best restart wins.  If no restart reports convergence
    the best result is still returned with ``converged=False``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size != y.size:
        raise ValueError("inputs and targets differ in length")
    if t.size < 4:
        raise ValueError("fit_gp needs at least 4 points")
    if np.ptp(t) == 0:
        raise ValueError("all inputs identical")

    yc = y - y.mean()
    theta0 = _initial_guess(t, yc)
    tspan = float(np.ptp(t))
    ysd = float(yc.std()) or 1.0
    bounds = [
        (np.log(1e-3 * tspan), np.log(1e2 * tspan)),
        (np.log(1e-6 * ysd), np.log(1e3 * ysd)),
        (np.log(1e-7 * ysd), np.log(1e1 * ysd)),
    ]

    def objective(theta):
        try:
            lml, grad = log_marginal_likelihood(t, yc, *np.exp(theta))
        except np.linalg.LinAlgError:
            return 1e25, np.zeros(3)
        return -lml, -grad

    rng = np.random.default_rng(seed)
    best = None
    any_converged = False
    for r in range(max(restarts, 1)):
        start = theta0 if r == 0 else theta0 + rng.normal(0.0, 1.0, size=3)
        start = np.clip(start, [b[0] for b in bounds], [b[1] for b in bounds])
        res = optimize.minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
        any_converged |= bool(res.success)
        if best is None or res.fun < best.fun:
            best = res

    model = condition_gp(t, y, *np.exp(best.x))
    if not any_converged:
        warnings.warn("GP hyperparameter search did not converge; using best restart",
                      RuntimeWarning, stacklevel=2)
        model = GPModel(**{**model.__dict__, "converged": False})
    return model
