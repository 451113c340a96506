"""Confounder identification with additive-noise models (ICAN).

``run_ican`` fits a curve (u, v) and latent values T to normalized data
so that the residuals N_X = X - u(T), N_Y = Y - v(T) and T are pairwise
independent, then turns the ratio of residual variances into a causal
verdict.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .curve import CurveModel, fit_curve, principal_curve_fit
from .data import PairedSample, normalize
from .dependence import DependenceReport, hsic_pvalue
from .gp import GPModel, fit_gp, predict_mean
from .projection import optimize_projection, residuals

log = logging.getLogger(__name__)


class Decision(str, enum.Enum):
    X_TO_Y = "XtoY"
    Y_TO_X = "YtoX"
    CONFOUNDER = "Confounder"
    NO_CAN_FIT = "NoCanFit"


class DeterministicRelationError(ValueError):
    """Both residual variances vanish: X and Y are functions of each other."""


@dataclass(frozen=True)
class IcanConfig:
    alpha: float = 0.05
    max_iterations: int = 10
    eval_budget: int = 5000
    ratio_low: float = 0.2
    ratio_high: float = 5.0
    seed: int = 0
    k_neighbors: int = 10
    max_alternations: int = 10

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.eval_budget < 1:
            raise ValueError("eval_budget must be positive")
        if not 0 < self.ratio_low < 1 < self.ratio_high:
            raise ValueError("need 0 < ratio_low < 1 < ratio_high")

    def mirrored(self) -> "IcanConfig":
        """Config for the problem with X and Y swapped."""
        d = dict(self.__dict__)
        d["ratio_low"], d["ratio_high"] = 1.0 / self.ratio_high, 1.0 / self.ratio_low
        return IcanConfig(**d)


@dataclass
class IcanResult:
    decision: Decision
    t_hat: np.ndarray
    curve: CurveModel
    var_ratio: float
    reports: tuple[DependenceReport, DependenceReport, DependenceReport]
    iterations_used: int
    log: list = field(default_factory=list)
    init_log: list = field(default_factory=list)
    normalization: tuple | None = None
    config: IcanConfig | None = None

    @property
    def pvalues(self) -> tuple[float, float, float]:
        return tuple(r.p_gamma for r in self.reports)


def check_invertible(model: GPModel, t_range, n_grid: int = 500, margin: float = 1e-6) -> bool:
    """True iff the posterior mean is strictly monotone on a grid over ``t_range``."""
    lo, hi = t_range
    d = np.diff(predict_mean(model, np.linspace(lo, hi, n_grid)))
    return bool(np.all(d > margin) or np.all(d < -margin))


def decide(var_ratio: float, curve: CurveModel, reports, config: IcanConfig) -> Decision:
    """Causal verdict for an accepted CAN fit.

    X -> Y when the x-residual variance is small relative to the y one and
    u is invertible; Y -> X symmetrically; a confounder otherwise.
    """
    if any(r.p_gamma < config.alpha for r in reports):
        return Decision.NO_CAN_FIT
    if var_ratio < config.ratio_low and check_invertible(curve.u_model, curve.t_range):
        return Decision.X_TO_Y
    if var_ratio > config.ratio_high and check_invertible(curve.v_model, curve.t_range):
        return Decision.Y_TO_X
    return Decision.CONFOUNDER


def _variance_ratio(nx: np.ndarray, ny: np.ndarray) -> float:
    vy = float(np.var(ny))
    return float(np.var(nx)) / vy if vy > 0 else np.inf


def run_ican(data: PairedSample, config: IcanConfig = IcanConfig()) -> IcanResult:
    """Run the full ICAN loop on ``data`` (normalized internally).

    Raises
    ------
    DeterministicRelationError
        If the initial curve explains both coordinates exactly.
    """
    if data.n < 20:
        raise ValueError("run_ican needs at least 20 points")
    data = normalize(data)
    x, y = data.x, data.y

    init = principal_curve_fit(x, y, max_alternations=config.max_alternations,
                               k=config.k_neighbors, seed=config.seed)
    curve, t = init.curve, init.t
    nx, ny = residuals(t, curve, x, y)
    if np.var(nx) < 1e-10 and np.var(ny) < 1e-10:
        raise DeterministicRelationError("deterministic relation: both residual variances vanish")

    history = []
    proj = None
    for it in range(1, config.max_iterations + 1):
        proj = optimize_projection(curve, x, y, t, budget=config.eval_budget)
        t = proj.t
        history.append(dict(iteration=it, objective_start=proj.initial_objective,
                            objective=proj.objective, pvalues=list(proj.pvalues)))
        log.info("ICAN iteration %d: objective %.4g -> %.4g, p = %s", it,
                 proj.initial_objective, proj.objective, np.round(proj.pvalues, 4))
        if all(p >= config.alpha for p in proj.pvalues):
            nx, ny = residuals(t, curve, x, y)
            ratio = _variance_ratio(nx, ny)
            decision = decide(ratio, curve, proj.reports, config)
            return IcanResult(decision, t, curve, ratio, proj.reports, it, history,
                              init.history, data.normalization, config)
        if it < config.max_iterations:
            curve = fit_curve(x, y, t, seed=config.seed + it)

    nx, ny = residuals(t, curve, x, y)
    return IcanResult(Decision.NO_CAN_FIT, t, curve, _variance_ratio(nx, ny), proj.reports,
                      config.max_iterations, history, init.history, data.normalization, config)


def fit_direct_anm(cause, effect, seed: int = 0) -> DependenceReport:
    """Test the additive-noise model effect = f(cause) + N with N independent of cause.

    ``f`` is a GP regression of the (standardized) effect on the
    (standardized) cause; the report is HSIC between cause and residuals.
    """
    c = np.asarray(cause, dtype=float)
    e = np.asarray(effect, dtype=float)
    if c.size != e.size:
        raise ValueError("cause and effect differ in length")
    if c.size < 20:
        raise ValueError("fit_direct_anm needs at least 20 points")
    if np.std(c) == 0 or np.std(e) == 0:
        raise ValueError("degenerate input: zero variance")
    c = (c - c.mean()) / c.std()
    e = (e - e.mean()) / e.std()
    model = fit_gp(c, e, seed=seed)
    return hsic_pvalue(c, e - predict_mean(model, c))
