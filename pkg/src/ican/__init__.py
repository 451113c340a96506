"""Confounder detection under additive noise models.

The pair (X, Y) is modeled as X = u(T) + N_X, Y = v(T) + N_Y with T, N_X,
N_Y jointly independent.  :func:`run_ican` fits such a model and decides
between X -> Y, Y -> X and a hidden common cause; :mod:`ican.moments`
holds the low-noise moment identities behind the identifiability result.
"""

from .algorithm import (Decision, DeterministicRelationError, IcanConfig, IcanResult,
                        check_invertible, decide, fit_direct_anm, run_ican)
from .curve import (BumpCurve, CurveModel, fit_parametric_l2, isomap_embed_1d,
                    principal_curve_fit, project_points, project_to_curve)
from .data import (PairedSample, denormalize, gen_dataset1, gen_dataset2, gen_dataset3,
                   gen_section3, generate, normalize)
from .dependence import DependenceReport, gram_matrix, hsic_biased, hsic_pvalue
from .gp import GPModel, fit_gp, log_marginal_likelihood, predict_mean
from .io import load_csv, write_csv
from .moments import (MomentEstimate, MomentProblem, ScalingStudy, conditional_moment,
                      default_scaling_study, epsilon_probe, estimate_noise_moments,
                      reconstruct_moments, scaling_study)
from .projection import optimize_projection

__all__ = [name for name in dir() if not name.startswith("_")]
