"""
Noise moments from conditional moments
======================================

With X = T + N_X and Y = v(T) + N_Y, the conditional moments of X at a
few values of Y are approximately linear in the moments of N_X and N_Y,
with coefficients set by the local slope of the inverse curve w.  Solving
that small system recovers the noise moments.

The approximation error comes from the curvature of w and the slope of
the density of T.  Stretching the curve by ell (keeping the noise fixed)
flattens both, so the error should shrink as ell grows.
"""

import numpy as np

from ican.moments import default_scaling_study, epsilon_probe, scaling_study

study = default_scaling_study(ell_values=(1, 2, 4, 8))
print("beta at the evaluation points:", np.round(study.beta(), 4))

# %%
# Monte-Carlo: 10^5 draws per ell, second moments (the noise variances,
# both 0.01 here).  Median over a handful of seeds.

errs = np.array([scaling_study(study, 100_000, n=2, seed=s).errors[:, 1] for s in range(8)])
for ell, e in zip(study.ell_values, np.median(errs, axis=0)):
    print(f"ell = {ell}:  |error E(NX^2)| + |error E(NY^2)| = {e:.5f}")

# %%
# The deterministic part of the error, by quadrature: how far the
# conditional second moment of T is from beta^2 E(N_Y^2).

y = study.y_points[1]
for ell in (1, 2, 4, 8):
    print(f"ell = {ell}:  eps_2 = {epsilon_probe(study, 2, y, ell):+.2e}")
