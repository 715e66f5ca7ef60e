"""
From Mallows's Cp to the modified statistic
============================================

The classical Cp of a linear model with p parameters is SSE/sigma2 - N + 2p.
Divide by N and write the mean squared error against the saturated fit and
you get MC = MSE_k/MSE_full - 1 + lambda*r with lambda = 2/N. The modified
statistic keeps that shape but lets lambda float.
"""

import numpy as np

from interpcp.modelselect import CandidateCvRecord, lambda_search, mallows_cp, mc_statistic, select_final

# the identity Cp = N * MC at lambda = 2/N
N, mse, s2, p = 500, 0.012, 0.010, 6
print("Cp      ", mallows_cp(N * mse, s2, N, p))
print("N * MC  ", N * mc_statistic(mse, s2, 2.0 / N, p))

# %%
# A toy candidate table: complexity r, training and validation CV losses.
# The reference losses play the role of the saturated model.
rows = [(3, 0.060, 0.062), (5, 0.012, 0.014), (6, 0.010, 0.011), (9, 0.009, 0.013), (12, 0.0089, 0.016)]
recs = [CandidateCvRecord(i + 1, f"m{i + 1}", r, [a], [b]) for i, (r, a, b) in enumerate(rows)]
full = (0.009, 0.010)

lam, lams, curve = lambda_search(recs, full, return_curve=True)
print("lambda_opt", lam, "correlation there", round(float(np.nanmax(curve)), 4))

# %%
# Larger lambda penalises complexity harder, so the winner can only get simpler.
for lam_k in (0.0, lam, 0.5):
    rep = select_final(recs, lam_k, full)
    print(f"lambda {lam_k:4.2f} -> model {rep.selected_id} (r = {rep.selected.r})")
