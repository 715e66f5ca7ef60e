"""
An interpretable surrogate for adaptive-trial sample size
=========================================================

Simulate a small table of two-stage trial designs, then fit one two-layer
candidate by gradient descent and print the fitted closed form.
"""

import numpy as np

from interpcp.casestudies import gen_trial_dataset
from interpcp.exprdsl import enumerate_candidates, library
from interpcp.optim import FitConfig, fit

# rows are (mu0, alpha, beta) with target n1/60; small mc_reps keeps this quick
data = gen_trial_dataset(200, mc_reps=2000, seed=1)
print(data.feature_names, data.X[:3].round(3), data.y[:3])

# %%
# Eighteen candidates come from three outer forms times six inner pairs.
models = enumerate_candidates(library.family("sim1.f1"), library.family("sim1.f2"),
                              feature_names=data.feature_names)
m10 = models[9]
print(len(models), "candidates; fitting", m10.form, "with", m10.param_count, "parameters")

res = fit(m10, data, FitConfig(iterations=1500, restarts=3, seed=0))
print("training MSE", round(res.train_loss, 5))
print(m10.with_theta(res.theta_hat).render(data.feature_names))
