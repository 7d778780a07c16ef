"""
Simulation designs
==================

Four covariance structures, three error laws and three coefficient patterns
make up the simulated scenarios.
"""

import numpy as np

from sbvs import ScenarioSpec, generate_dataset
from sbvs.simgen import beta_values, block_covariance, sample_covariates, sample_errors

rng = np.random.default_rng(0)

# %%
# Empirical correlations of the first three columns
for case in ("identity", "block", "equicorrelation", "ar1"):
    spec = ScenarioSpec(n=5000, p=10, cov_case=case)
    x = sample_covariates(spec, rng, support=[0, 1, 2, 3, 4])
    print(case)
    print(np.round(np.corrcoef(x[:, [0, 1, 6]], rowvar=False), 2))

# %%
# Block design: active columns correlate at 0.25, inactive at 0.75, across at 0.5
print(block_covariance(6, [0, 1])[:4, :4])

# %%
# The shared-divisor t law inflates all coordinates of one draw together
mvt = np.array([sample_errors(2, "mvt", rng) for _ in range(10_000)])
iid = np.array([sample_errors(2, "iid_t", rng) for _ in range(10_000)])
print("log|e| correlation, mvt:", np.round(np.corrcoef(np.log(np.abs(mvt)).T)[0, 1], 3))
print("log|e| correlation, iid:", np.round(np.corrcoef(np.log(np.abs(iid)).T)[0, 1], 3))

# %%
# Coefficient patterns for five and ten active columns
for pattern in ("constant", "decaying", "increasing"):
    print(pattern, beta_values(pattern, 5), beta_values(pattern, 10))

# %%
# Noise-free data reproduces X beta exactly
truth = generate_dataset(ScenarioSpec(n=20, p=30, error_scale=0.0, seed=1))
mu = truth.dataset.x[:, list(truth.true_support)] @ truth.true_beta
print("max |y - X beta|:", np.abs(truth.dataset.y - mu).max())
