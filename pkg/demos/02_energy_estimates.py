"""A priori bounds, continuous dependence and the size of the constant.

The growth constant is astronomically large for unit coefficients, so it is
carried as a logarithm and every comparison happens in log space.
"""

# %%
import numpy as np

from fractimo import scenarios
from fractimo.energy import compute_constants, verify_apriori, verify_continuous_dependence
from fractimo.memory import KernelSpec
from fractimo.solver import BeamConfig, solve

cfg = BeamConfig(kernel=KernelSpec("exponential", 0.1, 1.0), n_cells=64, n_steps=512)
consts = compute_constants(cfg)
print(f"W* = {consts.w_star:.4f}, omega = {consts.omega:.2f}")
print(f"log10 F* = {consts.log10_f_star:.1f}")

# %%
for seed in range(5):
    data = scenarios.random_smooth(cfg, seed).data
    rep = verify_apriori(solve(cfg, data), data, consts)
    print(f"seed {seed}: sup-L2 lhs/rhs = {rep.ratio_31:.3f}, "
          f"rate lhs/rhs = {rep.ratio_31ss:.3f}, pass = {rep.passed}")

# %% [markdown]
# The solution map is linear, so the dependence ratio does not change when
# the perturbation is rescaled.

# %%
base = scenarios.manufactured_poly(cfg).data
pert = scenarios.random_direction(cfg, np.random.default_rng(1))
for eps in (1e-4, 1e-2, 1.0):
    r = verify_continuous_dependence(cfg, base, eps * pert, consts)
    print(f"eps={eps:g}: ratio = {r.ratio!r}")
