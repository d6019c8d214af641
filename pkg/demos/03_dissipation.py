"""When does ``kappa1 |theta|^2 + kappa2 |phi|^2 + |I_x phi|^2`` decrease?

Released from rest with unit coefficients the functional rises in some
steps, and the rise does not go away under time refinement. With small
inertia and stiffness the friction term wins and it decreases monotonically.
The largest single-step rise shrinks like dt while the total stays put.
"""

# %%
import numpy as np

from fractimo import scenarios
from fractimo.energy import check_dissipation
from fractimo.memory import KernelSpec
from fractimo.solver import BeamConfig, ProblemData, solve
from fractimo.spatial import project_constraints


def release(cfg):
    # the trapezoid moments of p are O(dx^2), not zero
    p = project_constraints(scenarios.profile_p(cfg.grid.nodes, cfg.length), cfg.grid)
    z = np.zeros((cfg.n_steps + 1, cfg.grid.n_nodes))
    return ProblemData(z, z, p, 0 * p, p, 0 * p)


unit = BeamConfig(kernel=KernelSpec("exponential", 0.1, 1.0), n_cells=64, n_steps=512)
soft = BeamConfig(rho1=0.1, rho2=0.1, kappa1=0.1, kappa2=0.1,
                  kernel=KernelSpec("exponential", 0.01, 1.0), n_cells=64, n_steps=512)

# %%
for name, cfg in (("unit", unit), ("soft", soft)):
    for n in (256, 512, 1024):
        c = cfg.with_resolution(n_steps=n)
        rep = check_dissipation(solve(c, release(c)))
        print(f"{name:4s} n_steps={n:5d}  max step rise={rep.max_increase:.2e}  "
              f"total rise={rep.total_increase:.2e}  monotone={rep.passed}")
