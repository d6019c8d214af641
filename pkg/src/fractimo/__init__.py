"""Simulator and energy-estimate checker for a time-fractional Timoshenko beam.

The beam carries nonlocal (integral) constraints in place of boundary
conditions, frictional damping on the displacement and a viscoelastic
memory term on the rotation.
"""

from .energy import compute_constants, verify_apriori, verify_continuous_dependence
from .fraccalc import FracOrder, TimeSeries, mittag_leffler, mittag_leffler2
from .memory import KernelSpec
from .solver import BeamConfig, ProblemData, Trajectory, solve
from .spatial import Grid

__all__ = [
    "BeamConfig",
    "FracOrder",
    "Grid",
    "KernelSpec",
    "ProblemData",
    "TimeSeries",
    "Trajectory",
    "compute_constants",
    "mittag_leffler",
    "mittag_leffler2",
    "solve",
    "verify_apriori",
    "verify_continuous_dependence",
]

__version__ = "0.1.0"
