"""Implicit time stepping for the fractional Timoshenko system.

The unknowns are the transverse displacement ``theta`` and the rotation
angle ``phi`` on a uniform grid. Each step solves one dense linear system
for both fields at the new time level. The equations are collocated at the
interior nodes; the two end-node rows of each field are replaced by its
zeroth and first moment conditions, which take the place of boundary
conditions.

With the classical-limit flag and ``alpha = 1`` the second difference is
centred at ``t_n``, so every other term is centred there too (average
``(u^{n+1} + 2 u^n + u^{n-1})/4`` for the stiffness and coupling, central
difference for the damping) and the start uses a second-order Taylor step.
This is the averaged-acceleration Newmark scheme, second order in time.

.. math::

    \\rho_1 \\partial_t^{\\alpha+1}\\theta - \\kappa_1(\\theta_x + \\phi)_x
        + \\theta_t = F,

    \\rho_2 \\partial_t^{\\alpha+1}\\phi - \\kappa_2 \\phi_{xx}
        + \\kappa_1(\\theta_x + \\phi) + \\int_0^t m(t-s)\\phi_{xx}(s)\\,ds = G.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .fraccalc import caputo2_weights
from .memory import KernelReport, KernelSpec, MemoryKernel, memory_weights, validate_kernel
from .spatial import (Grid, d1x_matrix, d2x_matrix, moment0, moment1, project_constraints,
                      solve_end_values)

__all__ = [
    "ConfigError",
    "NumericalFailure",
    "CompatibilityWarning",
    "BeamConfig",
    "ProblemData",
    "CompatibilityReport",
    "Trajectory",
    "Stepper",
    "check_compatibility",
    "step",
    "solve",
]

logger = logging.getLogger(__name__)

#: Relative tolerance on the initial-data moments before projection kicks in.
COMPAT_RTOL = 1e-10


class ConfigError(ValueError):
    """Invalid physical or numerical parameters."""


class NumericalFailure(RuntimeError):
    def __init__(self, message: str, step_index: int):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


class CompatibilityWarning(UserWarning):
    """Initial data violated the moment constraints and were projected."""


@dataclass(frozen=True)
class BeamConfig:
    rho1: float = 1.0
    rho2: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    length: float = 1.0
    horizon: float = 1.0
    alpha: float = 0.5
    n_cells: int = 64
    n_steps: int = 512
    kernel: KernelSpec = field(default_factory=KernelSpec)
    classical_limit: bool = False

    def __post_init__(self):
        for name in ("rho1", "rho2", "kappa1", "kappa2", "length", "horizon"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        if not math.isclose(self.rho1 / self.kappa1, self.rho2 / self.kappa2, rel_tol=1e-12):
            raise ConfigError(
                "rho1/kappa1 must equal rho2/kappa2, got "
                f"{self.rho1 / self.kappa1} and {self.rho2 / self.kappa2}")
        if self.classical_limit:
            if not 0.0 < self.alpha <= 1.0:
                raise ConfigError(f"alpha must lie in (0,1], got {self.alpha}")
        elif not 0.0 < self.alpha < 1.0:
            raise ConfigError(
                f"alpha must lie in (0,1), got {self.alpha} "
                "(alpha = 1 needs the classical-limit flag)")
        if int(self.n_cells) != self.n_cells or self.n_cells < 8:
            raise ConfigError(f"n_cells must be an integer >= 8, got {self.n_cells}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ConfigError(f"n_steps must be an integer >= 2, got {self.n_steps}")
        # raises if the kernel is not admissible
        self.kernel_report  # noqa: B018

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @cached_property
    def grid(self) -> Grid:
        return Grid(self.length, self.n_cells)

    @cached_property
    def memory_kernel(self) -> MemoryKernel:
        return self.kernel.sample(self.dt, self.n_steps)

    @cached_property
    def kernel_report(self) -> KernelReport:
        return validate_kernel(self.memory_kernel, self.kappa2, self.horizon)

    def with_resolution(self, n_cells: int | None = None,
                        n_steps: int | None = None) -> "BeamConfig":
        return replace(self,
                       n_cells=self.n_cells if n_cells is None else n_cells,
                       n_steps=self.n_steps if n_steps is None else n_steps)


@dataclass(frozen=True)
class ProblemData:
    """Forcing sampled on the space-time grid and the four initial fields.

    ``forcing_F`` and ``forcing_G`` have shape ``(n_steps + 1, n_nodes)``.
    Instances form a vector space (``+``, scalar ``*``), which is what the
    linearity and continuous-dependence checks rely on.
    """

    forcing_F: np.ndarray
    forcing_G: np.ndarray
    init_disp: np.ndarray
    init_disp_rate: np.ndarray
    init_rot: np.ndarray
    init_rot_rate: np.ndarray

    FIELDS = ("forcing_F", "forcing_G", "init_disp", "init_disp_rate",
              "init_rot", "init_rot_rate")
    INITIAL = ("init_disp", "init_disp_rate", "init_rot", "init_rot_rate")

    def __post_init__(self):
        for name in self.FIELDS:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        nt, nx = self.forcing_F.shape
        if self.forcing_G.shape != (nt, nx):
            raise ValueError("forcing_F and forcing_G must have the same shape")
        for name in self.INITIAL:
            if getattr(self, name).shape != (nx,):
                raise ValueError(f"{name} must have {nx} nodes")

    @classmethod
    def zeros(cls, config: BeamConfig) -> "ProblemData":
        nt, nx = config.n_steps + 1, config.grid.n_nodes
        z = np.zeros(nx)
        return cls(np.zeros((nt, nx)), np.zeros((nt, nx)), z, z, z, z)

    @classmethod
    def from_functions(cls, config: BeamConfig, *, F=None, G=None, init_disp=None,
                       init_disp_rate=None, init_rot=None, init_rot_rate=None
                       ) -> "ProblemData":
        """Sample ``F(x, t)``, ``G(x, t)`` and the initial profiles ``f(x)``."""
        x = config.grid.nodes
        t = config.times[:, None]
        nt, nx = t.shape[0], x.shape[0]

        def st(fn):
            if fn is None:
                return np.zeros((nt, nx))
            return np.asarray(fn(x[None, :], t), dtype=float) * np.ones((nt, nx))

        def sx(fn):
            if fn is None:
                return np.zeros(nx)
            return np.asarray(fn(x), dtype=float) * np.ones(nx)

        return cls(st(F), st(G), sx(init_disp), sx(init_disp_rate), sx(init_rot),
                   sx(init_rot_rate))

    def _combine(self, other, op):
        return ProblemData(*(op(getattr(self, n), getattr(other, n)) for n in self.FIELDS))

    def __add__(self, other: "ProblemData") -> "ProblemData":
        return self._combine(other, np.add)

    def __sub__(self, other: "ProblemData") -> "ProblemData":
        return self._combine(other, np.subtract)

    def __mul__(self, scale: float) -> "ProblemData":
        return ProblemData(*(scale * getattr(self, n) for n in self.FIELDS))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return all(not np.any(getattr(self, n)) for n in self.FIELDS)


@dataclass(frozen=True)
class CompatibilityReport:
    residuals: dict
    projected: bool
    data: ProblemData


def check_compatibility(data: ProblemData, grid: Grid) -> CompatibilityReport:
    """Moment residuals of the initial fields; projects them if needed."""
    residuals = {}
    bad = []
    for name in ProblemData.INITIAL:
        u = getattr(data, name)
        r0, r1 = float(moment0(u, grid)), float(moment1(u, grid))
        residuals[name] = (r0, r1)
        scale = grid.length * float(np.max(np.abs(u), initial=0.0))
        if max(abs(r0), abs(r1)) > COMPAT_RTOL * scale:
            bad.append(name)

    if not bad:
        return CompatibilityReport(residuals, False, data)

    warnings.warn(
        f"initial data {', '.join(bad)} violate the moment constraints; projected",
        CompatibilityWarning, stacklevel=2)
    fixed = {n: project_constraints(getattr(data, n), grid) for n in bad}
    return CompatibilityReport(residuals, True, replace(data, **fixed))


@dataclass(frozen=True)
class Trajectory:
    """Full time history of both fields (shape ``(n_steps + 1, n_nodes)``).

    ``theta_rate[k]`` is the backward difference ``(theta[k] - theta[k-1])/dt``
    for ``k >= 1`` and the prescribed initial rate for ``k = 0``.
    """

    theta: np.ndarray
    phi: np.ndarray
    theta_rate: np.ndarray
    phi_rate: np.ndarray
    config: BeamConfig

    @property
    def times(self) -> np.ndarray:
        return self.config.times

    @property
    def grid(self) -> Grid:
        return self.config.grid

    def moment_residuals(self) -> float:
        """Worst ``max(|moment0|, |moment1|) / (L max|u|)`` over all stored fields."""
        g = self.grid
        worst = 0.0
        for u in (self.theta, self.phi, self.theta_rate, self.phi_rate):
            m = np.maximum(np.abs(moment0(u, g)), np.abs(moment1(u, g)))
            scale = g.length * np.max(np.abs(u), axis=-1)
            with np.errstate(invalid="ignore", divide="ignore"):
                r = np.where(scale > 0, m / np.where(scale > 0, scale, 1.0), 0.0)
            worst = max(worst, float(np.max(r)))
        return worst


class Stepper:
    """Assembles and factorises the per-step linear system of one configuration."""

    def __init__(self, config: BeamConfig, data: ProblemData, *, project: bool = True):
        self.config = config
        self.data = data
        self.project = project
        g = config.grid
        self.grid = g
        self.order = config.alpha + 1.0
        self.D1 = d1x_matrix(g)
        self.D2 = d2x_matrix(g)
        self.kernel = config.memory_kernel
        self.centered = config.classical_limit and config.alpha == 1.0
        self._lu = {}

    def _factor(self, c_new: float):
        lu = self._lu.get(c_new)
        if lu is not None:
            return lu
        cfg = self.config
        n = self.grid.n_nodes
        eye = np.eye(n)
        A = np.empty((2 * n, 2 * n))
        if self.centered:
            q = 0.25
            A[:n, :n] = (cfg.rho1 * c_new + 0.5 / cfg.dt) * eye - q * cfg.kappa1 * self.D2
            A[:n, n:] = -q * cfg.kappa1 * self.D1
            A[n:, :n] = q * cfg.kappa1 * self.D1
            A[n:, n:] = (cfg.rho2 * c_new + q * cfg.kappa1) * eye - q * cfg.kappa2 * self.D2
        else:
            m_new = 0.5 * cfg.dt * float(self.kernel.values[0])
            A[:n, :n] = (cfg.rho1 * c_new + 1.0 / cfg.dt) * eye - cfg.kappa1 * self.D2
            A[:n, n:] = -cfg.kappa1 * self.D1
            A[n:, :n] = cfg.kappa1 * self.D1
            A[n:, n:] = ((cfg.rho2 * c_new + cfg.kappa1) * eye
                         + (m_new - cfg.kappa2) * self.D2)
        if self.project:
            # the end-node rows carry the two moment constraints of each field
            w, x = self.grid.weights, self.grid.nodes
            for r0 in (0, n):
                A[[r0, r0 + n - 1], :] = 0.0
                A[r0, r0:r0 + n] = w
                A[r0 + n - 1, r0:r0 + n] = w * x
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            try:
                lu = sla.lu_factor(A, check_finite=True)
            except (sla.LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
                raise NumericalFailure(f"singular step matrix ({exc})", -1) from exc
        self._lu[c_new] = lu
        return lu

    def bootstrap(self) -> tuple[np.ndarray, np.ndarray]:
        """Levels 0 and 1: initial fields and one forward-Euler step.

        The centred scheme adds the ``dt^2/2`` Taylor term, with the initial
        accelerations read off the equations at ``t = 0``.
        """
        d, dt = self.data, self.config.dt
        th0, ph0 = d.init_disp, d.init_rot
        th1 = th0 + dt * d.init_disp_rate
        ph1 = ph0 + dt * d.init_rot_rate
        if self.centered:
            c = self.config
            acc_th = (d.forcing_F[0] + c.kappa1 * (self.D2 @ th0 + self.D1 @ ph0)
                      - d.init_disp_rate) / c.rho1
            acc_ph = (d.forcing_G[0] + c.kappa2 * (self.D2 @ ph0)
                      - c.kappa1 * (self.D1 @ th0 + ph0)) / c.rho2
            # the equations hold at interior nodes only; the ends follow from the moments
            th1 = solve_end_values(th1 + 0.5 * dt**2 * acc_th, self.grid)
            ph1 = solve_end_values(ph1 + 0.5 * dt**2 * acc_ph, self.grid)
        if self.project:
            th1, ph1 = project_constraints(th1, self.grid), project_constraints(ph1, self.grid)
        return np.stack([th0, th1]), np.stack([ph0, ph1])

    def step(self, theta: np.ndarray, phi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Advance from level ``n`` to ``n + 1`` given levels ``0..n``."""
        if n < 1:
            raise ValueError("step needs levels 0 and 1; use bootstrap for level 1")
        if theta.shape[0] < n + 1 or phi.shape[0] < n + 1:
            raise ValueError(f"history shorter than {n + 1} levels")
        cfg, d = self.config, self.data
        w = caputo2_weights(n + 1, self.order, cfg.dt)
        c_new, w_hist = float(w[-1]), w[:-1]

        th_hist = w_hist @ theta[: n + 1]
        ph_hist = w_hist @ phi[: n + 1]
        if self.centered:
            # known part of (u^{n+1} + 2u^n + u^{n-1})/4 and of the central difference
            th_k = 0.5 * theta[n] + 0.25 * theta[n - 1]
            ph_k = 0.5 * phi[n] + 0.25 * phi[n - 1]
            rhs1 = (d.forcing_F[n] - cfg.rho1 * th_hist + theta[n - 1] / (2 * cfg.dt)
                    + cfg.kappa1 * (self.D2 @ th_k + self.D1 @ ph_k))
            rhs2 = (d.forcing_G[n] - cfg.rho2 * ph_hist + cfg.kappa2 * (self.D2 @ ph_k)
                    - cfg.kappa1 * (self.D1 @ th_k + ph_k))
            if not self.kernel.is_zero:
                mw = memory_weights(self.kernel, n)
                rhs2 = rhs2 - self.D2 @ (mw @ phi[: n + 1])
        else:
            rhs1 = d.forcing_F[n + 1] - cfg.rho1 * th_hist + theta[n] / cfg.dt
            rhs2 = d.forcing_G[n + 1] - cfg.rho2 * ph_hist
            if not self.kernel.is_zero:
                mw = memory_weights(self.kernel, n + 1)[:-1]
                rhs2 = rhs2 - self.D2 @ (mw @ phi[: n + 1])

        try:
            lu = self._factor(c_new)
        except NumericalFailure as exc:
            raise NumericalFailure(str(exc).split(": ", 1)[-1], n + 1) from exc
        rhs = np.concatenate([rhs1, rhs2])
        if self.project:
            nn = self.grid.n_nodes
            rhs[[0, nn - 1, nn, 2 * nn - 1]] = 0.0
        z = sla.lu_solve(lu, rhs)
        if not np.all(np.isfinite(z)):
            raise NumericalFailure("non-finite solution", n + 1)
        nn = self.grid.n_nodes
        th_new, ph_new = z[:nn], z[nn:]
        if self.project:
            th_new = project_constraints(th_new, self.grid)
            ph_new = project_constraints(ph_new, self.grid)
        return th_new, ph_new

    def run(self) -> Trajectory:
        cfg = self.config
        nt, nx = cfg.n_steps + 1, self.grid.n_nodes
        theta = np.zeros((nt, nx))
        phi = np.zeros((nt, nx))
        theta[:2], phi[:2] = self.bootstrap()
        for n in range(1, cfg.n_steps):
            theta[n + 1], phi[n + 1] = self.step(theta, phi, n)

        dt = cfg.dt
        theta_rate = np.empty_like(theta)
        phi_rate = np.empty_like(phi)
        theta_rate[0] = self.data.init_disp_rate
        phi_rate[0] = self.data.init_rot_rate
        theta_rate[1:] = np.diff(theta, axis=0) / dt
        phi_rate[1:] = np.diff(phi, axis=0) / dt
        return Trajectory(theta, phi, theta_rate, phi_rate, cfg)


def step(theta: np.ndarray, phi: np.ndarray, config: BeamConfig, data: ProblemData,
         n: int, *, project: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Single step from level ``n`` to ``n + 1`` (builds a fresh :class:`Stepper`)."""
    return Stepper(config, data, project=project).step(theta, phi, n)


def solve(config: BeamConfig, data: ProblemData, *, project: bool = True,
          check: bool = True) -> Trajectory:
    """Solve on ``[0, T]``; a pure function of ``(config, data)``.

    ``project=False`` switches off the constraint projection (only useful
    as a negative control). ``check`` runs :func:`check_compatibility` on the
    initial data first.
    """
    nt, nx = config.n_steps + 1, config.grid.n_nodes
    if data.forcing_F.shape != (nt, nx):
        raise ValueError(
            f"data sampled on {data.forcing_F.shape}, config needs {(nt, nx)}")
    if check and project:
        data = check_compatibility(data, config.grid).data
    return Stepper(config, data, project=project).run()
